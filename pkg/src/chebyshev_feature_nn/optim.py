"""
Full-batch optimizers over flat parameter vectors: Adam with a stepwise
exponential learning-rate decay, and L-BFGS with a strong-Wolfe line search.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Callable, Protocol

import numpy as np

logger = logging.getLogger(__name__)


class Objective(Protocol):
    """Deterministic loss and gradient of a flat parameter vector."""

    def evaluate(self, flat_params: np.ndarray) -> tuple[float, np.ndarray]: ...


class TerminationReason(StrEnum):
    MAX_ITERS = "max_iters"
    GRAD_TOL = "grad_tol"
    LINE_SEARCH_FAIL = "line_search_fail"
    LOSS_STAGNATION = "loss_stagnation"
    NON_FINITE = "non_finite"


@dataclass
class AdamConfig:
    """Adam settings; one epoch is one full-batch step.

    Attributes:
        epochs: Number of steps.
        lr0: Initial learning rate.
        decay_factor: Multiplier applied every `decay_interval` epochs.
        decay_interval: Epochs between learning-rate decays.
        beta1: First-moment decay.
        beta2: Second-moment decay.
        epsilon: Denominator guard.
        loss_floor: Stop once the loss drops below this value.
        stagnation_window: Epochs over which stagnation is measured.
        stagnation_rtol: Stop when the relative loss change over the window is
            below this value.
        log_every: Emit a debug line every this many epochs.
    """

    epochs: int = 5000
    lr0: float = 0.01
    decay_factor: float = 0.97
    decay_interval: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    loss_floor: float = 1e-32
    stagnation_window: int = 200
    stagnation_rtol: float = 1e-16
    log_every: int = 500

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be positive, got {self.epochs}")
        if self.lr0 <= 0:
            raise ValueError(f"lr0 must be positive, got {self.lr0}")
        if not 0 < self.decay_factor < 1:
            raise ValueError(
                f"decay_factor must be in (0, 1), got {self.decay_factor}"
            )
        if self.decay_interval < 1:
            raise ValueError(
                f"decay_interval must be positive, got {self.decay_interval}"
            )
        if not 0 < self.beta1 < self.beta2 < 1:
            raise ValueError("Adam needs 0 < beta1 < beta2 < 1")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


@dataclass
class LbfgsConfig:
    """L-BFGS settings; `max_iters` counts iterations, not evaluations.

    Attributes:
        max_iters: Iteration budget.
        history: Number of curvature pairs kept.
        wolfe_c1: Sufficient-decrease constant.
        wolfe_c2: Curvature constant.
        grad_tol: Stop when the max-norm of the gradient is at most this.
        max_linesearch: Objective evaluations allowed per line search.
        linesearch_rtol: Relative bracket width at which a line search gives up.
        scale_initial_hessian: Scale the initial inverse Hessian by s'y / y'y.
        loss_floor: Stop once the loss drops below this value.
        stagnation_window: Iterations over which stagnation is measured.
        stagnation_rtol: Stop when the relative loss change over the window is
            below this value.
        log_every: Emit a debug line every this many iterations.
    """

    max_iters: int = 20000
    history: int = 10
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    grad_tol: float = 1e-14
    max_linesearch: int = 25
    linesearch_rtol: float = 1e-12
    scale_initial_hessian: bool = True
    loss_floor: float = 1e-32
    stagnation_window: int = 200
    stagnation_rtol: float = 1e-16
    log_every: int = 1000

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be positive, got {self.max_iters}")
        if self.history < 1:
            raise ValueError(f"history must be positive, got {self.history}")
        if not 0 < self.wolfe_c1 < self.wolfe_c2 < 1:
            raise ValueError("L-BFGS needs 0 < wolfe_c1 < wolfe_c2 < 1")
        if self.grad_tol <= 0:
            raise ValueError(f"grad_tol must be positive, got {self.grad_tol}")
        if self.max_linesearch < 1:
            raise ValueError(
                f"max_linesearch must be positive, got {self.max_linesearch}"
            )


@dataclass(eq=False)
class OptimTrace:
    """Result of one optimizer run.

    Attributes:
        optimizer: "adam" or "lbfgs".
        losses: Loss per iteration.
        params: Final parameter vector.
        reason: Why the run stopped.
        evaluations: Number of objective evaluations.
    """

    optimizer: str
    losses: list[float] = field(default_factory=list)
    params: np.ndarray = field(default_factory=lambda: np.empty(0))
    reason: TerminationReason = TerminationReason.MAX_ITERS
    evaluations: int = 0

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else float("nan")


def _stagnated(losses: list[float], floor: float, window: int, rtol: float) -> bool:
    if losses[-1] < floor:
        return True
    if len(losses) <= window:
        return False
    before = losses[-1 - window]
    return abs(before - losses[-1]) <= rtol * abs(before)


def _finite(loss: float, grad: np.ndarray) -> bool:
    return bool(np.isfinite(loss) and np.all(np.isfinite(grad)))


def lr_at_epoch(cfg: AdamConfig, epoch: int) -> float:
    """Learning rate lr0 * decay_factor ** floor(epoch / decay_interval)."""
    return cfg.lr0 * cfg.decay_factor ** (epoch // cfg.decay_interval)


def run_adam(obj: Objective, x0: np.ndarray, cfg: AdamConfig) -> OptimTrace:
    """
    Minimize with bias-corrected Adam, one full-batch step per epoch.

    The recorded loss of each epoch is the loss before that epoch's step. On a
    non-finite loss or gradient the run stops and returns the best parameters
    seen so far.
    """
    x = np.array(x0, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("initial parameters must be finite")
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    trace = OptimTrace(optimizer="adam")
    best_x, best_loss = x.copy(), np.inf

    for epoch in range(cfg.epochs):
        loss, grad = obj.evaluate(x)
        trace.evaluations += 1
        if not _finite(loss, grad):
            logger.warning(
                f"Adam hit a non-finite loss/gradient at epoch {epoch}; "
                f"returning best loss {best_loss:.3e}"
            )
            trace.reason = TerminationReason.NON_FINITE
            trace.params = best_x
            return trace

        trace.losses.append(loss)
        if loss < best_loss:
            best_x, best_loss = x.copy(), loss
        if _stagnated(
            trace.losses, cfg.loss_floor, cfg.stagnation_window, cfg.stagnation_rtol
        ):
            trace.reason = TerminationReason.LOSS_STAGNATION
            break

        step = epoch + 1
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad
        m_hat = m / (1.0 - cfg.beta1**step)
        v_hat = v / (1.0 - cfg.beta2**step)
        x = x - lr_at_epoch(cfg, epoch) * m_hat / (np.sqrt(v_hat) + cfg.epsilon)

        if cfg.log_every and epoch % cfg.log_every == 0:
            logger.debug(f"adam epoch {epoch}: loss {loss:.6e}")

    trace.params = x
    return trace


def _cubic_interpolate(
    x1: float,
    f1: float,
    g1: float,
    x2: float,
    f2: float,
    g2: float,
    bounds: tuple[float, float] | None = None,
) -> float:
    # minimizer of the cubic through two points with slopes, clipped to bounds
    if bounds is not None:
        lo, hi = bounds
    else:
        lo, hi = (x1, x2) if x1 <= x2 else (x2, x1)

    d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2)
    d2_square = d1 * d1 - g1 * g2
    if d2_square >= 0:
        d2 = np.sqrt(d2_square)
        if x1 <= x2:
            min_pos = x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
        else:
            min_pos = x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2))
        if np.isfinite(min_pos):
            return float(min(max(min_pos, lo), hi))
    return (lo + hi) / 2.0


def _low_high(bracket_f: list[float]) -> tuple[int, int]:
    # non-finite losses order above every finite one
    keys = [f if np.isfinite(f) else np.inf for f in bracket_f]
    return (0, 1) if keys[0] <= keys[-1] else (1, 0)


@dataclass
class LineSearchResult:
    """Outcome of `strong_wolfe`; `success` means both conditions hold at `step`."""

    success: bool
    step: float
    loss: float
    grad: np.ndarray
    evaluations: int


def strong_wolfe(
    evaluate: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x: np.ndarray,
    step: float,
    direction: np.ndarray,
    loss: float,
    grad: np.ndarray,
    c1: float = 1e-4,
    c2: float = 0.9,
    max_evals: int = 25,
    rtol: float = 1e-12,
) -> LineSearchResult:
    """
    Bracketing and zoom line search for the strong Wolfe conditions.

    Args:
        evaluate: Loss and gradient at a parameter vector.
        x: Current point.
        step: Initial trial step.
        direction: Descent direction (grad . direction < 0).
        loss: Loss at `x`.
        grad: Gradient at `x`.
        c1: Sufficient-decrease constant.
        c2: Curvature constant.
        max_evals: Maximum objective evaluations.
        rtol: Relative bracket width below which the search gives up.
    """
    gtd = float(grad @ direction)
    t = step
    f_new, g_new = evaluate(x + t * direction)
    evals = 1
    gtd_new = float(g_new @ direction)

    t_prev, f_prev, g_prev, gtd_prev = 0.0, loss, grad, gtd
    done = False
    ls_iter = 0
    bracket: list[float] = []
    bracket_f: list[float] = []
    bracket_g: list[np.ndarray] = []
    bracket_gtd: list[float] = []

    while ls_iter < max_evals:
        if not np.isfinite(f_new) or f_new > loss + c1 * t * gtd or (
            ls_iter > 1 and f_new >= f_prev
        ):
            bracket = [t_prev, t]
            bracket_f = [f_prev, f_new]
            bracket_g = [g_prev, g_new]
            bracket_gtd = [gtd_prev, gtd_new]
            break
        if abs(gtd_new) <= -c2 * gtd:
            bracket, bracket_f, bracket_g = [t], [f_new], [g_new]
            done = True
            break
        if gtd_new >= 0:
            bracket = [t_prev, t]
            bracket_f = [f_prev, f_new]
            bracket_g = [g_prev, g_new]
            bracket_gtd = [gtd_prev, gtd_new]
            break

        # extrapolate
        min_step = t + 0.01 * (t - t_prev)
        max_step = t * 10.0
        previous = t
        t = _cubic_interpolate(
            t_prev, f_prev, gtd_prev, t, f_new, gtd_new, bounds=(min_step, max_step)
        )
        t_prev, f_prev, g_prev, gtd_prev = previous, f_new, g_new, gtd_new
        f_new, g_new = evaluate(x + t * direction)
        evals += 1
        gtd_new = float(g_new @ direction)
        ls_iter += 1

    if ls_iter == max_evals:
        bracket = [0.0, t]
        bracket_f = [loss, f_new]
        bracket_g = [grad, g_new]
        bracket_gtd = [gtd, gtd_new]

    # zoom
    insufficient_progress = False
    low, high = _low_high(bracket_f)
    while not done and ls_iter < max_evals:
        width = abs(bracket[1] - bracket[0])
        if width <= rtol * max(abs(bracket[0]), abs(bracket[1])):
            break

        t = _cubic_interpolate(
            bracket[0],
            bracket_f[0],
            bracket_gtd[0],
            bracket[1],
            bracket_f[1],
            bracket_gtd[1],
        )
        top, bottom = max(bracket), min(bracket)
        eps = 0.1 * (top - bottom)
        if min(top - t, t - bottom) < eps:
            if insufficient_progress or t >= top or t <= bottom:
                t = top - eps if abs(t - top) < abs(t - bottom) else bottom + eps
                insufficient_progress = False
            else:
                insufficient_progress = True
        else:
            insufficient_progress = False

        f_new, g_new = evaluate(x + t * direction)
        evals += 1
        gtd_new = float(g_new @ direction)
        ls_iter += 1

        if (
            not np.isfinite(f_new)
            or f_new > loss + c1 * t * gtd
            or f_new >= bracket_f[low]
        ):
            bracket[high], bracket_f[high] = t, f_new
            bracket_g[high], bracket_gtd[high] = g_new, gtd_new
            low, high = _low_high(bracket_f)
        else:
            if abs(gtd_new) <= -c2 * gtd:
                done = True
            elif gtd_new * (bracket[high] - bracket[low]) >= 0:
                bracket[high], bracket_f[high] = bracket[low], bracket_f[low]
                bracket_g[high], bracket_gtd[high] = bracket_g[low], bracket_gtd[low]
            bracket[low], bracket_f[low] = t, f_new
            bracket_g[low], bracket_gtd[low] = g_new, gtd_new

    return LineSearchResult(
        success=done,
        step=bracket[low],
        loss=bracket_f[low],
        grad=bracket_g[low],
        evaluations=evals,
    )


def _two_loop(
    grad: np.ndarray,
    pairs: deque[tuple[np.ndarray, np.ndarray, float]],
    h_diag: float,
) -> np.ndarray:
    q = -grad
    alphas = []
    for s, y, rho in reversed(pairs):
        alpha = rho * float(s @ q)
        alphas.append(alpha)
        q = q - alpha * y
    r = h_diag * q
    for (s, y, rho), alpha in zip(pairs, reversed(alphas), strict=True):
        beta = rho * float(y @ r)
        r = r + (alpha - beta) * s
    return r


def run_lbfgs(obj: Objective, x0: np.ndarray, cfg: LbfgsConfig) -> OptimTrace:
    """
    Minimize with L-BFGS (two-loop recursion) and a strong-Wolfe line search.

    Only steps satisfying both Wolfe conditions are accepted, so the recorded
    losses never increase. A failed line search clears the curvature history
    and retries along the steepest-descent direction; a second consecutive
    failure ends the run with the current (best) parameters.
    """
    x = np.array(x0, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("initial parameters must be finite")
    trace = OptimTrace(optimizer="lbfgs")

    loss, grad = obj.evaluate(x)
    trace.evaluations = 1
    if not _finite(loss, grad):
        logger.warning("L-BFGS started from a non-finite loss/gradient")
        trace.reason = TerminationReason.NON_FINITE
        trace.params = x
        return trace
    if np.max(np.abs(grad), initial=0.0) <= cfg.grad_tol:
        trace.reason = TerminationReason.GRAD_TOL
        trace.params = x
        return trace

    pairs: deque[tuple[np.ndarray, np.ndarray, float]] = deque(maxlen=cfg.history)
    h_diag = 1.0

    def search(direction: np.ndarray, step: float) -> LineSearchResult:
        result = strong_wolfe(
            obj.evaluate,
            x,
            step,
            direction,
            loss,
            grad,
            c1=cfg.wolfe_c1,
            c2=cfg.wolfe_c2,
            max_evals=cfg.max_linesearch,
            rtol=cfg.linesearch_rtol,
        )
        trace.evaluations += result.evaluations
        return result

    def steepest_step() -> float:
        return min(1.0, 1.0 / float(np.sum(np.abs(grad))))

    for iteration in range(cfg.max_iters):
        direction = _two_loop(grad, pairs, h_diag) if pairs else -grad
        if float(grad @ direction) >= 0:
            logger.debug(f"lbfgs iter {iteration}: not a descent direction, reset")
            pairs.clear()
            direction = -grad

        step = 1.0 if pairs else steepest_step()
        result = search(direction, step)
        if not result.success and pairs:
            logger.debug(
                f"lbfgs iter {iteration}: line search failed, clearing history"
            )
            pairs.clear()
            direction = -grad
            result = search(direction, steepest_step())
        if not result.success:
            logger.debug(f"lbfgs iter {iteration}: line search failed, stopping")
            trace.reason = TerminationReason.LINE_SEARCH_FAIL
            break

        s = result.step * direction
        y = result.grad - grad
        x = x + s
        loss, grad = result.loss, result.grad
        trace.losses.append(loss)

        ys = float(y @ s)
        if ys > 1e-10 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            pairs.append((s, y, 1.0 / ys))
            if cfg.scale_initial_hessian:
                h_diag = ys / float(y @ y)

        if cfg.log_every and iteration % cfg.log_every == 0:
            logger.debug(f"lbfgs iter {iteration}: loss {loss:.6e}")

        if np.max(np.abs(grad)) <= cfg.grad_tol:
            trace.reason = TerminationReason.GRAD_TOL
            break
        if _stagnated(
            trace.losses, cfg.loss_floor, cfg.stagnation_window, cfg.stagnation_rtol
        ):
            trace.reason = TerminationReason.LOSS_STAGNATION
            break

    trace.params = x
    return trace
