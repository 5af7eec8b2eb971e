"""
Chebyshev feature network: a cos(W_CF arccos(x)) first layer, tanh hidden
layers and a linear output, with an analytic reverse pass.

Batches are row-major: points are (N, d), activations are (N, K).
"""

import math
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np

from .sampling import exponential, make_generator, normal
from .targets import check_domain


class FeatureLayer(StrEnum):
    CHEBYSHEV = "chebyshev"
    TANH = "tanh"


@dataclass(frozen=True)
class CfnnArchitecture:
    """Shape of one stage network.

    Attributes:
        input_dim: Input dimension d.
        hidden_layers: Number of hidden layers L, the feature layer included.
        width: Neurons per hidden layer K.
        feature_layer: First-layer kind; `tanh` replaces the Chebyshev
            features with a standard tanh(Wx + b) layer.
    """

    input_dim: int
    hidden_layers: int = 3
    width: int = 40
    feature_layer: FeatureLayer = FeatureLayer.CHEBYSHEV

    def __post_init__(self) -> None:
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be positive, got {self.input_dim}")
        if self.hidden_layers < 2:
            raise ValueError(
                f"hidden_layers must be >= 2 (feature layer plus one tanh layer), "
                f"got {self.hidden_layers}"
            )
        if self.width < 1:
            raise ValueError(f"width must be positive, got {self.width}")
        object.__setattr__(self, "feature_layer", FeatureLayer(self.feature_layer))

    @property
    def has_input_bias(self) -> bool:
        return self.feature_layer is FeatureLayer.TANH

    @property
    def num_params(self) -> int:
        d, k = self.input_dim, self.width
        first = k * d + (k if self.has_input_bias else 0)
        hidden = (self.hidden_layers - 1) * (k * k + k)
        return first + hidden + k + 1


@dataclass(eq=False)
class CfnnParams:
    """Learnable parameters of one stage network.

    Attributes:
        w_cf: (K, d) first-layer weights; Chebyshev frequencies by default.
        hidden: (W_i, b_i) pairs for layers 2..L, shapes (K, K) and (K,).
        w_out: (1, K) output weights.
        b_out: Output bias.
        b_in: (K,) first-layer bias, only for the tanh feature layer.
    """

    w_cf: np.ndarray
    hidden: list[tuple[np.ndarray, np.ndarray]]
    w_out: np.ndarray
    b_out: float
    b_in: np.ndarray | None = None

    def arrays(self) -> list[np.ndarray]:
        """All parameter arrays in flattening order."""
        out = [self.w_cf]
        if self.b_in is not None:
            out.append(self.b_in)
        for w, b in self.hidden:
            out.extend((w, b))
        out.extend((self.w_out, np.array([self.b_out])))
        return out

    def flatten(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    @classmethod
    def unflatten(cls, arch: CfnnArchitecture, vector: np.ndarray) -> "CfnnParams":
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (arch.num_params,):
            raise ValueError(
                f"expected {arch.num_params} parameters, got shape {vector.shape}"
            )
        d, k = arch.input_dim, arch.width
        offset = 0

        def take(*shape: int) -> np.ndarray:
            nonlocal offset
            size = math.prod(shape)
            chunk = vector[offset : offset + size].reshape(shape).copy()
            offset += size
            return chunk

        w_cf = take(k, d)
        b_in = take(k) if arch.has_input_bias else None
        hidden = [(take(k, k), take(k)) for _ in range(arch.hidden_layers - 1)]
        w_out = take(1, k)
        b_out = float(take(1)[0])
        return cls(w_cf=w_cf, hidden=hidden, w_out=w_out, b_out=b_out, b_in=b_in)

    def check_shapes(self, arch: CfnnArchitecture) -> None:
        d, k = arch.input_dim, arch.width
        expected = [(k, d)]
        if arch.has_input_bias:
            expected.append((k,))
        expected += [(k, k), (k,)] * (arch.hidden_layers - 1) + [(1, k), (1,)]
        actual = [a.shape for a in self.arrays()]
        if actual != expected:
            raise ValueError(f"parameter shapes {actual} do not match {expected}")

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())


@dataclass(eq=False)
class ForwardCache:
    """Intermediates of one forward pass, consumed by `backward`."""

    x: np.ndarray
    u: np.ndarray
    z1: np.ndarray
    activations: list[np.ndarray] = field(default_factory=list)
    predictions: np.ndarray = field(default_factory=lambda: np.empty(0))


def chebyshev_feature(alpha, x):
    """
    Generalized Chebyshev function T_alpha(x) = cos(alpha * arccos(x)).

    Works on scalars and arrays; integer alpha gives the classical polynomial.
    """
    x_arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.abs(x_arr) <= 1.0):
        raise ValueError("chebyshev_feature is defined for x in [-1, 1]")
    result = np.cos(np.asarray(alpha, dtype=np.float64) * np.arccos(x_arr))
    return float(result) if result.ndim == 0 else result


def forward(
    params: CfnnParams, points: np.ndarray
) -> tuple[np.ndarray, ForwardCache]:
    """
    Evaluate the network on a batch.

    Args:
        params: Network parameters.
        points: (N, d) inputs with every coordinate in [-1, 1].

    Returns:
        (N,) predictions and the cache needed by `backward`.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.w_cf.shape[1]:
        raise ValueError(
            f"points must have shape (N, {params.w_cf.shape[1]}), got {x.shape}"
        )
    check_domain(x)

    if params.b_in is None:
        u = np.arccos(x)
        z1 = u @ params.w_cf.T
        a = np.cos(z1)
    else:
        u = x
        z1 = x @ params.w_cf.T + params.b_in
        a = np.tanh(z1)

    activations = [a]
    for w, b in params.hidden:
        a = np.tanh(a @ w.T + b)
        activations.append(a)

    predictions = a @ params.w_out[0] + params.b_out
    cache = ForwardCache(
        x=x, u=u, z1=z1, activations=activations, predictions=predictions
    )
    return predictions, cache


def backward(
    params: CfnnParams, cache: ForwardCache, loss_grad: np.ndarray
) -> CfnnParams:
    """
    Reverse pass: gradient of the loss with respect to every parameter.

    Args:
        params: Parameters used in the forward pass that produced `cache`.
        cache: Forward intermediates.
        loss_grad: (N,) derivative of the loss with respect to each prediction.

    Returns:
        Gradient with the same structure as `params`.
    """
    loss_grad = np.asarray(loss_grad, dtype=np.float64)
    if loss_grad.shape != cache.predictions.shape:
        raise ValueError(
            f"loss_grad shape {loss_grad.shape} does not match "
            f"predictions {cache.predictions.shape}"
        )
    if len(cache.activations) != len(params.hidden) + 1:
        raise ValueError("cache does not match the parameter layout")

    last = cache.activations[-1]
    g_w_out = (loss_grad @ last)[np.newaxis, :]
    g_b_out = float(np.sum(loss_grad))
    delta = np.outer(loss_grad, params.w_out[0])

    g_hidden: list[tuple[np.ndarray, np.ndarray]] = []
    for i in range(len(params.hidden) - 1, -1, -1):
        a_out = cache.activations[i + 1]
        a_in = cache.activations[i]
        dz = delta * (1.0 - a_out * a_out)
        g_hidden.append((dz.T @ a_in, np.sum(dz, axis=0)))
        delta = dz @ params.hidden[i][0]
    g_hidden.reverse()

    if params.b_in is None:
        dz1 = -np.sin(cache.z1) * delta
        g_b_in = None
    else:
        a1 = cache.activations[0]
        dz1 = delta * (1.0 - a1 * a1)
        g_b_in = np.sum(dz1, axis=0)
    g_w_cf = dz1.T @ cache.u

    return CfnnParams(
        w_cf=g_w_cf, hidden=g_hidden, w_out=g_w_out, b_out=g_b_out, b_in=g_b_in
    )


def mse_loss(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Mean squared error (1/N) sum (targets - predictions)^2."""
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape or predictions.ndim != 1:
        raise ValueError(
            f"length mismatch: predictions {predictions.shape}, "
            f"targets {targets.shape}"
        )
    if predictions.size == 0:
        raise ValueError("mse_loss needs at least one sample")
    residual = targets - predictions
    return float(np.mean(residual * residual))


def mse_loss_grad(predictions: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Derivative of `mse_loss` with respect to each prediction."""
    return (2.0 / predictions.size) * (predictions - targets)


def xavier_std(fan_in: int, fan_out: int) -> float:
    return math.sqrt(2.0 / (fan_in + fan_out))


def init_params(
    arch: CfnnArchitecture, lambda_rate: float, shift: float, seed: int
) -> CfnnParams:
    """
    Draw initial parameters for one stage network.

    Chebyshev frequencies are shift + Exp(rate=lambda_rate); every other weight
    matrix is Xavier-normal and every bias starts at zero. A tanh feature layer
    ignores the schedule and is Xavier-initialized like the rest.

    Args:
        arch: Network shape.
        lambda_rate: Rate of the exponential distribution (mean 1/lambda_rate).
        shift: Constant added to every frequency.
        seed: Generator seed.
    """
    if lambda_rate <= 0:
        raise ValueError(f"lambda_rate must be positive, got {lambda_rate}")
    if shift < 0:
        raise ValueError(f"shift must be nonnegative, got {shift}")
    gen = make_generator(seed)
    d, k = arch.input_dim, arch.width

    if arch.feature_layer is FeatureLayer.CHEBYSHEV:
        w_cf = shift + exponential(gen, lambda_rate, (k, d))
        b_in = None
    else:
        w_cf = normal(gen, xavier_std(d, k), (k, d))
        b_in = np.zeros(k)

    hidden = [
        (normal(gen, xavier_std(k, k), (k, k)), np.zeros(k))
        for _ in range(arch.hidden_layers - 1)
    ]
    w_out = normal(gen, xavier_std(k, 1), (1, k))
    return CfnnParams(w_cf=w_cf, hidden=hidden, w_out=w_out, b_out=0.0, b_in=b_in)


class NetworkObjective:
    """MSE objective of one network architecture on a fixed batch.

    Implements the optimizer `Objective` contract on flat parameter vectors.
    """

    def __init__(
        self, arch: CfnnArchitecture, points: np.ndarray, targets: np.ndarray
    ):
        self.arch = arch
        self.points = np.asarray(points, dtype=np.float64)
        self.targets = np.asarray(targets, dtype=np.float64)
        if self.targets.shape != (self.points.shape[0],):
            raise ValueError("targets must have one value per point")
        check_domain(self.points)

    def evaluate(self, flat_params: np.ndarray) -> tuple[float, np.ndarray]:
        params = CfnnParams.unflatten(self.arch, flat_params)
        predictions, cache = forward(params, self.points)
        loss = mse_loss(predictions, self.targets)
        grad = backward(params, cache, mse_loss_grad(predictions, self.targets))
        return loss, grad.flatten()
