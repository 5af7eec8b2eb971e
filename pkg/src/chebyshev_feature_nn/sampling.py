"""Seeded random sampling shared by dataset generation and initialization.

All draws come from numpy's PCG64 bit generator, which is documented and
stable across platforms and numpy releases for a given seed. Uniform and
exponential variates are produced by inverse transform from the generator's
uniform doubles on [0, 1), so the sample order is fixed by the call order.
"""

import numpy as np


def make_generator(seed: int) -> np.random.Generator:
    """
    Create a deterministic generator for the given seed.

    Args:
        seed: Nonnegative integer seed.

    Returns:
        A numpy Generator backed by PCG64.
    """
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def uniform(
    gen: np.random.Generator, low: float, high: float, size: int | tuple[int, ...]
) -> np.ndarray:
    """Draw i.i.d. U[low, high) samples as low + (high - low) * u."""
    u = gen.random(size, dtype=np.float64)
    return low + (high - low) * u


def exponential(
    gen: np.random.Generator, rate: float, size: int | tuple[int, ...]
) -> np.ndarray:
    """Draw Exp(rate) samples (mean 1/rate) via u -> -ln(1 - u) / rate."""
    if rate <= 0:
        raise ValueError(f"exponential rate must be positive, got {rate}")
    u = gen.random(size, dtype=np.float64)
    return -np.log1p(-u) / rate


def normal(
    gen: np.random.Generator, std: float, size: int | tuple[int, ...]
) -> np.ndarray:
    """Draw zero-mean normal samples with the given standard deviation."""
    return std * gen.standard_normal(size, dtype=np.float64)
