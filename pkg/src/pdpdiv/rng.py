"""Seed derivation and Gamma-based Beta/Dirichlet variates.

Gamma variates come from numpy's ``standard_gamma`` (Marsaglia-Tsang squeeze
with the shape < 1 boost); Beta and Dirichlet draws are ratios of those.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 finalizer."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """Stream seed for item ``index`` under ``master``; a pure function of both."""
    return mix64((int(master) & _MASK64) + (int(index) + 1) * _GOLDEN)


def derive_seeds(master: int, count: int, offset: int = 0) -> np.ndarray:
    """Vectorized :func:`derive_seed` for indexes ``offset .. offset+count-1``."""
    with np.errstate(over="ignore"):
        idx = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
        z = np.uint64(int(master) & _MASK64) + idx * np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def beta_with_log_complement(rng, a, b):
    """Draw W ~ Beta(a, b) elementwise; also return log(1 - W) without cancellation."""
    b = np.asarray(b, dtype=float)
    ga = rng.standard_gamma(a, b.shape) if np.isscalar(a) else rng.standard_gamma(a)
    gb = rng.standard_gamma(b)
    total = ga + gb
    # gb == 0 gives log(1 - W) = -inf, which callers treat as an exhausted stick
    return ga / total, np.log(gb) - np.log(total)


def sample_dirichlet(shapes, rng: np.random.Generator) -> np.ndarray:
    """One Dirichlet(shapes) draw as normalized Gamma variates."""
    shapes = np.asarray(shapes, dtype=float)
    if shapes.ndim != 1 or shapes.size == 0 or not np.all(shapes > 0) or not np.all(np.isfinite(shapes)):
        raise DomainError("Dirichlet shapes must be a non-empty vector of finite positive reals")
    g = rng.standard_gamma(shapes)
    total = g.sum()
    while total <= 0.0:  # every component underflowed; vanishingly rare
        g = rng.standard_gamma(shapes)
        total = g.sum()
    return g / total
