"""Digamma, trigamma and Beta-distribution moments on the positive half-line.

Both special functions shift the argument upward with the recurrence until it
exceeds ``_ASYMPTOTIC_START`` and then use the Bernoulli asymptotic series
through order x**-12 (x**-13 for trigamma).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

_ASYMPTOTIC_START = 10.0

# B_2k / (2k) for k = 1..6
_DIGAMMA_COEFFS = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
)
# B_2k for k = 1..6
_TRIGAMMA_COEFFS = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
)


def _check_positive(x, name="x"):
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"{name} must be finite and > 0, got {x!r}")
    return x


def digamma(x: float) -> float:
    """Logarithmic derivative of the Gamma function for ``x > 0``."""
    x = _check_positive(x)
    shift = 0.0
    while x < _ASYMPTOTIC_START:
        shift += 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    for c in reversed(_DIGAMMA_COEFFS):
        series = (series + c) * inv2
    return math.log(x) - 0.5 / x - series - shift


def trigamma(x: float) -> float:
    """First derivative of :func:`digamma` for ``x > 0``."""
    x = _check_positive(x)
    shift = 0.0
    while x < _ASYMPTOTIC_START:
        shift += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    for c in reversed(_TRIGAMMA_COEFFS):
        series = (series + c) * inv2
    return shift + inv + 0.5 * inv2 + series * inv


@dataclass(frozen=True)
class BetaParams:
    """Shape parameters of a Beta(a, b) law."""

    a: float
    b: float

    def __post_init__(self):
        _check_positive(self.a, "a")
        _check_positive(self.b, "b")


def beta_log_moments(p: BetaParams) -> tuple[float, float, float]:
    """Return ``(E[-log X], E[(log X)**2], E[-X log X])`` for X ~ Beta(a, b)."""
    a, b = p.a, p.b
    psi_a, psi_ab = digamma(a), digamma(a + b)
    m1 = psi_ab - psi_a
    m2 = (trigamma(a) - trigamma(a + b)) + (psi_a - psi_ab) ** 2
    mx = a / (a + b) * (digamma(a + b + 1.0) - digamma(a + 1.0))
    return m1, m2, mx


def beta_power_moment(p: BetaParams, m: int) -> float:
    """E[X**m] for integer ``m >= 1``, as a product accumulated in log space."""
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m!r}")
    a, b = p.a, p.b
    log_value = math.fsum(math.log((a + r) / (a + b + r)) for r in range(int(m)))
    return math.exp(log_value)


def beta_real_moment(p: BetaParams, s: float) -> float:
    """E[X**s] for real ``s > -a`` via log-gamma ratios."""
    s = float(s)
    if not math.isfinite(s) or s <= -p.a:
        raise DomainError(f"moment order must exceed -a={-p.a}, got {s!r}")
    a, b = p.a, p.b
    return math.exp(
        math.lgamma(a + s) - math.lgamma(a) + math.lgamma(a + b) - math.lgamma(a + b + s)
    )
