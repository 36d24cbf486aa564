"""Diversity indexes: prior moments, Bayesian posterior means under PDP and plug-in values."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, UnsupportedIndexError
from .partition import Abundance, NewClass, PdpParams, StepChoice, apply_step
from .specfun import BetaParams, beta_power_moment, beta_real_moment, digamma, trigamma


@dataclass(frozen=True)
class Shannon:
    closed_form_posterior = True
    second_moment_available = True

    def __str__(self):
        return "shannon"


@dataclass(frozen=True)
class GeneralizedGini:
    """``1 - sum s**(kappa+1)`` for integer ``kappa``; kappa=1 is the Gini index."""

    kappa: int = 1
    closed_form_posterior = True

    def __post_init__(self):
        if isinstance(self.kappa, bool) or int(self.kappa) != self.kappa or self.kappa < 1:
            raise DomainError(f"kappa must be a positive integer, got {self.kappa!r}")
        object.__setattr__(self, "kappa", int(self.kappa))

    @property
    def second_moment_available(self):
        return self.kappa == 1

    def __str__(self):
        return "gini" if self.kappa == 1 else f"ggini:{self.kappa}"


@dataclass(frozen=True)
class GeneralizedGiniReal:
    kappa: float
    closed_form_posterior = False
    second_moment_available = False

    def __post_init__(self):
        k = float(self.kappa)
        if not math.isfinite(k) or k <= 0:
            raise DomainError(f"kappa must be > 0, got {self.kappa!r}")
        object.__setattr__(self, "kappa", k)

    def __str__(self):
        return f"ggini:{self.kappa!r}"


@dataclass(frozen=True)
class Renyi:
    zeta: float
    closed_form_posterior = False
    second_moment_available = False

    def __post_init__(self):
        z = float(self.zeta)
        if not math.isfinite(z) or z <= 0 or z == 1.0:
            raise DomainError(f"zeta must be > 0 and != 1, got {self.zeta!r}")
        object.__setattr__(self, "zeta", z)

    def __str__(self):
        return f"renyi:{self.zeta!r}"


DiversityIndex = Union[Shannon, GeneralizedGini, GeneralizedGiniReal, Renyi]
GINI = GeneralizedGini(1)


def parse_index(text: str) -> DiversityIndex:
    """Parse ``shannon``, ``gini``, ``ggini:<kappa>`` or ``renyi:<zeta>``."""
    name, _, arg = text.strip().lower().partition(":")
    try:
        if name == "shannon" and not arg:
            return Shannon()
        if name == "gini" and not arg:
            return GINI
        if name == "ggini" and arg:
            value = float(arg)
            if value.is_integer() and value >= 1:
                return GeneralizedGini(int(value))
            return GeneralizedGiniReal(value)
        if name == "renyi" and arg:
            return Renyi(float(arg))
    except ValueError as exc:
        raise DomainError(f"bad index parameter in {text!r}: {exc}") from None
    raise DomainError(f"unknown index {text!r}; expected shannon, gini, ggini:<k> or renyi:<z>")


@dataclass(frozen=True)
class PriorMoments:
    mean: float
    second_moment: float | None = None


def _rising(x: float, terms: int) -> float:
    """x (x+1) ... (x+terms-1)."""
    out = 1.0
    for r in range(terms):
        out *= x + r
    return out


def _size_biased_beta(params: PdpParams) -> BetaParams:
    return BetaParams(1.0 - params.alpha, params.theta + params.alpha)


def prior_moments(params: PdpParams, idx: DiversityIndex) -> PriorMoments:
    a, t = params.alpha, params.theta
    if isinstance(idx, Shannon):
        mean = digamma(t + 1.0) - digamma(1.0 - a)
        p1, p2, q2 = digamma(1.0 - a), digamma(2.0 - a), digamma(t + 2.0)
        # diagonal term: E[-W log W]^2-type contribution of the first stick
        same = (1.0 - a) / (t + 1.0) * ((trigamma(2.0 - a) - trigamma(t + 2.0)) + (p2 - q2) ** 2)
        # cross term between the first stick and the rest, split in two parts
        cross = (t + a) / (t + 1.0) * (
            (p1 - q2) * (p1 - digamma(t + 1.0 + a))
            + (p1 - q2) * (digamma(t + a + 1.0) - q2)
            - trigamma(t + 2.0)
        )
        second = same + cross
        return PriorMoments(mean, second)
    if isinstance(idx, GeneralizedGini):
        mean = 1.0 - beta_power_moment(_size_biased_beta(params), idx.kappa)
        if idx.kappa != 1:
            return PriorMoments(mean)
        second = (
            (t + 2.0 * a - 1.0) / (t + 1.0)
            + (1.0 - a) * (2.0 - a) * (3.0 - a) / ((t + 1.0) * (t + 2.0) * (t + 3.0))
            + (t + a) * (1.0 - a) ** 2 / ((t + 1.0) * (t + 2.0) * (t + 3.0))
        )
        return PriorMoments(mean, second)
    if isinstance(idx, GeneralizedGiniReal):
        return PriorMoments(1.0 - beta_real_moment(_size_biased_beta(params), idx.kappa))
    raise UnsupportedIndexError(f"no closed-form prior moments for {idx}")


def _shannon_posterior(params: PdpParams, counts) -> float:
    a, t = params.alpha, params.theta
    n, k = sum(counts), len(counts)
    acc = math.fsum((c - a) * digamma(c - a + 1.0) for c in counts)
    return digamma(t + n + 1.0) - (t + a * k) / (t + n) * digamma(1.0 - a) - acc / (t + n)


def _gini_posterior(params: PdpParams, counts, kappa: int) -> float:
    a, t = params.alpha, params.theta
    n, k = sum(counts), len(counts)
    denom = _rising(t + n, kappa + 1)
    acc = math.fsum(_rising(c - a, kappa + 1) for c in counts)
    new_mass = (t + a * k) * _rising(1.0 - a, kappa)
    return 1.0 - acc / denom - new_mass / denom


def posterior_mean(params: PdpParams, a: Abundance, idx: DiversityIndex) -> float:
    """Closed-form E[G | pi^n] for Shannon and integer-kappa generalized Gini."""
    if not getattr(idx, "closed_form_posterior", False):
        raise UnsupportedIndexError(f"no closed-form posterior mean for {idx}; use posterior_mc_mean")
    if a.k == 0:
        return prior_moments(params, idx).mean
    if isinstance(idx, Shannon):
        return _shannon_posterior(params, a.counts)
    return _gini_posterior(params, a.counts, idx.kappa)


def plugin_value(masses, idx: DiversityIndex) -> float:
    """Index evaluated at a (possibly sub-stochastic) mass vector, with 0 log 0 = 0."""
    x = np.asarray(masses, dtype=float).ravel()
    if x.size == 0 or not np.all(np.isfinite(x)) or np.any(x < 0):
        raise DomainError("masses must be a non-empty vector of finite nonnegative reals")
    total = x.sum()
    if total <= 0:
        raise DomainError("masses are all zero")
    if total > 1.0 + 1e-9:
        raise DomainError(f"masses sum to {total} > 1")
    x = x[x > 0]
    if isinstance(idx, Shannon):
        return float(max(-np.sum(x * np.log(x)), 0.0))
    if isinstance(idx, (GeneralizedGini, GeneralizedGiniReal)):
        return float(1.0 - np.sum(x ** (idx.kappa + 1.0)))
    if isinstance(idx, Renyi):
        return float(np.log(np.sum(x**idx.zeta)) / (1.0 - idx.zeta))
    raise DomainError(f"unknown index {idx!r}")


def plugin_abundance(a: Abundance, idx: DiversityIndex) -> float:
    if a.k == 0:
        raise DomainError("plug-in value of the empty abundance is undefined")
    counts = np.asarray(a.counts, dtype=float)
    return plugin_value(counts / counts.sum(), idx)


def entropy_step_difference(
    params: PdpParams, a: Abundance, c: StepChoice, method: str = "direct"
) -> float:
    """Change of the Shannon posterior mean when ``c`` is applied to ``a``.

    ``method="direct"`` subtracts two posterior means; ``"closed_form"`` uses
    the expanded one-step expression and serves as a cross-check.
    """
    nxt = apply_step(a, c)
    if method == "direct":
        return posterior_mean(params, nxt, Shannon()) - posterior_mean(params, a, Shannon())
    if method != "closed_form":
        raise DomainError(f"unknown method {method!r}")
    if a.k == 0:
        raise DomainError("closed form needs n >= 1")
    al, t = params.alpha, params.theta
    n, k = a.n, a.k
    acc = math.fsum((x - al) * digamma(x - al + 1.0) for x in a.counts)
    psi_new = digamma(1.0 - al)
    out = digamma(t + n + 2.0) - digamma(t + n + 1.0)
    out += ((t + al * k) * psi_new + acc) / ((t + n) * (t + n + 1.0))
    if isinstance(c, NewClass):
        out -= (psi_new + 1.0) / (t + n + 1.0)
    else:
        out -= (digamma(a.counts[c.j - 1] - al + 1.0) + 1.0) / (t + n + 1.0)
    return out


class RenyiIntegrability(enum.Enum):
    INTEGRABLE = "integrable"
    SUFFICIENT_CONDITION_HOLDS = "sufficient_condition_holds"
    SUFFICIENT_CONDITION_FAILS = "sufficient_condition_fails"


def renyi_integrability(params: PdpParams, zeta: float) -> RenyiIntegrability:
    zeta = Renyi(zeta).zeta
    if zeta > 1.0:
        return RenyiIntegrability.INTEGRABLE
    if params.alpha < zeta:
        return RenyiIntegrability.SUFFICIENT_CONDITION_HOLDS
    return RenyiIntegrability.SUFFICIENT_CONDITION_FAILS
