"""Exact PDP posterior sampling and Monte Carlo means for indexes without closed forms.

Given counts ``pi^n`` the posterior masses are ``(p_1..p_k, p_{k+1} S')`` with
``p ~ Dirichlet(pi(1)-alpha, ..., pi(k)-alpha, theta+alpha k)`` and ``S'`` an
independent PDP(alpha, theta + alpha k) draw, represented by a truncated
stick-breaking sequence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .estimators import (
    DiversityIndex,
    GeneralizedGini,
    GeneralizedGiniReal,
    Renyi,
    Shannon,
    plugin_value,
)
from .partition import (
    DEFAULT_EPS,
    DEFAULT_MAX_TERMS,
    Abundance,
    MassSequence,
    PdpParams,
    stick_breaking_sample,
)
from .rng import derive_seed, make_rng, sample_dirichlet
from .specfun import BetaParams, beta_real_moment, digamma

__all__ = [
    "PosteriorSample",
    "McEstimate",
    "MomentEstimate",
    "sample_dirichlet",
    "sample_posterior_masses",
    "posterior_mc_mean",
    "posterior_mc_means",
    "truncation_bias",
    "stick_breaking_moments",
]


@dataclass(frozen=True)
class PosteriorSample:
    head: np.ndarray
    tail: MassSequence
    combined: np.ndarray
    residual: float
    tail_params: PdpParams


def sample_posterior_masses(
    params: PdpParams,
    a: Abundance,
    eps: float = DEFAULT_EPS,
    seed: int = 0,
    max_terms: int = DEFAULT_MAX_TERMS,
) -> PosteriorSample:
    """One draw of the posterior mass vector; head and tail use disjoint derived streams."""
    tail_params = PdpParams(params.alpha, params.theta + params.alpha * a.k)
    if a.k == 0:
        head = np.ones(1)
    else:
        shapes = np.append(np.asarray(a.counts, dtype=float) - params.alpha, tail_params.theta)
        head = sample_dirichlet(shapes, make_rng(derive_seed(seed, 0)))
    tail = stick_breaking_sample(
        tail_params, eps, max_terms=max_terms, rng=make_rng(derive_seed(seed, 1))
    )
    combined = np.concatenate((head[:-1], head[-1] * tail.weights))
    return PosteriorSample(head, tail, combined, float(head[-1] * tail.residual), tail_params)


def truncation_bias(
    idx: DiversityIndex, alpha: float, remainder_theta: float, residual: float, combined=None
) -> float | None:
    """Expected error of an index evaluated on a truncated mass vector.

    The dropped mass ``residual`` is distributed as ``residual * S''`` with
    ``S''`` ~ PDP(alpha, remainder_theta).  Returns the expected value of
    (true index - truncated index) for Shannon and Gini types, and a bound on
    its magnitude for Renyi (``None`` when no finite bound exists).
    """
    r = float(residual)
    if r <= 0.0:
        return 0.0
    size_biased = BetaParams(1.0 - alpha, remainder_theta + alpha)
    if isinstance(idx, Shannon):
        tail_entropy = digamma(remainder_theta + 1.0) - digamma(1.0 - alpha)
        return r * (-math.log(r) + tail_entropy)
    if isinstance(idx, (GeneralizedGini, GeneralizedGiniReal)):
        return -(r ** (idx.kappa + 1.0)) * beta_real_moment(size_biased, idx.kappa)
    if isinstance(idx, Renyi):
        if idx.zeta <= alpha:
            return None
        head_sum = float(np.sum(np.asarray(combined)[np.asarray(combined) > 0] ** idx.zeta))
        tail_sum = r**idx.zeta * beta_real_moment(size_biased, idx.zeta - 1.0)
        return math.log1p(tail_sum / head_sum) / abs(1.0 - idx.zeta)
    raise DomainError(f"unknown index {idx!r}")


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    std_error: float
    samples: int
    mean_residual: float
    truncation_bias: float | None

    def __iter__(self):
        return iter((self.estimate, self.std_error))


def _index_value(x: np.ndarray, idx: DiversityIndex) -> float:
    x = x[x > 0]
    if isinstance(idx, Shannon):
        return float(-np.dot(x, np.log(x)))
    if isinstance(idx, (GeneralizedGini, GeneralizedGiniReal)):
        return float(1.0 - np.sum(x ** (idx.kappa + 1.0)))
    return float(np.log(np.sum(x**idx.zeta)) / (1.0 - idx.zeta))


def posterior_mc_means(
    params: PdpParams,
    a: Abundance,
    indexes,
    m: int,
    seed: int = 0,
    eps: float = DEFAULT_EPS,
    max_terms: int = DEFAULT_MAX_TERMS,
) -> dict:
    """Monte Carlo posterior means of several indexes from one set of ``m`` draws.

    Draw ``i`` uses the stream ``derive_seed(seed, i)``, so results do not
    depend on which indexes are requested together.  ``truncation_bias`` is
    the mean over draws of the expected truncation error (see
    :func:`truncation_bias`); for Renyi it is a magnitude bound.
    """
    if m < 2:
        raise DomainError("need at least 2 samples for a standard error")
    indexes = list(indexes)
    for idx in indexes:
        plugin_value([1.0], idx)  # validates the index type
    values = np.empty((len(indexes), m))
    biases = np.empty((len(indexes), m))
    residuals = np.empty(m)
    for i in range(m):
        s = sample_posterior_masses(params, a, eps, derive_seed(seed, i), max_terms)
        residuals[i] = s.residual
        remainder_theta = s.tail_params.theta + params.alpha * s.tail.terms
        for row, idx in enumerate(indexes):
            values[row, i] = _index_value(s.combined, idx)
            b = truncation_bias(idx, params.alpha, remainder_theta, s.residual, s.combined)
            biases[row, i] = np.nan if b is None else b
    out = {}
    for row, idx in enumerate(indexes):
        bias = biases[row]
        out[idx] = McEstimate(
            float(values[row].mean()),
            float(values[row].std(ddof=1) / math.sqrt(m)),
            int(m),
            float(residuals.mean()),
            None if np.isnan(bias).any() else float(bias.mean()),
        )
    return out


def posterior_mc_mean(
    params: PdpParams,
    a: Abundance,
    idx: DiversityIndex,
    m: int,
    seed: int = 0,
    eps: float = DEFAULT_EPS,
    max_terms: int = DEFAULT_MAX_TERMS,
) -> McEstimate:
    """Monte Carlo posterior mean of ``idx``; unpacks as ``(estimate, std_error)``."""
    return posterior_mc_means(params, a, [idx], m, seed, eps, max_terms)[idx]


@dataclass(frozen=True)
class MomentEstimate:
    """First and second moments of an index under the prior, by stick breaking.

    ``mean``/``second`` include the conditional expectation of the dropped
    tail; ``raw_mean``/``raw_second`` are the plain truncated averages.
    """

    mean: float
    mean_se: float
    second: float
    second_se: float
    raw_mean: float
    raw_second: float
    samples: int
    mean_residual: float
    mean_terms: float


def stick_breaking_moments(
    params: PdpParams,
    idx: DiversityIndex,
    m: int,
    seed: int = 0,
    eps: float = DEFAULT_EPS,
    max_terms: int = DEFAULT_MAX_TERMS,
) -> MomentEstimate:
    """Estimate E[G] and E[G^2] under PDP(alpha, theta) from ``m`` stick-breaking draws.

    Tail completion replaces the dropped ``r S''`` by its conditional mean
    given the generated sticks; for G^2 this omits ``r^2 Var(G(S''))``-sized
    terms, far below Monte Carlo error whenever ``r`` is small.
    """
    if not isinstance(idx, (Shannon, GeneralizedGini)):
        raise DomainError(f"tail completion is implemented for Shannon and integer Gini, not {idx}")
    if m < 2:
        raise DomainError("need at least 2 samples")
    raw = np.empty(m)
    completed = np.empty(m)
    residuals = np.empty(m)
    terms = np.empty(m)
    for i in range(m):
        ms = stick_breaking_sample(params, eps, derive_seed(seed, i), max_terms)
        raw[i] = _index_value(ms.weights, idx)
        remainder_theta = params.theta + params.alpha * ms.terms
        completed[i] = raw[i] + truncation_bias(idx, params.alpha, remainder_theta, ms.residual)
        residuals[i] = ms.residual
        terms[i] = ms.terms
    sq = completed**2
    return MomentEstimate(
        float(completed.mean()),
        float(completed.std(ddof=1) / math.sqrt(m)),
        float(sq.mean()),
        float(sq.std(ddof=1) / math.sqrt(m)),
        float(raw.mean()),
        float((raw**2).mean()),
        int(m),
        float(residuals.mean()),
        float(terms.mean()),
    )
