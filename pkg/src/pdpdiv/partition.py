"""Abundance vectors, the Pitman transition kernel and PDP samplers.

Trajectories are drawn by inverse-CDF sampling: step ``n+1`` consumes one
uniform ``u`` from the trajectory's own stream and picks the first class ``j``
(discovery order, new class last) whose cumulative weight exceeds
``u * (theta + n)``.  :class:`CrpBatch` runs many such trajectories in lockstep
and is the single implementation behind :func:`sample_trajectory`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np

from .errors import DomainError, InvalidStepError
from .rng import beta_with_log_complement, make_rng

DEFAULT_EPS = 1e-12
DEFAULT_MAX_TERMS = 100_000


@dataclass(frozen=True)
class PdpParams:
    """Parameters of PDP(alpha, theta): ``0 <= alpha < 1`` and ``theta > -alpha``."""

    alpha: float
    theta: float

    def __post_init__(self):
        a, t = float(self.alpha), float(self.theta)
        if not (math.isfinite(a) and math.isfinite(t)):
            raise DomainError("alpha and theta must be finite")
        if not 0.0 <= a < 1.0:
            raise DomainError(f"alpha must lie in [0, 1), got {a}")
        if not t + a > 0.0:
            raise DomainError(f"theta must exceed -alpha, got theta={t}, alpha={a}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "theta", t)


@dataclass(frozen=True)
class Abundance:
    """Species counts in discovery order.  The empty vector is the state before step 1."""

    counts: tuple = ()

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        for c, raw in zip(counts, self.counts):
            if c != raw or c < 1:
                raise DomainError(f"counts must be positive integers, got {self.counts!r}")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def k(self) -> int:
        return len(self.counts)

    def __len__(self):
        return len(self.counts)

    def __iter__(self):
        return iter(self.counts)


@dataclass(frozen=True)
class Existing:
    """Observation joins existing class ``j`` (1-based, discovery order)."""

    j: int

    def __post_init__(self):
        if int(self.j) != self.j or self.j < 1:
            raise InvalidStepError(f"class index must be a positive integer, got {self.j!r}")


@dataclass(frozen=True)
class NewClass:
    """Observation opens a new class."""


NEW = NewClass()
StepChoice = Union[Existing, NewClass]


def step_code(c: StepChoice) -> int:
    """Integer encoding used by batch code: 0 for a new class, ``j`` for Existing(j)."""
    return 0 if isinstance(c, NewClass) else c.j


def step_from_code(code: int) -> StepChoice:
    return NEW if code == 0 else Existing(int(code))


def apply_step(a: Abundance, c: StepChoice) -> Abundance:
    if isinstance(c, NewClass):
        return Abundance(a.counts + (1,))
    if not isinstance(c, Existing):
        raise InvalidStepError(f"not a step choice: {c!r}")
    if c.j > a.k:
        raise InvalidStepError(f"Existing({c.j}) is invalid for an abundance with k={a.k}")
    counts = list(a.counts)
    counts[c.j - 1] += 1
    return Abundance(tuple(counts))


def successors(a: Abundance) -> list:
    """All step choices available from ``a``, existing classes first."""
    if a.k == 0:
        return [NEW]
    return [Existing(j) for j in range(1, a.k + 1)] + [NEW]


def transition_probabilities(params: PdpParams, a: Abundance) -> np.ndarray:
    """Pitman kernel: ``(pi(j) - alpha)/(theta + n)`` per class, then the new-class mass."""
    if a.k == 0:
        return np.ones(1)
    denom = params.theta + a.n
    probs = np.empty(a.k + 1)
    probs[:-1] = (np.asarray(a.counts, dtype=float) - params.alpha) / denom
    probs[-1] = (params.theta + params.alpha * a.k) / denom
    return probs


@dataclass(frozen=True)
class Trajectory:
    """A sequence of CRP steps; step 1 is always a new class."""

    params: PdpParams
    steps: tuple
    seed: int | None = None

    def __post_init__(self):
        steps = tuple(self.steps)
        object.__setattr__(self, "steps", steps)
        k = 0
        for i, c in enumerate(steps):
            if isinstance(c, NewClass):
                k += 1
            elif isinstance(c, Existing):
                if i == 0 or c.j > k:
                    raise InvalidStepError(f"step {i + 1}: Existing({c.j}) with only {k} classes")
            else:
                raise InvalidStepError(f"step {i + 1}: not a step choice: {c!r}")

    @property
    def n(self) -> int:
        return len(self.steps)

    def prefixes(self) -> Iterator[Abundance]:
        """Yield the abundance after each step (``pi^1, ..., pi^n``)."""
        counts: list = []
        for c in self.steps:
            if isinstance(c, NewClass):
                counts.append(1)
            else:
                counts[c.j - 1] += 1
            yield Abundance(tuple(counts))

    def abundance(self) -> Abundance:
        counts: list = []
        for c in self.steps:
            if isinstance(c, NewClass):
                counts.append(1)
            else:
                counts[c.j - 1] += 1
        return Abundance(tuple(counts))

    def codes(self) -> np.ndarray:
        return np.array([step_code(c) for c in self.steps], dtype=np.int64)


def new_species_times(t: Trajectory) -> list:
    """1-based steps at which a new class opens; always starts with 1."""
    return [i + 1 for i, c in enumerate(t.steps) if isinstance(c, NewClass)]


class CrpBatch:
    """``m`` CRP trajectories advanced in lockstep.

    ``counts`` is an ``(m, capacity)`` integer array, zero-padded past each
    row's ``k``.  Rows never interact, so row ``i`` evolves exactly as a lone
    trajectory fed the same uniforms.
    """

    def __init__(self, params: PdpParams, m: int, capacity: int = 16):
        self.params = params
        self.m = int(m)
        self.counts = np.zeros((self.m, max(capacity, 2)), dtype=np.int64)
        self.k = np.zeros(self.m, dtype=np.int64)
        self.n = 0
        self._rows = np.arange(self.m)

    def _grow(self, needed):
        cap = self.counts.shape[1]
        if needed <= cap:
            return
        new_cap = max(needed, 2 * cap)
        grown = np.zeros((self.m, new_cap), dtype=np.int64)
        grown[:, :cap] = self.counts
        self.counts = grown

    def first_step(self) -> np.ndarray:
        self.counts[:, 0] = 1
        self.k[:] = 1
        self.n = 1
        return np.zeros(self.m, dtype=np.int64)

    def choose(self, u: np.ndarray) -> np.ndarray:
        """Inverse-CDF choice codes for uniforms ``u`` without mutating state."""
        kmax = int(self.k.max())
        block = self.counts[:, :kmax]
        weights = np.clip(block - self.params.alpha, 0.0, None)
        cum = np.cumsum(weights, axis=1)
        target = u * (self.params.theta + self.n)
        j = np.count_nonzero(cum <= target[:, None], axis=1)
        return np.where(j < self.k, j + 1, 0)

    def apply(self, codes: np.ndarray) -> None:
        new = codes == 0
        if new.any():
            self._grow(int(self.k.max()) + 1)
            self.counts[self._rows[new], self.k[new]] = 1
            self.k[new] += 1
        old = ~new
        if old.any():
            self.counts[self._rows[old], codes[old] - 1] += 1
        self.n += 1

    def step(self, u: np.ndarray) -> np.ndarray:
        codes = self.choose(u)
        self.apply(codes)
        return codes


def trajectory_uniforms(seeds: Sequence[int], n: int) -> np.ndarray:
    """Row ``i`` holds the ``n - 1`` uniforms consumed by trajectory ``i``."""
    out = np.empty((len(seeds), max(n - 1, 0)))
    for i, s in enumerate(seeds):
        out[i] = make_rng(int(s)).random(max(n - 1, 0))
    return out


def iterate_batch(params: PdpParams, n: int, seeds: Sequence[int]):
    """Advance one trajectory per seed to length ``n``, yielding ``(batch, codes)`` after every step."""
    if n < 1:
        raise DomainError("trajectory length must be >= 1")
    uniforms = trajectory_uniforms(seeds, n)
    batch = CrpBatch(params, len(seeds))
    yield batch, batch.first_step()
    for step in range(n - 1):
        codes = batch.step(uniforms[:, step])
        yield batch, codes


def sample_trajectory(params: PdpParams, n: int, seed: int) -> Trajectory:
    """Draw one CRP trajectory of length ``n``; deterministic in ``seed``."""
    n = int(n)
    codes = [int(c[0]) for _, c in iterate_batch(params, n, [seed])]
    return Trajectory(params, tuple(step_from_code(c) for c in codes), int(seed))


@dataclass(frozen=True)
class MassSequence:
    """Truncated stick-breaking realization in size-biased order.

    ``residual`` is the mass of every stick not generated; it is dropped from
    ``weights`` and reported so consumers can bound the truncation bias.
    """

    weights: np.ndarray
    residual: float
    truncation_eps: float
    params: PdpParams | None = field(default=None, compare=False)

    @property
    def terms(self) -> int:
        return int(self.weights.size)


def _chunk_sizes():
    size = 64
    while True:
        yield size
        size = min(2 * size, 8192)


def stick_breaking_sample(
    params: PdpParams,
    eps: float = DEFAULT_EPS,
    seed: int = 0,
    max_terms: int = DEFAULT_MAX_TERMS,
    rng: np.random.Generator | None = None,
) -> MassSequence:
    """Draw W_j ~ Beta(1 - alpha, theta + alpha j) and break the unit stick.

    Generation stops at the first ``j`` whose remaining mass drops below
    ``eps``, or after ``max_terms`` sticks.
    """
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    if max_terms < 1:
        raise DomainError("max_terms must be >= 1")
    if rng is None:
        rng = make_rng(seed)
    a = 1.0 - params.alpha
    log_eps = math.log(eps)
    pieces = []
    log_rem = 0.0
    start = 1
    for size in _chunk_sizes():
        size = min(size, max_terms - start + 1)
        j = np.arange(start, start + size, dtype=float)
        w, log1m = beta_with_log_complement(rng, a, params.theta + params.alpha * j)
        log_after = log_rem + np.cumsum(log1m)
        log_before = np.concatenate(([log_rem], log_after[:-1]))
        hit = np.flatnonzero(log_after < log_eps)
        stop = hit[0] + 1 if hit.size else size
        pieces.append(w[:stop] * np.exp(log_before[:stop]))
        log_rem = float(log_after[stop - 1])
        start += stop
        if hit.size or start > max_terms:
            break
    return MassSequence(np.concatenate(pieces), math.exp(log_rem), eps, params)
