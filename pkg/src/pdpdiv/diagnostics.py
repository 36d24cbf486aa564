"""Structural sequences along trajectories, extremal abundances and executable checks.

Sequence values use "scaled" posterior means: for Shannon
``(theta+n) E[H | pi^n]`` and for generalized Gini
``prod_{r=0..kappa}(theta+n+r) E[G | pi^n]``.  Both are affine in the
per-class sums, so the sequences are formed without dividing by large
normalizers.
"""
from __future__ import annotations

import enum
import itertools
import math
import random
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, UnsupportedIndexError
from .estimators import (
    GINI,
    DiversityIndex,
    GeneralizedGini,
    Shannon,
    plugin_abundance,
    posterior_mean,
    prior_moments,
)
from .partition import (
    Abundance,
    NewClass,
    PdpParams,
    Trajectory,
    apply_step,
    iterate_batch,
    successors,
    transition_probabilities,
)
from .rng import derive_seeds
from .specfun import digamma

DEFAULT_FLAT_TOL = 1e-9


def _check_sequence_index(idx):
    if not isinstance(idx, (Shannon, GeneralizedGini)):
        raise UnsupportedIndexError(f"sequences are defined for Shannon and integer-kappa Gini, not {idx}")


def _rising(x, terms):
    out = 1.0
    for r in range(terms):
        out *= x + r
    return out


@lru_cache(maxsize=None)
def _class_term(c: int, alpha: float, kappa: int) -> float:
    """Per-class summand of the scaled posterior; kappa=0 selects Shannon."""
    if kappa == 0:
        return (c - alpha) * digamma(c - alpha + 1.0)
    return _rising(c - alpha, kappa + 1)


def _kappa(idx) -> int:
    return 0 if isinstance(idx, Shannon) else idx.kappa


def scaled_posterior(params: PdpParams, a: Abundance, idx: DiversityIndex) -> float:
    """Posterior mean times its natural normalizer; defined for the empty abundance too."""
    _check_sequence_index(idx)
    al, t = params.alpha, params.theta
    n, k = a.n, a.k
    kap = _kappa(idx)
    acc = math.fsum(_class_term(c, al, kap) for c in a.counts)
    if kap == 0:
        return (t + n) * digamma(t + n + 1.0) - (t + al * k) * digamma(1.0 - al) - acc
    return _rising(t + n, kap + 1) - acc - (t + al * k) * _rising(1.0 - al, kap)


def _singletons_scaled(params: PdpParams, n: int, idx) -> float:
    """:func:`scaled_posterior` at ``1^n`` in O(1)."""
    al, t = params.alpha, params.theta
    kap = _kappa(idx)
    if kap == 0:
        return (t + n) * digamma(t + n + 1.0) - (t + al * n) * digamma(1.0 - al) - n * _class_term(1, al, 0)
    return _rising(t + n, kap + 1) - n * _class_term(1, al, kap) - (t + al * n) * _rising(1.0 - al, kap)


@dataclass
class SequenceReport:
    times: list
    values: list
    increments: list
    flat_steps: list
    tolerance: float = DEFAULT_FLAT_TOL

    def rows(self):
        for row in zip(self.times, self.values, self.increments):
            yield {"n": row[0], "value": row[1], "increment": row[2], "flat": row[0] in self._flat}

    @property
    def _flat(self):
        return set(self.flat_steps)


def _check_chain(prefixes):
    prefixes = list(prefixes)
    prev = Abundance(())
    for i, cur in enumerate(prefixes):
        ok = cur.n == prev.n + 1 and (
            cur.counts == prev.counts + (1,)
            or (cur.k == prev.k and sum(x != y for x, y in zip(cur.counts, prev.counts)) == 1
                and all(x >= y for x, y in zip(cur.counts, prev.counts)))
        )
        if not ok:
            raise DomainError(f"prefix {i + 1} ({cur.counts}) does not follow {prev.counts} by one step")
        prev = cur
    return prefixes


def _as_prefixes(prefixes_or_trajectory):
    if isinstance(prefixes_or_trajectory, Trajectory):
        return list(prefixes_or_trajectory.prefixes())
    return _check_chain(prefixes_or_trajectory)


def _report(values, tol, first_previous=0.0):
    incs = []
    prev = first_previous
    for v in values:
        incs.append(v - prev)
        prev = v
    times = list(range(1, len(values) + 1))
    flat = [t for t, d in zip(times, incs) if abs(d) <= tol]
    return SequenceReport(times, list(values), incs, flat, tol)


def ell_sequence(prefixes, idx: DiversityIndex, tol: float = DEFAULT_FLAT_TOL) -> SequenceReport:
    """Plug-in deficiency sequence: Shannon ``sum c log c``, Gini ``sum c**(kappa+1) - n``."""
    _check_sequence_index(idx)
    prefixes = _as_prefixes(prefixes)
    if isinstance(idx, Shannon):
        values = [math.fsum(c * math.log(c) for c in a.counts) for a in prefixes]
    else:
        values = [float(sum(c ** (idx.kappa + 1) for c in a.counts) - a.n) for a in prefixes]
    return _report(values, tol)


def big_l_sequence(params: PdpParams, prefixes, idx: DiversityIndex, tol: float = DEFAULT_FLAT_TOL) -> SequenceReport:
    """Scaled gap between the posterior mean at ``1^n`` and at ``pi^n``."""
    _check_sequence_index(idx)
    prefixes = _as_prefixes(prefixes)
    values = [_singletons_scaled(params, a.n, idx) - scaled_posterior(params, a, idx) for a in prefixes]
    return _report(values, tol)


def delta_sequence(params: PdpParams, prefixes, idx: DiversityIndex, tol: float = DEFAULT_FLAT_TOL) -> SequenceReport:
    """Values are the one-step increments of the scaled posterior mean (nonnegative)."""
    _check_sequence_index(idx)
    prefixes = _as_prefixes(prefixes)
    scaled = [scaled_posterior(params, Abundance(()), idx)]
    scaled += [scaled_posterior(params, a, idx) for a in prefixes]
    deltas = [b - a for a, b in zip(scaled, scaled[1:])]
    return _report(deltas, tol)


class ExtremalKind(enum.Enum):
    MIN_OVER_K = "min"
    MAX_OVER_K = "max"


def extremal_abundance(n: int, k: int, which: ExtremalKind) -> Abundance:
    """One big class plus singletons (MIN) or the most uniform split (MAX) of n into k classes."""
    n, k = int(n), int(k)
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got n={n}, k={k}")
    if which is ExtremalKind.MIN_OVER_K:
        return Abundance((n - k + 1,) + (1,) * (k - 1))
    q, r = divmod(n, k)
    return Abundance((q + 1,) * r + (q,) * (k - r))


def compositions(n: int):
    """Every abundance vector of total ``n`` (ordered, positive parts)."""
    for cuts in itertools.product((False, True), repeat=n - 1):
        parts, run = [], 1
        for cut in cuts:
            if cut:
                parts.append(run)
                run = 1
            else:
                run += 1
        parts.append(run)
        yield Abundance(tuple(parts))


@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: float = 0.0
    detail: dict = field(default_factory=dict)


def verify_tower(params: PdpParams, a: Abundance, idx: DiversityIndex, tol: float = 1e-10) -> CheckResult:
    """One-step martingale identity: posterior mean equals its kernel-weighted successors."""
    probs = transition_probabilities(params, a)
    lhs = posterior_mean(params, a, idx)
    rhs = math.fsum(p * posterior_mean(params, apply_step(a, c), idx) for p, c in zip(probs, successors(a)))
    resid = abs(lhs - rhs)
    return CheckResult("tower", resid <= tol, resid, {"lhs": lhs, "rhs": rhs, "counts": list(a.counts)})


def random_cases(count: int, seed: int, max_n: int = 50):
    """Random ``(params, abundance, index)`` triples for identity checks."""
    rnd = random.Random(seed)
    indexes = [Shannon(), GINI, GeneralizedGini(2)]
    for _ in range(count):
        alpha = rnd.choice([0.0, rnd.uniform(0.0, 0.95)])
        theta = rnd.uniform(-alpha + 0.05, 10.0)
        n = rnd.randint(1, max_n)
        cuts = sorted(rnd.sample(range(1, n), rnd.randint(0, n - 1))) if n > 1 else []
        edges = [0] + cuts + [n]
        counts = tuple(b - a for a, b in zip(edges, edges[1:]))
        yield PdpParams(alpha, theta), Abundance(counts), rnd.choice(indexes)


def verify_tower_random(count: int = 1000, seed: int = 0, tol: float = 1e-10) -> CheckResult:
    worst = 0.0
    failures = []
    for params, a, idx in random_cases(count, seed):
        r = verify_tower(params, a, idx, tol)
        worst = max(worst, r.residual)
        if not r.passed:
            failures.append({"alpha": params.alpha, "theta": params.theta, "index": str(idx), **r.detail})
    return CheckResult("tower", not failures, worst, {"cases": count, "failures": failures[:10]})


def verify_corollary1(t: Trajectory, params: PdpParams, tol: float = DEFAULT_FLAT_TOL, kappa: int = 1) -> CheckResult:
    """Check that five flatness predicates agree at every step n >= 2."""
    prefixes = list(t.prefixes())
    gini = GeneralizedGini(kappa)
    seqs = [
        ell_sequence(prefixes, gini, tol),
        ell_sequence(prefixes, Shannon(), tol),
        None,
        big_l_sequence(params, prefixes, gini, tol),
        big_l_sequence(params, prefixes, Shannon(), tol),
    ]
    flats = [set(s.flat_steps) if s is not None else None for s in seqs]
    for n in range(2, t.n + 1):
        new = isinstance(t.steps[n - 1], NewClass)
        preds = [n in f if f is not None else new for f in flats]
        if len(set(preds)) != 1:
            incs = [s.increments[n - 1] if s is not None else None for s in seqs]
            return CheckResult("corollary1", False, 0.0, {"step": n, "predicates": preds, "increments": incs})
    worst_new = max(
        (abs(s.increments[n - 1]) for s in seqs if s is not None for n in range(2, t.n + 1)
         if isinstance(t.steps[n - 1], NewClass)),
        default=0.0,
    )
    return CheckResult("corollary1", True, worst_new, {"steps": t.n})


def verify_identities(points: int = 10_000, seed: int = 0, tol: float = 1e-10) -> list:
    """Digamma recurrences and the step-1 anchor on random inputs."""
    rnd = random.Random(seed)
    xs = [rnd.uniform(0.0, 1000.0) or 1.0 for _ in range(points)]
    eq17 = max(abs(x * digamma(x + 1.0) - (x - 1.0) * digamma(x) - (digamma(x) + 1.0)) for x in xs)
    rec = max(abs(digamma(x + 1.0) - digamma(x) - 1.0 / x) for x in xs)
    anchor = 0.0
    for params, _, idx in random_cases(1000, seed + 1):
        anchor = max(anchor, abs(posterior_mean(params, Abundance((1,)), idx) - prior_moments(params, idx).mean))
    return [
        CheckResult("digamma_shift_identity", eq17 <= tol, eq17, {"points": points}),
        CheckResult("digamma_recurrence", rec <= 1e-12 * 1000, rec, {"points": points}),
        CheckResult("step1_anchor", anchor <= 1e-12, anchor, {"cases": 1000}),
    ]


class _BatchPosterior:
    """Vectorized posterior means of a closed-form index over a :class:`CrpBatch`."""

    def __init__(self, params: PdpParams, idx, horizon: int):
        _check_sequence_index(idx)
        self.params = params
        self.kappa = _kappa(idx)
        al = params.alpha
        self.f = np.array([0.0] + [_class_term(c, al, self.kappa) for c in range(1, horizon + 2)])
        self.df = np.append(np.diff(self.f), 0.0)
        self.psi_new = digamma(1.0 - al)
        self.c_new = _rising(1.0 - al, self.kappa)
        self.acc = None

    def reset(self, m):
        self.acc = np.full(m, self.f[1])

    def update(self, batch, codes):
        rows = batch._rows
        col = np.where(codes == 0, batch.k - 1, codes - 1)
        c = batch.counts[rows, col]
        self.acc += self.f[c] - self.f[c - 1]

    def value(self, n, k, acc):
        al, t = self.params.alpha, self.params.theta
        if self.kappa == 0:
            return digamma(t + n + 1.0) - (t + al * k) / (t + n) * self.psi_new - acc / (t + n)
        return 1.0 - (acc + (t + al * k) * self.c_new) / _rising(t + n, self.kappa + 1)

    def current(self, batch):
        return self.value(batch.n, batch.k, self.acc)

    def conditional_variance(self, batch, z):
        """Exact one-step conditional variance of the posterior mean at the current state.

        A move into class j changes the posterior by ``shift - df[c_j] / norm``
        where ``shift`` and ``norm`` are shared by every existing class.
        """
        al, t, n = self.params.alpha, self.params.theta, batch.n
        kmax = int(batch.k.max())
        block = batch.counts[:, :kmax]
        z_stay = self.value(n + 1, batch.k, self.acc)
        shift = z_stay - z
        norm = (t + n + 1.0) if self.kappa == 0 else _rising(t + n + 1.0, self.kappa + 1)
        dev = shift[:, None] - self.df[block] / norm
        weights = np.clip(block - al, 0.0, None)
        z_new = self.value(n + 1, batch.k + 1, self.acc + self.f[1])
        p_new = (t + al * batch.k) / (t + n)
        return np.einsum("ij,ij->i", weights, dev * dev) / (t + n) + p_new * (z_new - z) ** 2


def _trajectory_seeds(seed, m):
    return [int(s) for s in derive_seeds(seed, m)]


@dataclass
class DoobResult:
    lhs: float
    lhs_se: float
    rhs: float
    ratio: float
    variance_sum: float
    variance_sum_se: float
    second_moment: float
    trajectories: int
    horizon: int


def doob_experiment(params: PdpParams, idx: DiversityIndex, horizon: int, m: int, seed: int = 0) -> DoobResult:
    """Squared running maximum of the posterior mean against four times E[G^2].

    Also accumulates, per trajectory, the exact one-step conditional
    variances for n = 1 .. horizon-1; their mean is an estimate of the
    summed martingale-difference variances.
    """
    if not (isinstance(idx, Shannon) or idx == GINI):
        raise UnsupportedIndexError(f"no closed-form second moment for {idx}")
    second = prior_moments(params, idx).second_moment
    tracker = _BatchPosterior(params, idx, horizon)
    running_max = None
    var_sum = np.zeros(m)
    for batch, codes in iterate_batch(params, horizon, _trajectory_seeds(seed, m)):
        if batch.n == 1:
            tracker.reset(m)
        else:
            tracker.update(batch, codes)
        z = tracker.current(batch)
        z = np.broadcast_to(z, (m,)).astype(float)
        running_max = z.copy() if running_max is None else np.maximum(running_max, z)
        if batch.n < horizon:
            var_sum += tracker.conditional_variance(batch, z)
    sq = running_max**2
    lhs = float(sq.mean())
    se = float(sq.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    vs_se = float(var_sum.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    return DoobResult(lhs, se, 4.0 * second, lhs / (4.0 * second), float(var_sum.mean()), vs_se, second, m, horizon)


@dataclass
class ConvergenceRow:
    n: int
    mean_abs_gap: float
    gap_se: float
    mean_posterior: float
    posterior_se: float
    mean_plugin: float


def _plugin_batch(counts, n, idx):
    c = counts.astype(float)
    if isinstance(idx, Shannon):
        with np.errstate(divide="ignore", invalid="ignore"):
            clogc = np.where(counts > 0, c * np.log(np.where(counts > 0, c, 1.0)), 0.0)
        return math.log(n) - clogc.sum(axis=1) / n
    return 1.0 - np.sum((c / n) ** (idx.kappa + 1), axis=1)


def convergence_experiment(params: PdpParams, idx: DiversityIndex, checkpoints, m: int, seed: int = 0) -> list:
    """Mean |posterior - plug-in| and mean posterior across trajectories at each checkpoint."""
    _check_sequence_index(idx)
    checkpoints = sorted(int(c) for c in checkpoints)
    if not checkpoints or checkpoints[0] < 1:
        raise DomainError("checkpoints must be positive integers")
    horizon = checkpoints[-1]
    tracker = _BatchPosterior(params, idx, horizon)
    wanted = set(checkpoints)
    rows = []
    for batch, _ in iterate_batch(params, horizon, _trajectory_seeds(seed, m)):
        if batch.n not in wanted:
            continue
        kmax = int(batch.k.max())
        block = batch.counts[:, :kmax]
        acc = np.where(block > 0, tracker.f[block], 0.0).sum(axis=1)
        post = np.asarray(tracker.value(batch.n, batch.k, acc), dtype=float)
        plug = _plugin_batch(block, batch.n, idx)
        gap = np.abs(post - plug)
        se = (lambda x: float(x.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0)
        rows.append(ConvergenceRow(batch.n, float(gap.mean()), se(gap), float(post.mean()), se(post), float(plug.mean())))
    return rows


@dataclass
class ExtremalCheck:
    n: int
    params: PdpParams
    index: str
    failures: list


def brute_force_extremal(n_max: int, params: PdpParams, indexes=None, tol: float = 1e-10) -> list:
    """Enumerate every abundance with n <= n_max and confirm the extremal structure.

    Posterior side: global max only at 1^n, global min only at k = 1, and
    within each k the min/max sit at :func:`extremal_abundance`.  Plug-in
    side (Shannon and Gini): same within-k structure, max at 1^n, zero only at k = 1.
    Exchange monotonicity (moving one unit from a class at least two larger
    to a smaller one never decreases either estimator) is checked on every vector.
    """
    indexes = indexes or [Shannon(), GINI, GeneralizedGini(2)]
    out = []
    for n in range(1, n_max + 1):
        comps = list(compositions(n))
        for idx in indexes:
            fails = []
            post = {a: posterior_mean(params, a, idx) for a in comps}
            plug = {a: plugin_abundance(a, idx) for a in comps}
            top = max(post.values())
            argmax = [a for a in comps if post[a] >= top - tol]
            if argmax != [Abundance((1,) * n)]:
                fails.append(("posterior_argmax", [a.counts for a in argmax]))
            low = min(post.values())
            argmin = [a for a in comps if post[a] <= low + tol]
            if argmin != [Abundance((n,))]:
                fails.append(("posterior_argmin", [a.counts for a in argmin]))
            ptop = max(plug.values())
            if [a for a in comps if plug[a] >= ptop - tol] != [Abundance((1,) * n)]:
                fails.append(("plugin_argmax", None))
            if isinstance(idx, Shannon) and ptop > math.log(n) + tol:
                fails.append(("plugin_log_n_bound", ptop))
            zeros = [a for a in comps if abs(plug[a]) <= tol]
            if zeros != [Abundance((n,))]:
                fails.append(("plugin_zero", [a.counts for a in zeros]))
            for k in range(1, n + 1):
                group = [a for a in comps if a.k == k]
                for values, label in ((post, "posterior"), (plug, "plugin")):
                    lo = min(values[a] for a in group)
                    hi = max(values[a] for a in group)
                    amin = extremal_abundance(n, k, ExtremalKind.MIN_OVER_K)
                    amax = extremal_abundance(n, k, ExtremalKind.MAX_OVER_K)
                    if abs(values[amin] - lo) > tol:
                        fails.append((f"{label}_min_k", k))
                    if abs(values[amax] - hi) > tol:
                        fails.append((f"{label}_max_k", k))
            for a in comps:
                for j, l in itertools.permutations(range(a.k), 2):
                    if a.counts[j] >= a.counts[l] + 2:
                        moved = list(a.counts)
                        moved[j] -= 1
                        moved[l] += 1
                        b = Abundance(tuple(moved))
                        if post[b] < post[a] - tol:
                            fails.append(("posterior_exchange", a.counts))
                        if plug[b] < plug[a] - tol:
                            fails.append(("plugin_exchange", a.counts))
            out.append(ExtremalCheck(n, params, str(idx), fails))
    return out


@dataclass
class ScanResult:
    passed: bool
    warmup_bound: float
    max_after: float
    worst_step: int
    steps: int


def step_difference_scan(params: PdpParams, n: int, seed: int = 0, warmup: int = 1000, factor: float = 10.0) -> ScanResult:
    """Track |one-step change| of the Shannon posterior along one sampled trajectory.

    The bound is the largest change over steps 2..warmup; the scan passes when
    no later step exceeds ``factor`` times that bound.
    """
    from .estimators import entropy_step_difference
    from .partition import sample_trajectory

    if not 2 <= warmup < n:
        raise DomainError("need 2 <= warmup < n")
    t = sample_trajectory(params, n, seed)
    prev = Abundance((1,))
    bound = max_after = 0.0
    worst = 0
    for step_no, (c, cur) in enumerate(zip(t.steps[1:], itertools.islice(t.prefixes(), 1, None)), 2):
        d = abs(entropy_step_difference(params, prev, c))
        if step_no <= warmup:
            bound = max(bound, d)
        elif d > max_after:
            max_after, worst = d, step_no
        prev = cur
    return ScanResult(max_after <= factor * bound, bound, max_after, worst, n)
