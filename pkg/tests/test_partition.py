import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdpdiv.errors import DomainError, InvalidStepError
from pdpdiv.partition import (
    NEW,
    Abundance,
    CrpBatch,
    Existing,
    PdpParams,
    Trajectory,
    apply_step,
    iterate_batch,
    new_species_times,
    sample_trajectory,
    stick_breaking_sample,
    successors,
    transition_probabilities,
)
from pdpdiv.rng import derive_seed, derive_seeds

params_st = st.floats(min_value=0.0, max_value=0.95).flatmap(
    lambda a: st.floats(min_value=-a + 0.01, max_value=20.0).map(lambda t: PdpParams(a, t))
)
counts_st = st.lists(st.integers(min_value=1, max_value=30), min_size=1, max_size=12).map(lambda c: Abundance(tuple(c)))


@pytest.mark.parametrize("alpha,theta", [(1.0, 1.0), (-0.1, 1.0), (0.5, -0.5), (0.2, float("nan"))])
def test_params_validation(alpha, theta):
    with pytest.raises(DomainError):
        PdpParams(alpha, theta)


def test_negative_theta_allowed_above_minus_alpha():
    assert PdpParams(0.5, -0.4).theta == -0.4


@pytest.mark.parametrize("counts", [(0,), (2, -1), (1.5,)])
def test_abundance_validation(counts):
    with pytest.raises(DomainError):
        Abundance(counts)


def test_transition_examples():
    assert np.allclose(transition_probabilities(PdpParams(0, 1), Abundance((2, 1))), [0.5, 0.25, 0.25])
    assert np.allclose(transition_probabilities(PdpParams(0.5, 0.5), Abundance((1,))), [1 / 3, 2 / 3])


@given(params_st, counts_st)
def test_transition_probabilities_normalized(params, a):
    p = transition_probabilities(params, a)
    assert p.shape == (a.k + 1,)
    assert np.all(p > 0)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_apply_step_examples():
    assert apply_step(Abundance((2, 1)), Existing(2)) == Abundance((2, 2))
    assert apply_step(Abundance((2, 1)), NEW) == Abundance((2, 1, 1))
    assert apply_step(Abundance((1,)), Existing(1)) == Abundance((2,))
    with pytest.raises(InvalidStepError):
        apply_step(Abundance((1,)), Existing(2))
    assert successors(Abundance(())) == [NEW]


def test_trajectory_validation():
    with pytest.raises(InvalidStepError):
        Trajectory(PdpParams(0, 1), (Existing(1),))
    with pytest.raises(InvalidStepError):
        Trajectory(PdpParams(0, 1), (NEW, Existing(2)))


def test_new_species_times():
    t = Trajectory(PdpParams(0, 1), (NEW, Existing(1), NEW, Existing(2)))
    assert new_species_times(t) == [1, 3]
    assert new_species_times(Trajectory(PdpParams(0, 1), (NEW, Existing(1)))) == [1]


def test_sampling_is_deterministic():
    p = PdpParams(0.3, 1.5)
    assert sample_trajectory(p, 1, 99).steps == (NEW,)
    assert sample_trajectory(p, 500, 7) == sample_trajectory(p, 500, 7)
    assert sample_trajectory(p, 500, 7) != sample_trajectory(p, 500, 8)


def test_batch_rows_match_lone_trajectories():
    p = PdpParams(0.4, 0.8)
    seeds = [int(s) for s in derive_seeds(3, 25)]
    codes = np.array([c for _, c in iterate_batch(p, 200, seeds)]).T
    for row, s in zip(codes, seeds):
        assert list(row) == list(sample_trajectory(p, 200, s).codes())


def test_one_step_frequencies_from_21():
    # drive a batch into state (2, 1) and look at one more step
    p, m = PdpParams(0, 1), 100_000
    batch = CrpBatch(p, m)
    batch.first_step()
    batch.apply(np.ones(m, dtype=np.int64))
    batch.apply(np.zeros(m, dtype=np.int64))
    u = np.array([np.random.Generator(np.random.PCG64(derive_seed(5, i))).random() for i in range(m)])
    codes = batch.choose(u)
    freq = np.array([(codes == 1).mean(), (codes == 2).mean(), (codes == 0).mean()])
    want = np.array([0.5, 0.25, 0.25])
    assert np.all(np.abs(freq - want) <= 3 * np.sqrt(want * (1 - want) / m))


def test_crp_block_count_law():
    # P(second observation opens a class) = (theta + alpha) / (theta + 1)
    p, m = PdpParams(0.5, 1.0), 20_000
    k = [b.k.copy() for b, _ in iterate_batch(p, 2, [int(s) for s in derive_seeds(1, m)])][-1]
    want = 1.5 / 2.0
    assert abs((k == 2).mean() - want) <= 3 * np.sqrt(want * (1 - want) / m)


def test_stick_breaking_telescopes():
    for seed in range(20):
        ms = stick_breaking_sample(PdpParams(0.3, 2.0), eps=1e-10, seed=seed)
        assert ms.weights.sum() + ms.residual == pytest.approx(1.0, abs=1e-12)
        assert ms.residual < 1e-10 or ms.terms == 100_000
        assert np.all(ms.weights >= 0)


def test_stick_breaking_cap_reports_residual():
    ms = stick_breaking_sample(PdpParams(0.5, 1.0), eps=1e-12, seed=0, max_terms=100)
    assert ms.terms == 100
    assert ms.weights.sum() + ms.residual == pytest.approx(1.0, abs=1e-12)


def test_stick_breaking_first_weight_mean():
    w = np.array([stick_breaking_sample(PdpParams(0, 1), 1e-6, seed=derive_seed(2, i)).weights[0] for i in range(20_000)])
    assert abs(w.mean() - 0.5) <= 3 * w.std() / np.sqrt(w.size)


def test_stick_breaking_gini_mean_with_residual_bound():
    p, m = PdpParams(0.5, 1.0), 10_000
    vals, res = np.empty(m), np.empty(m)
    for i in range(m):
        ms = stick_breaking_sample(p, 1e-12, seed=derive_seed(4, i), max_terms=2000)
        vals[i] = 1 - np.sum(ms.weights**2)
        res[i] = ms.residual
    # dropped mass can change 1 - sum w^2 by at most 2 r
    allowance = 3 * vals.std() / np.sqrt(m) + 2 * res.mean()
    assert abs(vals.mean() - 0.75) <= allowance


def test_stick_breaking_validation():
    with pytest.raises(DomainError):
        stick_breaking_sample(PdpParams(0, 1), eps=0.0)
    with pytest.raises(DomainError):
        stick_breaking_sample(PdpParams(0, 1), max_terms=0)
