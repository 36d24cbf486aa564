import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import _oracles as oracle
from pdpdiv.errors import DomainError, UnsupportedIndexError
from pdpdiv.estimators import (
    GINI,
    GeneralizedGini,
    GeneralizedGiniReal,
    Renyi,
    RenyiIntegrability,
    Shannon,
    entropy_step_difference,
    parse_index,
    plugin_abundance,
    plugin_value,
    posterior_mean,
    prior_moments,
    renyi_integrability,
)
from pdpdiv.partition import NEW, Abundance, Existing, PdpParams, apply_step, successors, transition_probabilities

params_st = st.floats(min_value=0.0, max_value=0.9).flatmap(
    lambda a: st.floats(min_value=-a + 0.05, max_value=10.0).map(lambda t: PdpParams(a, t))
)
counts_st = st.lists(st.integers(min_value=1, max_value=20), min_size=1, max_size=8).map(lambda c: Abundance(tuple(c)))


def test_parse_index():
    assert parse_index("Shannon") == Shannon()
    assert parse_index("gini") == GINI
    assert parse_index("ggini:3") == GeneralizedGini(3)
    assert parse_index("ggini:0.5") == GeneralizedGiniReal(0.5)
    assert parse_index("renyi:2") == Renyi(2.0)
    for bad in ("simpson", "renyi:1", "ggini:-1", "renyi:x", "gini:2"):
        with pytest.raises(DomainError):
            parse_index(bad)


def test_prior_examples():
    assert prior_moments(PdpParams(0.5, 1), GINI).mean == pytest.approx(0.75, abs=1e-14)
    assert prior_moments(PdpParams(0, 1), Shannon()).mean == pytest.approx(1.0, abs=1e-14)
    assert prior_moments(PdpParams(0.5, 1), Shannon()).mean == pytest.approx(1 + 2 * math.log(2), abs=1e-12)
    with pytest.raises(UnsupportedIndexError):
        prior_moments(PdpParams(0.5, 1), Renyi(2))


@given(params_st)
@settings(max_examples=40, deadline=None)
def test_prior_means_match_oracle(p):
    assert prior_moments(p, Shannon()).mean == pytest.approx(oracle.prior_shannon_mean(p.alpha, p.theta), rel=1e-11)
    for kappa in (1, 2, 3):
        want = oracle.prior_gini_mean(p.alpha, p.theta, kappa)
        assert prior_moments(p, GeneralizedGini(kappa)).mean == pytest.approx(want, rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("alpha,theta", [(0.5, 1.0), (0.0, 1.0), (0.25, 2.0), (0.6, -0.3), (0.9, 5.0), (0.1, 0.2)])
def test_second_moments_match_oracle(alpha, theta):
    p = PdpParams(alpha, theta)
    assert prior_moments(p, Shannon()).second_moment == pytest.approx(oracle.prior_shannon_second(alpha, theta), rel=1e-11)
    assert prior_moments(p, GINI).second_moment == pytest.approx(oracle.prior_gini_second(alpha, theta), rel=1e-13)
    assert prior_moments(p, GeneralizedGini(2)).second_moment is None


def test_second_moment_values_at_half_one():
    p = PdpParams(0.5, 1.0)
    assert prior_moments(p, GINI).second_moment == pytest.approx(0.59375, abs=1e-15)
    assert prior_moments(p, Shannon()).second_moment == pytest.approx(6.283167261200532, abs=1e-12)


def test_posterior_examples():
    p = PdpParams(0, 1)
    assert posterior_mean(p, Abundance((1,)), Shannon()) == pytest.approx(1.0, abs=1e-12)
    assert posterior_mean(p, Abundance((2,)), Shannon()) == pytest.approx(5 / 6, abs=1e-12)
    assert posterior_mean(p, Abundance((2, 1)), GINI) == pytest.approx(0.55, abs=1e-12)
    assert posterior_mean(p, Abundance(()), Shannon()) == prior_moments(p, Shannon()).mean
    for idx in (Renyi(2), GeneralizedGiniReal(0.5)):
        with pytest.raises(UnsupportedIndexError):
            posterior_mean(p, Abundance((1,)), idx)


@given(params_st, counts_st)
@settings(max_examples=40, deadline=None)
def test_posterior_matches_predictive_oracle(p, a):
    got = posterior_mean(p, a, Shannon())
    assert got == pytest.approx(oracle.posterior_shannon(p.alpha, p.theta, a.counts), rel=1e-11, abs=1e-12)
    for kappa in (1, 2):
        want = oracle.posterior_gini(p.alpha, p.theta, a.counts, kappa)
        assert posterior_mean(p, a, GeneralizedGini(kappa)) == pytest.approx(want, rel=1e-11, abs=1e-13)


@given(params_st, counts_st, st.sampled_from([Shannon(), GINI, GeneralizedGini(2), GeneralizedGini(3)]))
@settings(max_examples=100)
def test_tower_property(p, a, idx):
    probs = transition_probabilities(p, a)
    nxt = math.fsum(q * posterior_mean(p, apply_step(a, c), idx) for q, c in zip(probs, successors(a)))
    assert nxt == pytest.approx(posterior_mean(p, a, idx), abs=1e-10)


@given(params_st, st.sampled_from([Shannon(), GINI, GeneralizedGini(2)]))
def test_posterior_at_one_is_prior(p, idx):
    assert posterior_mean(p, Abundance((1,)), idx) == pytest.approx(prior_moments(p, idx).mean, abs=1e-12)


def test_plugin_examples():
    assert plugin_value([2 / 3, 1 / 3], Shannon()) == pytest.approx(math.log(3) - 2 / 3 * math.log(2), abs=1e-12)
    assert plugin_value([2 / 3, 1 / 3], GINI) == pytest.approx(4 / 9, abs=1e-12)
    for idx in (Shannon(), GINI, Renyi(2), Renyi(0.5), GeneralizedGiniReal(0.5)):
        assert plugin_value([1.0], idx) == pytest.approx(0.0, abs=1e-15)
    assert plugin_value([0.5, 0.0, 0.5], Shannon()) == pytest.approx(math.log(2))
    assert plugin_abundance(Abundance((2, 1)), GINI) == pytest.approx(4 / 9)


@pytest.mark.parametrize("masses", [[0.0, 0.0], [], [0.7, 0.7], [-0.1, 0.5], [float("nan")]])
def test_plugin_validation(masses):
    with pytest.raises(DomainError):
        plugin_value(masses, Shannon())


def test_plugin_renyi_limits():
    x = [0.5, 0.3, 0.2]
    shannon = plugin_value(x, Shannon())
    assert plugin_value(x, Renyi(1 + 1e-7)) == pytest.approx(shannon, rel=1e-5)
    assert plugin_value(x, Renyi(2)) == pytest.approx(-math.log(sum(v * v for v in x)))


def test_step_difference_example():
    p, a = PdpParams(0, 1), Abundance((2, 1))
    diff = entropy_step_difference(p, a, NEW) - entropy_step_difference(p, a, Existing(1))
    assert diff == pytest.approx(0.3, abs=1e-12)
    direct = posterior_mean(p, Abundance((1, 1)), Shannon()) - posterior_mean(p, Abundance((1,)), Shannon())
    assert entropy_step_difference(p, Abundance((1,)), NEW) == pytest.approx(direct, abs=1e-15)


@given(params_st, counts_st)
def test_step_difference_closed_form_agrees(p, a):
    for c in successors(a):
        direct = entropy_step_difference(p, a, c)
        closed = entropy_step_difference(p, a, c, method="closed_form")
        assert closed == pytest.approx(direct, abs=1e-11)


def test_step_difference_validation():
    with pytest.raises(DomainError):
        entropy_step_difference(PdpParams(0, 1), Abundance((1,)), NEW, method="other")


def test_renyi_integrability():
    p = PdpParams(0.5, 1)
    assert renyi_integrability(p, 2) is RenyiIntegrability.INTEGRABLE
    assert renyi_integrability(p, 0.7) is RenyiIntegrability.SUFFICIENT_CONDITION_HOLDS
    assert renyi_integrability(p, 0.3) is RenyiIntegrability.SUFFICIENT_CONDITION_FAILS
    with pytest.raises(DomainError):
        renyi_integrability(p, 1.0)
