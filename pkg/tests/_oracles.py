"""Independent reference values computed with mpmath.

Moments of power sums under PDP(alpha, theta) follow from the partition
probability function continued to real block sizes:

* ``E sum_i p_i**c = G(c - a) G(t + 1) / (G(1 - a) G(t + c))``
* ``E sum_{i != j} p_i**s p_j**u = (t + a) G(s - a) G(u - a) G(t + 1) / (G(1 - a)**2 G(t + s + u))``

Shannon quantities are derivatives in the exponents at 1, taken numerically
in high precision, so no digamma code is shared with the package.
"""
import mpmath as mp

mp.mp.dps = 40


def diag_power(alpha, theta, c):
    a, t = mp.mpf(alpha), mp.mpf(theta)
    return mp.gamma(c - a) * mp.gamma(t + 1) / (mp.gamma(1 - a) * mp.gamma(t + c))


def pair_power(alpha, theta, s, u):
    a, t = mp.mpf(alpha), mp.mpf(theta)
    return (t + a) * mp.gamma(s - a) * mp.gamma(u - a) * mp.gamma(t + 1) / (mp.gamma(1 - a) ** 2 * mp.gamma(t + s + u))


def prior_shannon_mean(alpha, theta):
    return float(-mp.diff(lambda c: diag_power(alpha, theta, c), 1))


def prior_shannon_second(alpha, theta):
    f = lambda s, u: diag_power(alpha, theta, s + u) + pair_power(alpha, theta, s, u)
    return float(mp.diff(f, (1, 1), (1, 1)))


def prior_gini_mean(alpha, theta, kappa=1):
    return float(1 - diag_power(alpha, theta, kappa + 1))


def prior_gini_second(alpha, theta):
    sq = diag_power(alpha, theta, 2)
    return float(1 - 2 * sq + diag_power(alpha, theta, 4) + pair_power(alpha, theta, 2, 2))


def predictive_power_sum(alpha, theta, counts, m):
    """E[sum_i p_i**m | counts] via the Gamma-continued predictive probabilities."""
    a, t = mp.mpf(alpha), mp.mpf(theta)
    n, k = sum(counts), len(counts)
    scale = mp.gamma(t + n) / mp.gamma(t + n + m)
    acc = sum(mp.gamma(c - a + m) / mp.gamma(c - a) for c in counts)
    acc += (t + a * k) * mp.gamma(m - a) / mp.gamma(1 - a)
    return acc * scale


def posterior_shannon(alpha, theta, counts):
    return float(-mp.diff(lambda m: predictive_power_sum(alpha, theta, counts, m), 1))


def posterior_gini(alpha, theta, counts, kappa=1):
    return float(1 - predictive_power_sum(alpha, theta, counts, kappa + 1))


def digamma(x):
    return float(mp.digamma(x))


def trigamma(x):
    return float(mp.psi(1, x))
