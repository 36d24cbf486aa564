"""Bayesian diversity estimation under two-parameter Poisson-Dirichlet priors."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DiscoveryOrderError,
    DomainError,
    InvalidStepError,
    ParseError,
    PdpError,
    UnsupportedIndexError,
)
from .estimators import (  # noqa: E402
    GINI,
    GeneralizedGini,
    GeneralizedGiniReal,
    PriorMoments,
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
from .partition import (  # noqa: E402
    NEW,
    Abundance,
    Existing,
    MassSequence,
    NewClass,
    PdpParams,
    Trajectory,
    apply_step,
    sample_trajectory,
    stick_breaking_sample,
    successors,
    transition_probabilities,
)
from .posterior_mc import posterior_mc_mean, posterior_mc_means, sample_posterior_masses  # noqa: E402
from .specfun import digamma, trigamma  # noqa: E402

__all__ = [name for name in dir() if not name.startswith("_")]
