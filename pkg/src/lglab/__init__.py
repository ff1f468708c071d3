"""Direct strategy profiles of large games and their finite-player approximations."""

__version__ = "0.1.0"

from .core import (
    ActionSpace,
    Characteristic,
    FiniteGameInstance,
    FiniteTypes,
    LargeGameSpec,
    ParamContinuum,
    StrategyProfile,
    societal_summary,
)
from .direct import InstantiationScheme, build_direct_profile, continuity_probe, instantiate
from .errors import (
    CapabilityError,
    ConfigurationError,
    DomainError,
    InternalError,
    InvalidInputError,
    LGLabError,
    SolverError,
)
from .experiments import ExperimentConfig, builtin, validate
from .metrics import bl_distance, prohorov
from .payoffs import AuditConfig, audit, eps_star, expected_payoff_exact, expected_payoff_mc, theorem1_curve
from .realization import concentration_check, estimate_omega, expost_gain, sample_realization
from .solver import SolverConfig, discretize_population, solve_equilibrium, symmetrize
