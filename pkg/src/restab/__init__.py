"""Many-to-one matching markets, stable matching lattices and restabilization."""

from .algorithms import (
    NotFirmQuasiStable,
    SOIteration,
    SOTrace,
    achievable_firms,
    da_firm_proposing,
    da_worker_proposing,
    enumerate_fqs,
    enumerate_stable,
    set_offering,
)
from .disruption import (
    FirmEntry,
    MarketTransition,
    PreconditionError,
    TransitionReport,
    add_firms,
    disrupt,
    induce,
    is_consistent,
    leads_to,
    restabilize,
    retire_workers,
    verify_transition_theorems,
)
from .lattice import (
    StableSet,
    blair_dominates,
    dominates_firms,
    dominates_workers,
    join_workers,
    meet_workers,
    upper_set,
)
from .market import (
    ExplicitSubsets,
    FirmPreference,
    Market,
    MarketError,
    Matching,
    Responsive,
    SizeGuardError,
    blocking_pairs,
    choice,
    envy_set,
    is_acceptable_coalition,
    is_firm_quasi_stable,
    is_individually_rational,
    is_stable,
    validate_q_separable,
    validate_substitutable,
)

__version__ = "0.1.0"
