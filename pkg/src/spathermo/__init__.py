"""Maximum-entropy equilibria and Legendre thermodynamics for strongly
pseudo-additive entropies on finite energy spectra."""
from .deform import (CustomMap, DeformationMap, HqMap, IdentityMap, SupraMap, generalized_exp,
                     generalized_log, make_map, pseudo_add)
from .entropy import EntropySpec, renyi, shannon, sharma_mittal, spa_entropy, supra_extensive, tsallis
from .errors import (ConsistencyError, DegenerateStateError, DomainError, HCViolation,
                     InfeasibleEnergyError, SolverFailure, SpaThermoError)
from .maxent import (DEFAULT_CONFIG, ConstraintKind, MaxEntSolution, SolverConfig, solve,
                     solve_escort_renyi, solve_linear_renyi, solve_oracle, solve_spa)
from .simplex import (EnergySpectrum, escort, escort_inverse, escort_mean, linear_mean,
                      total_variation, uniform)
from .thermo import (ConditionReport, DiagramReport, EquilibriumState, ThermoQuantities,
                     check_conditions, ec_dual, hc_margin, potentials, rspa_forward, rspa_inverse,
                     verify_diagram)

__version__ = "0.1.0"
