"""relwave: relativistic wave mechanics at desk scale.

Second-order amplitude and two-point density equations in flat 1+1
spacetime, Madelung decomposition with the statistical potential and its
trajectories, infinitesimal phase-space transforms, and a self-consistent
weak-field gravity coupler on radial grids.  Natural units hbar = c = 1;
mass, charge and the Newton constant are run parameters.
"""

__version__ = "0.1.0"

from .errors import (AccuracyError, BoundaryConditionError,
                     BranchMismatchWarning, ConfigurationError,
                     DegenerateFieldError, DomainError,
                     InconsistentDensityError, InstabilityError,
                     IntegrationError, NonConvergenceError, RelwaveError,
                     SingularMetricError, UnsupportedCarrierError)
from .geometry import (ChristoffelField, FourVector, Grid, MetricField,
                       christoffel_from_metric, dalembertian, minkowski_dot)
from .phasespace import (DensitySample, EMPotential, GaussianComponent,
                         PhaseSpaceDistribution, direct_momentum_moment,
                         gauge_factor, liouville_residual,
                         mean_momentum_from_density, wigner_moyal_transform)
from .fieldsolver import (ComplexField, PotentialConfig, StationaryState,
                          density_equation_residual, em_fields_from_potential,
                          evolve, stationary_field, stationary_solve)
from .madelung import (FourCurrentField, MadelungPair, TrajectoryPath,
                       TrajectoryState, continuity_residual, decompose,
                       expansion_check, four_current,
                       hamilton_jacobi_residual, integrate_trajectory,
                       mean_four_momentum_amplitude, probability_density,
                       quantum_potential, recompose, total_probability)
from .gravity import (CoupledResult, GravityConfig, QuantumStressTensor,
                      RadialState, coupled_solve, covariant_stationary_solve,
                      matter_tensor, solve_metric_weak_field)
