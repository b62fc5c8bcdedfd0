"""Interacting-particle simulation of McKean-Vlasov SDEs with super-linear
convolution kernels: split-step scheme, taming baselines, and the error /
rate / contraction analysis pipeline."""

from .analysis import (ContractionTrace, ErrorCurve, MomentTrace,
                       beta_theoretical, contraction_run, fit_rate,
                       moment_trace, path_error, poc_error, rho_one, rmse)
from .brownian import BrownianLattice, coarse_increment, extend_particles
from .errors import (ConfigInvalid, CouplingViolation, DegenerateFit,
                     DimensionMismatch, LineageMismatch, MissingConstant,
                     MVSDEError, NonCommensurate, NonConvergence,
                     NonFiniteError, ShrinkNotAllowed, SizeMismatch,
                     UnknownModel)
from .measure import (DensityTable, MeasureSummary, ParticleState, convolve,
                      convolve_all, empirical_moment, histogram_density,
                      identity_decomposition_check, identity_odd_kernel_check,
                      load_state, save_state, w2_1d, w2_paired_bound)
from .model import (Coefficient, CustomKernel, Kernel, LinearKernel, Model,
                    ModelConstants, PowerLawKernel, SquareKernel, ZeroKernel,
                    builtin_model, check_additional_symmetry, check_odd,
                    check_one_sided_lipschitz, compute_zeta, verify_model)
from .schemes import (DensityObserver, MomentObserver, Observer, SchemeConfig,
                      SimulationResult, SnapshotObserver, SolverConfig,
                      StageState, euler_step, make_stepper, simulate,
                      solve_implicit_stage, ssm_step, taming_step)

__version__ = "0.1.0"
