"""pptmet: search for and certify quantum states that are PPT with respect
to chosen bipartitions yet beat the separable-state precision bound of
linear interferometry.
"""

__version__ = "0.1.0"

from .conic import (ConicProgram, SolveResult, SolverOptions, embed_complex,
                    solve, unembed_complex)
from .core import (DensityMatrix, DimensionSpec, PartitionMask, collective_from_locals,
                   collective_jz, collective_split_diag, embed_local, hermitize,
                   is_hermitian, min_bipartite_negativity, negativity,
                   partial_transpose, split_diag, tensor)
from .metrology import (MetrologyReport, commutator_obs, metrology_report,
                        precision_inverse, qfi, separable_bound, skew_information, sld)
from .programs import (FmQuery, InfeasibleError, LambdaMin, NegativityCap, Ppt,
                       RobustnessQuery, SolverFailure, VerificationError,
                       best_precision_for_measurement, build_fm_program,
                       build_robustness_program, minimize_over_x,
                       robustness_lower_bound, solve_fm, solve_robustness)
from .seesaw import (ScanPoint, SeesawConfig, SeesawError, SeesawTrace, initial_x,
                     random_measurement, run, scan_lambda_min, scan_negativity,
                     white_noise_robustness)
from .stateio import load_state, save_state
from .states import (NamedState, bound_entangled_4x4, ghz, load_reference_state,
                     mix_white_noise, singlet, tensor_copies, werner,
                     werner_usefulness_threshold)

__all__ = [name for name in dir() if not name.startswith("_")]
