"""Low-regret adaptive tomography of pure quantum states.

The learner measures one copy of an unknown pure state per round with a
rank-one projector, explores the tangent space of its current estimate with
symmetric pairs of actions and moves the estimate with a median-of-means
tangent estimate at the end of every epoch.
"""

from .engine import AlgorithmConstants, RunRecord, derive_constants, epoch_count_bound, run, run_epoch
from .environment import Environment, Evaluator, new_environment
from .errors import (BaseMismatchError, ConfigError, DimensionError, DomainError,
                     TomographyError, ValidationError)
from .geometry import (PureState, TangentBasis, TangentVector, complete_tangent_basis, fidelity,
                       frobenius_dist2, gamma_hat, haar_state, project_to_tangent, retract,
                       secant_tangent_norm2, tangent_displacement, tangent_inner, update_base)
from .warmup import WarmupConfig, run_warmup

__version__ = "0.1.0"
