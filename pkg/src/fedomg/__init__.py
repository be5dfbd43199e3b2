"""Federated learning simulator built around an on-server matching-gradient
aggregator: the server searches a ball around the reference FL update for
the direction maximizing the worst-case agreement with client gradients.

Hot kernels (simplex projection, the weight solve) run on a compiled
extension when built, with a pure-NumPy fallback selected at import; see
``fedomg.backends``.
"""

from .backends import backend_name, extension_available
from .core import GradientSet, ParamVector, as_param_vector, dot, norm, weighted_sum
from .errors import (DimensionError, FedomgError, IdxFormatError, InvalidInputError,
                     NumericalError)
from .simplex import InnerOptConfig, minimize_on_simplex, project_to_simplex
from .aggregator import (AggregationConfig, AggregationReport, aggregate_round,
                         apply_global_update, dual_gap_suite, dual_oracle_check,
                         invariant_gradient, omg_objective, omg_objective_grad,
                         reference_gradient, solve_gamma)
from .models import Batch, ModelSpec, accuracy, init_params, loss_and_grad, param_count, sgd_epoch
from .data import (DirichletPartition, DomainDataset, Rect4Config, blobs_train_test,
                   dirichlet_partition, gen_rect4, load_idx, rect4_train_test)
from .metrics import (MetricsRecord, cosine_similarity, export, generalization_gap,
                      invariance_report, pairwise_gip)
from .federation import (ExperimentConfig, FederationState, RoundReport, local_train,
                         run_fdg_experiment, run_fl_experiment, run_round)

__version__ = "0.1.0"
