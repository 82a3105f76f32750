"""Sum-aggregation sequence models, efficient attention variants, and the
fixed-weight constructions that extract token-feature sums exactly."""

from .attention import (
    LinformerHeadSpec,
    MacCounter,
    PerformerHeadSpec,
    StandardHeadSpec,
    SumExtractionConstruction,
    TransformerBlockSpec,
    TransformerNetworkSpec,
    attention_matrix,
    build_sum_extraction,
    head_forward,
    linformer_head,
    mac_count,
    performer_features,
    performer_head,
    standard_head,
    transformer_forward,
)
from .autodiff import Tape, central_difference, gradient
from .equivariance import (
    check_equivariance,
    check_semi_invariance,
    compose,
    lift,
    permute,
)
from .linalg import matmul, matrix, softmax_rows
from .mlp import MlpSpec, init_mlp_params, mlp_forward
from .model import (
    DiscreteSumformer,
    LatentPolynomial,
    MlpCombiner,
    MlpFeatureMap,
    PolynomialCombiner,
    PolynomialFeatureMap,
    SumformerModel,
    build_continuous_sumformer,
    build_discrete_sumformer,
    build_mlp_sumformer,
    build_polynomial_sumformer,
    discrete_forward,
    sumformer_forward,
    sup_error,
)
from .multisym import (
    DegreeBasis,
    basis_size,
    enumerate_multidegrees,
    generation_oracle,
    monomial_features,
    power_sum,
    power_sum_vector,
)
from .targets import TARGETS, TargetFunction, get_target
from .train import (
    Dataset,
    OptimizerConfig,
    TrainReport,
    generate_dataset,
    latent_sweep,
    relative_l2_error,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
