"""Exact laboratory for information bottleneck objectives on finite worlds."""

from .bounds import (
    BoundReport,
    VariationalPair,
    barber_agakov_lower_bound,
    bayes_pair_from_encoder,
    cond_mi_upper_bound,
    encoder_from_pair,
    ibo_upper_bound,
    log_partition,
    minimize_bound,
    tempered_posterior,
    tight_bound_value,
)
from .engine import (
    IBOKind,
    IBOSpec,
    OptimizerOptions,
    OptimizeResult,
    SweepResult,
    SweepRow,
    beta_sweep,
    encoder_checksum,
    equivalence_check,
    evaluate_ibo,
    grid_oracle,
    optimize_encoder,
)
from .info import conditional_mutual_information, entropy, kl_divergence, mutual_information
from .pathologies import (
    DeterministicMap,
    QuantizationSpec,
    discrete_self_info,
    divergence_log_slope,
    quantized_mi_divergence,
)
from .tables import Alphabet, Kernel, ProbTable, integer_alphabet, product_alphabet, product_join
from .training import (
    GenBoundReport,
    LossTable,
    SigmaEstimate,
    argmin_encoder,
    empirical_loss,
    estimate_sigma,
    feasible_set,
    generalization_report,
    gibbs_encoder,
    gibbs_posterior,
    optimize_trained_ibo,
    trained_variational_bound,
    zero_one_loss,
)
from .world import (
    DatasetAxis,
    FullJoint,
    GenerativeWorld,
    InfoReport,
    binary_symmetric_world,
    build_joint,
    constant_encoder,
    decomposition_check,
    identity_encoder,
    info_report,
    project_dataset_axis,
    random_encoder,
)

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "BoundReport",
    "DatasetAxis",
    "DeterministicMap",
    "FullJoint",
    "GenBoundReport",
    "GenerativeWorld",
    "IBOKind",
    "IBOSpec",
    "InfoReport",
    "Kernel",
    "LossTable",
    "OptimizeResult",
    "OptimizerOptions",
    "ProbTable",
    "QuantizationSpec",
    "SigmaEstimate",
    "SweepResult",
    "SweepRow",
    "VariationalPair",
    "barber_agakov_lower_bound",
    "bayes_pair_from_encoder",
    "argmin_encoder",
    "beta_sweep",
    "binary_symmetric_world",
    "build_joint",
    "cond_mi_upper_bound",
    "conditional_mutual_information",
    "constant_encoder",
    "decomposition_check",
    "discrete_self_info",
    "divergence_log_slope",
    "empirical_loss",
    "encoder_checksum",
    "encoder_from_pair",
    "entropy",
    "equivalence_check",
    "estimate_sigma",
    "evaluate_ibo",
    "feasible_set",
    "generalization_report",
    "gibbs_encoder",
    "gibbs_posterior",
    "grid_oracle",
    "ibo_upper_bound",
    "identity_encoder",
    "info_report",
    "integer_alphabet",
    "kl_divergence",
    "log_partition",
    "minimize_bound",
    "mutual_information",
    "optimize_encoder",
    "optimize_trained_ibo",
    "product_alphabet",
    "product_join",
    "project_dataset_axis",
    "quantized_mi_divergence",
    "random_encoder",
    "tempered_posterior",
    "tight_bound_value",
    "trained_variational_bound",
    "zero_one_loss",
]
