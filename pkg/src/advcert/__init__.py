"""Budget-constrained adversaries, transport costs, and defeat certificates.

The package certifies when a budgeted data-transforming adversary provably
reduces every proper-loss linear (or kernel-ball) learner to near-useless:
optimal transport quantifies the adversary's budget, kernel mean embeddings
give closed-form distortion bounds, and the certificates tie both to the
blunt constant-predictor baseline.
"""

__version__ = "1.0.0"

from .adversaries import (
    Adversary,
    BoostCount,
    ContractivityEstimate,
    IdentityAdversary,
    IteratedAdversary,
    MixupToPoint,
    PerturbationTableAdversary,
    apply,
    boost_iterations,
    contractivity,
    fit_monge_adversary,
    iterate,
    mixup_lambda_for_budget,
    mixup_to_point,
)
from .data import (
    EmpiricalMarginal,
    LabeledDataset,
    Prior,
    dataset_from_marginals,
    discretize_density,
    load_dataset_csv,
    load_marginal,
    save_dataset_csv,
    split_marginals,
    unconditional_mean,
)
from .distortion import (
    DefeatCertificate,
    FiniteSampleClass,
    JointDefeatReport,
    LinearBall,
    RKHSUnitBall,
    beta,
    beta_rkhs,
    defeat_certificate,
    gamma_finite,
    hardness_bound,
    ipm,
    joint_defeat_certificate,
    phi_functional,
    sampled_ball_gamma,
    weighted_mmd,
    witness_gamma,
)
from .errors import (
    AdvcertError,
    ConfigError,
    DivergenceError,
    DomainError,
    IndefiniteKernelError,
    InfeasibleTransportError,
    NumericError,
    ValidationError,
)
from .harness import ExperimentConfig, RunReport, run_certify, run_digits, run_toy1d
from .kernels import (
    LinearKernel,
    RbfKernel,
    feature_cost,
    kernel_from_spec,
    median_bandwidth,
)
from .learner import (
    CrossEvalTable,
    LinearModel,
    ProperLossClassifier,
    TrainConfig,
    cross_eval,
    expected_loss,
    train,
)
from .losses import (
    Link,
    ProperLoss,
    blunt_loss,
    canonical_link,
    cbr_value,
    composite_loss,
    delta_ell_pi,
    fenchel_identity_check,
    g_map,
    get_link,
    get_loss,
    partial_loss,
    properness_check,
    registered_losses,
    tabulated_loss,
    validate_loss,
)
from .transport import (
    CostMatrix,
    Coupling,
    cost_matrix,
    lipschitz_estimate,
    monge_budget,
    monge_cost,
    optimal_coupling,
    w1_phi,
    wasserstein1,
)

__all__ = [name for name in dir() if not name.startswith("_")]
