"""Joint measurability of POVM pairs through W-measure negativity."""
from .criteria import (
    JmVerdict,
    busch_jm,
    dichotomic_biased_criterion,
    dichotomic_unbiased_negativity,
    mu_threshold,
    r_threshold,
    theta0_feasibility_dichotomic,
    trichotomic_negativity,
    trichotomic_solution,
)
from .errors import DomainError, JointMeasError, NotPSDError, NumericalError, ValidationError
from .families import assess, build_pair, negativity_landscape
from .operators import eig_hermitian, gell_mann_basis, operator_sqrt, trace_norm
from .optimizer import OptimizationResult, OptimizerConfig, joint_povm_search, minimize_negativity
from .povm import (
    BlochPovmSpec,
    Povm,
    dichotomic_from_spec,
    is_pvm,
    trichotomic_from_spec,
    unsharpness_entropy,
    validate,
)
from .ssm import (
    KrausSet,
    Quasiprobability,
    luders_kraus,
    quasiprob_from_state,
    quasiprob_from_statistics,
    sequential_conjunction,
    ssm_jm_test,
    ssm_wmeasure,
)
from .wmeasure import DifferentialSet, WMeasure, extract_joint, from_conjunction, from_theta, negativity

__version__ = "0.1.0"
