"""Finite-dimensional operator systems, their matrix cones, norms and duals."""

__version__ = "0.1.0"

from ._accel import NUMBA_ENABLED
from .duality import (
    DualMap,
    DualNormReport,
    DualSystem,
    double_dual_compare,
    dual_cone_generating,
    dual_norm,
    dual_system,
    faithfulness_witness,
    functor_dual_map,
    functor_laws,
    iota_compare,
    positive_state,
    random_functional,
    verify_theorem_suite,
)
from .errors import *  # noqa: F401,F403
from .linalg import (
    HSSubspace,
    hermitian_basis,
    hermitian_eig,
    kron,
    op_norm,
    subspace_from_spanning,
    trace_norm,
)
from .maps import (
    LevelFunctional,
    MatrixConvexSet,
    SystemMap,
    amplify,
    cb_norm,
    compression,
    dual_gamma_norm,
    effros_winkler_separate,
    gamma_norm,
    is_completely_positive,
    norm_r,
    random_cp_map,
    schur_multiplier,
    separate_from_cone,
    theta_apply,
    theta_of_functional,
    upsilon,
    upsilon_apply,
)
from .sdp import SdpBuilder, SdpProblem, SdpSolution, Status, check_certificate, solve
from .system import (
    LevelElement,
    OperatorSystem,
    OrderUnitNet,
    cone_membership,
    decomposition_constant,
    decomposition_constants,
    find_order_unit,
    is_generating,
    is_matrix_regular,
    is_weakly_norm_defining,
    make_system,
    max_rank_positive,
    norm_a,
    random_cone_element,
    random_element,
    regular_dominant,
)
from .zoo import (
    FiniteMetricSpace,
    ToleranceRelation,
    band_system,
    diagzero_system,
    direct_sum,
    full_system,
    load_map,
    load_metric_csv,
    load_system,
    save_map,
    save_system,
    tolerance_system,
)
