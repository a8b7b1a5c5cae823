"""Convex-roof entanglement of mixed quantum states.

The minimization over pure-state decompositions is carried out over
semi-unitary matrices (every decomposition arises from one), using
differential evolution constrained by QR projection and polished by a
quasi-Newton method.
"""

from .de import DEConfig, DEResult, derive_seed, differential_mutation, evolve, sweep_k
from .errors import (
    BadBipartitionError,
    BadDimensionsError,
    ConvexRoofError,
    NoConvergenceError,
    NonFiniteError,
    NotDensityMatrixError,
    NotHermitianError,
    NotPSDError,
    RankDeficientError,
    RankMismatchError,
)
from .linalg import haar_random, hermitian_eig, kron, project_polar, project_qr
from .models import (
    bell_state,
    make_gibbs,
    make_qubit_env,
    make_rho1,
    make_rho2,
    make_sep1,
    make_sep2,
    qubit_env_revival_time,
)
from .monotones import (
    blockwise_gibbs_eof_oracle,
    concurrence,
    pure_entanglement,
    reduced_from_pure,
    von_neumann_entropy,
    wootters_eof,
)
from .refine import RefineConfig, bfgs_minimize, fd_gradient, refine_unitary
from .roof import (
    MixedState,
    PureStateDecomposition,
    hjw_decompose,
    load_density_matrix_json,
    objective,
    objective_batch,
    reconstruct,
    spectral_factorize,
)

__version__ = "0.1.0"
