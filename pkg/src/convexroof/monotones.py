"""Pure-state entanglement monotones and the closed-form oracles used to
cross-check the minimizer (two-qubit concurrence formula, block-averaged
thermal-state entanglement).

Entropies are natural-log by default; pass ``log_base=2`` for bits.
"""

import math

import numpy as np

from .errors import BadDimensionsError, NotDensityMatrixError
from .linalg import hermitian_eig

# sigma_y (x) sigma_y, the two-qubit spin-flip matrix
_SPIN_FLIP = np.array(
    [
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
    ],
    dtype=complex,
)


def reduced_from_pure(psi, dim_a, dim_b):
    """Reduced density matrix of subsystem A for a pure state of A (x) B.

    ``psi`` uses the A-major index convention (a, b) -> a * dim_b + b; the
    result is the dim_a x dim_a partial trace over B.
    """
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.size != dim_a * dim_b:
        raise BadDimensionsError(
            f"vector of length {psi.size} does not reshape to {dim_a} x {dim_b}"
        )
    amp = psi.reshape(dim_a, dim_b)
    return amp @ amp.conj().T


def shannon_entropy(probs, log_base=math.e):
    """Entropy of a probability vector with the 0*log(0) = 0 convention."""
    p = np.clip(np.asarray(probs, dtype=float), 0.0, 1.0)
    p = p[p > 0.0]
    s = -float(np.sum(p * np.log(p)))
    if log_base != math.e:
        s /= math.log(log_base)
    return s + 0.0  # avoid returning -0.0


def von_neumann_entropy(rho_a, log_base=math.e):
    """Von Neumann entropy -Tr[rho log rho] of a reduced density matrix.

    Eigenvalues are clamped to [0, 1] to shield against round-off negatives.
    """
    w = np.linalg.eigvalsh(np.asarray(rho_a, dtype=complex))
    return shannon_entropy(w, log_base)


def pure_entanglement(psi, dim_a, dim_b, log_base=math.e):
    """Entropy of entanglement of a pure bipartite state.

    Symmetric in the two subsystems: the reduced states of A and B share
    their nonzero spectrum.
    """
    return von_neumann_entropy(reduced_from_pure(psi, dim_a, dim_b), log_base)


def _binary_entropy(p, log_base):
    return shannon_entropy([p, 1.0 - p], log_base)


def _check_density_matrix(rho, dim):
    if rho.shape != (dim, dim):
        raise NotDensityMatrixError(f"expected {dim} x {dim}, got {rho.shape}")
    scale = max(np.linalg.norm(rho), 1.0)
    if np.linalg.norm(rho - rho.conj().T) > 1e-10 * scale:
        raise NotDensityMatrixError("matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-8:
        raise NotDensityMatrixError(f"trace is {np.trace(rho).real!r}, not 1")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise NotDensityMatrixError("matrix has a negative eigenvalue")


def concurrence(rho):
    """Two-qubit concurrence C = max(0, mu1 - mu2 - mu3 - mu4).

    The mu_j are the descending square roots of the eigenvalues of
    rho (YY) rho* (YY); they come from the Hermitian product
    sqrt(rho) (YY) rho* (YY) sqrt(rho) = A A^dag with
    A = sqrt(rho) (YY) sqrt(rho)*, extracted as the singular values of A so
    that vanishing mu_j stay at machine precision instead of sqrt(eps).
    """
    rho = np.asarray(rho, dtype=complex)
    _check_density_matrix(rho, 4)
    w, v = hermitian_eig(rho)
    sqrt_rho = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    a = sqrt_rho @ _SPIN_FLIP @ sqrt_rho.conj()
    mu = np.linalg.svd(a, compute_uv=False)
    return max(0.0, float(mu[0] - mu[1] - mu[2] - mu[3]))


def wootters_eof(rho, log_base=math.e):
    """Closed-form two-qubit entanglement of formation.

    EoF = h((1 + sqrt(1 - C^2)) / 2) with h the binary entropy and C the
    concurrence; exact zero on separable states.
    """
    c = concurrence(rho)
    return _binary_entropy((1.0 + math.sqrt(max(0.0, 1.0 - c * c))) / 2.0, log_base)


def gibbs_block_hamiltonian(m, spin, coupling=1.0, splitting=1.0):
    """One 4 x 4 block of the block-diagonal qubit-environment Hamiltonian.

    In the block basis {|0 m>, |0 m_perp>, |1 m>, |1 m_perp>}:

        [[E_m1, 0,   0,   M_m ],
         [0,    E_m, 0,   0   ],
         [0,    0,   E_m, 0   ],
         [M_m,  0,   0,   E_m2]]

    with E_m1 = alpha (m + Omega/2), E_m2 = -alpha (m + 1 + Omega/2),
    E_m = (E_m1 + E_m2) / 2 and M_m = alpha sqrt(K(K+1) - m(m+1)).
    ``m`` runs over -spin .. spin in integer steps.
    """
    e1 = coupling * (m + splitting / 2.0)
    e2 = -coupling * (m + 1.0 + splitting / 2.0)
    em = 0.5 * (e1 + e2)
    mm = coupling * math.sqrt(spin * (spin + 1.0) - m * (m + 1.0))
    return np.array(
        [
            [e1, 0.0, 0.0, mm],
            [0.0, em, 0.0, 0.0],
            [0.0, 0.0, em, 0.0],
            [mm, 0.0, 0.0, e2],
        ],
        dtype=complex,
    )


def gibbs_block_indices(spin):
    """Block labels m = -K, -K+1, ..., K (integer or half-integer K)."""
    n_blocks = int(round(2 * spin)) + 1
    return [-spin + j for j in range(n_blocks)]


def blockwise_gibbs_eof_oracle(spin, coupling, splitting, temperature, log_base=math.e):
    """Entanglement of the block-diagonal Gibbs state without minimization.

    Because the blocks act on mutually orthogonal environment subspaces, the
    convex-roof value is the trace-weighted average of each normalized block's
    two-qubit entanglement of formation:

        EoF = sum_m q_m * wootters_eof(rho_m),
        q_m = Tr e^{-H_m/T} / sum_m' Tr e^{-H_m'/T}.
    """
    if temperature <= 0.0:
        raise ValueError("temperature must be positive")
    systems = []
    for m in gibbs_block_indices(spin):
        h = gibbs_block_hamiltonian(m, spin, coupling, splitting)
        w, v = np.linalg.eigh(h)
        systems.append((w, v))
    # shift by the global ground energy so low temperatures do not overflow
    e_min = min(w.min() for w, _ in systems)
    total = 0.0
    weights = []
    blocks = []
    for w, v in systems:
        boltzmann = np.exp(-(w - e_min) / temperature)
        blocks.append((v * boltzmann) @ v.conj().T)
        weights.append(boltzmann.sum())
        total += boltzmann.sum()
    value = 0.0
    for weight, block in zip(weights, blocks):
        value += (weight / total) * wootters_eof(block / weight, log_base)
    return float(value)
