"""Mixed-state factorization, the unitary-to-decomposition map, and the
convex-roof objective J(U).

A rank-r density matrix rho = sum_j lambda_j |v_j><v_j| is stored as the
d x r factor matrix whose column j is sqrt(lambda_j) |v_j>, so that
rho = F F^dag.  Every k x r semi-unitary U then yields a pure-state
decomposition {p_i, |psi_i>} through |phi_i> = sum_j U_ij sqrt(lambda_j)
|v_j>, p_i = <phi_i|phi_i>, |psi_i> = |phi_i> / sqrt(p_i), and the objective
is the decomposition average J(U) = sum_i p_i m(|psi_i>).
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadBipartitionError,
    NotDensityMatrixError,
    RankMismatchError,
)
from .linalg import hermitian_eig
from .monotones import shannon_entropy

# decomposition members with probability at or below this carry zero weight:
# they are excluded from J (the 0 * log 0 convention) and never normalized
ZERO_WEIGHT_CUTOFF = 1e-14

DEFAULT_RANK_TOL = 1e-12


@dataclass(frozen=True)
class MixedState:
    """Low-rank spectral factorization of a density matrix with a fixed
    bipartition.

    Index convention is subsystem-A-major: basis state (a, b) lives at row
    a * dim_b + b.  ``factors`` has orthogonal columns with squared norms
    equal to the eigenvalues, which sum to one.
    """

    dim_a: int
    dim_b: int
    factors: np.ndarray
    log_base: float = math.e

    @property
    def dim(self):
        return self.dim_a * self.dim_b

    @property
    def rank(self):
        return self.factors.shape[1]

    @property
    def eigenvalues(self):
        f = self.factors
        return (f.real**2 + f.imag**2).sum(axis=0)

    def density_matrix(self):
        """Materialize the dense matrix rho = F F^dag (test/report utility)."""
        return self.factors @ self.factors.conj().T


@dataclass(frozen=True)
class PureStateDecomposition:
    """Probabilities and normalized pure states {p_i, |psi_i>}.

    Columns of ``states`` whose probability fell at or below the zero-weight
    cutoff are zero vectors.
    """

    probs: np.ndarray
    states: np.ndarray

    @property
    def size(self):
        return self.probs.size


def spectral_factorize(rho, dim_a, dim_b, rank_tol=DEFAULT_RANK_TOL, log_base=math.e):
    """Validate a density matrix and build its low-rank MixedState.

    Eigenpairs with lambda_j <= rank_tol * lambda_max are truncated and the
    surviving eigenvalues renormalized to unit sum, so the factorization is a
    valid density matrix even after truncation.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise NotDensityMatrixError(f"expected a square matrix, got {rho.shape}")
    dim = rho.shape[0]
    if dim_a * dim_b != dim:
        raise BadBipartitionError(
            f"dim_a * dim_b = {dim_a}*{dim_b} does not match dimension {dim}"
        )
    scale = max(np.linalg.norm(rho), 1.0)
    if np.linalg.norm(rho - rho.conj().T) > 1e-10 * scale:
        raise NotDensityMatrixError("matrix is not Hermitian")
    trace = np.trace(rho).real
    if abs(trace - 1.0) > 1e-8:
        raise NotDensityMatrixError(f"trace is {trace!r}, not 1")
    w, v = hermitian_eig(rho)
    if w.min() < -1e-10:
        raise NotDensityMatrixError(f"negative eigenvalue {w.min():.3e}")
    keep = w > rank_tol * w.max()
    lam = w[keep]
    lam = lam / lam.sum()
    factors = v[:, keep] * np.sqrt(lam)
    return MixedState(dim_a=dim_a, dim_b=dim_b, factors=factors, log_base=log_base)


def hjw_decompose(state, u):
    """Map a k x r semi-unitary onto a pure-state decomposition of ``state``."""
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[1] != state.rank:
        raise RankMismatchError(
            f"semi-unitary of shape {u.shape} does not match rank {state.rank}"
        )
    phi = state.factors @ u.T
    probs = (phi.real**2 + phi.imag**2).sum(axis=0)
    states = np.zeros_like(phi)
    keep = probs > ZERO_WEIGHT_CUTOFF
    states[:, keep] = phi[:, keep] / np.sqrt(probs[keep])
    return PureStateDecomposition(probs=probs, states=states)


def reconstruct(psd):
    """Dense sum_i p_i |psi_i><psi_i| of a decomposition (test utility)."""
    return (psd.states * psd.probs) @ psd.states.conj().T


def _plogp(lam):
    lam = np.clip(lam, 0.0, 1.0)
    out = np.zeros_like(lam)
    mask = lam > 0.0
    out[mask] = lam[mask] * np.log(lam[mask])
    return out


def objective_batch(state, u_batch):
    """J for a stack of semi-unitaries (entropy-of-entanglement monotone).

    ``u_batch`` has shape (n, k, r); returns the n objective values.  The
    two-dimensional reduced states of a qubit subsystem use the closed-form
    eigenvalue pair (with the stable product form for the small eigenvalue);
    larger subsystems fall back to a batched eigensolver.  Large Hilbert
    spaces are processed in chunks to bound the workspace.
    """
    u_batch = np.asarray(u_batch, dtype=complex)
    if u_batch.ndim != 3 or u_batch.shape[2] != state.rank:
        raise RankMismatchError(
            f"batch of shape {u_batch.shape} does not match rank {state.rank}"
        )
    n, k, _ = u_batch.shape
    chunk = max(1, 4_000_000 // max(1, state.dim * k))
    if n > chunk:
        return np.concatenate(
            [objective_batch(state, u_batch[i : i + chunk]) for i in range(0, n, chunk)]
        )

    phi = np.einsum("dr,bkr->bdk", state.factors, u_batch)
    amp = phi.reshape(n, state.dim_a, state.dim_b, k)
    rho_a = np.einsum("bavi,bcvi->biac", amp, amp.conj())  # (n, k, dA, dA)
    probs = np.einsum("biaa->bi", rho_a).real
    safe = np.where(probs > ZERO_WEIGHT_CUTOFF, probs, 1.0)
    if state.dim_a == 2:
        tr = (rho_a[..., 0, 0] + rho_a[..., 1, 1]).real / safe
        det = (
            rho_a[..., 0, 0] * rho_a[..., 1, 1]
            - rho_a[..., 0, 1] * rho_a[..., 1, 0]
        ).real / safe**2
        disc = np.sqrt(np.clip(tr * tr - 4.0 * det, 0.0, None))
        lam1 = 0.5 * (tr + disc)
        lam2 = np.where(lam1 > 0.0, det / np.where(lam1 > 0.0, lam1, 1.0), 0.0)
        entropies = -(_plogp(lam1) + _plogp(lam2))
    else:
        lam = np.linalg.eigvalsh(rho_a) / safe[..., None]
        entropies = -_plogp(lam).sum(axis=-1)
    entropies = np.where(probs > ZERO_WEIGHT_CUTOFF, entropies, 0.0)
    values = np.einsum("bi,bi->b", probs, entropies)
    if state.log_base != math.e:
        values = values / math.log(state.log_base)
    return values


def objective(state, u, monotone=None):
    """Decomposition-averaged monotone J(U) = sum_i p_i m(|psi_i(U)>).

    With ``monotone=None`` (the default) m is the entropy of entanglement
    for the state's bipartition and log base; any callable
    ``monotone(psi) -> float`` may be supplied instead.
    """
    if monotone is not None:
        psd = hjw_decompose(state, u)
        total = 0.0
        for i in range(psd.size):
            if psd.probs[i] > ZERO_WEIGHT_CUTOFF:
                total += psd.probs[i] * monotone(psd.states[:, i])
        return float(total)
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2:
        raise RankMismatchError(f"expected a k x r matrix, got shape {u.shape}")
    return float(objective_batch(state, u[np.newaxis])[0])


def entropy_of_spectrum(eigenvalues, log_base=math.e):
    """Entropy of a density-matrix spectrum (helper shared by the models)."""
    return shannon_entropy(eigenvalues, log_base)


def load_density_matrix_json(path, log_base=math.e, rank_tol=DEFAULT_RANK_TOL):
    """Read a density matrix from the JSON interchange format.

    The file holds ``{"dimA": int, "dimB": int, "matrix": [[re, im], ...]}``
    with (dimA * dimB)^2 row-major entries.  Validation failures report the
    offending row/column.
    """
    with open(path) as handle:
        payload = json.load(handle)
    try:
        dim_a = int(payload["dimA"])
        dim_b = int(payload["dimB"])
        entries = payload["matrix"]
    except (KeyError, TypeError, ValueError) as exc:
        raise NotDensityMatrixError(f"malformed density-matrix file: {exc}") from exc
    dim = dim_a * dim_b
    if not isinstance(entries, list) or len(entries) != dim * dim:
        raise NotDensityMatrixError(
            f"matrix must list {dim * dim} [re, im] pairs, got {len(entries)}"
        )
    rho = np.empty((dim, dim), dtype=complex)
    for flat, pair in enumerate(entries):
        row, col = divmod(flat, dim)
        if (
            not isinstance(pair, (list, tuple))
            or len(pair) != 2
            or not all(isinstance(x, (int, float)) for x in pair)
        ):
            raise NotDensityMatrixError(
                f"entry at row {row}, col {col} is not an [re, im] pair: {pair!r}"
            )
        rho[row, col] = complex(pair[0], pair[1])
    if not np.isfinite(rho).all():
        bad = np.argwhere(~np.isfinite(rho))[0]
        raise NotDensityMatrixError(
            f"non-finite entry at row {bad[0]}, col {bad[1]}"
        )
    return spectral_factorize(rho, dim_a, dim_b, rank_tol=rank_tol, log_base=log_base)
