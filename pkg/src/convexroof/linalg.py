"""Dense complex matrix kernels: Hermitian eigendecomposition, projections
onto the set of semi-unitary matrices, Haar sampling, Kronecker products.

A semi-unitary matrix is a k x r complex matrix U (k >= r) with orthonormal
columns, U^dag U = I_r.  All functions here are pure; randomness enters only
through an explicit ``numpy.random.Generator``.
"""

import numpy as np

from .errors import NoConvergenceError, NotHermitianError, RankDeficientError

HERMITIAN_TOL = 1e-10
# relative threshold on R's diagonal (or singular values) below which a
# projection input is treated as rank deficient
RANK_DEFICIENCY_TOL = 1e-12


def hermitian_eig(a, tol=HERMITIAN_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues sorted in
    descending order and eigenvectors as the corresponding columns.

    Raises ``NotHermitianError`` if ``norm(a - a^dag) > tol * norm(a)`` and
    ``NoConvergenceError`` if the underlying solver fails.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {a.shape}")
    scale = np.linalg.norm(a)
    if scale > 0.0 and np.linalg.norm(a - a.conj().T) > tol * scale:
        raise NotHermitianError(
            f"matrix is not Hermitian within relative tolerance {tol:g}"
        )
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NoConvergenceError(str(exc)) from exc
    return w[::-1].copy(), v[:, ::-1].copy()


def project_qr(a):
    """Project a full-column-rank k x r matrix onto the semi-unitary set via QR.

    The Q factor is phase-fixed so that diag(R) is real and positive, which
    makes the projection deterministic and idempotent: projecting an already
    semi-unitary matrix returns it unchanged (to machine precision).

    Raises ``RankDeficientError`` when the smallest |R_jj| falls below
    ``RANK_DEFICIENCY_TOL`` times the largest.
    """
    a = np.asarray(a, dtype=complex)
    k, r = a.shape
    if k < r:
        raise ValueError(f"need k >= r, got shape {a.shape}")
    q, rmat = np.linalg.qr(a, mode="reduced")
    diag = np.diagonal(rmat)
    mags = np.abs(diag)
    largest = mags.max() if mags.size else 0.0
    if largest == 0.0 or mags.min() <= RANK_DEFICIENCY_TOL * largest:
        raise RankDeficientError(
            f"R diagonal spans {mags.min():.3e} .. {largest:.3e}"
        )
    return q * (diag / mags)


def project_polar(a):
    """Project onto the semi-unitary set via the polar factor of the thin SVD.

    For ``a = V S W^dag`` returns ``V W^dag``, the operator-norm-closest
    semi-unitary matrix.  Raises ``RankDeficientError`` on rank deficiency.
    """
    a = np.asarray(a, dtype=complex)
    k, r = a.shape
    if k < r:
        raise ValueError(f"need k >= r, got shape {a.shape}")
    try:
        v, s, wh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NoConvergenceError(str(exc)) from exc
    if s[0] == 0.0 or s[-1] <= RANK_DEFICIENCY_TOL * s[0]:
        raise RankDeficientError(f"singular values span {s[-1]:.3e} .. {s[0]:.3e}")
    return v @ wh


def project_qr_batch(a):
    """Phase-fixed QR projection of a stack of k x r matrices.

    Returns ``(u, ok)`` where ``ok`` flags the slices that passed the
    rank-deficiency check; failed slices are returned unprojected garbage and
    must be discarded by the caller.  Slice-wise identical to ``project_qr``.
    """
    a = np.asarray(a, dtype=complex)
    q, rmat = np.linalg.qr(a, mode="reduced")
    diag = np.diagonal(rmat, axis1=-2, axis2=-1)
    mags = np.abs(diag)
    largest = mags.max(axis=-1)
    ok = (largest > 0.0) & (mags.min(axis=-1) > RANK_DEFICIENCY_TOL * largest)
    safe = np.where(mags > 0.0, mags, 1.0)
    return q * (diag / safe)[..., None, :], ok


def haar_random(k, r, rng):
    """Draw a Haar-distributed k x r semi-unitary matrix.

    Samples a matrix of independent standard complex Gaussians and QR-projects
    it; the positive-diagonal-R convention makes the column distribution Haar.
    """
    if k < r:
        raise ValueError(f"need k >= r, got ({k}, {r})")
    while True:
        g = (rng.standard_normal((k, r)) + 1j * rng.standard_normal((k, r)))
        g /= np.sqrt(2.0)
        try:
            return project_qr(g)
        except RankDeficientError:
            continue  # probability ~0; redraw


def kron(a, b):
    """Kronecker product with the (i*cols(b) + j) index convention."""
    return np.kron(np.asarray(a), np.asarray(b))
