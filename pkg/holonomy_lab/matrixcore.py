"""
Dense complex matrix kernel.

Matrices are plain ``numpy`` complex arrays (row-major). All routines are
pure; tolerances are keyword arguments with defaults from ``settings``.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg

from . import settings
from .errors import ConvergenceFailure, NotHermitian, NotUnitary, SingularOverlap

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class EigenPairs:
    """Eigenvalues and orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray


def as_cmatrix(m) -> np.ndarray:
    """Coerce to a 2-D complex array."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def max_abs_diff(a: np.ndarray, b: np.ndarray) -> float:
    """Max-abs entry difference, the tolerance metric for matrix equality."""
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) if np.size(a) else 0.0


def unitarity_defect(u: np.ndarray) -> float:
    u = as_cmatrix(u)
    return max_abs_diff(dagger(u) @ u, np.eye(u.shape[1]))


def hermiticity_defect(h: np.ndarray) -> float:
    h = as_cmatrix(h)
    return max_abs_diff(h, dagger(h))


def frobenius(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


def canonical_phases(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of each column real positive."""
    vectors = np.array(vectors, dtype=complex)
    rows = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[rows, np.arange(vectors.shape[1])]
    magnitudes = np.abs(pivots)
    safe = np.where(magnitudes > 0, magnitudes, 1.0)
    return vectors * (np.conj(pivots) / safe)


def wrap_phase(x, period: float = TWO_PI):
    """Map onto (-period/2, period/2]."""
    return -((-np.asarray(x) + period / 2) % period - period / 2)


def circular_distance(a, b, period: float = TWO_PI):
    return np.abs(wrap_phase(np.asarray(a) - np.asarray(b), period))


def cluster_indices(keys: Sequence[float], tol: float,
                    period: Optional[float] = None) -> List[List[int]]:
    """
    Group ascending ``keys`` into clusters separated by gaps >= ``tol``.

    With a ``period`` the keys live on a circle: a cluster straddling the
    wrap point is kept contiguous by rotating the index order.

    Args:
        keys: Ascending values (principal quasienergies or energies)
        tol: Degeneracy gap
        period: Circle length, or None for the real line

    Returns:
        List of index lists, each a degenerate cluster
    """
    keys = np.asarray(keys, dtype=float)
    n = len(keys)
    if n == 0:
        return []
    order = list(range(n))
    if period is not None and n > 1:
        gaps = np.append(np.diff(keys), keys[0] + period - keys[-1])
        open_gaps = np.flatnonzero(gaps >= tol)
        if len(open_gaps) == 0:
            return [order]
        # start right after the first open gap so no cluster straddles the ends
        start = (open_gaps[-1] + 1) % n
        order = order[start:] + order[:start]
        gaps = np.roll(gaps, -start)
    else:
        gaps = np.append(np.diff(keys), np.inf)

    clusters: List[List[int]] = [[order[0]]]
    for pos in range(1, n):
        if gaps[pos - 1] >= tol:
            clusters.append([order[pos]])
        else:
            clusters[-1].append(order[pos])
    return clusters


def eig_unitary(u: np.ndarray, tol: float = settings.UNITARY_TOL) -> EigenPairs:
    """
    Eigendecomposition of a unitary matrix.

    Uses the complex Schur form, which for a normal matrix is diagonal with
    unitary Schur vectors, so degenerate clusters get an orthonormal basis.
    Columns are ordered by ascending principal value of ``-arg(value)`` in
    [0, 2*pi), the quasienergy ordering for T_p = 1.

    Raises:
        NotUnitary: if ``||u^dag u - I||_max > tol``
        ConvergenceFailure: if the Schur iteration fails
    """
    u = as_cmatrix(u)
    defect = unitarity_defect(u)
    if defect > tol:
        raise NotUnitary(f"matrix is not unitary (defect {defect:.3e} > {tol:.1e})",
                         defect=defect)
    try:
        schur_form, schur_vectors = scipy.linalg.schur(u, output="complex")
    except (np.linalg.LinAlgError, ValueError) as e:
        raise ConvergenceFailure(f"Schur decomposition failed: {e}")

    values = np.diag(schur_form).copy()
    keys = (-np.angle(values)) % TWO_PI
    order = np.argsort(keys, kind="stable")
    vectors = canonical_phases(schur_vectors[:, order])
    return EigenPairs(values=values[order], vectors=vectors)


def eig_hermitian(h: np.ndarray, tol: float = settings.HERMITIAN_TOL) -> EigenPairs:
    """Ascending eigendecomposition of a Hermitian matrix with canonical phases."""
    h = as_cmatrix(h)
    defect = hermiticity_defect(h)
    if defect > tol:
        raise NotHermitian(f"matrix is not Hermitian (defect {defect:.3e})", defect=defect)
    try:
        values, vectors = scipy.linalg.eigh(h)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"Hermitian eigensolver failed: {e}")
    return EigenPairs(values=values, vectors=canonical_phases(vectors))


def unitarize(m: np.ndarray, singular_tol: float = settings.SINGULAR_TOL) -> np.ndarray:
    """
    Unitary polar factor of ``m`` (closest unitary in Frobenius norm).

    Raises:
        SingularOverlap: if the smallest singular value is <= ``singular_tol``
    """
    m = as_cmatrix(m)
    try:
        left, singular, right = scipy.linalg.svd(m)
    except np.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"SVD failed: {e}")
    smallest = float(singular[-1]) if len(singular) else 0.0
    if smallest <= singular_tol:
        raise SingularOverlap(
            f"overlap is singular (smallest singular value {smallest:.3e}); "
            "refine the grid or move the loop away from band crossings",
            smallest_singular_value=smallest,
        )
    return left @ right


def expm_antihermitian_generator(h: np.ndarray, scale: float,
                                 tol: float = settings.HERMITIAN_TOL) -> np.ndarray:
    """``exp(-i * scale * h)`` for Hermitian ``h`` via its spectral decomposition."""
    pairs = eig_hermitian(h, tol=tol)
    phases = np.exp(-1j * scale * pairs.values)
    return (pairs.vectors * phases) @ dagger(pairs.vectors)


def unitary_generator(u: np.ndarray, tol: float = settings.UNITARY_TOL) -> np.ndarray:
    """
    Hermitian ``H`` with ``u = exp(-i H)`` and spectrum in [-pi, pi).

    This is ``i log u`` on the principal branch.
    """
    u = as_cmatrix(u)
    defect = unitarity_defect(u)
    if defect > tol:
        raise NotUnitary(f"matrix is not unitary (defect {defect:.3e})", defect=defect)
    schur_form, schur_vectors = scipy.linalg.schur(u, output="complex")
    angles = np.angle(np.diag(schur_form))
    generator = -(schur_vectors * angles) @ dagger(schur_vectors)
    return (generator + dagger(generator)) / 2


def block_diagonal_part(m: np.ndarray, blocks: Sequence[Sequence[int]]) -> np.ndarray:
    """Zero every entry outside the diagonal blocks."""
    m = as_cmatrix(m)
    out = np.zeros_like(m)
    for block in blocks:
        idx = np.ix_(block, block)
        out[idx] = m[idx]
    return out


def block_polar(m: np.ndarray, blocks: Sequence[Sequence[int]],
                singular_tol: float = settings.SINGULAR_TOL) -> np.ndarray:
    """Block-diagonal matrix of the unitary polar factors of the diagonal blocks."""
    m = as_cmatrix(m)
    out = np.zeros_like(m)
    for block in blocks:
        idx = np.ix_(block, block)
        out[idx] = unitarize(m[idx], singular_tol=singular_tol)
    return out


def block_generator(u: np.ndarray, blocks: Sequence[Sequence[int]]) -> np.ndarray:
    """Block-diagonal Hermitian generator of a block-diagonal unitary."""
    u = as_cmatrix(u)
    out = np.zeros_like(u)
    for block in blocks:
        idx = np.ix_(block, block)
        out[idx] = unitary_generator(u[idx])
    return out
