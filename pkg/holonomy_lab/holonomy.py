"""
Holonomy of a bundle: M(C) = W(C) B(C).

W is the path-ordered product of the unitarized frame overlaps (the
off-diagonal, Wilczek-Zee part of the connection); B is the inverse-ordered
product of their block-diagonal polar factors (the diagonal, Mead-Berry
part). The discrete product is exactly gauge covariant:
M -> G_0^dag M G_0 under any block-diagonal regauge of the frames.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from . import settings
from .eigenframe import Blocks, Bundle, Frame, regauge
from .errors import BlockMismatch, DimensionMismatch
from .matrixcore import (
    block_diagonal_part,
    block_generator,
    block_polar,
    dagger,
    max_abs_diff,
    unitarity_defect,
    unitarize,
    unitary_generator,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConnectionSample:
    """Discrete connection on one segment (or around one frame, if centered)."""

    k: int
    A: np.ndarray
    A_diag: np.ndarray
    step: float


@dataclass
class HolonomyResult:
    """
    Holonomy factors of one loop.

    ``permutation`` maps each band (or degenerate block) to its image under
    M, or is None when M is not a phased permutation within ``perm_tol``.
    """
    W: np.ndarray
    B: np.ndarray
    M: np.ndarray
    blocks: Blocks
    permutation: Optional[List[int]] = None
    phases: list = field(default_factory=list)
    delta_n: List[int] = field(default_factory=list)
    consistent: bool = True

    @property
    def geometric_phases(self) -> Optional[List[float]]:
        """arg of the 1x1 phase factors; None for degenerate blocks."""
        if self.permutation is None or any(np.ndim(phase) for phase in self.phases):
            return None
        return [float(np.angle(phase)) for phase in self.phases]


def overlap(bundle: Bundle, k: int) -> np.ndarray:
    """Unitarized overlap V_k^dag V_{k+1}."""
    frames = bundle.frames
    return unitarize(dagger(frames[k].vectors) @ frames[k + 1].vectors)


def _check_blocks(bundle: Bundle) -> Blocks:
    blocks = bundle.frames[0].blocks
    for k, frame in enumerate(bundle.frames):
        if frame.blocks != blocks:
            raise BlockMismatch(f"frame {k} has blocks {frame.blocks}, frame 0 has {blocks}",
                                frame=k)
    return blocks


def connection_at(bundle: Bundle, k: int, centered: bool = False) -> ConnectionSample:
    """
    Discrete connection A = i V^dag dV on segment k.

    A is the Hermitian generator of the unitarized overlap divided by the
    step; A_diag is the block-diagonal (Mead-Berry) part taken from the
    block polar factor. A zero-length step gives zero connection. With
    ``centered`` the overlap spans frames k-1 and k+1 (interior k only).
    """
    if centered and 0 < k < bundle.K:
        u = unitarize(dagger(bundle.frames[k - 1].vectors) @ bundle.frames[k + 1].vectors)
        step = float(bundle.steps[k - 1] + bundle.steps[k])
    else:
        u = overlap(bundle, k)
        step = float(bundle.steps[k])

    blocks = bundle.frames[k].blocks
    if step == 0:
        zero = np.zeros_like(u)
        return ConnectionSample(k=k, A=zero, A_diag=zero.copy(), step=step)
    A = unitary_generator(u) / step
    A_diag = block_generator(block_polar(u, blocks), blocks) / step
    return ConnectionSample(k=k, A=A, A_diag=A_diag, step=step)


def connection_profile(bundle: Bundle, centered: bool = True) -> List[ConnectionSample]:
    return [connection_at(bundle, k, centered=centered) for k in range(bundle.K)]


def wilson_W(bundle: Bundle, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
    """
    Path-ordered product U_start U_{start+1} ... U_{stop-1}.

    For an open sub-path this is the Wilson line between frames ``start``
    and ``stop``; consecutive lines compose by matrix product.
    """
    stop = bundle.K if stop is None else stop
    W = np.eye(bundle.dimension, dtype=complex)
    for k in range(start, stop):
        W = W @ overlap(bundle, k)
    return W


def ordered_B(bundle: Bundle) -> np.ndarray:
    """
    Inverse-ordered product of the block polar factors, later segments on the left.

    Raises:
        BlockMismatch: if the degenerate blocks change along the bundle
    """
    blocks = _check_blocks(bundle)
    B = np.eye(bundle.dimension, dtype=complex)
    for k in range(bundle.K):
        B = dagger(block_polar(overlap(bundle, k), blocks)) @ B
    return B


def classify_permutation(M: np.ndarray, tol: float = settings.PERM_TOL,
                         blocks: Optional[Sequence[Sequence[int]]] = None
                         ) -> Optional[Tuple[List[int], list]]:
    """
    Read M as a phased permutation of bands (or of degenerate blocks).

    Column block c maps to the unique row block r whose sub-block is unitary
    within ``tol``; every other entry of the column block must be below
    ``tol``. For 1x1 blocks the phase is the complex entry, otherwise the
    unitary sub-block.

    Returns:
        (permutation, phases) with permutation[c] = r, or None
    """
    M = np.asarray(M, dtype=complex)
    blocks = [list(block) for block in (blocks or [(n,) for n in range(M.shape[0])])]
    permutation: List[int] = []
    phases = []
    for cols in blocks:
        target = None
        for r, rows in enumerate(blocks):
            sub = M[np.ix_(rows, cols)]
            if len(rows) == len(cols) and unitarity_defect(sub) <= tol:
                if target is not None:
                    return None
                target = r
            elif np.max(np.abs(sub)) > tol:
                return None
        if target is None:
            return None
        sub = M[np.ix_(blocks[target], cols)]
        permutation.append(target)
        phases.append(complex(sub[0, 0]) if sub.size == 1 else sub)
    if sorted(permutation) != list(range(len(blocks))):
        return None
    return permutation, phases


def level_shifts(bundle: Bundle) -> List[int]:
    """
    Delta n per column from the extended level ladder.

    Level L = b + N_b * w indexes block b (by ascending quasienergy at frame
    0) shifted by w zones; Delta n is the change of L between the first
    and last frame. Static models have a finite ladder (w = 0).
    """
    first, last = bundle.frames[0], bundle.frames[-1]
    energies = first.block_energies()
    order = np.argsort(energies, kind="stable")
    position = np.empty(len(order), dtype=int)
    position[order] = np.arange(len(order))
    ladder = energies[order]
    n_blocks = len(ladder)

    shifts: List[int] = []
    for b, end in enumerate(last.block_energies()):
        if bundle.period is None:
            level = int(np.argmin(np.abs(ladder - end)))
        else:
            winds = np.round((end - ladder) / bundle.period)
            misses = np.abs(end - ladder - winds * bundle.period)
            slot = int(np.argmin(misses))
            level = slot + n_blocks * int(winds[slot])
        shift = level - int(position[b])
        shifts.extend([shift] * len(first.blocks[b]))
    return shifts


def _expected_permutation(bundle: Bundle, shifts: List[int]) -> List[int]:
    energies = bundle.frames[0].block_energies()
    order = list(np.argsort(energies, kind="stable"))
    n_blocks = len(order)
    expected = []
    for b, block in enumerate(bundle.frames[0].blocks):
        position = order.index(b)
        expected.append(int(order[(position + shifts[block[0]]) % n_blocks]))
    return expected


def holonomy_M(bundle: Bundle, perm_tol: float = settings.PERM_TOL) -> HolonomyResult:
    """
    M = W B with its permutation/phase reading and level shifts.

    A mismatch between the permutation of M and the tracked level shifts is
    logged as a warning and flagged through ``consistent``.

    Raises:
        BlockMismatch: if the degenerate blocks change along the bundle
    """
    blocks = _check_blocks(bundle)
    W = wilson_W(bundle)
    B = ordered_B(bundle)
    M = W @ B
    match = classify_permutation(M, perm_tol, blocks=blocks)
    shifts = level_shifts(bundle)
    result = HolonomyResult(W=W, B=B, M=M, blocks=blocks, delta_n=shifts)
    if match is not None:
        result.permutation, result.phases = match
        expected = _expected_permutation(bundle, shifts)
        if result.permutation != expected:
            result.consistent = False
            logger.warning("permutation of M %s disagrees with level shifts %s (expected %s)",
                           result.permutation, shifts, expected)
    else:
        logger.info("M is not a phased permutation within %.1e", perm_tol)
    logger.info("holonomy over %d segments: |B - I|_max = %.2e", bundle.K,
                max_abs_diff(B, np.eye(len(B))))
    return result


# Comparing holonomies computed in different frames at the same base point
def basis_change(source: Frame, target: Frame) -> np.ndarray:
    """Unitary S taking a holonomy in the ``source`` gauge to the ``target`` gauge: S M S^dag."""
    return unitarize(dagger(target.vectors) @ source.vectors)


def label_permutation(S: np.ndarray, source: Frame, target: Frame) -> np.ndarray:
    """Permutation matrix matching band labels only, blocks by largest overlap."""
    P = np.zeros_like(S)
    for cols in source.blocks:
        norms = [np.linalg.norm(S[np.ix_(rows, cols)]) if len(rows) == len(cols) else -1.0
                 for rows in target.blocks]
        rows = target.blocks[int(np.argmax(norms))]
        for r, c in zip(rows, cols):
            P[r, c] = 1.0
    return P


def _hermitian_from_params(params: np.ndarray, size: int) -> np.ndarray:
    h = np.zeros((size, size), dtype=complex)
    h[np.diag_indices(size)] = params[:size]
    upper = np.triu_indices(size, k=1)
    n_upper = len(upper[0])
    h[upper] = params[size:size + n_upper] + 1j * params[size + n_upper:]
    return h + np.triu(h, k=1).conj().T


def conjugation_distance(M: np.ndarray, target: np.ndarray, blocks: Blocks) -> float:
    """
    min over block-diagonal unitaries D of ||D M D^dag - target||_F.

    Starts from D = I, so ``M`` should already be aligned to the target
    gauge; the search only removes the residual block rotation.
    """
    sizes = [len(block) for block in blocks]

    def build(params):
        D = np.zeros_like(M)
        offset = 0
        for block, size in zip(blocks, sizes):
            D[np.ix_(block, block)] = expm(-1j * _hermitian_from_params(
                params[offset:offset + size * size], size))
            offset += size * size
        return D

    def objective(params):
        D = build(params)
        return float(np.linalg.norm(D @ M @ dagger(D) - target) ** 2)

    x0 = np.zeros(sum(size * size for size in sizes))
    start = objective(x0)
    result = minimize(objective, x0, method="BFGS")
    return float(np.sqrt(min(start, result.fun)))


def apply_gauge(bundle: Bundle, twist) -> Bundle:
    """
    Regauge every frame: V_k -> V_k G_k.

    ``twist`` is either a (K+1, N) array of phase angles (diagonal gauge) or
    a (K+1, N, N) array of unitaries, block diagonal in each frame's blocks.

    Raises:
        DimensionMismatch: on wrong shapes, non-unitary or off-block twists
    """
    twist = np.asarray(twist)
    n_frames, n = bundle.K + 1, bundle.dimension
    if twist.shape == (n_frames, n):
        frames = [replace(frame, vectors=frame.vectors * np.exp(1j * angles)[None, :])
                  for frame, angles in zip(bundle.frames, twist)]
        return regauge(bundle, frames)
    if twist.shape != (n_frames, n, n):
        raise DimensionMismatch(f"gauge twist of shape {twist.shape} does not fit "
                                f"{n_frames} frames of dimension {n}", shape=list(twist.shape))

    frames: List[Frame] = []
    for k, (frame, g) in enumerate(zip(bundle.frames, twist)):
        off_block = g - block_diagonal_part(g, frame.blocks)
        if np.max(np.abs(off_block)) > settings.UNITARY_TOL or \
                unitarity_defect(g) > settings.UNITARY_TOL:
            raise DimensionMismatch(f"gauge twist at frame {k} is not a block-diagonal unitary",
                                    frame=k)
        frames.append(replace(frame, vectors=frame.vectors @ g))
    return regauge(bundle, frames)
