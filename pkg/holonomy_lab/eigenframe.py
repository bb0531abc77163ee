"""
Gauge-continued instantaneous eigenframes along discretized loops.

A Frame is the eigenbasis at one parameter point; a Bundle is the ordered
sequence of continued frames around a closed loop. The last frame is never
re-gauged against the first: their mismatch is what the holonomy measures.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import settings
from .errors import BandCrossing, ConfigError, GapClosed, LoopNotClosed
from .matrixcore import (
    TWO_PI,
    cluster_indices,
    dagger,
    eig_hermitian,
    eig_unitary,
    unitarize,
    wrap_phase,
)
from .models import ParameterPoint, coordinate_names, floquet_operator, static_hamiltonian
from .schemas import GaugePolicy, ModelKind, ModelSpec

logger = logging.getLogger(__name__)

Blocks = Tuple[Tuple[int, ...], ...]

# Block sizes of a kicked model away from its gap closings
GAPPED_BLOCK_SIZES = {
    ModelKind.KICKED_SPIN_HALF: (1, 1),
    ModelKind.KICKED_SPIN_THREE_HALF: (2, 2),
}


@dataclass(frozen=True)
class Frame:
    """Eigenbasis at one point: quasienergies, eigenvector columns, degenerate blocks."""

    point: ParameterPoint
    quasienergies: np.ndarray
    vectors: np.ndarray
    blocks: Blocks

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    @property
    def block_sizes(self) -> Tuple[int, ...]:
        return tuple(len(block) for block in self.blocks)

    def block_energies(self) -> np.ndarray:
        return np.array([np.mean(self.quasienergies[list(block)]) for block in self.blocks])


@dataclass(frozen=True)
class LoopDef:
    """
    Piecewise-linear path through coordinate space.

    ``waypoints`` is an (M, d) array of coordinate vectors in the layout of
    ``ParameterPoint.as_vector``; ``template`` supplies the point type.
    """
    name: str
    waypoints: np.ndarray
    template: ParameterPoint
    coordinates: Tuple[str, ...]

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)

    @property
    def length(self) -> float:
        return float(np.sum(self.segment_lengths))

    def closure_defect(self) -> float:
        """Largest distance of end - start from the 2*pi lattice."""
        delta = self.waypoints[-1] - self.waypoints[0]
        return float(np.max(np.abs(delta - TWO_PI * np.round(delta / TWO_PI))))

    def varying(self) -> List[str]:
        spread = np.ptp(self.waypoints, axis=0)
        return [name for name, width in zip(self.coordinates, spread) if width > 0]

    def meta(self) -> Dict[str, object]:
        delta = self.waypoints[-1] - self.waypoints[0]
        return {
            "name": self.name,
            "varying": self.varying(),
            "swept": {name: float(d) for name, d in zip(self.coordinates, delta) if d != 0},
            "waypoints": self.waypoints.tolist(),
        }

    def discretize(self, K: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        K uniform steps per segment, allotted in proportion to segment length.

        Returns:
            (K+1, d) array of points and the K step lengths
        """
        lengths = self.segment_lengths
        n_segments = len(lengths)
        if self.length == 0:
            counts = np.zeros(n_segments, dtype=int)
            counts[0] = K
        else:
            counts = np.floor(K * lengths / self.length).astype(int)
            counts[lengths > 0] = np.maximum(counts[lengths > 0], 1)
            counts[int(np.argmax(lengths))] += K - int(np.sum(counts))
        rows = [self.waypoints[:1]]
        for start, stop, count in zip(self.waypoints[:-1], self.waypoints[1:], counts):
            if count == 0:
                continue
            fractions = np.arange(1, count + 1)[:, None] / count
            rows.append(start + fractions * (stop - start))
        points = np.vstack(rows)
        # the last point is the exact end waypoint, as constructed
        points[-1] = self.waypoints[-1]
        steps = np.linalg.norm(np.diff(points, axis=0), axis=1)
        return points, steps

    def at(self, fractions: Sequence[float]) -> np.ndarray:
        """Points at arclength fractions s in [0, 1]."""
        fractions = np.asarray(fractions, dtype=float)
        if self.length == 0:
            return np.repeat(self.waypoints[:1], len(fractions), axis=0)
        knots = np.concatenate([[0.0], np.cumsum(self.segment_lengths)]) / self.length
        return np.column_stack([
            np.interp(fractions, knots, self.waypoints[:, axis])
            for axis in range(self.waypoints.shape[1])
        ])

    def point(self, vector) -> ParameterPoint:
        return self.template.with_vector(vector)


def named_loop(spec: ModelSpec, base: ParameterPoint, coordinate: str,
               span: float = TWO_PI) -> LoopDef:
    """
    Loop sweeping one coordinate from its base value by ``span``.

    Raises:
        ConfigError: if the model has no such coordinate
    """
    names = coordinate_names(spec.kind)
    if coordinate not in names:
        raise ConfigError(f"model '{spec.kind.value}' has no coordinate '{coordinate}'",
                          coordinate=coordinate)
    start = base.as_vector()
    stop = start.copy()
    stop[names.index(coordinate)] += span
    return LoopDef(name=coordinate, waypoints=np.vstack([start, stop]), template=base,
                   coordinates=names)


def constant_loop(spec: ModelSpec, base: ParameterPoint) -> LoopDef:
    start = base.as_vector()
    return LoopDef(name="constant", waypoints=np.vstack([start, start]), template=base,
                   coordinates=coordinate_names(spec.kind))


def waypoint_loop(spec: ModelSpec, base: ParameterPoint, waypoints) -> LoopDef:
    """
    Raises:
        ConfigError: if the waypoint width does not match the model's coordinates
    """
    waypoints = np.asarray(waypoints, dtype=float)
    width = len(base.as_vector())
    if waypoints.ndim != 2 or waypoints.shape[1] != width:
        raise ConfigError(f"waypoints need {width} coordinates per point",
                          shape=list(waypoints.shape))
    return LoopDef(name="waypoints", waypoints=waypoints, template=base,
                   coordinates=coordinate_names(spec.kind)[:width])


@dataclass(frozen=True)
class Bundle:
    """Continued frames along a loop, frames[K] at the (unwrapped) loop end."""

    frames: Tuple[Frame, ...]
    policy: GaugePolicy
    loop: LoopDef
    steps: np.ndarray
    period: Optional[float]

    @property
    def K(self) -> int:
        return len(self.frames) - 1

    @property
    def dimension(self) -> int:
        return self.frames[0].dimension

    def loop_meta(self) -> Dict[str, object]:
        meta = self.loop.meta()
        meta["K"] = self.K
        return meta

    def fractions(self) -> np.ndarray:
        """Arclength fraction of every frame, strictly increasing when steps > 0."""
        total = float(np.sum(self.steps))
        if total == 0:
            return np.arange(self.K + 1) / self.K
        return np.concatenate([[0.0], np.cumsum(self.steps)]) / total

    def quasienergy_table(self) -> np.ndarray:
        """(K+1, N) tracked quasienergies."""
        return np.array([frame.quasienergies for frame in self.frames])


def default_deg_tol(spec: ModelSpec) -> float:
    """Degeneracy gap: a fraction of the quasienergy zone, or absolute for static models."""
    period = spec.period
    return settings.DEFAULT_DEG_TOL * period if period is not None else settings.DEFAULT_DEG_TOL


def frame_at(spec: ModelSpec, point: ParameterPoint, deg_tol: Optional[float] = None) -> Frame:
    """
    Eigenframe at one point, columns grouped into degenerate blocks.

    Kicked models diagonalize the Floquet operator; quasienergies are
    principal values in [0, 2*pi/T_p) (a block straddling zero is unwrapped
    onto its first member). Static models diagonalize H.
    """
    deg_tol = default_deg_tol(spec) if deg_tol is None else deg_tol
    period = spec.period
    if spec.is_kicked:
        pairs = eig_unitary(floquet_operator(spec, point))
        energies = (-np.angle(pairs.values) / spec.T_p) % period
    else:
        pairs = eig_hermitian(static_hamiltonian(spec, point))
        energies = np.asarray(pairs.values, dtype=float)

    clusters = cluster_indices(energies, deg_tol, period=period)
    order = [index for cluster in clusters for index in cluster]
    energies = energies[order]
    vectors = pairs.vectors[:, order]

    blocks = []
    cursor = 0
    for cluster in clusters:
        block = tuple(range(cursor, cursor + len(cluster)))
        if period is not None and len(block) > 1:
            first = energies[block[0]]
            energies[list(block)] = first + wrap_phase(energies[list(block)] - first, period)
        blocks.append(block)
        cursor += len(cluster)
    return Frame(point=point, quasienergies=energies, vectors=vectors, blocks=tuple(blocks))


def _match_blocks(prev: Frame, nxt: Frame, overlap: np.ndarray, overlap_min: float,
                  margin: float) -> List[int]:
    """
    Greedy block assignment by smallest singular value of overlap sub-blocks.

    Returns:
        For every prev block, the index of its matching next block

    Raises:
        BandCrossing: on weak or ambiguous overlaps
    """
    if sorted(prev.block_sizes) != sorted(nxt.block_sizes):
        raise BandCrossing(
            f"degenerate block structure changed from {prev.block_sizes} to {nxt.block_sizes}")

    n_prev, n_next = len(prev.blocks), len(nxt.blocks)
    scores = np.zeros((n_prev, n_next))
    for b, rows in enumerate(prev.blocks):
        for c, cols in enumerate(nxt.blocks):
            if len(rows) == len(cols):
                sub = overlap[np.ix_(rows, cols)]
                scores[b, c] = np.linalg.svd(sub, compute_uv=False)[-1]

    assignment = [-1] * n_prev
    taken = set()
    for flat in np.argsort(-scores, axis=None, kind="stable"):
        b, c = divmod(int(flat), n_next)
        if assignment[b] >= 0 or c in taken or scores[b, c] <= 0:
            continue
        assignment[b] = c
        taken.add(c)

    for b, c in enumerate(assignment):
        if c < 0:
            raise BandCrossing(f"block {b} has no continuation")
        best = scores[b, c]
        if best <= overlap_min:
            raise BandCrossing(
                f"block {b} overlap {best:.3f} below {overlap_min}; refine the grid",
                overlap=float(best))
        rivals = np.concatenate([np.delete(scores[b], c), np.delete(scores[:, c], b)])
        if len(rivals) and np.max(rivals) >= (1 - margin) * best:
            raise BandCrossing(
                f"ambiguous continuation of block {b} (overlaps {best:.3f} vs "
                f"{np.max(rivals):.3f}); refine the grid", overlap=float(best))
    return assignment


def continue_frame(prev: Frame, next_raw: Frame, policy: GaugePolicy,
                   overlap_min: float = settings.OVERLAP_MIN,
                   margin: float = settings.AMBIGUITY_MARGIN,
                   period: Optional[float] = TWO_PI) -> Frame:
    """
    Continue ``prev`` onto the raw frame at the next point.

    Columns are reordered to follow the bands of ``prev``, quasienergies are
    unwrapped onto the branch continuous with ``prev``, and the gauge policy
    fixes the phases: smooth-phase and parallel-transport rotate each block
    by the polar factor of its overlap so the block overlap is Hermitian
    positive.

    Raises:
        BandCrossing: if the overlap block structure is weak or ambiguous
    """
    overlap = dagger(prev.vectors) @ next_raw.vectors
    assignment = _match_blocks(prev, next_raw, overlap, overlap_min, margin)

    vectors = np.empty_like(prev.vectors)
    energies = np.empty_like(prev.quasienergies)
    for rows, c in zip(prev.blocks, assignment):
        cols = list(next_raw.blocks[c])
        rows = list(rows)
        block_vectors = next_raw.vectors[:, cols]
        if policy in (GaugePolicy.SMOOTH_PHASE, GaugePolicy.PARALLEL_TRANSPORT):
            rotation = unitarize(overlap[np.ix_(rows, cols)])
            block_vectors = block_vectors @ dagger(rotation)
        vectors[:, rows] = block_vectors

        raw = next_raw.quasienergies[cols]
        reference = prev.quasienergies[rows]
        if period is None:
            energies[rows] = raw
        else:
            energies[rows] = reference + wrap_phase(raw - reference, period)
    return Frame(point=next_raw.point, quasienergies=energies, vectors=vectors,
                 blocks=prev.blocks)


def _raw_frames(spec: ModelSpec, points: List[ParameterPoint], policy: GaugePolicy,
                deg_tol: Optional[float], workers: int) -> List[Frame]:
    if policy == GaugePolicy.ANALYTIC_ORACLE:
        from .oracles import analytic_frames_along
        return analytic_frames_along(spec, points)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda point: frame_at(spec, point, deg_tol), points))
    return [frame_at(spec, point, deg_tol) for point in points]


def track_path(spec: ModelSpec, loop: LoopDef, K: int, policy: GaugePolicy,
               deg_tol: Optional[float] = None,
               overlap_min: float = settings.OVERLAP_MIN,
               workers: int = 1) -> Bundle:
    """
    Raw frames at every grid point (concurrently if ``workers`` > 1), then
    one sequential continuation pass. The path need not be closed.

    Raises:
        BandCrossing: with the offending ``segment`` index
    """
    vectors, steps = loop.discretize(K)
    points = [loop.point(vector) for vector in vectors]
    raw = _raw_frames(spec, points, policy, deg_tol, workers)

    frames = [raw[0]]
    for k in range(1, len(raw)):
        try:
            frames.append(continue_frame(frames[-1], raw[k], policy,
                                         overlap_min=overlap_min, period=spec.period))
        except BandCrossing as e:
            logger.debug("band crossing on segment %d: %s", k - 1, e.detail)
            raise BandCrossing(f"segment {k - 1}: {e.detail}", segment=k - 1, **e.context)

    logger.info("tracked %d frames along loop '%s' (%s gauge)", len(frames), loop.name,
                policy.value)
    return Bundle(frames=tuple(frames), policy=policy, loop=loop, steps=steps,
                  period=spec.period)


def bundle_along(spec: ModelSpec, loop: LoopDef, K: int, policy: GaugePolicy,
                 deg_tol: Optional[float] = None,
                 overlap_min: float = settings.OVERLAP_MIN,
                 workers: int = 1) -> Bundle:
    """
    Continued frames around a closed loop.

    Raises:
        ConfigError: if K is below the minimum grid
        LoopNotClosed: if the end point differs from the start modulo 2*pi
        BandCrossing: with the offending segment index
        GapClosed: if a kicked model sits on a gap closing along the whole loop
    """
    if K < settings.MIN_GRID:
        raise ConfigError(f"K={K} is below the minimum grid {settings.MIN_GRID}", K=K)
    defect = loop.closure_defect()
    if defect > 1e-9:
        raise LoopNotClosed(f"loop '{loop.name}' does not close (defect {defect:.3e})",
                            defect=defect)
    bundle = track_path(spec, loop, K, policy, deg_tol=deg_tol, overlap_min=overlap_min,
                        workers=workers)
    check_gapped(spec, bundle.frames[0])
    return bundle


def check_gapped(spec: ModelSpec, frame: Frame) -> None:
    """
    Raises:
        GapClosed: if the frame of a kicked model has merged levels
    """
    expected = GAPPED_BLOCK_SIZES.get(spec.kind)
    if expected is not None and tuple(sorted(frame.block_sizes)) != expected:
        raise GapClosed(f"levels merge into blocks {frame.block_sizes} at {frame.point}",
                        blocks=[list(block) for block in frame.blocks],
                        point=frame.point.as_vector().tolist())


def regauge(bundle: Bundle, frames: Sequence[Frame]) -> Bundle:
    return replace(bundle, frames=tuple(frames))
