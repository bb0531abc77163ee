"""
Closed-form eigenframes and holonomies of the kicked spin models.

The mixing angle Q is half a two-argument arctangent, unwrapped
continuously in lambda so that Q(lambda + pi) = Q(lambda) + pi/2 holds on
the unwrapped branch. Loops without a closed form raise UnsupportedLoop.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Tuple

import numpy as np

from . import settings
from .eigenframe import Frame
from .errors import GapClosed, ThetaResolutionFailure, UnsupportedLoop, UnsupportedModel
from .matrixcore import TWO_PI, max_abs_diff
from .models import SIGMA2, SIGMA3, ParameterPoint, floquet_operator
from .schemas import LoopName, ModelKind, ModelSpec

logger = logging.getLogger(__name__)

_ORIENTATION_EPS = 1e-14


def _mixing_xy(mu: float, gamma: float, T: float) -> Tuple[float, float]:
    y = np.sin(mu) * np.sin(gamma)
    x = np.cos(mu) * np.sin(T) + np.sin(mu) * np.cos(T) * np.cos(gamma)
    return float(x), float(y)


def _energy(mu: float, gamma: float, T: float) -> float:
    c = np.cos(mu) * np.cos(T) - np.sin(mu) * np.sin(T) * np.cos(gamma)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def _unwrapped_mixing(mu: float, gamma: float, T: float) -> float:
    """
    Q on the branch continuous in mu from Q(0) in {0, pi/2}.

    sin(T) cos(mu) + (cos(T) cos(gamma) + i sin(gamma)) sin(mu) traces an
    ellipse with orientation sign(sin T sin gamma), half a turn per pi in mu.
    """
    orientation = np.sign(np.sin(T) * np.sin(gamma))
    if abs(np.sin(T) * np.sin(gamma)) < _ORIENTATION_EPS:
        x, y = _mixing_xy(mu, gamma, T)
        return 0.5 * float(np.arctan2(y, x))

    base = 0.0 if np.sin(T) > 0 else np.pi
    turns = np.floor(mu / np.pi)
    rest = mu - turns * np.pi
    if rest < 0:
        rest = 0.0
    elif rest >= np.pi:
        turns += 1
        rest -= np.pi
    x, y = _mixing_xy(rest, gamma, T)
    angle = np.arctan2(y, x)
    if orientation > 0:
        sweep = (angle - base) % TWO_PI
    else:
        sweep = (base - angle) % TWO_PI
    # half a turn at most; anything near a full turn is rounding at rest = 0
    if sweep > 1.5 * np.pi:
        sweep = 0.0
    total = base + orientation * (sweep + turns * np.pi)
    return 0.5 * float(total)


def EQ_functions(lam: float, gamma: float, T: float) -> Tuple[float, float]:
    """
    Half-gap E and unwrapped mixing angle Q.

    Args:
        lam: Effective kick angle, (2-p) lambda / 2 in the kicked models
        gamma: Polar angle of the kick direction
        T: Field strength

    Returns:
        (E, Q) with E in [0, pi]
    """
    return _energy(lam, gamma, T), _unwrapped_mixing(lam, gamma, T)


def nearest_branch(mu: float, gamma: float, T: float, q_ref: float) -> float:
    """Q modulo pi chosen closest to ``q_ref``."""
    x, y = _mixing_xy(mu, gamma, T)
    principal = 0.5 * float(np.arctan2(y, x))
    return principal + np.pi * np.round((q_ref - principal) / np.pi)


def _check_gap(E: float, **where) -> None:
    gap = min(E, np.pi - E)
    if gap < settings.GAP_TOL:
        raise GapClosed(f"quasienergy gap closes (E = {E:.3e})", E=E, **where)


def _effective_angle(p: int, lam: float) -> float:
    return 0.5 * (2 - p) * lam


def spin_half_columns(Q: float, xi: float) -> np.ndarray:
    """Columns |v_0>, |v_1> for mixing angle Q and azimuth xi."""
    phase = np.array([np.exp(-0.5j * xi), np.exp(0.5j * xi)])
    rotation = np.array([[np.cos(Q), -np.sin(Q)], [np.sin(Q), np.cos(Q)]], dtype=complex)
    return phase[:, None] * rotation


def analytic_frame_spin_half(p: int, lam: float, gamma: float, xi: float, T: float,
                             Q: Optional[float] = None) -> Frame:
    """
    Raises:
        GapClosed: if the two quasienergies coincide
    """
    mu = _effective_angle(p, lam)
    E, Q_unwrapped = EQ_functions(mu, gamma, T)
    _check_gap(E, lam=lam, gamma=gamma, T=T)
    Q = Q_unwrapped if Q is None else Q
    base = 0.5 * p * lam
    return Frame(
        point=ParameterPoint.spin_half(lam, gamma, xi),
        quasienergies=np.array([base + E, base - E]),
        vectors=spin_half_columns(Q, xi),
        blocks=((0,), (1,)),
    )


def three_half_columns(Q: float, eta: float, theta_plus: float,
                       theta_minus: float) -> np.ndarray:
    """Columns |v_00>, |v_01>, |v_10>, |v_11>."""
    c, s = np.cos(Q), np.sin(Q)
    ce, se = np.cos(eta), np.sin(eta)
    ep, em = np.exp(-1j * theta_plus), np.exp(-1j * theta_minus)
    epc, emc = np.conj(ep), np.conj(em)
    return np.array([
        [ep * c, 0, -ep * se * s, -ep * ce * s],
        [0, epc * c, epc * ce * s, -epc * se * s],
        [em * se * s, -em * ce * s, em * c, 0],
        [emc * ce * s, emc * se * s, 0, emc * c],
    ], dtype=complex)


@dataclass(frozen=True)
class ThetaRule:
    """Accepted definition of the spinor phases theta_+ and theta_-."""

    name: str
    residual: float
    rule: Callable[[float, float], Tuple[float, float]]

    def __call__(self, xi: float, zeta: float) -> Tuple[float, float]:
        return self.rule(xi, zeta)


THETA_CANDIDATES = (
    ("theta_plus = xi/2, theta_minus = zeta/2", lambda xi, zeta: (xi / 2, zeta / 2)),
    ("theta_plus = (xi+zeta)/2, theta_minus = (xi-zeta)/2",
     lambda xi, zeta: ((xi + zeta) / 2, (xi - zeta) / 2)),
)


def _eigen_residual(frame: Frame, spec: ModelSpec) -> float:
    u = floquet_operator(spec, frame.point)
    expected = frame.vectors * np.exp(-1j * frame.quasienergies * spec.T_p)
    return max_abs_diff(u @ frame.vectors, expected)


def _three_half_frame(p, lam, gamma, eta, xi, zeta, T, theta_plus, theta_minus,
                      Q: Optional[float] = None) -> Frame:
    mu = _effective_angle(p, lam)
    E, Q_unwrapped = EQ_functions(mu, gamma, T)
    _check_gap(E, lam=lam, gamma=gamma, T=T)
    Q = Q_unwrapped if Q is None else Q
    base = 0.5 * p * lam
    return Frame(
        point=ParameterPoint.spin_three_half(lam, gamma, eta, xi, zeta),
        quasienergies=np.array([base + E, base + E, base - E, base - E]),
        vectors=three_half_columns(Q, eta, theta_plus, theta_minus),
        blocks=((0, 1), (2, 3)),
    )


@lru_cache(maxsize=None)
def resolve_theta(draws: int = settings.THETA_DRAWS,
                  tol: float = settings.THETA_TOL) -> ThetaRule:
    """
    Pick the first candidate theta rule that solves the eigenvalue equation
    of the spin-3/2 Floquet operator at ``draws`` random parameter points.

    Raises:
        ThetaResolutionFailure: if no candidate stays within ``tol``
    """
    rng = settings.get_rng(offset=638)
    samples = []
    while len(samples) < draws:
        p = int(rng.choice([0, 1, 2, 3]))
        lam, xi, zeta = rng.uniform(0, TWO_PI, size=3)
        gamma, T = rng.uniform(0.2, np.pi - 0.2, size=2)
        eta = rng.uniform(0, np.pi)
        E = _energy(_effective_angle(p, lam), gamma, T)
        if min(E, np.pi - E) < 1e-3:
            continue
        samples.append((p, lam, gamma, eta, xi, zeta, T))

    residuals = {}
    for name, rule in THETA_CANDIDATES:
        worst = 0.0
        for p, lam, gamma, eta, xi, zeta, T in samples:
            spec = ModelSpec(kind=ModelKind.KICKED_SPIN_THREE_HALF, T=T, p=p)
            frame = _three_half_frame(p, lam, gamma, eta, xi, zeta, T, *rule(xi, zeta))
            worst = max(worst, _eigen_residual(frame, spec))
        residuals[name] = worst
        if worst <= tol:
            logger.info("accepted theta rule '%s' (max residual %.2e over %d draws)",
                        name, worst, draws)
            return ThetaRule(name=name, residual=worst, rule=rule)
        logger.debug("rejected theta rule '%s' (max residual %.2e)", name, worst)
    raise ThetaResolutionFailure("no theta rule satisfies the eigenvalue equation",
                                 residuals=residuals)


def analytic_frame_spin_threehalf(p: int, lam: float, gamma: float, eta: float, xi: float,
                                  zeta: float, T: float, Q: Optional[float] = None,
                                  verify: bool = True) -> Frame:
    """
    Doubly degenerate closed-form frame, blocks ((0, 1), (2, 3)).

    Raises:
        GapClosed: if the two levels coincide
        ThetaResolutionFailure: if no theta rule works, or the built frame
            fails the eigenvalue equation
    """
    rule = resolve_theta()
    frame = _three_half_frame(p, lam, gamma, eta, xi, zeta, T, *rule(xi, zeta), Q=Q)
    if verify:
        spec = ModelSpec(kind=ModelKind.KICKED_SPIN_THREE_HALF, T=T, p=p)
        residual = _eigen_residual(frame, spec)
        if residual > settings.THETA_TOL:
            raise ThetaResolutionFailure(
                f"closed-form frame misses the eigenvalue equation by {residual:.2e}",
                residual=residual)
    return frame


def analytic_frame(spec: ModelSpec, point: ParameterPoint, Q: Optional[float] = None) -> Frame:
    """
    Raises:
        UnsupportedModel: for custom static models
    """
    if spec.kind == ModelKind.KICKED_SPIN_HALF:
        gamma, xi = point.sphere
        return analytic_frame_spin_half(spec.p, point.lam, gamma, xi, spec.T, Q=Q)
    if spec.kind == ModelKind.KICKED_SPIN_THREE_HALF:
        gamma, eta, xi, zeta = point.sphere
        return analytic_frame_spin_threehalf(spec.p, point.lam, gamma, eta, xi, zeta, spec.T,
                                             Q=Q, verify=False)
    raise UnsupportedModel(f"no closed-form frames for model '{spec.kind.value}'",
                           model=spec.kind.value)


def analytic_frames_along(spec: ModelSpec, points: List[ParameterPoint]) -> List[Frame]:
    """Closed-form frames with Q carried continuously from point to point."""
    frames = []
    q_ref = None
    for point in points:
        mu = _effective_angle(spec.p, point.lam)
        gamma = point.sphere[0]
        if q_ref is None:
            Q = _unwrapped_mixing(mu, gamma, spec.T)
        else:
            Q = nearest_branch(mu, gamma, spec.T, q_ref)
        frames.append(analytic_frame(spec, point, Q=Q))
        q_ref = Q
    return frames


@dataclass(frozen=True)
class OracleValues:
    """Closed-form holonomy factors at a base point."""

    E: float
    Q: float
    frame: Frame
    W: np.ndarray
    B: np.ndarray
    M: np.ndarray
    theta_rule: Optional[str] = None


def _rotation_generator_three_half(eta: float) -> np.ndarray:
    """V^dag dV/dQ in the closed-form gauge: [[0, -G], [G^T, 0]]."""
    se, ce = np.sin(eta), np.cos(eta)
    G = np.array([[se, ce], [-ce, se]], dtype=complex)
    zero = np.zeros((2, 2), dtype=complex)
    return np.block([[zero, -G], [G.T, zero]])


def analytic_holonomies(spec: ModelSpec, loop: LoopName, base: ParameterPoint) -> OracleValues:
    """
    W, B and M of a named loop starting at ``base``.

    Covered: spin 1/2 along lambda (any T), xi and gamma (T = 0 only);
    spin 3/2 along lambda.

    Raises:
        UnsupportedLoop: for any other model/loop combination
        GapClosed: if the base point is degenerate
    """
    mu = _effective_angle(spec.p, base.lam)
    gamma = base.sphere[0] if base.sphere else 0.0
    if spec.kind == ModelKind.KICKED_SPIN_HALF:
        frame = analytic_frame(spec, base)
        E, Q = EQ_functions(mu, gamma, spec.T)
        identity = np.eye(2, dtype=complex)
        if loop == LoopName.LAMBDA:
            delta = _unwrapped_mixing(mu + (2 - spec.p) * np.pi, gamma, spec.T) - Q
            W = np.cos(delta) * identity - 1j * np.sin(delta) * SIGMA2
            return OracleValues(E=E, Q=Q, frame=frame, W=W, B=identity, M=W.copy())
        if loop in (LoopName.XI, LoopName.GAMMA) and spec.T == 0:
            W = -identity
            if loop == LoopName.GAMMA:
                B = identity
            else:
                B = np.diag(np.exp(1j * np.pi * np.cos(2 * Q) * np.diag(SIGMA3).real))
            return OracleValues(E=E, Q=Q, frame=frame, W=W, B=B, M=W @ B)
    elif spec.kind == ModelKind.KICKED_SPIN_THREE_HALF and loop == LoopName.LAMBDA:
        frame = analytic_frame(spec, base)
        E, Q = EQ_functions(mu, gamma, spec.T)
        eta = base.sphere[1]
        delta = _unwrapped_mixing(mu + (2 - spec.p) * np.pi, gamma, spec.T) - Q
        W = np.cos(delta) * np.eye(4) + np.sin(delta) * _rotation_generator_three_half(eta)
        return OracleValues(E=E, Q=Q, frame=frame, W=W, B=np.eye(4, dtype=complex), M=W.copy(),
                            theta_rule=resolve_theta().name)
    raise UnsupportedLoop(
        f"no closed form for loop '{loop.value}' of model '{spec.kind.value}' at T={spec.T}",
        loop=loop.value, model=spec.kind.value)
