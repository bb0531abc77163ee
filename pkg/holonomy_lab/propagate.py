"""
Brute-force adiabatic propagation around a loop.

The system is evolved period by period while the parameters creep around
the loop; dynamical phases are removed with the tracked quasienergies,
leaving a geometric matrix independent of the connection machinery.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .eigenframe import Bundle, Frame, LoopDef
from .errors import ConfigError
from .matrixcore import dagger, expm_antihermitian_generator, unitarity_defect
from .models import floquet_operator, static_hamiltonian
from .schemas import ModelSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Schedule:
    """
    N steps around a loop, step j sampled at arclength fraction (j + 1/2)/N.

    A step is one Floquet period for kicked models and ``dt`` for static ones.
    """
    loop: LoopDef
    N_periods: int
    dt: float = 1.0

    def fractions(self) -> np.ndarray:
        return (np.arange(self.N_periods) + 0.5) / self.N_periods

    def step_duration(self, spec: ModelSpec) -> float:
        return spec.T_p if spec.is_kicked else self.dt


@dataclass
class PropagationResult:
    U_total: np.ndarray
    dynamical_phases: np.ndarray
    M_numeric: np.ndarray
    unitarity_defect: float


def stroboscopic_evolve(spec: ModelSpec, schedule: Schedule) -> np.ndarray:
    """
    U_total = U(alpha_{N-1}) ... U(alpha_1) U(alpha_0).

    Kicked models multiply Floquet operators; static models step with
    exp(-i H(alpha_j) dt) at each midpoint.

    Raises:
        ConfigError: if N_periods < 1
    """
    if schedule.N_periods < 1:
        raise ConfigError("propagation needs N_periods >= 1", N_periods=schedule.N_periods)
    loop = schedule.loop
    U = np.eye(spec.dimension, dtype=complex)
    for vector in loop.at(schedule.fractions()):
        point = loop.point(vector)
        if spec.is_kicked:
            step = floquet_operator(spec, point)
        else:
            step = expm_antihermitian_generator(static_hamiltonian(spec, point), schedule.dt)
        U = step @ U
    logger.debug("propagated %d steps, unitarity defect %.2e", schedule.N_periods,
                 unitarity_defect(U))
    return U


def dynamical_phase(bundle: Bundle, schedule: Schedule, spec: ModelSpec) -> np.ndarray:
    """
    phi_n = sum_j eps_n(alpha_j) * duration for the band tracked from column n.

    Tracked quasienergies are interpolated onto the schedule with a cubic
    spline in arclength fraction.

    Raises:
        ConfigError: if the schedule is coarser than the bundle
    """
    if schedule.N_periods < bundle.K:
        raise ConfigError(f"N_periods={schedule.N_periods} is below the bundle grid K={bundle.K}",
                          N_periods=schedule.N_periods, K=bundle.K)
    knots = bundle.fractions()
    energies = bundle.quasienergy_table()
    knots, unique = np.unique(knots, return_index=True)
    spline = CubicSpline(knots, energies[unique], axis=0)
    sampled = spline(schedule.fractions())
    return np.sum(sampled, axis=0) * schedule.step_duration(spec)


def extract_geometric(U_total: np.ndarray, frame0: Frame, phi: np.ndarray) -> np.ndarray:
    """M_mn = <v_m| U_total |v_n> exp(i phi_n)."""
    return dagger(frame0.vectors) @ U_total @ frame0.vectors * np.exp(1j * np.asarray(phi))[None, :]


def propagate_loop(spec: ModelSpec, bundle: Bundle, N_periods: int,
                   dt: float = 1.0) -> PropagationResult:
    """Evolve around the bundle's loop and strip the dynamical phases."""
    schedule = Schedule(loop=bundle.loop, N_periods=N_periods, dt=dt)
    U_total = stroboscopic_evolve(spec, schedule)
    phi = dynamical_phase(bundle, schedule, spec)
    M = extract_geometric(U_total, bundle.frames[0], phi)
    defect = unitarity_defect(U_total)
    logger.info("adiabatic propagation over %d steps done", N_periods)
    return PropagationResult(U_total=U_total, dynamical_phases=phi, M_numeric=M,
                             unitarity_defect=defect)

