"""
Parametrized systems: kick operators, Floquet operators, static Hamiltonians.

The kicked models are a spin 1/2 (Pauli matrices) and a spin 3/2 (five
anticommuting 4x4 matrices) under a constant field T and a periodic kick of
strength lambda. Parameter points live on S^1 x S^2 or S^1 x S^4.
"""
import importlib
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from . import settings
from .errors import ConfigError, NotHermitian, UnsupportedModel
from .matrixcore import expm_antihermitian_generator, hermiticity_defect
from .schemas import ModelKind, ModelSpec

logger = logging.getLogger(__name__)

I2 = np.eye(2, dtype=complex)
ZERO2 = np.zeros((2, 2), dtype=complex)
SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
SIGMA1, SIGMA2, SIGMA3 = SIGMA


def _offdiag(upper: np.ndarray) -> np.ndarray:
    return np.block([[ZERO2, upper], [upper.conj().T, ZERO2]])


TAU = (
    _offdiag(1j * SIGMA2),
    _offdiag(-1j * SIGMA1),
    _offdiag(I2),
    _offdiag(-1j * SIGMA3),
    np.block([[I2, ZERO2], [ZERO2, -I2]]),
)
TAU5 = TAU[4]

COORDINATES: Dict[ModelKind, Tuple[str, ...]] = {
    ModelKind.KICKED_SPIN_HALF: ("lambda", "gamma", "xi"),
    ModelKind.KICKED_SPIN_THREE_HALF: ("lambda", "gamma", "eta", "xi", "zeta"),
}


@dataclass(frozen=True)
class ParameterPoint:
    """
    A point on the parameter manifold.

    Angles are stored unwrapped; formulas reduce them only where needed.
    ``sphere`` holds (gamma, xi) on S^2 or (gamma, eta, xi, zeta) on S^4.
    ``generic`` is an optional plain vector for custom models.
    """
    lam: float = 0.0
    sphere: Tuple[float, ...] = ()
    generic: Optional[Tuple[float, ...]] = field(default=None)

    @classmethod
    def spin_half(cls, lam: float, gamma: float, xi: float) -> "ParameterPoint":
        return cls(lam=float(lam), sphere=(float(gamma), float(xi)))

    @classmethod
    def spin_three_half(cls, lam: float, gamma: float, eta: float, xi: float,
                        zeta: float) -> "ParameterPoint":
        return cls(lam=float(lam), sphere=(float(gamma), float(eta), float(xi), float(zeta)))

    def as_vector(self) -> np.ndarray:
        if self.generic is not None:
            return np.array(self.generic, dtype=float)
        return np.array((self.lam,) + tuple(self.sphere), dtype=float)

    def with_vector(self, vector) -> "ParameterPoint":
        vector = tuple(float(x) for x in vector)
        if self.generic is not None:
            return replace(self, generic=vector)
        return replace(self, lam=vector[0], sphere=vector[1:])

    def coordinate(self, name: str, kind: ModelKind) -> float:
        names = coordinate_names(kind)
        return float(self.as_vector()[names.index(name)])


def coordinate_names(kind: ModelKind) -> Tuple[str, ...]:
    return COORDINATES.get(kind, ("lambda", "gamma", "xi"))


def unit_vector_s2(gamma: float, xi: float) -> np.ndarray:
    return np.array([np.sin(gamma) * np.cos(xi), np.sin(gamma) * np.sin(xi), np.cos(gamma)])


def unit_vector_s4(gamma: float, eta: float, xi: float, zeta: float) -> np.ndarray:
    return np.array([
        np.sin(gamma) * np.cos(eta) * np.cos(xi),
        np.sin(gamma) * np.cos(eta) * np.sin(xi),
        np.sin(gamma) * np.sin(eta) * np.cos(zeta),
        np.sin(gamma) * np.sin(eta) * np.sin(zeta),
        np.cos(gamma),
    ])


def build_V_spin_half(p: int, gamma: float, xi: float) -> np.ndarray:
    """Kick operator p/2 + (2-p)/2 b.sigma; spectrum {1, p-1}."""
    b = unit_vector_s2(gamma, xi)
    generator = sum(bi * s for bi, s in zip(b, SIGMA))
    return 0.5 * p * I2 + 0.5 * (2 - p) * generator


def build_V_spin_threehalf(p: int, gamma: float, eta: float, xi: float,
                           zeta: float) -> np.ndarray:
    """Kick operator p/2 + (2-p)/2 b.tau; each eigenvalue doubly degenerate."""
    b = unit_vector_s4(gamma, eta, xi, zeta)
    generator = sum(bi * t for bi, t in zip(b, TAU))
    return 0.5 * p * np.eye(4, dtype=complex) + 0.5 * (2 - p) * generator


def kick_operator(spec: ModelSpec, point: ParameterPoint) -> np.ndarray:
    if spec.kind == ModelKind.KICKED_SPIN_HALF:
        gamma, xi = point.sphere
        return build_V_spin_half(spec.p, gamma, xi)
    if spec.kind == ModelKind.KICKED_SPIN_THREE_HALF:
        gamma, eta, xi, zeta = point.sphere
        return build_V_spin_threehalf(spec.p, gamma, eta, xi, zeta)
    raise UnsupportedModel(f"model '{spec.kind.value}' has no kick operator", model=spec.kind.value)


def drift_generator(spec: ModelSpec) -> np.ndarray:
    if spec.kind == ModelKind.KICKED_SPIN_HALF:
        return SIGMA3
    if spec.kind == ModelKind.KICKED_SPIN_THREE_HALF:
        return TAU5
    raise UnsupportedModel(f"model '{spec.kind.value}' has no drift term", model=spec.kind.value)


def floquet_operator(spec: ModelSpec, point: ParameterPoint) -> np.ndarray:
    """
    One-period evolution exp(-iT/2 D) exp(-i lambda V) exp(-iT/2 D).

    D is sigma_3 (spin 1/2) or tau_5 (spin 3/2); both are diagonal, so the
    half-period drift is applied entrywise.

    Raises:
        UnsupportedModel: for custom static models
    """
    kick = expm_antihermitian_generator(kick_operator(spec, point), point.lam)
    half_drift = np.exp(-0.5j * spec.T * np.diag(drift_generator(spec)).real)
    return half_drift[:, None] * kick * half_drift[None, :]


def static_hamiltonian(spec: ModelSpec, point: ParameterPoint) -> np.ndarray:
    """
    H(alpha) from the caller-supplied function of a custom static model.

    Raises:
        UnsupportedModel: for kicked models
        NotHermitian: if the supplied function raises or returns anything but
            a Hermitian matrix of the declared dimension
    """
    if spec.kind != ModelKind.CUSTOM_STATIC:
        raise UnsupportedModel("static_hamiltonian needs a custom_static model",
                               model=spec.kind.value)
    try:
        h = np.asarray(spec.hamiltonian(point), dtype=complex)
    except Exception as e:
        raise NotHermitian(f"hamiltonian '{spec.name}' failed at {point}: {e}",
                           cause=type(e).__name__)
    if h.shape != (spec.dimension, spec.dimension):
        raise NotHermitian(f"hamiltonian returned shape {h.shape}, expected "
                           f"({spec.dimension}, {spec.dimension})")
    defect = hermiticity_defect(h)
    if defect > settings.HERMITIAN_TOL:
        raise NotHermitian(f"hamiltonian is not Hermitian at {point} (defect {defect:.3e})",
                           defect=defect)
    return h


def periodicity_defect(V: np.ndarray) -> float:
    """max |exp(i 2 pi V) - I|, zero for admissible kicks."""
    u = expm_antihermitian_generator(V, -2 * np.pi)
    return float(np.max(np.abs(u - np.eye(V.shape[0]))))


# Permutation that pairs components {1,3} and {2,4} of the spin-3/2 space
SPLIT_ORDER = (0, 2, 1, 3)


def split_three_half(u: np.ndarray) -> np.ndarray:
    """Reorder a 4x4 operator so the eta = pi/2 model is block diagonal."""
    order = list(SPLIT_ORDER)
    return np.asarray(u)[np.ix_(order, order)]


# Custom static Hamiltonians
def zeeman_hamiltonian(point: ParameterPoint) -> np.ndarray:
    """Spin 1/2 in a unit field along (gamma, xi)."""
    gamma, xi = point.sphere[:2]
    b = unit_vector_s2(gamma, xi)
    return sum(bi * s for bi, s in zip(b, SIGMA))


CUSTOM_HAMILTONIANS: Dict[str, Tuple[Callable[[ParameterPoint], np.ndarray], int]] = {
    "zeeman": (zeeman_hamiltonian, 2),
}


def resolve_custom_hamiltonian(name: str, dim: Optional[int] = None
                               ) -> Tuple[Callable[[ParameterPoint], np.ndarray], int]:
    """
    Look up a registered Hamiltonian or import ``module:function``.

    Raises:
        ConfigError: if the name cannot be resolved or no dim is known
    """
    if name in CUSTOM_HAMILTONIANS:
        func, default_dim = CUSTOM_HAMILTONIANS[name]
        return func, dim or default_dim

    module_name, sep, attr = name.partition(":")
    if not sep:
        raise ConfigError(f"unknown custom hamiltonian '{name}'", custom_hamiltonian=name)
    try:
        func = getattr(importlib.import_module(module_name), attr)
    except (ImportError, AttributeError) as e:
        raise ConfigError(f"cannot import custom hamiltonian '{name}': {e}",
                          custom_hamiltonian=name)
    if dim is None:
        raise ConfigError(f"custom hamiltonian '{name}' needs 'dim'", custom_hamiltonian=name)
    return func, dim
