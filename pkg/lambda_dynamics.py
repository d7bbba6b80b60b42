import math
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Tuple

import numpy as np

from helpers import IntegrationError, PhysicalityError, ValidationError, require

if TYPE_CHECKING:
    from anisotropy import GreenSample

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299792458.0  # m/s

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
NUMERIC_TOL = 1e-8
TRACE_DRIFT_LIMIT = 1e-6

# basis (|0> excited, |1>, |2> ground); rates in units of gamma0, times in 1/gamma0
TRAJECTORY_HEADER = ["t", "rho00", "rho11", "rho22", "re_rho12", "im_rho12"]


@dataclass(frozen=True)
class DensityMatrix3:
    entries: np.ndarray
    tolerance: float = field(default=TRACE_TOL, repr=False, compare=False)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.shape != (3, 3):
            raise ValidationError(f"density matrix must be 3x3, got shape {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, 'entries', entries)

        hermitian_tol = HERMITIAN_TOL if self.tolerance <= TRACE_TOL else self.tolerance
        if np.max(np.abs(entries - entries.conj().T)) > hermitian_tol:
            raise ValidationError("density matrix is not Hermitian")
        if abs(np.trace(entries).real - 1.0) > self.tolerance:
            raise ValidationError(f"density matrix trace {np.trace(entries).real!r} differs from 1")
        if np.min(self.eigenvalues()) < -self.tolerance:
            raise ValidationError("density matrix is not positive semidefinite")

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    @property
    def rho00(self) -> float:
        return float(self.entries[0, 0].real)

    @property
    def rho11(self) -> float:
        return float(self.entries[1, 1].real)

    @property
    def rho22(self) -> float:
        return float(self.entries[2, 2].real)

    @property
    def rho12(self) -> complex:
        return complex(self.entries[1, 2])

    @property
    def rho10(self) -> complex:
        return complex(self.entries[1, 0])

    @property
    def rho20(self) -> complex:
        return complex(self.entries[2, 0])

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def purity(self) -> float:
        return purity(self)

    def ground_block(self) -> np.ndarray:
        return ground_block(self)


@dataclass(frozen=True)
class DecayCoefficients:
    gamma1: float
    gamma2: float
    kappa12: complex
    omega0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'gamma1', require('rate', self.gamma1))
        object.__setattr__(self, 'gamma2', require('rate', self.gamma2))
        object.__setattr__(self, 'kappa12', complex(self.kappa12))
        object.__setattr__(self, 'omega0', float(self.omega0))
        self.validate()

    @property
    def total(self) -> float:
        return self.gamma1 + self.gamma2

    def validate(self):
        """Raise PhysicalityError unless the coefficients come from a passive environment"""
        if self.total <= 0:
            raise ValidationError("gamma1 + gamma2 must be > 0")
        bound = math.sqrt(self.gamma1 * self.gamma2)
        if abs(self.kappa12) > bound * (1.0 + 1e-12) + 1e-15:
            raise PhysicalityError(
                f"|kappa12| = {abs(self.kappa12)!r} exceeds sqrt(gamma1*gamma2) = {bound!r}"
            )


@dataclass(frozen=True)
class DressedState:
    """Joint atom-photon state over {|1>|X>, |1>|Y>, |2>|X>, |2>|Y>}"""
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex).reshape(4)
        amplitudes.setflags(write=False)
        object.__setattr__(self, 'amplitudes', amplitudes)
        norm = float(np.sum(np.abs(amplitudes) ** 2))
        if abs(norm - 1.0) > 1e-12:
            raise ValidationError(f"dressed state is not normalized (norm {norm!r})")

    def as_matrix(self) -> np.ndarray:
        """Amplitude matrix a[atom, photon]"""
        return self.amplitudes.reshape(2, 2)


def steady_state(coeffs: DecayCoefficients) -> DensityMatrix3:
    """Long-time state reached from the excited state: populations gamma_i/(g1+g2), coherence kappa12/(g1+g2)"""
    coeffs.validate()
    total = coeffs.total
    entries = np.zeros((3, 3), dtype=complex)
    entries[1, 1] = coeffs.gamma1 / total
    entries[2, 2] = coeffs.gamma2 / total
    entries[1, 2] = coeffs.kappa12 / total
    entries[2, 1] = np.conj(entries[1, 2])
    return DensityMatrix3(entries)


def evolve_analytic(coeffs: DecayCoefficients, t: float) -> DensityMatrix3:
    """Closed-form solution for an emitter prepared in |0> at t = 0"""
    t = require('time', t)
    coeffs.validate()
    total = coeffs.total
    excited = math.exp(-total * t)
    grown = -math.expm1(-total * t)

    entries = np.zeros((3, 3), dtype=complex)
    entries[0, 0] = excited
    entries[1, 1] = coeffs.gamma1 / total * grown
    entries[2, 2] = coeffs.gamma2 / total * grown
    entries[1, 2] = coeffs.kappa12 / total * grown
    entries[2, 1] = np.conj(entries[1, 2])
    return DensityMatrix3(entries)


def _derivative(coeffs: DecayCoefficients, y: np.ndarray) -> np.ndarray:
    # y = [rho00, rho11, rho22, rho10, rho20, rho12]
    total = coeffs.total
    rho00 = y[0]
    decay_i0 = -(total / 2.0 - 1j * coeffs.omega0)
    return np.array([
        -total * rho00,
        coeffs.gamma1 * rho00,
        coeffs.gamma2 * rho00,
        decay_i0 * y[3],
        decay_i0 * y[4],
        coeffs.kappa12 * rho00,
    ], dtype=complex)


def _rk4_step(coeffs: DecayCoefficients, y: np.ndarray, h: float) -> np.ndarray:
    k1 = _derivative(coeffs, y)
    k2 = _derivative(coeffs, y + 0.5 * h * k1)
    k3 = _derivative(coeffs, y + 0.5 * h * k2)
    k4 = _derivative(coeffs, y + h * k3)
    return y + h * (k1 + 2.0 * (k2 + k3) + k4) / 6.0


def _state_to_matrix(y: np.ndarray) -> np.ndarray:
    entries = np.zeros((3, 3), dtype=complex)
    entries[0, 0] = y[0].real
    entries[1, 1] = y[1].real
    entries[2, 2] = y[2].real
    entries[1, 0] = y[3]
    entries[0, 1] = np.conj(y[3])
    entries[2, 0] = y[4]
    entries[0, 2] = np.conj(y[4])
    entries[1, 2] = y[5]
    entries[2, 1] = np.conj(y[5])
    return entries


def evolve_numeric(coeffs: DecayCoefficients, t_end: float, dt: float,
                   record_every: int = 1) -> List[Tuple[float, DensityMatrix3]]:
    """Fixed-step classical RK4 integration of the populations and coherences"""
    t_end = require('time', t_end)
    dt = require('step', dt)
    if record_every < 1:
        raise ValidationError("record_every must be >= 1")
    coeffs.validate()

    y = np.zeros(6, dtype=complex)
    y[0] = 1.0
    trajectory = [(0.0, DensityMatrix3(_state_to_matrix(y), tolerance=NUMERIC_TOL))]
    if t_end == 0.0:
        return trajectory

    # uniform step no larger than dt that lands exactly on t_end
    steps = max(1, int(math.ceil(t_end / dt - 1e-9)))
    h = t_end / steps
    logger.debug(f"RK4: {steps} steps of {h!r} up to t={t_end!r}")

    for step in range(1, steps + 1):
        y = _rk4_step(coeffs, y, h)
        populations = y[:3].real
        drift = abs(float(np.sum(populations)) - 1.0)
        if drift > TRACE_DRIFT_LIMIT or np.any(populations < -TRACE_DRIFT_LIMIT) \
                or np.any(populations > 1.0 + TRACE_DRIFT_LIMIT):
            raise IntegrationError(
                f"RK4 left the physical domain at t={step * h!r} (trace drift {drift!r}); "
                f"step {h!r} is too large for gamma1+gamma2={coeffs.total!r}"
            )
        if step % record_every == 0 or step == steps:
            t = t_end if step == steps else step * h
            try:
                snapshot = DensityMatrix3(_state_to_matrix(y), tolerance=NUMERIC_TOL)
            except ValidationError as e:
                raise IntegrationError(f"unphysical state at t={t!r}: {e}") from e
            trajectory.append((t, snapshot))

    return trajectory


def trajectory_rows(trajectory: List[Tuple[float, DensityMatrix3]]) -> List[List[float]]:
    """Rows matching TRAJECTORY_HEADER"""
    rows = []
    for t, rho in trajectory:
        rows.append([float(t), rho.rho00, rho.rho11, rho.rho22, rho.rho12.real, rho.rho12.imag])
    return rows


def max_deviation(trajectory: List[Tuple[float, DensityMatrix3]], coeffs: DecayCoefficients) -> float:
    """Max-norm distance between a numeric trajectory and the closed form at matched times"""
    worst = 0.0
    for t, rho in trajectory:
        exact = evolve_analytic(coeffs, t)
        worst = max(worst, float(np.max(np.abs(rho.entries - exact.entries))))
    return worst


def purity(rho: DensityMatrix3) -> float:
    """Tr(rho^2)"""
    return float(np.real(np.trace(rho.entries @ rho.entries)))


def ground_block(rho: DensityMatrix3) -> np.ndarray:
    """2x2 block over the ground states {|1>, |2>}"""
    return np.array(rho.entries[1:, 1:])


def coherence_time_to_fraction(coeffs: DecayCoefficients, fraction: float) -> float:
    """Time at which |rho12(t)| reaches the given fraction of its steady-state value"""
    if not 0.0 < fraction < 1.0:
        raise ValidationError(f"fraction must lie in (0, 1), got {fraction}")
    coeffs.validate()
    return -math.log1p(-fraction) / coeffs.total


def photonic_coherence_length(gamma0: float, c: float = SPEED_OF_LIGHT) -> float:
    """d_cl = c / (2 gamma0), the largest emitter-mirror distance without retardation"""
    gamma0 = require('positive_rate', gamma0)
    c = require('length', c)
    return c / (2.0 * gamma0)


def retardation_free(d: float, gamma0: float, c: float = SPEED_OF_LIGHT) -> bool:
    return require('length', d) < photonic_coherence_length(gamma0, c)


def dressed_state(green: "GreenSample", d01: float, d02: float) -> DressedState:
    """Atom-photon state after the emission, in the linear photon basis {|X>, |Y>}"""
    from anisotropy import Basis, to_cartesian

    d01 = require('length', d01)
    d02 = require('length', d02)
    if green.basis is Basis.CIRCULAR:
        green = to_cartesian(green)
    if green.im_gxy != 0.0:
        raise ValidationError("dressed_state requires Im Gxy = 0")
    gxx, gyy = green.im_gxx, green.im_gyy
    if gxx < 0 or gyy < 0:
        raise PhysicalityError("Im Gxx and Im Gyy must be >= 0")
    if gxx + gyy <= 0:
        raise ValidationError("Green sample is identically zero")

    norm = 1.0 / math.sqrt((d01 ** 2 + d02 ** 2) * (gxx + gyy))
    sx, sy = math.sqrt(gxx), math.sqrt(gyy)
    amplitudes = norm * np.array([
        d01 * sx,
        1j * d01 * sy,
        d02 * sx,
        -1j * d02 * sy,
    ], dtype=complex)
    # remove rounding from the normalisation
    amplitudes = amplitudes / np.linalg.norm(amplitudes)
    return DressedState(amplitudes)


def reduced_atomic_state(state: DressedState) -> np.ndarray:
    """Partial trace over the photon: 2x2 matrix over {|1>, |2>}"""
    a = state.as_matrix()
    return a @ a.conj().T


def dressed_state_circular(state: DressedState) -> np.ndarray:
    """Amplitudes a[atom, photon] re-expressed in the photon basis {|sigma+>, |sigma->}"""
    # |X> = (|+> + |->)/sqrt2, |Y> = (|+> - |->)/(sqrt2 i)
    change = np.array([[1.0, 1.0], [-1j, 1j]], dtype=complex) / math.sqrt(2.0)
    return state.as_matrix() @ change


def complementarity(state: DressedState) -> Tuple[float, float, float]:
    """Predictability, visibility and concurrence of the emitted state; P^2 + V^2 + C^2 = 1"""
    reduced = reduced_atomic_state(state)
    a = state.as_matrix()
    predictability = float(abs(reduced[0, 0].real - reduced[1, 1].real))
    visibility = float(2.0 * abs(reduced[0, 1]))
    concurrence = float(2.0 * abs(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]))
    return predictability, visibility, concurrence
