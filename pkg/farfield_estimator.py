import math
import logging
from dataclasses import asdict, dataclass, replace
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from helpers import ValidationError, require

logger = logging.getLogger(__name__)

# y-polarized emission keeps its free-space rate
DEFAULT_NODES_THETA = 256
DEFAULT_NODES_PHI = 256

TABLE2_BREAKPOINTS = (
    (0.0, 0.60),
    (17.6, 0.55),
    (24.6, 0.50),
    (29.4, 0.30),
    (33.3, 0.30),
)

SWEEP_HEADER = ["na", "gamma_x_over_gamma0", "gamma_x_ideal", "coherence_signed", "coherence_abs",
                "coherence_ideal_abs"]


class Interpolation(Enum):
    CONSTANT = "constant"
    LINEAR = "linear"


class Taper(Enum):
    LINEAR = "linear"  # last tabulated value falls linearly to 0 at 90 degrees
    HOLD = "hold"      # last tabulated value is held up to the cutoff


@dataclass(frozen=True)
class ReflectanceProfile:
    """Power reflectance Rx(theta) of the order sent back to the emitter"""
    breakpoints: Tuple[Tuple[float, float], ...]
    interpolation: Interpolation = Interpolation.CONSTANT
    taper: Taper = Taper.LINEAR
    cutoff_na: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'interpolation', Interpolation(self.interpolation))
        object.__setattr__(self, 'taper', Taper(self.taper))
        if not self.breakpoints:
            raise ValidationError("reflectance profile needs at least one breakpoint")

        points = tuple((float(theta), require('reflectance', rx)) for theta, rx in self.breakpoints)
        thetas = [theta for theta, _ in points]
        if thetas[0] < 0.0 or thetas[-1] > 90.0:
            raise ValidationError(f"breakpoint angles must lie in [0, 90] degrees, got {thetas}")
        if any(b <= a for a, b in zip(thetas, thetas[1:])):
            raise ValidationError(f"breakpoint angles must be strictly increasing, got {thetas}")
        object.__setattr__(self, 'breakpoints', points)

        na = require('na', self.cutoff_na)
        if na <= 0.0:
            raise ValidationError("cutoff NA must be > 0")
        object.__setattr__(self, 'cutoff_na', na)

    @property
    def cutoff_deg(self) -> float:
        return math.degrees(math.asin(self.cutoff_na))

    def thetas(self) -> np.ndarray:
        return np.array([theta for theta, _ in self.breakpoints])

    def values(self) -> np.ndarray:
        return np.array([rx for _, rx in self.breakpoints])

    def reflectance(self, theta_deg):
        """Rx at polar angle(s) theta in degrees"""
        theta = np.asarray(theta_deg, dtype=float)
        thetas, values = self.thetas(), self.values()
        last_theta, last_value = thetas[-1], values[-1]

        if self.interpolation is Interpolation.CONSTANT:
            idx = np.clip(np.searchsorted(thetas, theta, side='right') - 1, 0, len(values) - 1)
            rx = values[idx]
        else:
            rx = np.interp(theta, thetas, values)

        beyond = theta > last_theta
        if self.taper is Taper.LINEAR and last_theta < 90.0:
            tail = last_value * (90.0 - theta) / (90.0 - last_theta)
        else:
            tail = np.full_like(theta, last_value)
        rx = np.where(beyond, tail, rx)
        rx = np.where(theta > self.cutoff_deg, 0.0, rx)
        rx = np.clip(rx, 0.0, 1.0)
        return float(rx) if np.ndim(rx) == 0 else rx

    def kinks_deg(self) -> List[float]:
        """Angles where Rx may be discontinuous or non-smooth"""
        kinks = list(self.thetas()) + [self.cutoff_deg]
        return [k for k in kinks if 0.0 < k < 90.0]

    def to_dict(self) -> Dict:
        return {
            'breakpoints': [list(p) for p in self.breakpoints],
            'interpolation': self.interpolation.value,
            'taper': self.taper.value,
            'cutoff_na': self.cutoff_na,
        }


@dataclass(frozen=True)
class EstimateResult:
    na: float
    gamma_x_ratio: float
    gamma_y_ratio: float
    coherence: float

    @property
    def coherence_abs(self) -> float:
        return abs(self.coherence)

    def to_dict(self) -> Dict:
        result = asdict(self)
        result['coherence_abs'] = self.coherence_abs
        return result


def table2_profile(taper=Taper.LINEAR, cutoff_na: float = 1.0) -> ReflectanceProfile:
    """Measured supercell reflectances, constant over each annulus"""
    return ReflectanceProfile(TABLE2_BREAKPOINTS, Interpolation.CONSTANT, Taper(taper), cutoff_na)


def ideal_profile(na: float) -> ReflectanceProfile:
    """Perfect mirror out to the numerical aperture"""
    return ReflectanceProfile(((0.0, 1.0),), Interpolation.CONSTANT, Taper.HOLD, na)


def truncate(profile: ReflectanceProfile, na: float) -> ReflectanceProfile:
    """Same profile with Rx = 0 beyond sin(theta) = na"""
    return replace(profile, cutoff_na=na)


def _segments(profile: ReflectanceProfile) -> np.ndarray:
    """cos(theta) edges of the smooth pieces, ascending in [0, 1]"""
    edges = {0.0, 1.0}
    for kink in profile.kinks_deg():
        edges.add(math.cos(math.radians(kink)))
    return np.array(sorted(edges))


def gamma_x_ratio(profile: ReflectanceProfile, nodes_theta: int = DEFAULT_NODES_THETA,
                  nodes_phi: int = DEFAULT_NODES_PHI) -> float:
    """gamma_x / gamma0 by Gauss-Legendre in cos(theta) per smooth piece times a periodic trapezoid in phi"""
    nodes_theta = int(require('node_count', nodes_theta))
    nodes_phi = int(require('node_count', nodes_phi))

    x, w = np.polynomial.legendre.leggauss(nodes_theta)
    phi = np.arange(nodes_phi) * (2.0 * math.pi / nodes_phi)
    cos2_phi = np.cos(phi) ** 2
    phi_weight = 2.0 * math.pi / nodes_phi

    edges = _segments(profile)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo <= 0.0:
            continue
        u = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        weights = 0.5 * (hi - lo) * w
        sin2 = 1.0 - u * u
        theta_deg = np.degrees(np.arccos(u))
        transmitted = 1.0 - profile.reflectance(theta_deg)
        angular = 1.0 - np.outer(sin2, cos2_phi)
        total += float(np.sum(weights[:, None] * transmitted[:, None] * angular)) * phi_weight

    result = 3.0 * total / (4.0 * math.pi)
    logger.debug(f"gamma_x ratio {result:.12g} from {len(edges) - 1} segments, "
                 f"{nodes_theta}x{nodes_phi} nodes each")
    return result


def gamma_x_ratio_ideal(na: float) -> float:
    """sqrt(1 - NA^2) (1 - NA^2 / 4)"""
    na = require('na', na)
    return math.sqrt(1.0 - na * na) * (1.0 - na * na / 4.0)


def coherence_from_rates(gamma_x: float, gamma_y: float) -> float:
    """rho12 = (gamma_x - gamma_y) / (2 (gamma_x + gamma_y))"""
    gamma_x = require('rate', gamma_x)
    gamma_y = require('rate', gamma_y)
    if gamma_x + gamma_y <= 0.0:
        raise ValidationError("gamma_x and gamma_y cannot both be zero")
    return 0.5 * (gamma_x - gamma_y) / (gamma_x + gamma_y)


def estimate(profile: ReflectanceProfile, nodes_theta: int = DEFAULT_NODES_THETA,
             nodes_phi: int = DEFAULT_NODES_PHI) -> EstimateResult:
    gamma_x = gamma_x_ratio(profile, nodes_theta, nodes_phi)
    # tiny negative values are quadrature noise around a perfect mirror
    gamma_x = min(max(gamma_x, 0.0), 1.0)
    return EstimateResult(profile.cutoff_na, gamma_x, 1.0, coherence_from_rates(gamma_x, 1.0))


def na_sweep(profile: ReflectanceProfile, na_values: Iterable[float],
             nodes_theta: int = DEFAULT_NODES_THETA, nodes_phi: int = DEFAULT_NODES_PHI) -> List[EstimateResult]:
    results = []
    for na in na_values:
        na = require('na', na)
        if na <= 0.0:
            raise ValidationError("sweep NA values must be > 0")
        results.append(estimate(truncate(profile, na), nodes_theta, nodes_phi))
    logger.info(f"NA sweep over {len(results)} apertures")
    return results


def na_grid(start: float = 0.05, stop: float = 1.0, step: float = 0.05) -> List[float]:
    """Evenly spaced apertures, endpoints included, rounded to avoid accumulated drift"""
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def sweep_rows(results: Sequence[EstimateResult]) -> List[List[float]]:
    """Rows matching SWEEP_HEADER"""
    rows = []
    for result in results:
        ideal = gamma_x_ratio_ideal(result.na)
        rows.append([
            result.na,
            result.gamma_x_ratio,
            ideal,
            result.coherence,
            result.coherence_abs,
            abs(coherence_from_rates(ideal, 1.0)),
        ])
    return rows


def load_reflectance_profile(rows: Sequence[Dict[str, str]], interpolation=Interpolation.CONSTANT,
                             taper=Taper.LINEAR, cutoff_na: float = 1.0,
                             source: Optional[str] = None) -> ReflectanceProfile:
    """Profile from CSV records carrying `theta_deg` and `rx` columns"""
    try:
        points = sorted((float(row['theta_deg']), float(row['rx'])) for row in rows)
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"malformed reflectance table {source or '<rows>'}: {e}") from e
    return ReflectanceProfile(tuple(points), Interpolation(interpolation), Taper(taper), cutoff_na)
