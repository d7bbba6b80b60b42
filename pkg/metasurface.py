import math
import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from helpers import ValidationError, require

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# lengths in nm, phases in rad; emitter at (0, 0, d) above the plane z = 0

DEFAULT_LAMBDA0_NM = 852.0
DEFAULT_D_OVER_LAMBDA0 = 10.0
DEFAULT_THETA_MAX_DEG = 70.0

RESONANT_UNIT_CELL_NM = (300.0, 150.0)
GEOMETRIC_UNIT_CELL_NM = (300.0, 300.0)
GEOMETRIC_ROD_NM = (200.0, 80.0)

# phases closer than this count as a tie in nearest-palette selection
PHASE_TIE_TOL = 1e-9

LAYOUT_CSV_HEADER = ["x_nm", "y_nm", "lx_nm", "ly_nm", "rotation_deg", "phase_rad"]


class DesignKind(Enum):
    RESONANT = "resonant"
    GEOMETRIC = "geometric"


class CountRule(Enum):
    PARAXIAL = "paraxial"
    EXACT = "exact"


@dataclass(frozen=True)
class PaletteEntry:
    index: int
    lx: float
    ly: float
    phase: float

    def __post_init__(self):
        require('length', self.lx)
        require('length', self.ly)
        if not 0.0 <= self.phase < TWO_PI:
            raise ValidationError(f"palette phase must lie in [0, 2pi), got {self.phase}")


def default_palette() -> List[PaletteEntry]:
    """Five rods sampling 0 ... 8pi/5 in steps of 2pi/5"""
    lengths = [30.0, 105.0, 125.0, 145.0, 250.0]
    return [PaletteEntry(i + 1, lx, 100.0, TWO_PI * i / 5.0) for i, lx in enumerate(lengths)]


def load_palette(rows: Sequence[Dict[str, str]]) -> List[PaletteEntry]:
    """Palette from CSV records `index,lx_nm,ly_nm,phase_rad`"""
    try:
        palette = [
            PaletteEntry(int(row['index']), float(row['lx_nm']), float(row['ly_nm']), float(row['phase_rad']))
            for row in rows
        ]
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ValidationError):
            raise
        raise ValidationError(f"malformed palette record: {e}") from e
    if not palette:
        raise ValidationError("palette is empty")
    if len({entry.index for entry in palette}) != len(palette):
        raise ValidationError("palette indices must be unique")
    return sorted(palette, key=lambda entry: entry.index)


@dataclass(frozen=True)
class DesignSpec:
    lambda0: float
    d: float
    unit_cell: Tuple[float, float]
    design_kind: DesignKind
    aperture_radius: float
    count_rule: CountRule = CountRule.PARAXIAL

    def __post_init__(self):
        object.__setattr__(self, 'design_kind', DesignKind(self.design_kind))
        object.__setattr__(self, 'count_rule', CountRule(self.count_rule))
        require('length', self.lambda0)
        require('length', self.d)
        if len(self.unit_cell) != 2:
            raise ValidationError("unit_cell must be (pitch_x, pitch_y)")
        object.__setattr__(self, 'unit_cell', (require('length', self.unit_cell[0]),
                                               require('length', self.unit_cell[1])))
        require('length', self.aperture_radius)
        if self.aperture_radius < max(self.unit_cell):
            raise ValidationError(
                f"aperture radius {self.aperture_radius} nm is smaller than one unit cell {self.unit_cell}"
            )

    @classmethod
    def reference_design(cls, design_kind=DesignKind.RESONANT, lambda0: float = DEFAULT_LAMBDA0_NM,
                      d_over_lambda0: float = DEFAULT_D_OVER_LAMBDA0,
                      aperture_radius: Optional[float] = None,
                      unit_cell: Optional[Tuple[float, float]] = None,
                      theta_max_deg: float = DEFAULT_THETA_MAX_DEG,
                      count_rule=CountRule.PARAXIAL) -> "DesignSpec":
        design_kind = DesignKind(design_kind)
        d = d_over_lambda0 * lambda0
        if unit_cell is None:
            unit_cell = RESONANT_UNIT_CELL_NM if design_kind is DesignKind.RESONANT else GEOMETRIC_UNIT_CELL_NM
        if aperture_radius is None:
            aperture_radius = d * math.tan(math.radians(theta_max_deg))
        return cls(lambda0, d, tuple(unit_cell), design_kind, aperture_radius, count_rule)

    @property
    def k0(self) -> float:
        return TWO_PI / self.lambda0

    @property
    def pitch(self) -> float:
        """Unit-cell pitch along the phase-varying direction"""
        return self.unit_cell[0]

    def to_dict(self) -> Dict:
        result = asdict(self)
        result['design_kind'] = self.design_kind.value
        result['count_rule'] = self.count_rule.value
        result['unit_cell'] = list(self.unit_cell)
        return result


@dataclass(frozen=True)
class AntennaElement:
    center: Tuple[float, float]
    encoded_phase: float
    lx: float
    ly: float
    rotation: float = 0.0
    palette_index: Optional[int] = None

    def to_dict(self) -> Dict:
        result = asdict(self)
        result['center'] = list(self.center)
        return result


@dataclass(frozen=True)
class SupercellRecord:
    index: int
    r_start: float
    r_end: float
    length_exact: float
    n_unit_cells: int
    theta_inner: float
    length_snapped: float
    truncated: bool = False

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class MetasurfaceLayout:
    spec: DesignSpec
    elements: List[AntennaElement] = field(default_factory=list)
    supercells: List[SupercellRecord] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            'spec': self.spec.to_dict(),
            'elements': [e.to_dict() for e in self.elements],
            'supercells': [s.to_dict() for s in self.supercells],
        }


def wrap_phase(phase):
    """Reduce to [0, 2pi)"""
    result = np.mod(np.asarray(phase, dtype=float), TWO_PI)
    # mod of a tiny negative number rounds up to 2pi itself
    result = np.where(result >= TWO_PI, 0.0, result)
    return float(result) if np.ndim(result) == 0 else result


def circular_distance(a, b):
    """Shortest distance between two phases on the circle"""
    diff = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), TWO_PI)
    result = np.minimum(diff, TWO_PI - diff)
    return float(result) if np.ndim(result) == 0 else result


def radial_distance(points) -> np.ndarray:
    """Distance of (x, y) points from the foot of the emitter"""
    points = np.asarray(points, dtype=float)
    return np.hypot(points[..., 0], points[..., 1])


def _path_in_wavelengths(spec: DesignSpec, radius) -> np.ndarray:
    return np.hypot(np.asarray(radius, dtype=float), spec.d) / spec.lambda0


def unwrapped_phase(spec: DesignSpec, radius):
    """pi - 2 k0 |r - r0| without wrapping"""
    result = math.pi - 2.0 * TWO_PI * _path_in_wavelengths(spec, radius)
    return float(result) if np.ndim(result) == 0 else result


def phase_profile(spec: DesignSpec, radius):
    """(pi - 2 k0 sqrt(r^2 + d^2)) mod 2pi at radial distance r from the foot of the emitter"""
    # reduce whole round-trip wavelengths first so that 2 k0 d = 2pi n stays exact
    cycles = np.mod(2.0 * _path_in_wavelengths(spec, radius), 1.0)
    return wrap_phase(math.pi - TWO_PI * cycles)


def local_phase_gradient(spec: DesignSpec, radius: float) -> float:
    """d(phase)/dr = -2 k0 r / sqrt(r^2 + d^2) in radians per nm"""
    return -2.0 * spec.k0 * radius / math.hypot(radius, spec.d)


def boundary_radius(spec: DesignSpec, n: int) -> float:
    """Radius where the unwrapped phase has advanced by 2 pi n"""
    lam, d = spec.lambda0, spec.d
    return math.sqrt(n * lam * d + n * n * lam * lam / 4.0)


def _paraxial_radius(spec: DesignSpec, n: int) -> float:
    return math.sqrt(n * spec.lambda0 * spec.d)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _count_cells(spec: DesignSpec, n: int, length: float, truncated: bool) -> int:
    if spec.count_rule is CountRule.PARAXIAL and not truncated:
        length = _paraxial_radius(spec, n) - _paraxial_radius(spec, n - 1)
    return max(1, _round_half_up(length / spec.pitch))


def supercell_boundaries(spec: DesignSpec, max_records: Optional[int] = None) -> List[SupercellRecord]:
    """Supercells tiling [0, aperture) at the exact 2pi-wrap radii"""
    records = []
    r_start = 0.0
    n = 1
    while r_start < spec.aperture_radius:
        r_end = boundary_radius(spec, n)
        truncated = r_end > spec.aperture_radius
        if truncated:
            r_end = spec.aperture_radius
        length = r_end - r_start
        count = _count_cells(spec, n, length, truncated)
        records.append(SupercellRecord(
            index=n,
            r_start=r_start,
            r_end=r_end,
            length_exact=length,
            n_unit_cells=count,
            theta_inner=math.degrees(math.atan2(r_start, spec.d)),
            length_snapped=count * spec.pitch,
            truncated=truncated,
        ))
        if max_records is not None and len(records) >= max_records:
            break
        r_start = r_end
        n += 1

    if len(records) == 1 and records[0].truncated:
        logger.warning(
            f"aperture {spec.aperture_radius:.1f} nm ends inside the first supercell "
            f"({boundary_radius(spec, 1):.1f} nm); single truncated record"
        )
    logger.debug(f"{len(records)} supercells up to r={spec.aperture_radius:.1f} nm")
    return records


def supercell_index(spec: DesignSpec, radius) -> np.ndarray:
    """1-based supercell containing each radius"""
    # invert r_n: n = 2 (sqrt(r^2 + d^2) - d) / lambda0
    radius = np.asarray(radius, dtype=float)
    wraps = 2.0 * (np.hypot(radius, spec.d) - spec.d) / spec.lambda0
    return np.floor(wraps + 1e-12).astype(int) + 1


def geometric_phase(rotation):
    """Pancharatnam-Berry phase 2 * rotation, wrapped to [0, 2pi)"""
    return wrap_phase(2.0 * np.asarray(rotation, dtype=float))


def _grid_centers(spec: DesignSpec) -> np.ndarray:
    """Row-major cell centres whose circumscribed circle fits in the aperture"""
    px, py = spec.unit_cell
    half_diagonal = 0.5 * math.hypot(px, py)
    reach = spec.aperture_radius - half_diagonal
    if reach < 0:
        return np.zeros((0, 2))
    nx = int(math.floor(reach / px))
    ny = int(math.floor(reach / py))
    rows, cols = np.meshgrid(np.arange(-ny, ny + 1), np.arange(-nx, nx + 1), indexing='ij')
    centers = np.column_stack([cols.ravel() * px, rows.ravel() * py])
    inside = np.hypot(centers[:, 0], centers[:, 1]) <= reach + 1e-9
    return centers[inside]


def nearest_palette(phases, palette: Sequence[PaletteEntry]) -> np.ndarray:
    """Position in `palette` of the circularly nearest phase; ties go to the lower palette index"""
    ordered = sorted(range(len(palette)), key=lambda i: palette[i].index)
    palette_phases = np.array([palette[i].phase for i in ordered])
    distances = circular_distance(np.asarray(phases, dtype=float)[:, None], palette_phases[None, :])
    best = distances.min(axis=1, keepdims=True)
    first = np.argmax(distances <= best + PHASE_TIE_TOL, axis=1)
    return np.array(ordered)[first]


def build_resonant_layout(spec: DesignSpec, palette: Optional[Sequence[PaletteEntry]] = None) -> MetasurfaceLayout:
    """Axis-aligned rods chosen from the palette; phase map along x, extruded along y"""
    if palette is None:
        palette = default_palette()
    if not palette:
        raise ValidationError("palette is empty")
    if spec.design_kind is not DesignKind.RESONANT:
        raise ValidationError("build_resonant_layout needs a resonant design spec")

    centers = _grid_centers(spec)
    target = phase_profile(spec, np.abs(centers[:, 0])) if len(centers) else np.zeros(0)
    choice = nearest_palette(target, palette) if len(centers) else np.zeros(0, dtype=int)

    elements = []
    for (x, y), k in zip(centers, choice):
        entry = palette[int(k)]
        elements.append(AntennaElement(
            center=(float(x), float(y)),
            encoded_phase=entry.phase,
            lx=entry.lx,
            ly=entry.ly,
            rotation=0.0,
            palette_index=entry.index,
        ))

    logger.info(f"resonant layout: {len(elements)} rods from a {len(palette)}-entry palette")
    return MetasurfaceLayout(spec, elements, supercell_boundaries(spec))


def build_geometric_layout(spec: DesignSpec, rod: Tuple[float, float] = GEOMETRIC_ROD_NM) -> MetasurfaceLayout:
    """Identical rods rotated by half the local profile phase"""
    if spec.design_kind is not DesignKind.GEOMETRIC:
        raise ValidationError("build_geometric_layout needs a geometric design spec")

    centers = _grid_centers(spec)
    target = phase_profile(spec, radial_distance(centers)) if len(centers) else np.zeros(0)
    rotations = 0.5 * target
    encoded = geometric_phase(rotations) if len(centers) else np.zeros(0)

    elements = [
        AntennaElement(
            center=(float(x), float(y)),
            encoded_phase=float(phase),
            lx=rod[0],
            ly=rod[1],
            rotation=float(rotation),
        )
        for (x, y), rotation, phase in zip(centers, rotations, np.atleast_1d(encoded))
    ]

    logger.info(f"geometric layout: {len(elements)} rotated rods")
    return MetasurfaceLayout(spec, elements, supercell_boundaries(spec))


def build_layout(spec: DesignSpec, palette: Optional[Sequence[PaletteEntry]] = None) -> MetasurfaceLayout:
    if spec.design_kind is DesignKind.RESONANT:
        return build_resonant_layout(spec, palette)
    return build_geometric_layout(spec)


def element_target_phases(layout: MetasurfaceLayout) -> np.ndarray:
    """Profile phase each element is meant to encode"""
    if not layout.elements:
        return np.zeros(0)
    centers = np.array([e.center for e in layout.elements])
    if layout.spec.design_kind is DesignKind.RESONANT:
        return phase_profile(layout.spec, np.abs(centers[:, 0]))
    return phase_profile(layout.spec, radial_distance(centers))


def quantization_error(layout: MetasurfaceLayout) -> float:
    """Largest circular distance between encoded and target phase"""
    if not layout.elements:
        return 0.0
    encoded = np.array([e.encoded_phase for e in layout.elements])
    return float(np.max(circular_distance(encoded, element_target_phases(layout))))


def layout_rows(layout: MetasurfaceLayout) -> List[List[float]]:
    """Rows matching LAYOUT_CSV_HEADER"""
    return [
        [e.center[0], e.center[1], e.lx, e.ly, math.degrees(e.rotation), e.encoded_phase]
        for e in layout.elements
    ]


@dataclass(frozen=True)
class SnellResult:
    theta_i: float
    sin_theta_r: float
    theta_r: Optional[float]
    evanescent: bool


def snell_reflection_angle(theta_i: float, lambda0: float, phase_gradient: float) -> SnellResult:
    """sin(theta_r) = sin(theta_i) + lambda0/(2pi) dphi/dy; evanescent when |sin| > 1"""
    theta_i = require('angle_deg', theta_i)
    lambda0 = require('length', lambda0)
    sin_r = math.sin(math.radians(theta_i)) + lambda0 / TWO_PI * float(phase_gradient)
    if abs(sin_r) > 1.0:
        return SnellResult(theta_i, sin_r, None, True)
    return SnellResult(theta_i, sin_r, math.degrees(math.asin(sin_r)), False)


def gradient_from_period(period: float) -> float:
    """Linear phase gradient -2pi/period of a blazed supercell"""
    return -TWO_PI / require('length', period)
