import os
import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from anisotropy import DipolePair, GreenSample, coherence, load_green_sample
from data_store import BUILTIN_PREFIX, DataStore
from farfield_estimator import (
    SWEEP_HEADER,
    Interpolation,
    ReflectanceProfile,
    Taper,
    estimate,
    load_reflectance_profile,
    na_grid,
    na_sweep,
    sweep_rows,
    truncate,
)
from helpers import ValidationError, create_report, parse_complex, require
from lambda_dynamics import (
    TRAJECTORY_HEADER,
    DecayCoefficients,
    complementarity,
    dressed_state,
    dressed_state_circular,
    evolve_analytic,
    evolve_numeric,
    max_deviation,
    reduced_atomic_state,
    steady_state,
    trajectory_rows,
)
from metasurface import (
    LAYOUT_CSV_HEADER,
    CountRule,
    DesignKind,
    DesignSpec,
    PaletteEntry,
    SupercellRecord,
    build_layout,
    gradient_from_period,
    layout_rows,
    load_palette,
    quantization_error,
    snell_reflection_angle,
    supercell_boundaries,
)

logger = logging.getLogger(__name__)

SUPERCELL_HEADER = ["n", "length_lambda0", "N", "theta_deg", "reflectance"]
EVOLVE_HEADER = TRAJECTORY_HEADER + ["rho00_exact", "rho11_exact", "rho22_exact",
                                     "re_rho12_exact", "im_rho12_exact", "max_abs_error"]


@dataclass
class ExperimentConfig:
    lambda0_nm: float = 852.0
    d_over_lambda0: float = 10.0
    out_dir: Optional[str] = None

    design_kind: DesignKind = DesignKind.RESONANT
    theta_max_deg: float = 70.0
    aperture_radius_nm: Optional[float] = None
    unit_cell_nm: Dict[str, Tuple[float, float]] = field(default_factory=lambda: {
        'resonant': (300.0, 150.0),
        'geometric': (300.0, 300.0),
    })
    count_rule: CountRule = CountRule.PARAXIAL
    palette: str = BUILTIN_PREFIX + "table1"

    reflectance_profile: str = BUILTIN_PREFIX + "table2"
    interpolation: Interpolation = Interpolation.CONSTANT
    taper: Taper = Taper.LINEAR
    na: float = 0.7
    nodes_theta: int = 256
    nodes_phi: int = 256
    na_start: float = 0.05
    na_stop: float = 1.0
    na_step: float = 0.05

    gamma1: float = 0.5
    gamma2: float = 0.5
    kappa12: complex = 0.5
    omega0: float = 0.0
    t_end: float = 20.0
    dt: float = 1e-3
    record_every: int = 100

    snell_period_nm: float = 1500.0
    snell_phase_gradient: Optional[float] = None

    im_gxx: float = 0.0
    im_gyy: float = 1.0
    d01: float = 1.0
    d02: float = 1.0
    green_file: Optional[str] = None

    def __post_init__(self):
        try:
            self.design_kind = DesignKind(self.design_kind)
            self.count_rule = CountRule(self.count_rule)
            self.interpolation = Interpolation(self.interpolation)
            self.taper = Taper(self.taper)
        except ValueError as e:
            raise ValidationError(str(e)) from e

        self.kappa12 = parse_complex(self.kappa12)
        require('length', self.lambda0_nm)
        require('length', self.d_over_lambda0)
        require('angle_deg', self.theta_max_deg)
        if self.aperture_radius_nm is not None:
            require('length', self.aperture_radius_nm)
        self.nodes_theta = int(require('node_count', self.nodes_theta))
        self.nodes_phi = int(require('node_count', self.nodes_phi))
        require('na', self.na)
        require('step', self.na_step)
        require('time', self.t_end)
        require('step', self.dt)
        if int(self.record_every) < 1:
            raise ValidationError("record_every must be >= 1")
        self.record_every = int(self.record_every)

        for name, source in (('palette', self.palette), ('reflectance_profile', self.reflectance_profile)):
            if not source.startswith(BUILTIN_PREFIX) and not os.path.isfile(source):
                raise ValidationError(f"{name} file not found: {source}")
        if self.green_file is not None and not os.path.isfile(self.green_file):
            raise ValidationError(f"green_file not found: {self.green_file}")

    @classmethod
    def from_mapping(cls, config: Dict) -> "ExperimentConfig":
        """Flatten the nested JSON configuration"""
        design = config.get('design', {})
        farfield = config.get('farfield', {})
        dynamics = config.get('dynamics', {})
        snell = config.get('snell', {})
        dressed = config.get('dressed', {})

        flat = {
            'lambda0_nm': config.get('lambda0_nm'),
            'd_over_lambda0': config.get('d_over_lambda0'),
            'out_dir': config.get('out_dir'),
            'design_kind': design.get('design_kind'),
            'theta_max_deg': design.get('theta_max_deg'),
            'aperture_radius_nm': design.get('aperture_radius_nm'),
            'count_rule': design.get('count_rule'),
            'palette': design.get('palette'),
            'reflectance_profile': farfield.get('reflectance_profile'),
            'interpolation': farfield.get('interpolation'),
            'taper': farfield.get('taper'),
            'na': farfield.get('na'),
            'nodes_theta': farfield.get('nodes_theta'),
            'nodes_phi': farfield.get('nodes_phi'),
            'na_start': farfield.get('na_start'),
            'na_stop': farfield.get('na_stop'),
            'na_step': farfield.get('na_step'),
            'gamma1': dynamics.get('gamma1'),
            'gamma2': dynamics.get('gamma2'),
            'kappa12': dynamics.get('kappa12'),
            'omega0': dynamics.get('omega0'),
            't_end': dynamics.get('t_end'),
            'dt': dynamics.get('dt'),
            'record_every': dynamics.get('record_every'),
            'snell_period_nm': snell.get('period_nm'),
            'snell_phase_gradient': snell.get('phase_gradient'),
            'im_gxx': dressed.get('im_gxx'),
            'im_gyy': dressed.get('im_gyy'),
            'd01': dressed.get('d01'),
            'd02': dressed.get('d02'),
            'green_file': dressed.get('green_file'),
        }
        if 'unit_cell_nm' in design:
            flat['unit_cell_nm'] = {kind: tuple(cell) for kind, cell in design['unit_cell_nm'].items()}

        # null or absent keys keep their dataclass defaults
        return cls(**{key: value for key, value in flat.items() if value is not None})

    @property
    def d_nm(self) -> float:
        return self.lambda0_nm * self.d_over_lambda0

    def design_spec(self) -> DesignSpec:
        cell = self.unit_cell_nm.get(self.design_kind.value)
        return DesignSpec.reference_design(
            design_kind=self.design_kind,
            lambda0=self.lambda0_nm,
            d_over_lambda0=self.d_over_lambda0,
            aperture_radius=self.aperture_radius_nm,
            unit_cell=tuple(cell) if cell is not None else None,
            theta_max_deg=self.theta_max_deg,
            count_rule=self.count_rule,
        )

    def to_dict(self) -> Dict:
        result = asdict(self)
        for key in ('design_kind', 'count_rule', 'interpolation', 'taper'):
            result[key] = result[key].value
        result['unit_cell_nm'] = {k: list(v) for k, v in self.unit_cell_nm.items()}
        result['kappa12'] = [self.kappa12.real, self.kappa12.imag]
        return result


@dataclass
class CommandResult:
    report: str
    files: List[str] = field(default_factory=list)


def supercell_table_rows(records: Sequence[SupercellRecord], lambda0: float,
                         reflectance: Optional[Dict[int, float]] = None) -> List[List]:
    """Supercell characteristics plus the asymptotic row"""
    reflectance = reflectance or {}
    rows = []
    for record in records:
        rows.append([
            record.index,
            record.length_exact / lambda0,
            record.n_unit_cells,
            record.theta_inner,
            reflectance.get(record.index),
        ])
    rows.append(["inf", 0.5, 1, 90.0, 0.0])
    return rows


class ExperimentRunner:
    def __init__(self, config: ExperimentConfig, store: DataStore):
        self.config = config
        self.store = store

    def _coefficients(self, gamma1: Optional[float], gamma2: Optional[float],
                      kappa12: Optional[complex]) -> DecayCoefficients:
        return DecayCoefficients(
            self.config.gamma1 if gamma1 is None else gamma1,
            self.config.gamma2 if gamma2 is None else gamma2,
            self.config.kappa12 if kappa12 is None else kappa12,
            self.config.omega0,
        )

    def palette(self) -> List[PaletteEntry]:
        return load_palette(self.store.read_palette_rows(self.config.palette))

    def reflectance_profile(self) -> ReflectanceProfile:
        rows = self.store.read_reflectance_rows(self.config.reflectance_profile)
        return load_reflectance_profile(rows, self.config.interpolation, self.config.taper,
                                        source=self.config.reflectance_profile)

    def cmd_steady_state(self, gamma1: Optional[float] = None, gamma2: Optional[float] = None,
                         kappa12: Optional[complex] = None) -> CommandResult:
        coeffs = self._coefficients(gamma1, gamma2, kappa12)
        rho = steady_state(coeffs)
        report = create_report("steady state", {
            'gamma1': coeffs.gamma1,
            'gamma2': coeffs.gamma2,
            'kappa12': coeffs.kappa12,
            'rho00': rho.rho00,
            'rho11': rho.rho11,
            'rho22': rho.rho22,
            'rho12': rho.rho12,
            'abs_rho12': abs(rho.rho12),
            'purity': rho.purity(),
        })
        path = self.store.write_report("steady_state.txt", report)
        return CommandResult(report, [path])

    def cmd_evolve(self, gamma1: Optional[float] = None, gamma2: Optional[float] = None,
                   kappa12: Optional[complex] = None, t_end: Optional[float] = None,
                   dt: Optional[float] = None) -> CommandResult:
        coeffs = self._coefficients(gamma1, gamma2, kappa12)
        t_end = self.config.t_end if t_end is None else t_end
        dt = self.config.dt if dt is None else dt

        trajectory = evolve_numeric(coeffs, t_end, dt, self.config.record_every)
        rows = []
        for row, (t, rho) in zip(trajectory_rows(trajectory), trajectory):
            exact = evolve_analytic(coeffs, t)
            error = float(np.max(np.abs(rho.entries - exact.entries)))
            rows.append(row + [exact.rho00, exact.rho11, exact.rho22,
                               exact.rho12.real, exact.rho12.imag, error])
        csv_path = self.store.write_csv("trajectory.csv", EVOLVE_HEADER, rows)

        final_t, final = trajectory[-1]
        report = create_report("evolve", {
            'steps_recorded': len(trajectory),
            't_end': final_t,
            'dt': dt,
            'max_abs_error': max_deviation(trajectory, coeffs),
            'final_rho12': final.rho12,
            'steady_state_gap': float(np.max(np.abs(final.entries - steady_state(coeffs).entries))),
        })
        report_path = self.store.write_report("evolve.txt", report)
        return CommandResult(report, [csv_path, report_path])

    def _supercell_reflectance(self) -> Dict[int, float]:
        if self.config.design_kind is not DesignKind.RESONANT:
            return {}
        return self.store.table2_reflectance_by_supercell()

    def cmd_design(self, svg: bool = False) -> CommandResult:
        spec = self.config.design_spec()
        palette = self.palette() if spec.design_kind is DesignKind.RESONANT else None
        layout = build_layout(spec, palette)

        files = [
            self.store.write_json("layout.json", layout.to_dict()),
            self.store.write_csv("layout.csv", LAYOUT_CSV_HEADER, layout_rows(layout)),
            self.store.write_csv("supercells.csv", SUPERCELL_HEADER,
                                 supercell_table_rows(layout.supercells, spec.lambda0,
                                                      self._supercell_reflectance())),
        ]
        if svg:
            from rendering import render_layout_svg
            files.append(render_layout_svg(layout, self.store.output_path("layout.svg")))

        first = layout.supercells[0]
        report = create_report("design", {
            'design_kind': spec.design_kind.value,
            'lambda0_nm': spec.lambda0,
            'd_nm': spec.d,
            'aperture_radius_nm': spec.aperture_radius,
            'elements': len(layout.elements),
            'supercells': len(layout.supercells),
            'first_supercell_nm': first.length_exact,
            'first_supercell_cells': first.n_unit_cells,
            'first_supercell_truncated': first.truncated,
            'max_quantization_error_rad': quantization_error(layout),
        })
        files.append(self.store.write_report("design.txt", report))
        return CommandResult(report, files)

    def cmd_table2(self) -> CommandResult:
        spec = self.config.design_spec()
        records = supercell_boundaries(spec)
        rows = supercell_table_rows(records, spec.lambda0, self._supercell_reflectance())
        path = self.store.write_csv("table2.csv", SUPERCELL_HEADER, rows)
        report = create_report("supercells", {
            'design_kind': spec.design_kind.value,
            'count_rule': spec.count_rule.value,
            'rows': len(records),
        })
        return CommandResult(report, [path])

    def cmd_fig8(self, svg: bool = False) -> CommandResult:
        config = self.config
        profile = self.reflectance_profile()
        grid = na_grid(config.na_start, config.na_stop, config.na_step)
        results = na_sweep(profile, grid, config.nodes_theta, config.nodes_phi)
        files = [self.store.write_csv("fig8.csv", SWEEP_HEADER, sweep_rows(results))]
        if svg:
            from rendering import render_sweep_svg
            files.append(render_sweep_svg(results, self.store.output_path("fig8.svg")))

        headline = estimate(truncate(profile, config.na), config.nodes_theta, config.nodes_phi)
        report = create_report("far field", {
            'na': headline.na,
            'gamma_x_over_gamma0': headline.gamma_x_ratio,
            'gamma_y_over_gamma0': headline.gamma_y_ratio,
            'coherence_signed': headline.coherence,
            'coherence_abs': headline.coherence_abs,
            'taper': profile.taper.value,
            'nodes': [config.nodes_theta, config.nodes_phi],
        })
        files.append(self.store.write_report("fig8.txt", report))
        return CommandResult(report, files)

    def cmd_snell(self, theta_i: float = 0.0, phase_gradient: Optional[float] = None) -> CommandResult:
        config = self.config
        if phase_gradient is None:
            phase_gradient = config.snell_phase_gradient
        if phase_gradient is None:
            phase_gradient = gradient_from_period(config.snell_period_nm)

        result = snell_reflection_angle(theta_i, config.lambda0_nm, phase_gradient)
        report = create_report("snell", {
            'theta_i_deg': result.theta_i,
            'lambda0_nm': config.lambda0_nm,
            'phase_gradient_rad_per_nm': float(phase_gradient),
            'sin_theta_r': result.sin_theta_r,
            'theta_r_deg': 'evanescent' if result.evanescent else result.theta_r,
            'evanescent': result.evanescent,
        })
        path = self.store.write_report("snell.txt", report)
        return CommandResult(report, [path])

    def cmd_dressed(self, im_gxx: Optional[float] = None, im_gyy: Optional[float] = None,
                    d01: Optional[float] = None, d02: Optional[float] = None) -> CommandResult:
        config = self.config
        # explicit components win over the configured record
        if config.green_file is not None and im_gxx is None and im_gyy is None:
            green = load_green_sample(self.store.read_green_record(config.green_file))
            logger.info(f"Green sample from {config.green_file}: {green.to_dict()}")
        else:
            green = GreenSample.cartesian(config.im_gxx if im_gxx is None else im_gxx,
                                          config.im_gyy if im_gyy is None else im_gyy)
        dipoles = DipolePair(config.d01 if d01 is None else d01, config.d02 if d02 is None else d02)

        state = dressed_state(green, dipoles.d01, dipoles.d02)
        reduced = reduced_atomic_state(state)
        circular = dressed_state_circular(state)
        predictability, visibility, concurrence = complementarity(state)
        report = create_report("dressed state", {
            'amp_1X': complex(state.amplitudes[0]),
            'amp_1Y': complex(state.amplitudes[1]),
            'amp_2X': complex(state.amplitudes[2]),
            'amp_2Y': complex(state.amplitudes[3]),
            'amp_1plus': complex(circular[0, 0]),
            'amp_1minus': complex(circular[0, 1]),
            'amp_2plus': complex(circular[1, 0]),
            'amp_2minus': complex(circular[1, 1]),
            'rho11': float(reduced[0, 0].real),
            'rho22': float(reduced[1, 1].real),
            'rho12': complex(reduced[0, 1]),
            'rho12_from_green': coherence(green, dipoles),
            'atomic_purity': float(np.real(np.trace(reduced @ reduced))),
            'predictability': predictability,
            'visibility': visibility,
            'concurrence': concurrence,
            'complementarity_sum': predictability ** 2 + visibility ** 2 + concurrence ** 2,
        })
        path = self.store.write_report("dressed.txt", report)
        return CommandResult(report, [path])
