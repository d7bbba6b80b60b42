import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import ValidationError
from metasurface import (
    TWO_PI,
    CountRule,
    DesignKind,
    DesignSpec,
    PaletteEntry,
    build_geometric_layout,
    build_resonant_layout,
    circular_distance,
    default_palette,
    element_target_phases,
    geometric_phase,
    gradient_from_period,
    layout_rows,
    load_palette,
    local_phase_gradient,
    nearest_palette,
    phase_profile,
    quantization_error,
    snell_reflection_angle,
    supercell_boundaries,
    supercell_index,
    unwrapped_phase,
)

LAMBDA0 = 852.0

TABLE2_LENGTHS = [3.17, 1.41, 1.06, 0.94, 0.82]
TABLE2_COUNTS = [9, 4, 3, 2, 2]
TABLE2_THETAS = [0.0, 17.6, 24.6, 29.4, 33.3]


class TestDesignSpec:

    def test_defaults(self, resonant_spec):
        assert resonant_spec.d == pytest.approx(8520.0)
        assert resonant_spec.unit_cell == (300.0, 150.0)
        assert resonant_spec.aperture_radius == pytest.approx(8520.0 * math.tan(math.radians(70.0)))

    def test_aperture_smaller_than_cell_rejected(self):
        with pytest.raises(ValidationError):
            DesignSpec(LAMBDA0, 8520.0, (300.0, 150.0), DesignKind.RESONANT, 100.0)

    def test_non_positive_length_rejected(self):
        with pytest.raises(ValidationError):
            DesignSpec(0.0, 8520.0, (300.0, 150.0), DesignKind.RESONANT, 1000.0)

    def test_to_dict(self, resonant_spec):
        data = resonant_spec.to_dict()
        assert data['design_kind'] == 'resonant'
        assert data['count_rule'] == 'paraxial'
        assert data['unit_cell'] == [300.0, 150.0]


class TestPhaseProfile:

    def test_centre_phase(self, resonant_spec):
        assert phase_profile(resonant_spec, 0.0) == pytest.approx(math.pi, abs=1e-12)

    def test_quarter_wave_path_gives_zero(self, resonant_spec):
        d = resonant_spec.d
        radius = math.sqrt((d + LAMBDA0 / 4.0) ** 2 - d ** 2)
        value = phase_profile(resonant_spec, radius)
        assert circular_distance(value, 0.0) < 1e-9

    def test_range(self, resonant_spec):
        values = phase_profile(resonant_spec, np.linspace(0.0, 20000.0, 5001))
        assert np.all(values >= 0.0) and np.all(values < TWO_PI)

    def test_unwrapped_is_monotone_decreasing(self, resonant_spec):
        values = unwrapped_phase(resonant_spec, np.linspace(0.0, 20000.0, 2001))
        assert np.all(np.diff(values) < 0)

    def test_wrapped_matches_unwrapped(self, resonant_spec):
        radius = np.linspace(0.0, 20000.0, 101)
        wrapped = phase_profile(resonant_spec, radius)
        unwrapped = unwrapped_phase(resonant_spec, radius)
        assert np.max(circular_distance(wrapped, unwrapped)) < 1e-9

    def test_local_gradient_matches_finite_difference(self, resonant_spec):
        radius, h = 5000.0, 1e-3
        numeric = (unwrapped_phase(resonant_spec, radius + h) - unwrapped_phase(resonant_spec, radius - h)) / (2 * h)
        assert local_phase_gradient(resonant_spec, radius) == pytest.approx(numeric, rel=1e-6)


class TestSupercells:

    def test_table2(self, resonant_spec):
        records = supercell_boundaries(resonant_spec)[:5]
        for record, length, count, theta in zip(records, TABLE2_LENGTHS, TABLE2_COUNTS, TABLE2_THETAS):
            assert record.length_exact / LAMBDA0 == pytest.approx(length, abs=0.1)
            assert record.n_unit_cells == count
            assert record.theta_inner == pytest.approx(theta, abs=0.5)
            assert not record.truncated

    def test_exact_count_rule(self):
        spec = DesignSpec.reference_design(DesignKind.RESONANT, count_rule=CountRule.EXACT)
        counts = [r.n_unit_cells for r in supercell_boundaries(spec)[:5]]
        assert counts == [9, 4, 3, 3, 2]

    def test_snapped_length(self, resonant_spec):
        first = supercell_boundaries(resonant_spec)[0]
        assert first.length_snapped == 9 * 300.0
        assert first.length_snapped / LAMBDA0 == pytest.approx(3.17, abs=0.01)

    def test_tiling(self, resonant_spec):
        records = supercell_boundaries(resonant_spec)
        assert records[0].r_start == 0.0
        for a, b in zip(records, records[1:]):
            assert b.r_start == a.r_end
            assert b.r_end > b.r_start
        assert records[-1].r_end == resonant_spec.aperture_radius
        total = sum(r.length_exact for r in records)
        assert total == pytest.approx(resonant_spec.aperture_radius, rel=1e-12)

    def test_lengths_decrease_towards_half_wavelength(self):
        spec = DesignSpec.reference_design(DesignKind.RESONANT, aperture_radius=1e9)
        records = supercell_boundaries(spec, max_records=200)
        lengths = [r.length_exact for r in records]
        assert all(b < a for a, b in zip(lengths, lengths[1:]))
        assert all(length > LAMBDA0 / 2 for length in lengths)
        assert lengths[-1] == pytest.approx(LAMBDA0 / 2, rel=0.1)
        assert records[-1].n_unit_cells == 1
        assert records[-1].theta_inner > 80.0

    def test_single_truncated_record(self):
        spec = DesignSpec.reference_design(DesignKind.RESONANT, aperture_radius=300.0)
        records = supercell_boundaries(spec)
        assert len(records) == 1
        assert records[0].truncated
        assert records[0].n_unit_cells == 1

    def test_supercell_index(self, resonant_spec):
        records = supercell_boundaries(resonant_spec)[:4]
        for record in records:
            middle = 0.5 * (record.r_start + record.r_end)
            assert supercell_index(resonant_spec, middle) == record.index


class TestPalette:

    def test_default_palette(self):
        palette = default_palette()
        assert [(p.lx, p.ly) for p in palette][0] == (30.0, 100.0)
        np.testing.assert_allclose([p.phase for p in palette], [0, 0.4 * math.pi, 0.8 * math.pi,
                                                               1.2 * math.pi, 1.6 * math.pi])

    def test_tie_goes_to_lower_index(self):
        choice = nearest_palette(np.array([math.pi]), default_palette())
        assert default_palette()[int(choice[0])].index == 3

    def test_load_palette(self):
        rows = [
            {'index': '2', 'lx_nm': '105', 'ly_nm': '100', 'phase_rad': '1.25663706144'},
            {'index': '1', 'lx_nm': '30', 'ly_nm': '100', 'phase_rad': '0'},
        ]
        palette = load_palette(rows)
        assert [p.index for p in palette] == [1, 2]

    def test_load_palette_rejects_bad_phase(self):
        with pytest.raises(ValidationError):
            load_palette([{'index': '1', 'lx_nm': '30', 'ly_nm': '100', 'phase_rad': '7.0'}])

    def test_load_palette_rejects_duplicates(self):
        row = {'index': '1', 'lx_nm': '30', 'ly_nm': '100', 'phase_rad': '0'}
        with pytest.raises(ValidationError):
            load_palette([row, dict(row)])


class TestResonantLayout:

    def test_centre_cell(self, resonant_spec):
        layout = build_resonant_layout(resonant_spec)
        centre = next(e for e in layout.elements if e.center == (0.0, 0.0))
        assert centre.palette_index == 3
        assert centre.encoded_phase == pytest.approx(0.8 * math.pi)

    def test_quantization_bound(self, resonant_spec):
        layout = build_resonant_layout(resonant_spec)
        assert quantization_error(layout) <= math.pi / 5 + 1e-9

    def test_rods_are_parallel(self, resonant_spec):
        layout = build_resonant_layout(resonant_spec)
        assert all(e.rotation == 0.0 for e in layout.elements)
        assert {(e.lx, e.ly) for e in layout.elements} <= {(p.lx, p.ly) for p in default_palette()}

    def test_cells_do_not_overlap(self, resonant_spec):
        layout = build_resonant_layout(resonant_spec)
        centers = np.array([e.center for e in layout.elements])
        xs = np.unique(centers[:, 0])
        ys = np.unique(centers[:, 1])
        assert np.min(np.diff(xs)) >= 300.0 - 1e-9
        assert np.min(np.diff(ys)) >= 150.0 - 1e-9
        assert len({tuple(c) for c in centers}) == len(centers)

    def test_empty_palette_rejected(self, resonant_spec):
        with pytest.raises(ValidationError):
            build_resonant_layout(resonant_spec, [])

    def test_wrong_design_kind_rejected(self, geometric_spec):
        with pytest.raises(ValidationError):
            build_resonant_layout(geometric_spec)

    def test_export_is_deterministic(self, resonant_spec):
        first = build_resonant_layout(resonant_spec)
        second = build_resonant_layout(resonant_spec)
        assert first.to_dict() == second.to_dict()
        assert layout_rows(first) == layout_rows(second)


class TestGeometricLayout:

    @pytest.mark.parametrize("rotation, expected", [
        (0.0, 0.0),
        (math.pi / 4, math.pi / 2),
        (math.pi / 2, math.pi),
    ])
    def test_geometric_phase(self, rotation, expected):
        assert geometric_phase(rotation) == pytest.approx(expected)

    def test_centre_rotation(self, geometric_spec):
        layout = build_geometric_layout(geometric_spec)
        centre = next(e for e in layout.elements if e.center == (0.0, 0.0))
        assert centre.rotation == pytest.approx(math.pi / 2)

    def test_encoded_phase_equals_profile(self, geometric_spec):
        layout = build_geometric_layout(geometric_spec)
        encoded = np.array([e.encoded_phase for e in layout.elements])
        assert np.max(circular_distance(encoded, element_target_phases(layout))) <= 1e-12
        assert quantization_error(layout) <= 1e-12

    def test_rotations_in_half_turn(self, geometric_spec):
        layout = build_geometric_layout(geometric_spec)
        rotations = np.array([e.rotation for e in layout.elements])
        assert np.all(rotations >= 0.0) and np.all(rotations < math.pi)
        assert all((e.lx, e.ly) == (200.0, 80.0) for e in layout.elements)

    def test_first_supercell_holds_nine_rods(self, geometric_spec):
        first = supercell_boundaries(geometric_spec)[0]
        assert first.n_unit_cells == 9
        assert first.length_exact == pytest.approx(2700.0, abs=100.0)
        layout = build_geometric_layout(geometric_spec)
        on_axis = [e for e in layout.elements if e.center[1] == 0.0 and 0.0 < e.center[0] < first.r_end]
        assert len(on_axis) == 9

    def test_single_cell_aperture(self):
        spec = DesignSpec.reference_design(DesignKind.GEOMETRIC, aperture_radius=300.0)
        layout = build_geometric_layout(spec)
        assert len(layout.elements) == 1
        assert layout.supercells[0].truncated


class TestSnell:

    def test_normal_incidence(self):
        result = snell_reflection_angle(0.0, LAMBDA0, gradient_from_period(1500.0))
        assert result.theta_r == pytest.approx(-34.6, abs=0.1)
        assert not result.evanescent

    def test_oblique_incidence(self):
        result = snell_reflection_angle(60.0, LAMBDA0, gradient_from_period(1500.0))
        assert result.sin_theta_r == pytest.approx(0.298, abs=1e-3)
        assert result.theta_r == pytest.approx(17.3, abs=0.1)
        result = snell_reflection_angle(30.0, LAMBDA0, gradient_from_period(1500.0))
        assert result.theta_r == pytest.approx(-3.9, abs=0.1)

    def test_specular_without_gradient(self):
        assert snell_reflection_angle(25.0, LAMBDA0, 0.0).theta_r == pytest.approx(25.0)

    def test_evanescent(self):
        result = snell_reflection_angle(-60.0, LAMBDA0, gradient_from_period(1500.0))
        assert result.evanescent
        assert result.theta_r is None
        assert result.sin_theta_r < -1.0

    def test_angle_out_of_range(self):
        with pytest.raises(ValidationError):
            snell_reflection_angle(95.0, LAMBDA0, 0.0)

    @given(radius=st.floats(min_value=0.0, max_value=8000.0))
    @settings(max_examples=100, deadline=None)
    def test_layout_sends_rays_back_to_emitter(self, radius):
        spec = DesignSpec.reference_design(DesignKind.GEOMETRIC)
        incidence = math.degrees(math.atan2(radius, spec.d))
        result = snell_reflection_angle(incidence, LAMBDA0, local_phase_gradient(spec, radius))
        assert result.theta_r == pytest.approx(-incidence, abs=1.0)
