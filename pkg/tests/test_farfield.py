#!/usr/bin/env python3
"""
Test far-field evaluation: direct and transform evaluators, pattern metrics,
directivity and the aperture bound.
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st
from numpy.testing import assert_allclose

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.codebook import BeamTarget, CodeMatrix, codebook_for
from src.farfield import (
    AngularGrid, ApertureSource, IlluminationModel, UVCuts, UVGrid, aperture_directivity_bound, aperture_power,
    directivity, is_electrically_large, metrics, radiate, radiate_fast, radiate_source, relative_error, to_dbi
)
from src.geometry import ArrayLayout
from src.unit_cell import CircuitCell, IdealCell
from utils.exceptions import (
    DimensionMismatchError, MainLobeClippedError, NonUniformGridError, NumericalError, ValidationError
)

F0 = 5.8e9
WAVELENGTH = 299792458.0 / F0


def _random_code(seed: int, rows: int = 16, cols: int = 16) -> CodeMatrix:
    return CodeMatrix(np.random.default_rng(seed).integers(0, 2, size=(rows, cols)))


def _steered_metrics(theta0: float, phi0: float = 0.0):
    layout = ArrayLayout()
    _, code = codebook_for(layout, BeamTarget(theta0, phi0, F0))
    grid = AngularGrid.principal_cuts(phi0, 0.5)
    return metrics(radiate(layout, IdealCell(), IlluminationModel(), code, F0, grid))


# ==================== Direct evaluator ====================

def test_two_element_closed_form():
    """Half-wave pair, equal excitation: |2 cos((π/2) sinθ cosφ)|."""
    print("\n=== Test 1: Two-Element Array Factor ===")
    layout = ArrayLayout(rows=1, cols=2, period=WAVELENGTH / 2)
    grid = AngularGrid(np.linspace(0.0, 90.0, 91), [0.0, 45.0, 90.0, 180.0])
    pattern = radiate(layout, IdealCell(), IlluminationModel.uniform(), CodeMatrix.zeros(1, 2), F0, grid)

    theta, phi = grid.angles_deg()
    expected = np.abs(2 * np.cos(np.pi / 2 * np.sin(np.radians(theta)) * np.cos(np.radians(phi))))
    assert_allclose(pattern.magnitude, expected, atol=1e-12)

    # nulls along the array axis, peak at boresight
    assert pattern.magnitude[0, -1] < 1e-12
    assert pattern.magnitude[3, -1] < 1e-12
    assert pattern.magnitude[0, 0] == pytest.approx(2.0)
    print("✅ PASS: Matches the closed form")


def test_opposite_states_cancel_at_broadside():
    """Half-wave pair with code 01: E(θ=0) = 0 and the peak leaves broadside."""
    layout = ArrayLayout(rows=1, cols=2, period=WAVELENGTH / 2)
    grid = AngularGrid(np.linspace(0.0, 90.0, 181), [0.0, 90.0, 180.0, 270.0])
    pattern = radiate(layout, IdealCell(), IlluminationModel.uniform(), CodeMatrix([[0, 1]]), F0, grid)

    assert np.all(pattern.magnitude[:, 0] == 0.0)
    _, peak_theta = np.unravel_index(int(np.argmax(pattern.magnitude)), pattern.magnitude.shape)
    assert grid.theta_deg[peak_theta] > 45.0


@pytest.mark.parametrize("factor", [0.25, 3.0j, 2.0 * np.exp(1j * 0.7)])
def test_common_cell_factor_leaves_metrics_unchanged(factor):
    layout = ArrayLayout()
    _, code = codebook_for(layout, BeamTarget(20.0))
    source = ApertureSource.from_code(layout, CircuitCell(), IlluminationModel(), code, F0)
    grid = AngularGrid.principal_cuts(0.0, 0.5)
    base = radiate_source(source, grid)
    scaled = radiate_source(source.scaled(factor), grid)

    assert_allclose(scaled.normalized_db(), base.normalized_db(), atol=1e-9)
    a, b = metrics(base), metrics(scaled)
    assert b.peak_theta_deg == pytest.approx(a.peak_theta_deg, abs=1e-9)
    assert b.peak_phi_deg == pytest.approx(a.peak_phi_deg, abs=1e-9)
    for name in a.hpbw_deg:
        assert b.hpbw_deg[name] == pytest.approx(a.hpbw_deg[name], rel=1e-9)
        assert b.sll_db[name] == pytest.approx(a.sll_db[name], abs=1e-9)
    assert b.directivity == pytest.approx(a.directivity, rel=1e-9)


def test_uniform_line_sidelobe_level():
    """Uniform 8-element half-wave line: first sidelobe about -12.8 dB."""
    layout = ArrayLayout(rows=1, cols=8, period=WAVELENGTH / 2)
    pattern = radiate(layout, IdealCell(), IlluminationModel.uniform(), CodeMatrix.zeros(1, 8), F0,
                      AngularGrid.principal_cuts(0.0, 0.5))
    result = metrics(pattern, cuts=("scan",))
    assert result.peak_theta_deg == pytest.approx(0.0, abs=1e-6)
    assert result.sll_db["scan"] == pytest.approx(-12.8, abs=0.1)
    assert result.hpbw_deg["scan"] == pytest.approx(12.8, abs=0.3)


@pytest.mark.parametrize("theta0, tolerance", [(0.0, 2.0), (10.0, 2.0), (45.0, 3.0)])
def test_beam_points_at_target(theta0, tolerance):
    """Default 16×16 with 1-bit codes steers to 0°, 10° and 45°."""
    result = _steered_metrics(theta0)
    assert result.peak_theta_deg == pytest.approx(theta0, abs=tolerance)
    if theta0 > 1.0:
        assert min(abs(result.peak_phi_deg), abs(result.peak_phi_deg - 360.0)) < 2.0
    assert result.directivity <= aperture_directivity_bound(ArrayLayout(), F0)


def test_scan_loss():
    assert _steered_metrics(45.0).directivity <= _steered_metrics(0.0).directivity


def test_opposite_azimuth_mirrors_peak():
    a = _steered_metrics(20.0, 0.0)
    b = _steered_metrics(20.0, 180.0)
    assert a.peak_theta_deg == pytest.approx(b.peak_theta_deg, abs=0.1)
    gap = (b.peak_phi_deg - a.peak_phi_deg) % 360.0
    assert gap == pytest.approx(180.0, abs=0.5)


def test_boresight_pattern_symmetric_in_phi():
    layout = ArrayLayout()
    _, code = codebook_for(layout, BeamTarget(0.0))
    source = ApertureSource.from_code(layout, IdealCell(), IlluminationModel(), code, F0)
    theta = np.linspace(0.0, 90.0, 19)
    for phi in (90.0, 180.0, 270.0):
        assert_allclose(np.abs(source.field_at(theta, np.full_like(theta, phi))),
                        np.abs(source.field_at(theta, np.zeros_like(theta))), rtol=1e-9, atol=1e-9)


def test_code_shape_must_match_layout():
    with pytest.raises(DimensionMismatchError):
        radiate(ArrayLayout(), IdealCell(), IlluminationModel(), CodeMatrix.zeros(8, 8), F0,
                AngularGrid.principal_cuts())


def test_zero_aperture_is_numerical_error():
    layout = ArrayLayout(rows=2, cols=2)
    source = ApertureSource(layout, np.zeros((2, 2)), 2 * np.pi / WAVELENGTH)
    pattern = radiate_source(source, AngularGrid.principal_cuts())
    with pytest.raises(NumericalError):
        pattern.normalized_db()
    with pytest.raises(NumericalError):
        directivity(source)


def test_source_copies_excitation():
    excitation = np.ones((1, 2), dtype=complex)
    source = ApertureSource(ArrayLayout(rows=1, cols=2), excitation, 1.0)
    excitation[0, 0] = 5.0
    assert source.excitation[0, 0] == 1.0
    assert excitation.flags.writeable


def test_lossy_cell_scales_field():
    layout = ArrayLayout(rows=4, cols=4)
    code = _random_code(3, 4, 4)
    grid = AngularGrid.principal_cuts(0.0, 5.0)
    lossless = radiate(layout, IdealCell(), IlluminationModel(), code, F0, grid)
    lossy = radiate(layout, IdealCell(insertion_loss=6.0), IlluminationModel(), code, F0, grid)
    factor = 10 ** (-6.0 / 20)
    assert relative_error(lossless.field * factor, lossy.field) < 1e-12
    assert lossy.peak_magnitude == pytest.approx(lossless.peak_magnitude * factor, rel=1e-12)


# ==================== Directivity ====================

def test_single_element_half_space_directivity():
    """Isotropic element radiating into the forward half space: D = 2."""
    source = ApertureSource.from_code(ArrayLayout(rows=1, cols=1), IdealCell(), IlluminationModel.uniform(),
                                      CodeMatrix.zeros(1, 1), F0)
    assert directivity(source) == pytest.approx(2.0, rel=1e-4)
    assert to_dbi(2.0) == pytest.approx(3.0103, abs=1e-4)
    assert to_dbi(0.0) == -math.inf


def test_single_element_metrics_report_visible_span():
    """Flat single-element pattern: no -3 dB point, but metrics still returns D = 2."""
    pattern = radiate(ArrayLayout(rows=1, cols=1), IdealCell(), IlluminationModel.uniform(element_q=0.0),
                      CodeMatrix.zeros(1, 1), F0, AngularGrid.principal_cuts(0.0))
    result = metrics(pattern)

    assert result.directivity == pytest.approx(2.0, rel=1e-4)
    assert result.directivity_dbi == pytest.approx(3.01, abs=0.01)
    assert all(result.hpbw_clipped.values())
    assert all(width > 170.0 for width in result.hpbw_deg.values())
    assert result.sidelobe_level_db == -math.inf
    assert result.to_dict()['hpbw_scan_clipped'] is True

    with pytest.raises(MainLobeClippedError, match="cut: scan"):
        metrics(pattern, strict=True)


def test_aperture_bound_value():
    bound = aperture_directivity_bound(ArrayLayout(), F0)
    assert bound == pytest.approx(4 * math.pi * 0.082944 / WAVELENGTH ** 2)
    assert to_dbi(bound) == pytest.approx(25.9, abs=0.05)


BOUND_ILLUMINATIONS = [
    IlluminationModel(),
    IlluminationModel.uniform(element_q=0.0),
    IlluminationModel.uniform(element_q=1.0),
    IlluminationModel(feed_q=0.0, element_q=0.0),
    IlluminationModel(spherical_spreading=False, feed_path_phase=False, element_q=1.0),
]


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1), st.sampled_from(BOUND_ILLUMINATIONS))
@example(0, IlluminationModel.uniform(element_q=0.0))
@example(0, IlluminationModel.uniform(element_q=1.0))
def test_random_codes_respect_aperture_bound(seed, illum):
    layout = ArrayLayout()
    source = ApertureSource.from_code(layout, CircuitCell(), illum, _random_code(seed), F0)
    assert directivity(source) <= aperture_directivity_bound(layout, F0)


@pytest.mark.parametrize("element_q", [0.0, 1.0])
def test_uniform_in_phase_aperture_meets_bound(element_q):
    """All-zeros code, feed terms off: broadside beam at or just below 4πA/λ²."""
    layout = ArrayLayout()
    bound = aperture_directivity_bound(layout, F0)
    source = ApertureSource.from_code(layout, IdealCell(), IlluminationModel.uniform(element_q=element_q),
                                      CodeMatrix.zeros(16, 16), F0)
    value = directivity(source)
    assert value <= bound
    assert value > 0.9 * bound

    result = metrics(radiate_source(source, AngularGrid.principal_cuts(0.0, 0.5)))
    assert result.peak_theta_deg == pytest.approx(0.0, abs=1e-6)
    assert result.directivity <= bound
    assert not any(result.hpbw_clipped.values())


def test_cosine_element_fills_the_aperture_limit():
    """With a cos θ element the far-field integral falls short of the cell power; the limit is met exactly."""
    layout = ArrayLayout()
    source = ApertureSource.from_code(layout, IdealCell(), IlluminationModel.uniform(element_q=1.0),
                                      CodeMatrix.zeros(16, 16), F0)
    assert directivity(source) == pytest.approx(aperture_directivity_bound(layout, F0), rel=1e-9)
    assert aperture_power(source) == pytest.approx(256 * (WAVELENGTH / layout.period) ** 2)


def test_small_arrays_use_the_far_field_integral():
    small = ArrayLayout(rows=1, cols=2, period=WAVELENGTH / 2)
    assert not is_electrically_large(small, 2 * np.pi / WAVELENGTH)
    assert is_electrically_large(ArrayLayout(rows=4, cols=4), 2 * np.pi / WAVELENGTH)
    assert not is_electrically_large(ArrayLayout(rows=16, cols=2), 2 * np.pi / WAVELENGTH)


# ==================== Transform evaluator ====================

@pytest.mark.parametrize("seed", range(20))
def test_fast_matches_direct_on_cuts(seed):
    """Random code and frequency, 181 samples on two cuts."""
    rng = np.random.default_rng(1000 + seed)
    f = float(rng.uniform(5.4e9, 6.6e9))
    layout = ArrayLayout()
    code = _random_code(seed)
    grid = UVCuts([0.0, 90.0], 181)

    direct = radiate(layout, IdealCell(), IlluminationModel(), code, f, grid)
    fast = radiate_fast(layout, IdealCell(), IlluminationModel(), code, f, grid)
    assert relative_error(direct.field, fast.field) < 1e-9


def test_fast_matches_direct_on_all_quarter_cuts():
    layout = ArrayLayout(rows=12, cols=9, feed_offset=(0.01, -0.02))
    code = _random_code(7, 12, 9)
    grid = UVCuts([0.0, 90.0, 180.0, 270.0], 101)
    direct = radiate(layout, CircuitCell(), IlluminationModel(), code, F0, grid)
    fast = radiate_fast(layout, CircuitCell(), IlluminationModel(), code, F0, grid)
    assert relative_error(direct.field, fast.field) < 1e-9


def test_fast_matches_direct_on_uv_grid():
    layout = ArrayLayout()
    code = _random_code(11)
    grid = UVGrid.square(41)
    direct = radiate(layout, IdealCell(), IlluminationModel(), code, F0, grid)
    fast = radiate_fast(layout, IdealCell(), IlluminationModel(), code, F0, grid)
    assert relative_error(direct.field, fast.field) < 1e-9
    # corners of the square lie outside the unit circle
    assert direct.field[0, 0] == 0
    assert fast.field[0, 0] == 0


def test_fast_and_direct_share_peak_bin():
    layout = ArrayLayout()
    _, code = codebook_for(layout, BeamTarget(0.0))
    grid = UVCuts([0.0, 90.0], 181)
    direct = radiate(layout, IdealCell(), IlluminationModel(), code, F0, grid)
    fast = radiate_fast(layout, IdealCell(), IlluminationModel(), code, F0, grid)
    assert np.array_equal(np.argmax(direct.magnitude, axis=1), np.argmax(fast.magnitude, axis=1))


def test_single_element_fast_is_exact():
    layout = ArrayLayout(rows=1, cols=1)
    grid = UVCuts([0.0, 90.0], 181)
    direct = radiate(layout, IdealCell(), IlluminationModel(), CodeMatrix.zeros(1, 1), F0, grid)
    fast = radiate_fast(layout, IdealCell(), IlluminationModel(), CodeMatrix.zeros(1, 1), F0, grid)
    assert_allclose(fast.field, direct.field, rtol=1e-14)


def test_fast_needs_uniform_uv_grid():
    with pytest.raises(NonUniformGridError):
        radiate_fast(ArrayLayout(), IdealCell(), IlluminationModel(), CodeMatrix.zeros(16, 16), F0,
                     AngularGrid.principal_cuts())
    with pytest.raises(NonUniformGridError) as exc_info:
        UVCuts([0.0, 45.0], 181)
    assert exc_info.value.exit_code == 2


# ==================== Grids and output ====================

def test_principal_cuts_grid():
    grid = AngularGrid.principal_cuts(30.0, 0.5)
    assert grid.shape == (4, 181)
    assert grid.phi_deg.tolist() == [30.0, 120.0, 210.0, 300.0]
    with pytest.raises(ValidationError):
        AngularGrid.principal_cuts(0.0, 0.0)


def test_invalid_angular_grids():
    with pytest.raises(ValidationError):
        AngularGrid([0.0, 95.0], [0.0])
    with pytest.raises(ValidationError):
        AngularGrid([0.0, 10.0], [90.0, 0.0])


def test_pattern_csv(tmp_path):
    layout = ArrayLayout(rows=2, cols=2)
    grid = AngularGrid.principal_cuts(0.0, 45.0)
    pattern = radiate(layout, IdealCell(), IlluminationModel(), CodeMatrix.zeros(2, 2), F0, grid)
    path = pattern.save_csv(tmp_path, "pattern.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "theta_deg,phi_deg,mag_db,real,imag"
    assert len(lines) == 1 + 4 * 3
    theta, phi, mag_db = lines[1].split(",")[:3]
    assert (theta, phi) == ("0.0000", "0.0000")
    assert float(mag_db) == pytest.approx(0.0, abs=1e-6)


def test_metrics_dictionary_keys():
    keys = _steered_metrics(10.0).to_dict()
    for key in ('peak_theta_deg', 'peak_phi_deg', 'hpbw_scan_deg', 'hpbw_cross_deg', 'sll_scan_db',
                'sll_cross_db', 'sll_db', 'directivity', 'directivity_dbi'):
        assert key in keys
    assert keys['hemisphere'] == 'forward'


def test_illumination_validation():
    with pytest.raises(ValidationError):
        IlluminationModel(feed_q=-1.0)
