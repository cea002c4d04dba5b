#!/usr/bin/env python3
"""
Test unit-cell models: diode circuit, ideal, circuit and tabulated cells,
phase split and 3 dB bandwidth.
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.unit_cell import (
    CircuitCell, DiodeCircuitModel, DiodeState, IdealCell, S21Table, TabulatedCell, describe,
    diode_impedance, insertion_loss_db, load_tabulated_cell, state_phase_difference, three_db_bandwidth,
    transmission
)
from utils.exceptions import FileOperationError, OutOfBandError, ValidationError

F0 = 5.8e9


def _table(**overrides) -> S21Table:
    columns = {
        'freq_hz': [5.4e9, 5.6e9, 5.8e9, 6.0e9, 6.2e9],
        'mag0_db': [-1.0, -1.0, -1.0, -1.0, -1.0],
        'phase0_deg': [0.0, 0.0, 0.0, 0.0, 0.0],
        'mag1_db': [-1.0, -1.0, -1.0, -1.0, -1.0],
        'phase1_deg': [180.0, 180.0, 180.0, 180.0, 180.0],
    }
    columns.update(overrides)
    return S21Table(**{key: np.array(value) for key, value in columns.items()})


# ==================== Diode circuit ====================

def test_diode_impedance_values():
    """Default circuit at 5.8 GHz: ON 2 + j0.0255 Ω, OFF about -j152.4 Ω."""
    print("\n=== Test 1: Diode Impedance ===")
    model = DiodeCircuitModel()

    on = diode_impedance(model, DiodeState.ON, F0)
    assert on.real == pytest.approx(2.0, rel=1e-3)
    assert on.imag == pytest.approx(0.0255, rel=1e-3)

    off = diode_impedance(model, DiodeState.OFF, F0)
    assert off.real == 0.0
    assert off.imag == pytest.approx(-152.4, rel=1e-3)
    print(f"ON = {on:.4f} Ω, OFF = {off:.2f} Ω")
    print("✅ PASS: Diode impedances match the circuit values")


def test_off_branch_resonance():
    model = DiodeCircuitModel()
    assert diode_impedance(model, DiodeState.OFF, model.off_resonance_hz).imag == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("f", [0.0, -1e9, float('nan')])
def test_diode_impedance_rejects_bad_frequency(f):
    with pytest.raises(ValidationError):
        diode_impedance(DiodeCircuitModel(), DiodeState.ON, f)


def test_diode_circuit_rejects_non_positive_resistance():
    with pytest.raises(ValidationError) as exc_info:
        DiodeCircuitModel(on_resistance=0.0)
    assert exc_info.value.field == "on_resistance"


# ==================== Ideal cell ====================

def test_ideal_cell_is_exact_inversion():
    cell = IdealCell()
    assert transmission(cell, 0, F0) == complex(1.0, 0.0)
    assert transmission(cell, 1, F0) == complex(-1.0, 0.0)
    assert state_phase_difference(cell, F0) == 180.0


@given(st.floats(min_value=1e6, max_value=1e12))
def test_ideal_phase_split_is_180_at_any_frequency(f):
    assert state_phase_difference(IdealCell(insertion_loss=0.7), f) == 180.0


def test_ideal_insertion_loss():
    cell = IdealCell(insertion_loss=2.0)
    assert abs(transmission(cell, 0, F0)) == pytest.approx(10 ** (-0.1))
    assert insertion_loss_db(cell, 1, F0) == 2.0


def test_invalid_state_and_loss():
    with pytest.raises(ValidationError):
        transmission(IdealCell(), 2, F0)
    with pytest.raises(ValidationError):
        IdealCell(insertion_loss=-1.0)


def test_ideal_bandwidth_is_declared_band():
    assert three_db_bandwidth(IdealCell(), F0) == pytest.approx(1.2e9 / F0)


def test_ideal_bandwidth_below_threshold():
    with pytest.raises(ValidationError):
        three_db_bandwidth(IdealCell(insertion_loss=4.0), F0)


# ==================== Circuit cell ====================

def test_circuit_cell_loss_scales_with_resistance():
    assert insertion_loss_db(CircuitCell(), 0, F0) == pytest.approx(0.5)
    assert insertion_loss_db(CircuitCell(DiodeCircuitModel(on_resistance=4.0)), 0, F0) == pytest.approx(1.0)
    assert state_phase_difference(CircuitCell(), F0) == 180.0


@pytest.mark.parametrize("resistance", [1.0, 2.0, 3.5])
def test_circuit_cell_loss_follows_on_state_dissipation(resistance):
    diode = DiodeCircuitModel(on_resistance=resistance, on_inductance=1.2e-12)
    cell = CircuitCell(diode)
    dissipation = diode_impedance(diode, DiodeState.ON, cell.center_frequency).real
    assert cell.minimum_loss_db == pytest.approx(cell.reference_loss_db * dissipation / cell.reference_resistance)
    # the inductance changes Im(Z) only
    assert cell.minimum_loss_db == pytest.approx(CircuitCell(DiodeCircuitModel(on_resistance=resistance)).minimum_loss_db)


def test_circuit_cell_band_edges():
    cell = CircuitCell()
    assert cell.magnitude_db(0, 5.4e9) == pytest.approx(-3.0)
    assert cell.magnitude_db(1, 6.6e9) == pytest.approx(-3.0)
    assert cell.magnitude_db(0, 7.5e9) < -3.0
    # valid at any positive frequency
    assert np.isfinite(abs(transmission(cell, 1, 1e9)))


def test_circuit_cell_bandwidth_matches_band():
    assert three_db_bandwidth(CircuitCell(), F0) == pytest.approx(1.2e9 / F0, rel=1e-6)


def test_circuit_cell_centre_outside_band():
    with pytest.raises(ValidationError):
        CircuitCell(center_frequency=7e9)


# ==================== Tabulated cell ====================

def test_measured_table_phase_split(data_dir):
    """Digitized measured data: about 183° at 5.8 GHz."""
    print("\n=== Test 2: Measured Phase Split ===")
    cell = load_tabulated_cell(data_dir / "s21_measured_digitized.csv")
    difference = state_phase_difference(cell, F0)
    assert difference == pytest.approx(183.0, abs=2.0)
    print(f"Δφ = {difference:.2f}°")
    print("✅ PASS: Measured phase split within 183° ± 2°")


def test_simulated_table_values(data_dir):
    cell = load_tabulated_cell(data_dir / "s21_simulated_digitized.csv")
    assert cell.magnitude_db(0, F0) == pytest.approx(-0.5)
    assert cell.phase_deg(1, F0) == pytest.approx(140.0)
    assert state_phase_difference(cell, F0) == pytest.approx(180.0)
    assert cell.validity_band == (5.0e9, 6.9e9)


def test_interpolation_between_rows(data_dir):
    cell = load_tabulated_cell(data_dir / "s21_measured_digitized.csv")
    assert cell.phase_deg(0, 5.85e9) == pytest.approx(-57.0)
    assert cell.magnitude_db(1, 5.85e9) == pytest.approx(-3.15)


def test_phase_interpolation_unwraps():
    table = _table(phase1_deg=[150.0, 170.0, -170.0, -150.0, -130.0])
    cell = TabulatedCell(table)
    assert cell.phase_deg(1, 5.7e9) == pytest.approx(180.0)
    assert state_phase_difference(cell, 5.7e9) == pytest.approx(180.0)


def test_tabulated_out_of_band(data_dir):
    cell = load_tabulated_cell(data_dir / "s21_measured_digitized.csv")
    with pytest.raises(OutOfBandError) as exc_info:
        transmission(cell, 0, 7.0e9)
    assert exc_info.value.field == "frequency"


def test_simulated_bandwidths(data_dir):
    """Absolute threshold crossings at 5.367 / 6.629 GHz, relative at 5.286 / 6.7 GHz."""
    cell = load_tabulated_cell(data_dir / "s21_simulated_digitized.csv")
    assert three_db_bandwidth(cell, F0, 'absolute') == pytest.approx((6.628571e9 - 5.366667e9) / F0, abs=1e-4)
    assert three_db_bandwidth(cell, F0, 'relative') == pytest.approx((6.7e9 - 5.285714e9) / F0, abs=1e-4)


def test_bandwidth_stops_at_dip():
    table = _table(mag0_db=[-1.0, -1.0, -1.0, -4.0, -1.0])
    fraction = three_db_bandwidth(TabulatedCell(table), F0)
    f_hi = 5.4e9 + fraction * F0
    assert fraction < (6.0e9 - 5.4e9) / F0
    assert f_hi < 6.0e9


def test_measured_table_is_below_absolute_threshold(data_dir):
    cell = load_tabulated_cell(data_dir / "s21_measured_digitized.csv")
    with pytest.raises(ValidationError):
        three_db_bandwidth(cell, F0, 'absolute')
    assert three_db_bandwidth(cell, F0, 'relative') > 0


def test_bandwidth_rejects_unknown_reference():
    with pytest.raises(ValidationError):
        three_db_bandwidth(IdealCell(), F0, 'peak')


@pytest.mark.parametrize("overrides, field", [
    ({'freq_hz': [5.4e9, 5.6e9, 5.6e9, 6.0e9, 6.2e9]}, "freq_hz"),
    ({'mag1_db': [-1.0, 0.5, -1.0, -1.0, -1.0]}, "mag1_db"),
    ({'phase0_deg': [0.0, float('nan'), 0.0, 0.0, 0.0]}, "phase0_deg"),
    ({'mag0_db': [-1.0, -1.0]}, "freq_hz"),
])
def test_s21_table_invariants(overrides, field):
    with pytest.raises(ValidationError) as exc_info:
        _table(**overrides)
    assert exc_info.value.field == field


def test_s21_table_is_read_only():
    table = _table()
    with pytest.raises(ValueError):
        table.mag0_db[0] = 0.0


def test_missing_columns_and_files(tmp_path):
    (tmp_path / "bad.csv").write_text("freq_hz,mag0_db\n5.8e9,-1\n")
    with pytest.raises(ValidationError):
        load_tabulated_cell(tmp_path / "bad.csv")
    with pytest.raises(FileOperationError):
        load_tabulated_cell(tmp_path / "missing.csv")


def test_describe_mentions_kind():
    assert describe(IdealCell()) == "ideal"
    assert "180.0°" in describe(IdealCell(), F0)
