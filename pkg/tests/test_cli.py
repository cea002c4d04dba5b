#!/usr/bin/env python3
"""
Test the ris_sim command line end to end: every sub-command, output files
and exit codes.
"""

import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.codebook import CodeMatrix
from src.control import compile_frame, load_frame
from src.ris_sim import main
from utils.load_n_save import RisDataHandler


def _key_values(path: Path) -> dict:
    return RisDataHandler.load_key_value(path.parent, path.name)


def _codebook(out: Path, theta0: str = "10") -> Path:
    assert main(["codebook", "--theta0", theta0, "--out", str(out)]) == 0
    return out / "code.txt"


def test_codebook_writes_phase_and_code(tmp_path):
    print("\n=== Test 1: codebook ===")
    code_path = _codebook(tmp_path, "0")
    code = CodeMatrix.load(code_path)
    assert code.shape == (16, 16)
    assert np.array_equal(code.values, code.values[::-1, ::-1])
    assert code_path.read_text().startswith("# theta0=0.0000 phi0=0.0000 freq_ghz=5.800000\n")

    phases = pd.read_csv(tmp_path / "phase.csv", header=None)
    assert phases.shape == (16, 16)
    assert ((phases >= 0) & (phases < 2 * np.pi)).all().all()
    print("✅ PASS: codebook outputs written")


def test_pattern_points_at_ten_degrees(tmp_path):
    code_path = _codebook(tmp_path, "10")
    assert main(["pattern", "--code", str(code_path), "--out", str(tmp_path)]) == 0

    metrics = _key_values(tmp_path / "metrics.txt")
    assert float(metrics['peak_theta_deg']) == pytest.approx(10.0, abs=2.0)
    assert metrics['hemisphere'] == 'forward'
    assert metrics['evaluator'] == 'direct'
    assert float(metrics['directivity_dbi']) < 25.91

    pattern = pd.read_csv(tmp_path / "pattern.csv")
    assert list(pattern.columns) == ['theta_deg', 'phi_deg', 'mag_db', 'real', 'imag']
    assert len(pattern) == 4 * 181
    assert pattern['mag_db'].max() == pytest.approx(0.0, abs=1e-6)


def test_all_zero_code_without_feed_terms_points_broadside(tmp_path):
    code_path = CodeMatrix.zeros(16, 16).save(tmp_path)
    assert main(["pattern", "--code", str(code_path), "--set", "feed_q=0", "--set", "spherical_spreading=false",
                 "--set", "feed_path_phase=false", "--out", str(tmp_path)]) == 0

    metrics = _key_values(tmp_path / "metrics.txt")
    assert float(metrics['peak_theta_deg']) == pytest.approx(0.0, abs=1e-3)
    assert float(metrics['directivity_dbi']) <= 25.91
    assert metrics['hpbw_scan_clipped'] == 'false'


def _run_all(out: Path) -> None:
    code_path = _codebook(out, "10")
    assert main(["pattern", "--code", str(code_path), "--out", str(out)]) == 0
    assert main(["compile-frame", "--code", str(code_path), "--out", str(out)]) == 0
    assert main(["link", "--scenario", "link-scenario_example.txt", "--out", str(out)]) == 0


def test_repeated_runs_are_byte_identical(tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    _run_all(first)
    _run_all(second)

    names = sorted(path.name for path in first.iterdir())
    assert names == sorted(path.name for path in second.iterdir())
    assert {"code.txt", "phase.csv", "pattern.csv", "metrics.txt", "frame.txt", "frame.bin", "link.txt"} <= set(names)
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_fast_flag_matches_direct_output(tmp_path):
    code_path = _codebook(tmp_path, "10")
    direct_dir, fast_dir = tmp_path / "direct", tmp_path / "fast"
    common = ["pattern", "--code", str(code_path), "--sampling", "uv", "--cuts", "0,90"]
    assert main(common + ["--out", str(direct_dir)]) == 0
    assert main(common + ["--fast", "--out", str(fast_dir)]) == 0

    direct = pd.read_csv(direct_dir / "pattern.csv")
    fast = pd.read_csv(fast_dir / "pattern.csv")
    assert len(direct) == 2 * 181
    assert (direct[['theta_deg', 'phi_deg']] == fast[['theta_deg', 'phi_deg']]).all().all()
    field_direct = direct['real'].to_numpy() + 1j * direct['imag'].to_numpy()
    field_fast = fast['real'].to_numpy() + 1j * fast['imag'].to_numpy()
    assert np.max(np.abs(field_fast - field_direct)) / np.max(np.abs(field_direct)) < 1e-9
    assert _key_values(fast_dir / "metrics.txt")['evaluator'] == 'fast'


def test_fast_needs_uv_sampling(tmp_path, capsys):
    code_path = _codebook(tmp_path, "0")
    assert main(["pattern", "--code", str(code_path), "--fast", "--out", str(tmp_path)]) == 2
    assert "uniform u-v" in capsys.readouterr().err


def test_scan_summary(tmp_path):
    """Three beams: one row each, peaks near target, scan loss at 45°."""
    print("\n=== Test 2: scan ===")
    assert main(["scan", "--thetas", "0,10,45", "--out", str(tmp_path)]) == 0

    summary = pd.read_csv(tmp_path / "summary.csv")
    assert len(summary) == 3
    assert summary['target_theta_deg'].tolist() == [0.0, 10.0, 45.0]
    assert summary['pointing_error_deg'].iloc[0] <= 2.0
    assert summary['pointing_error_deg'].iloc[1] <= 2.0
    assert summary['pointing_error_deg'].iloc[2] <= 3.0
    assert summary['directivity_dbi'].iloc[2] <= summary['directivity_dbi'].iloc[0]
    assert (summary['quantization_loss_db'] > 0).all()

    for label in ("theta_00.00", "theta_10.00", "theta_45.00"):
        for name in ("code.txt", "phase.csv", "pattern.csv", "metrics.txt"):
            assert (tmp_path / label / name).is_file()
    codes = {CodeMatrix.load(tmp_path / label / "code.txt") for label in ("theta_00.00", "theta_10.00", "theta_45.00")}
    assert len(codes) == 3
    print("✅ PASS: scan summary written")


def test_link_report(tmp_path, capsys):
    assert main(["link", "--scenario", "link-scenario_example.txt", "--out", str(tmp_path)]) == 0
    printed = capsys.readouterr().out
    values = _key_values(tmp_path / "link.txt")
    assert printed == (tmp_path / "link.txt").read_text()
    assert float(values['ris_gain_db']) == pytest.approx(
        float(values['p_with_ris_dbm']) - float(values['p_without_ris_dbm']), abs=1e-5)
    assert float(values['ris_insertion_loss_db']) == 0.0


def test_link_calibration(tmp_path, capsys):
    assert main(["link", "--calibrate", "through_wall_observations.csv", "--out", str(tmp_path)]) == 0
    values = _key_values(tmp_path / "link.txt")
    assert int(values['observations']) == 3
    assert float(values['wall_loss_db']) > 0
    for number, gain in enumerate((8.0, 7.0, 6.0), start=1):
        assert float(values[f'obs{number}_ris_gain_pred_db']) == pytest.approx(gain, abs=3.0)
    assert "rms_residual_db=" in capsys.readouterr().out


def test_compile_and_decompile(tmp_path):
    code_path = _codebook(tmp_path, "10")
    assert main(["compile-frame", "--code", str(code_path), "--out", str(tmp_path)]) == 0
    assert load_frame(tmp_path / "frame.txt") == compile_frame(CodeMatrix.load(code_path))
    assert (tmp_path / "frame.bin").stat().st_size == 32

    back = tmp_path / "back"
    assert main(["compile-frame", "--decompile", "--frame", str(tmp_path / "frame.bin"), "--out", str(back)]) == 0
    assert CodeMatrix.load(back / "code.txt") == CodeMatrix.load(code_path)


@pytest.mark.parametrize("argv, message", [
    (["codebook", "--theta0", "95"], "theta0 out of range"),
    (["codebook", "--set", "rows=abc"], "'rows'"),
    (["codebook", "--set", "rows"], "KEY=VALUE"),
    (["pattern", "--code", "missing_code.txt"], "not found"),
    (["compile-frame"], "--code"),
    (["compile-frame", "--decompile"], "--frame"),
    (["link", "--calibrate", "missing.csv"], "not found"),
])
def test_input_errors_exit_2(tmp_path, capsys, argv, message):
    assert main(argv + ["--out", str(tmp_path)]) == 2
    assert message in capsys.readouterr().err


def test_code_size_mismatch_exit_2(tmp_path, capsys):
    code_path = _codebook(tmp_path, "0")
    assert main(["pattern", "--code", str(code_path), "--set", "rows=8", "--out", str(tmp_path)]) == 2
    assert "expected 8x16, got 16x16" in capsys.readouterr().err


def test_usage_errors():
    assert main([]) == 2
    assert main(["unknown-command"]) == 2
    assert main(["scan"]) == 2
    assert main(["--help"]) == 0
