# src/ris_sim.py
"""
Transmissive RIS simulator command line.

Usage:
    python -m src.ris_sim <command> [options]

Commands:
    codebook       Phase compensation and 1-bit code for one beam direction
    pattern        Far-field pattern and metrics of a code matrix
    scan           codebook + pattern for a list of beam angles, with summary.csv
    link           Link budget with and without the surface, or calibration
    compile-frame  Code matrix -> bias-line control frame (or back with --decompile)

Example:
    python -m src.ris_sim codebook --theta0 10 --out output/theta10
    python -m src.ris_sim pattern --code output/theta10/code.txt --out output/theta10
    python -m src.ris_sim scan --thetas 0,10,45 --out output/scan
    python -m src.ris_sim link --calibrate through_wall_observations.csv
    python -m src.ris_sim compile-frame --code output/theta10/code.txt

Exit codes: 0 success, 2 input or validation error, 3 numerical failure.
"""

import argparse
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.codebook import BeamTarget, CodeMatrix, PhaseMatrix, codebook_for, parse_angle_list
from src.control import compile_frame, decompile_frame, from_bytes, load_frame, save_frame
from src.farfield import (
    ApertureSource, FarFieldPattern, PatternMetrics, directivity, metrics,
    radiate_source, radiate_source_fast, to_dbi
)
from src.link_budget import calibrate, evaluate, link_report, load_observations, LinkScenario
from src.run_config import (
    RunConfig, cut_list, load_link_scenario, load_run_config, parse_set_overrides
)
from src.unit_cell import insertion_loss_db
from utils.concurrency import ProgressTracker
from utils.exceptions import ValidationError
from utils.load_n_save import RisDataHandler
from utils.logger import setup_logger
from utils.path_helpers import Dir, resolve_user_path
from utils.script_runner import ArgumentDefinition, ScriptRunner

logger = setup_logger()

SUMMARY_FORMATS = {
    'target_theta_deg': '%.4f',
    'target_phi_deg': '%.4f',
    'peak_theta_deg': '%.4f',
    'peak_phi_deg': '%.4f',
    'pointing_error_deg': '%.4f',
    'hpbw_scan_deg': '%.4f',
    'hpbw_cross_deg': '%.4f',
    'sll_db': '%.4f',
    'directivity_dbi': '%.4f',
    'continuous_directivity_dbi': '%.4f',
    'quantization_loss_db': '%.4f',
}

COMMON_ARGS = [
    ArgumentDefinition('config', str, "Run config file (key=value)", required=False, metavar='PATH'),
    ArgumentDefinition('freq_ghz', float, "Operating frequency in GHz", required=False),
    ArgumentDefinition('out', str, "Output directory", required=False, metavar='DIR'),
    ArgumentDefinition('model', str, "Unit-cell model", choices=['ideal', 'circuit', 'tabulated'], required=False),
    ArgumentDefinition('s21', str, "S21 table for the tabulated model", required=False, metavar='PATH'),
    ArgumentDefinition('fast', help="Use the transform evaluator (uv sampling)", required=False,
                       action='store_true'),
    ArgumentDefinition('set', str, "Override any config key", required=False, action='append',
                       metavar='KEY=VALUE'),
]

runner = ScriptRunner(__doc__.split('\n\n')[0].strip(), COMMON_ARGS)


def config_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """--set entries first, then the named flags (which win)."""
    overrides: Dict[str, Any] = dict(parse_set_overrides(args.set))
    named = {
        'freq_ghz': args.freq_ghz,
        'model': args.model,
        's21_path': args.s21,
        'fast': True if args.fast else None,
        'out_dir': args.out,
    }
    overrides.update({key: value for key, value in named.items() if value is not None})
    return overrides


def run_config(args: argparse.Namespace) -> RunConfig:
    return load_run_config(args.config, config_overrides(args))


def _pattern(cfg: RunConfig, source: ApertureSource, cuts: Sequence[float]) -> FarFieldPattern:
    grid = cfg.grid(cuts)
    return radiate_source_fast(source, grid) if cfg.fast else radiate_source(source, grid)


def _metrics_block(cfg: RunConfig, result: PatternMetrics) -> Dict[str, Any]:
    block: Dict[str, Any] = {
        'freq_ghz': cfg.frequency / 1e9,
        'model': cfg.cell.kind,
        'evaluator': 'fast' if cfg.fast else 'direct',
    }
    block.update(result.to_dict())
    return block


def _pointing_error_deg(theta_a: float, phi_a: float, theta_b: float, phi_b: float) -> float:
    """Great-circle angle between two directions, degrees."""
    a = np.radians([theta_a, phi_a])
    b = np.radians([theta_b, phi_b])
    cosine = (math.sin(a[0]) * math.sin(b[0]) * math.cos(a[1] - b[1]) + math.cos(a[0]) * math.cos(b[0]))
    return math.degrees(math.acos(min(1.0, max(-1.0, cosine))))


def write_codebook(cfg: RunConfig, target: BeamTarget, out_dir: Path) -> Tuple[PhaseMatrix, CodeMatrix]:
    phases, code = codebook_for(cfg.layout, target)
    phases.save(out_dir, "phase.csv")
    code.save(out_dir, "code.txt", comment=(f"theta0={target.theta0_deg:.4f} phi0={target.phi0_deg:.4f} "
                                            f"freq_ghz={target.frequency / 1e9:.6f}"))
    return phases, code


@runner.command("codebook", "Phase compensation and 1-bit code for one beam direction", [
    ArgumentDefinition('theta0', float, "Beam elevation in degrees [0, 90)", default=0.0, required=False),
    ArgumentDefinition('phi0', float, "Beam azimuth in degrees [0, 360) (default: config phi0_deg)",
                       required=False),
])
def cmd_codebook(args: argparse.Namespace) -> None:
    cfg = run_config(args)
    phi0 = cfg.phi0_deg if args.phi0 is None else args.phi0
    target = BeamTarget(args.theta0, phi0, cfg.frequency)
    _, code = write_codebook(cfg, target, cfg.out_dir)
    logger.info(f"✅ Codebook θ0={target.theta0_deg}° φ0={phi0}°: {code.ones} cells in state 1 -> {cfg.out_dir}")


@runner.command("pattern", "Far-field pattern and metrics of a code matrix", [
    ArgumentDefinition('code', str, "Code matrix file", option=True, metavar='PATH'),
    ArgumentDefinition('cuts', str, "Comma-separated phi cuts in degrees (default: principal planes)",
                       required=False, metavar='PHI,...'),
    ArgumentDefinition('sampling', str, "Grid type", choices=['angular', 'uv'], required=False),
])
def cmd_pattern(args: argparse.Namespace) -> None:
    overrides = {'sampling': args.sampling} if args.sampling else {}
    cfg = load_run_config(args.config, {**config_overrides(args), **overrides})
    code = CodeMatrix.load(resolve_user_path(args.code, Dir.OUTPUT))

    source = ApertureSource.from_code(cfg.layout, cfg.cell, cfg.illumination, code, cfg.frequency)
    pattern = _pattern(cfg, source, cut_list(args.cuts))
    pattern.save_csv(cfg.out_dir, "pattern.csv")

    result = metrics(pattern)
    RisDataHandler.save_key_value(_metrics_block(cfg, result), cfg.out_dir, "metrics.txt")
    logger.info(f"✅ Pattern: peak ({result.peak_theta_deg:.2f}°, {result.peak_phi_deg:.2f}°), "
                f"{result.directivity_dbi:.2f} dBi -> {cfg.out_dir}")


def scan_target(cfg: RunConfig, target: BeamTarget, out_dir: Path) -> Dict[str, float]:
    """codebook + pattern for one target; returns its summary row."""
    phases, code = write_codebook(cfg, target, out_dir)

    source = ApertureSource.from_code(cfg.layout, cfg.cell, cfg.illumination, code, cfg.frequency)
    pattern = _pattern(cfg, source, [])
    pattern.save_csv(out_dir, "pattern.csv")
    result = metrics(pattern)
    RisDataHandler.save_key_value(_metrics_block(cfg, result), out_dir, "metrics.txt")

    continuous = ApertureSource.from_phases(cfg.layout, cfg.cell, cfg.illumination, phases, cfg.frequency)
    continuous_dbi = to_dbi(directivity(continuous))

    return {
        'target_theta_deg': target.theta0_deg,
        'target_phi_deg': target.phi0_deg,
        'peak_theta_deg': result.peak_theta_deg,
        'peak_phi_deg': result.peak_phi_deg,
        'pointing_error_deg': _pointing_error_deg(result.peak_theta_deg, result.peak_phi_deg,
                                                  target.theta0_deg, target.phi0_deg),
        'hpbw_scan_deg': result.hpbw_deg['scan'],
        'hpbw_cross_deg': result.hpbw_deg['cross'],
        'sll_db': result.sidelobe_level_db,
        'directivity_dbi': result.directivity_dbi,
        'continuous_directivity_dbi': continuous_dbi,
        'quantization_loss_db': continuous_dbi - result.directivity_dbi,
    }


@runner.command("scan", "Codebook and pattern for a list of beam angles", [
    ArgumentDefinition('thetas', str, "Comma-separated beam elevations in degrees", option=True,
                       metavar='T1,T2,...'),
    ArgumentDefinition('phi0', float, "Scan plane azimuth in degrees (default: config phi0_deg)", required=False),
])
def cmd_scan(args: argparse.Namespace) -> None:
    thetas = parse_angle_list(args.thetas, field="thetas")
    cfg = run_config(args)
    phi0 = cfg.phi0_deg if args.phi0 is None else args.phi0
    targets = [BeamTarget(theta, phi0, cfg.frequency) for theta in thetas]

    rows: List[Dict[str, float]] = []
    with ProgressTracker(len(targets), "Scanning", show_progress=sys.stderr.isatty()) as tracker:
        for target in targets:
            rows.append(scan_target(cfg, target, cfg.out_dir / target.label))
            tracker.update()

    RisDataHandler.save_csv(pd.DataFrame(rows, columns=list(SUMMARY_FORMATS)), cfg.out_dir, "summary.csv",
                            formats=SUMMARY_FORMATS)
    worst = max(row['pointing_error_deg'] for row in rows)
    logger.info(f"✅ Scan of {len(rows)} beams complete (worst pointing error {worst:.2f}°) -> {cfg.out_dir}")


def _scenario_with_directivity(args: argparse.Namespace, scenario: LinkScenario) -> LinkScenario:
    """Fill ris_directivity_dbi from the boresight codebook when the scenario leaves it unset."""
    if scenario.ris_directivity_dbi is not None:
        return scenario
    cfg = run_config(args)
    _, code = codebook_for(cfg.layout, BeamTarget(0.0, cfg.phi0_deg, scenario.frequency))
    source = ApertureSource.from_code(cfg.layout, cfg.cell, cfg.illumination, code, scenario.frequency)
    cell_loss = max(insertion_loss_db(cfg.cell, state, scenario.frequency) for state in (0, 1))
    # cell loss moves into the directivity so it is counted once
    ris_directivity = to_dbi(directivity(source)) - cell_loss
    logger.info(f"RIS directivity from boresight codebook: {ris_directivity:.2f} dBi (cell loss {cell_loss:.2f} dB)")
    return scenario.replace(ris_directivity_dbi=ris_directivity, ris_insertion_loss_db=0.0)


@runner.command("link", "Link budget with and without the surface, or calibration", [
    ArgumentDefinition('scenario', str, "Link scenario file (key=value)", required=False, metavar='PATH'),
    ArgumentDefinition('calibrate', str, "Observations CSV (d1_m,p_without_dbm,p_with_dbm)", required=False,
                       metavar='PATH'),
    ArgumentDefinition('no_offset', help="Fit the wall loss only", required=False, action='store_true'),
])
def cmd_link(args: argparse.Namespace) -> None:
    link_overrides = {'freq_ghz': args.freq_ghz} if args.freq_ghz is not None else {}
    scenario = _scenario_with_directivity(args, load_link_scenario(args.scenario, link_overrides))
    out_dir = Path(args.out) if args.out else run_config(args).out_dir

    if args.calibrate:
        observations = load_observations(resolve_user_path(args.calibrate, Dir.DATA))
        result = calibrate(observations, scenario, fit_offset=not args.no_offset)
        block = result.to_dict()
    else:
        block = link_report(scenario, evaluate(scenario))

    text = RisDataHandler.format_key_value(block)
    RisDataHandler.save_text(text, out_dir, "link.txt")
    print(text, end="")


@runner.command("compile-frame", "Code matrix to bias-line control frame, or back", [
    ArgumentDefinition('code', str, "16x16 code matrix file", required=False, metavar='PATH'),
    ArgumentDefinition('decompile', help="Frame -> code.txt", required=False, action='store_true'),
    ArgumentDefinition('frame', str, "Frame file (frame.txt or frame.bin) for --decompile", required=False,
                       metavar='PATH'),
])
def cmd_compile(args: argparse.Namespace) -> None:
    out_dir = Path(args.out) if args.out else run_config(args).out_dir

    if args.decompile:
        if not args.frame:
            raise ValidationError("Invalid value for 'frame': --decompile needs --frame PATH", field="frame")
        path = resolve_user_path(args.frame, Dir.OUTPUT)
        if path.suffix == '.bin':
            frame = from_bytes(RisDataHandler.load_binary(path.parent, path.name))
        else:
            frame = load_frame(path)
        decompile_frame(frame).save(out_dir, "code.txt")
        logger.info(f"✅ Decompiled {path.name} -> {out_dir / 'code.txt'}")
        return

    if not args.code:
        raise ValidationError("Invalid value for 'code': compile-frame needs --code PATH", field="code")
    frame = compile_frame(CodeMatrix.load(resolve_user_path(args.code, Dir.OUTPUT)))
    save_frame(frame, out_dir)
    logger.info(f"✅ Compiled frame ({frame!r}) -> {out_dir}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    return runner.run(argv)


def cli() -> None:
    sys.exit(main())


if __name__ == "__main__":
    cli()
