# src/run_config.py
"""
Run configuration: flat key=value file + flag overrides -> typed objects.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from src.codebook import parse_angle_list
from src.farfield import AngularGrid, IlluminationModel, SamplingGrid, UVCuts
from src.geometry import ArrayLayout
from src.link_budget import LinkScenario
from src.unit_cell import (
    CircuitCell, DiodeCircuitModel, IdealCell, UnitCellModel, load_tabulated_cell, describe
)
from utils.config_loader import get_config_loader
from utils.exceptions import HelpfulError, ValidationError
from utils.logger import setup_logger
from utils.path_helpers import Dir, get_path, resolve_user_path

logger = setup_logger()

RUN_SCHEMA = 'ris-sim-config-schema.json'
LINK_SCHEMA = 'link-scenario-schema.json'


def parse_pair(text: str, field: str) -> Tuple[float, float]:
    """'x,y' -> (x, y)."""
    parts = [p.strip() for p in str(text).split(',')]
    if len(parts) != 2:
        raise ValidationError(f"Invalid value for '{field}': expected 'x,y', got {text!r}", field=field, value=text)
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise ValidationError(f"Invalid value for '{field}': expected two numbers, got {text!r}",
                              field=field, value=text)


def parse_set_overrides(entries: Optional[Sequence[str]]) -> Dict[str, str]:
    """
    ['feed_q=4', 'rows=8'] -> {'feed_q': '4', 'rows': '8'}.

    Raises:
        ValidationError: If an entry is not KEY=VALUE
    """
    overrides: Dict[str, str] = {}
    for entry in entries or []:
        if '=' not in entry:
            raise ValidationError(f"Invalid --set entry {entry!r}: expected KEY=VALUE", field="set", value=entry)
        key, value = (part.strip() for part in entry.split('=', 1))
        if not key:
            raise ValidationError(f"Invalid --set entry {entry!r}: empty key", field="set", value=entry)
        overrides[key] = value
    return overrides


def _config_file(path: Optional[str]) -> Optional[Path]:
    return resolve_user_path(path, Dir.CONFIG) if path else None


@dataclass(frozen=True)
class RunConfig:
    """
    Everything a pipeline command needs.

    Attributes:
        layout: Array geometry
        cell: Unit-cell model
        illumination: Feed and element pattern assumptions
        frequency: Hz
        sampling: 'angular' or 'uv'
        theta_step_deg: θ step of angular grids
        uv_samples: Samples per uv cut
        phi0_deg: Default scan plane
        fast: Use the transform evaluator
        out_dir: Output directory
        values: The validated key=value mapping
    """

    layout: ArrayLayout
    cell: UnitCellModel
    illumination: IlluminationModel
    frequency: float
    sampling: str
    theta_step_deg: float
    uv_samples: int
    phi0_deg: float
    fast: bool
    out_dir: Path
    values: Mapping[str, Any]

    def grid(self, cuts: Optional[Sequence[float]] = None) -> SamplingGrid:
        """
        Sampling grid for pattern output.

        Angular sampling covers both principal planes through phi0 unless
        explicit cuts are given; uv sampling needs cuts at multiples of 90°.
        """
        if self.sampling == 'uv':
            phis = sorted({c % 360.0 for c in cuts}) if cuts else sorted(
                {(self.phi0_deg + 90.0 * quarter) % 360.0 for quarter in range(4)})
            return UVCuts(phis, self.uv_samples)
        if cuts:
            base = AngularGrid.principal_cuts(self.phi0_deg, self.theta_step_deg)
            return AngularGrid(base.theta_deg, sorted({c % 360.0 for c in cuts}))
        return AngularGrid.principal_cuts(self.phi0_deg, self.theta_step_deg)


def build_cell_model(values: Mapping[str, Any]) -> UnitCellModel:
    """
    Raises:
        HelpfulError: If the tabulated model has no S21 file
        FileOperationError: If the S21 file is missing
    """
    model = values['model']
    if model == 'ideal':
        return IdealCell(values['insertion_loss_db'])
    if model == 'circuit':
        return CircuitCell(DiodeCircuitModel(
            on_resistance=values['diode_r_ohm'],
            on_inductance=values['diode_l_on_ph'] * 1e-12,
            off_capacitance=values['diode_c_off_pf'] * 1e-12,
            off_inductance=values['diode_l_off_ph'] * 1e-12,
        ))
    if not values.get('s21_path'):
        raise HelpfulError(
            what_went_wrong="The tabulated cell model needs an S21 table, but no s21_path was given",
            how_to_fix="Pass --s21 PATH or set s21_path in the run config (bare names are looked up in data/)",
            example="python -m src.ris_sim pattern --model tabulated --s21 s21_measured_digitized.csv --code code.txt"
        )
    return load_tabulated_cell(resolve_user_path(values['s21_path'], Dir.DATA))


def load_run_config(config_path: Optional[str] = None,
                    overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """
    Merge schema defaults, the config file and overrides, then build the model objects.

    Args:
        config_path: Optional key=value file (looked up in config/ when not found as given)
        overrides: Values that win over the file

    Raises:
        ValidationError: Bad value (the message names the key)
        OutOfBandError: Frequency outside the cell model's band
        FileOperationError: Missing config or S21 file
    """
    values = get_config_loader(RUN_SCHEMA).load(_config_file(config_path), overrides)

    layout = ArrayLayout(
        rows=values['rows'],
        cols=values['cols'],
        period=values['period_mm'] * 1e-3,
        feed_distance=values['feed_distance_mm'] * 1e-3,
        feed_offset=tuple(v * 1e-3 for v in parse_pair(values['feed_offset_mm'], 'feed_offset_mm')),
    )
    frequency = values['freq_ghz'] * 1e9
    cell = build_cell_model(values)
    cell.check_frequency(frequency)

    illumination = IlluminationModel(
        feed_q=values['feed_q'],
        element_q=values['element_q'],
        spherical_spreading=values['spherical_spreading'],
        feed_path_phase=values['feed_path_phase'],
    )
    out_dir = Path(values['out_dir']) if values.get('out_dir') else get_path(Dir.OUTPUT, '', ensure_parent=False)

    logger.info(f"Run config: {layout.rows}x{layout.cols} at {frequency / 1e9:.3f} GHz, "
                f"{describe(cell, frequency)}")
    return RunConfig(
        layout=layout,
        cell=cell,
        illumination=illumination,
        frequency=frequency,
        sampling=values['sampling'],
        theta_step_deg=values['theta_step_deg'],
        uv_samples=values['uv_samples'],
        phi0_deg=values['phi0_deg'],
        fast=values['fast'],
        out_dir=out_dir,
        values=values,
    )


def load_link_scenario(scenario_path: Optional[str] = None,
                       overrides: Optional[Mapping[str, Any]] = None) -> LinkScenario:
    """Validated LinkScenario from a key=value file plus overrides."""
    values = get_config_loader(LINK_SCHEMA).load(_config_file(scenario_path), overrides)
    return LinkScenario.from_config(values)


def cut_list(text: Optional[str]) -> List[float]:
    """'0,90' -> [0.0, 90.0]; None or empty -> []."""
    if not text:
        return []
    return parse_angle_list(text, field="cuts")
