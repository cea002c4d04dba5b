# src/link_budget.py
"""
Through-wall link budget with and without the transmissive surface.

Direct path:   Pt + Gt + Gr - FSPL(d_direct) - wall_loss
Relay path:    Pt + Gt - FSPL(d1) + 10·log10(4πA/λ²) - IL      (captured by the aperture)
               + D_ris - FSPL(d2) + Gr + system_offset         (re-radiated to the receiver)

The relay path ignores any leakage through the wall; the two paths are not
combined coherently. Gains are ratios and reported in dB.
"""

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from utils.exceptions import ValidationError, CalibrationError
from utils.load_n_save import RisDataHandler
from utils.logger import setup_logger

logger = setup_logger()

OBSERVATION_COLUMNS = ['d1_m', 'p_without_dbm', 'p_with_dbm']
RESIDUAL_TOLERANCE_DB = 3.0


def wavelength(f: float) -> float:
    return SPEED_OF_LIGHT / f


def free_space_path_loss_db(distance: float, f: float) -> float:
    """
    20·log10(4π·d·f / c).

    Raises:
        ValidationError: If distance or frequency is not positive
    """
    if not (math.isfinite(distance) and distance > 0):
        raise ValidationError(f"distance must be > 0 m, got {distance}", field="distance", value=distance)
    if not (math.isfinite(f) and f > 0):
        raise ValidationError(f"frequency must be > 0 Hz, got {f}", field="frequency", value=f)
    return 20.0 * math.log10(4 * math.pi * distance * f / SPEED_OF_LIGHT)


def aperture_gain_db(area: float, f: float) -> float:
    """Capture gain 10·log10(4πA/λ²) of an aperture of area A; -inf for A = 0."""
    if area <= 0:
        return -math.inf
    return 10.0 * math.log10(4 * math.pi * area / wavelength(f) ** 2)


def far_field_distance(area: float, f: float) -> float:
    """2D²/λ with D the diagonal of a square aperture of area A."""
    diagonal_sq = 2.0 * area
    return 2.0 * diagonal_sq / wavelength(f)


@dataclass(frozen=True)
class LinkScenario:
    """
    Geometry, gains and losses of the through-wall link.

    Attributes:
        tx_power_dbm: Transmit power
        tx_gain_dbi, rx_gain_dbi: Antenna gains
        d1: Tx antenna to surface, metres
        d2: Surface to Rx antenna, metres
        direct_distance: Tx to Rx through the wall; None means d1 + d2
        wall_loss_db: Wall attenuation on the direct path
        frequency: Hz
        ris_directivity_dbi: Re-radiation directivity of the surface (None until computed)
        ris_insertion_loss_db: Loss applied once on the relay path
        ris_aperture_area: Active aperture area, m²
        system_offset_db: Additive constant on the relay path (fitted by calibrate)
    """

    tx_power_dbm: float = 0.0
    tx_gain_dbi: float = 0.0
    rx_gain_dbi: float = 0.0
    d1: float = 1.0
    d2: float = 0.3
    direct_distance: Optional[float] = None
    wall_loss_db: float = 10.0
    frequency: float = 5.8e9
    ris_directivity_dbi: Optional[float] = None
    ris_insertion_loss_db: float = 0.0
    ris_aperture_area: float = 0.082944
    system_offset_db: float = 0.0

    def __post_init__(self):
        for name in ('d1', 'd2'):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be > 0 m, got {value}", field=name, value=value)
        if self.direct_distance is not None and not (math.isfinite(self.direct_distance) and self.direct_distance > 0):
            raise ValidationError(f"direct_distance must be > 0 m, got {self.direct_distance}",
                                  field="direct_distance", value=self.direct_distance)
        if not (math.isfinite(self.wall_loss_db) and self.wall_loss_db >= 0):
            raise ValidationError(f"wall_loss must be >= 0 dB, got {self.wall_loss_db}",
                                  field="wall_loss", value=self.wall_loss_db)
        if not (math.isfinite(self.frequency) and self.frequency > 0):
            raise ValidationError(f"frequency must be > 0 Hz, got {self.frequency}",
                                  field="frequency", value=self.frequency)
        if not (math.isfinite(self.ris_aperture_area) and self.ris_aperture_area >= 0):
            raise ValidationError(f"ris_aperture_area must be >= 0 m², got {self.ris_aperture_area}",
                                  field="ris_aperture_area", value=self.ris_aperture_area)
        for name in ('tx_power_dbm', 'tx_gain_dbi', 'rx_gain_dbi', 'ris_insertion_loss_db', 'system_offset_db'):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite", field=name, value=getattr(self, name))

    @classmethod
    def from_config(cls, values: Mapping[str, Any]) -> 'LinkScenario':
        """Build from validated link-scenario config keys (distances in m, frequency in GHz)."""
        return cls(
            tx_power_dbm=values['tx_power_dbm'],
            tx_gain_dbi=values['tx_gain_dbi'],
            rx_gain_dbi=values['rx_gain_dbi'],
            d1=values['d1_m'],
            d2=values['d2_m'],
            direct_distance=values.get('direct_distance_m'),
            wall_loss_db=values['wall_loss_db'],
            frequency=values['freq_ghz'] * 1e9,
            ris_directivity_dbi=values.get('ris_directivity_dbi'),
            ris_insertion_loss_db=values['ris_insertion_loss_db'],
            ris_aperture_area=values['ris_aperture_area_m2'],
            system_offset_db=values['system_offset_db'],
        )

    @property
    def direct_path(self) -> float:
        return self.direct_distance if self.direct_distance is not None else self.d1 + self.d2

    def replace(self, **changes: Any) -> 'LinkScenario':
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class LinkResult:
    """Received powers (dBm) with and without the surface."""

    p_without_ris: float
    p_with_ris: float

    def __post_init__(self):
        if not (math.isfinite(self.p_without_ris) and math.isfinite(self.p_with_ris)):
            raise ValidationError("link result is not finite; check aperture area and distances",
                                  field="ris_aperture_area")

    @property
    def ris_gain(self) -> float:
        return self.p_with_ris - self.p_without_ris


def received_power_direct(s: LinkScenario) -> float:
    """Power at the receiver through the wall, dBm."""
    return (s.tx_power_dbm + s.tx_gain_dbi + s.rx_gain_dbi
            - free_space_path_loss_db(s.direct_path, s.frequency) - s.wall_loss_db)


def _require_directivity(s: LinkScenario) -> float:
    if s.ris_directivity_dbi is None or not math.isfinite(s.ris_directivity_dbi):
        raise ValidationError("ris_directivity_dbi is not set", field="ris_directivity_dbi",
                              value=s.ris_directivity_dbi)
    return s.ris_directivity_dbi


def received_power_via_ris(s: LinkScenario) -> float:
    """
    Power at the receiver over the surface relay, dBm.

    Returns -inf for a zero aperture area.

    Raises:
        ValidationError: If ris_directivity_dbi is not set
    """
    captured = (s.tx_power_dbm + s.tx_gain_dbi - free_space_path_loss_db(s.d1, s.frequency)
                + aperture_gain_db(s.ris_aperture_area, s.frequency) - s.ris_insertion_loss_db)
    return (captured + _require_directivity(s) - free_space_path_loss_db(s.d2, s.frequency)
            + s.rx_gain_dbi + s.system_offset_db)


def near_field_warnings(s: LinkScenario) -> List[str]:
    """Messages for surface hops shorter than the far-field distance."""
    limit = far_field_distance(s.ris_aperture_area, s.frequency)
    return [f"{name} = {value:.3f} m is inside the surface near field (2D²/λ = {limit:.2f} m); "
            f"relay estimate is approximate"
            for name, value in (('d1', s.d1), ('d2', s.d2)) if value < limit]


def evaluate(s: LinkScenario) -> LinkResult:
    """Both received powers, logging a warning when the geometry is near-field."""
    for message in near_field_warnings(s):
        logger.warning(message)
    result = LinkResult(received_power_direct(s), received_power_via_ris(s))
    logger.debug(f"Link d1={s.d1} m: without {result.p_without_ris:.2f} dBm, "
                 f"with {result.p_with_ris:.2f} dBm, gain {result.ris_gain:.2f} dB")
    return result


def link_report(s: LinkScenario, result: LinkResult) -> Dict[str, Any]:
    """Flat result block for key=value export."""
    return {
        'freq_ghz': s.frequency / 1e9,
        'd1_m': s.d1,
        'd2_m': s.d2,
        'direct_distance_m': s.direct_path,
        'wall_loss_db': s.wall_loss_db,
        'ris_directivity_dbi': s.ris_directivity_dbi,
        'ris_insertion_loss_db': s.ris_insertion_loss_db,
        'aperture_gain_db': aperture_gain_db(s.ris_aperture_area, s.frequency),
        'system_offset_db': s.system_offset_db,
        'far_field_distance_m': far_field_distance(s.ris_aperture_area, s.frequency),
        'p_without_ris_dbm': result.p_without_ris,
        'p_with_ris_dbm': result.p_with_ris,
        'ris_gain_db': result.ris_gain,
    }


@dataclass(frozen=True)
class Observation:
    """One measured row: Tx distance and powers with and without the surface."""
    d1: float
    p_without: float
    p_with: float


@dataclass
class CalibrationResult:
    """
    Fitted scenario and per-observation residuals (predicted - observed, dB).

    residuals has one row per observation: (without, with).
    """

    scenario: LinkScenario
    observations: List[Observation]
    predicted: np.ndarray
    residuals: np.ndarray
    degenerate: bool = False

    @property
    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.residuals ** 2)))

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.residuals)))

    @property
    def predicted_gains(self) -> np.ndarray:
        return self.predicted[:, 1] - self.predicted[:, 0]

    def to_dict(self) -> Dict[str, Any]:
        values: Dict[str, Any] = {
            'wall_loss_db': self.scenario.wall_loss_db,
            'system_offset_db': self.scenario.system_offset_db,
            'd2_m': self.scenario.d2,
            'ris_directivity_dbi': self.scenario.ris_directivity_dbi,
            'observations': len(self.observations),
            'rms_residual_db': self.rms,
            'max_abs_residual_db': self.max_abs,
            'degenerate': self.degenerate,
        }
        for number, (obs, predicted, residual) in enumerate(
                zip(self.observations, self.predicted, self.residuals), start=1):
            values[f'obs{number}_d1_m'] = obs.d1
            values[f'obs{number}_p_without_pred_dbm'] = predicted[0]
            values[f'obs{number}_residual_without_db'] = residual[0]
            values[f'obs{number}_p_with_pred_dbm'] = predicted[1]
            values[f'obs{number}_residual_with_db'] = residual[1]
            values[f'obs{number}_ris_gain_pred_db'] = predicted[1] - predicted[0]
            values[f'obs{number}_ris_gain_meas_db'] = obs.p_with - obs.p_without
        return values


def _predict(scenario: LinkScenario, observations: Sequence[Observation]) -> np.ndarray:
    rows = []
    for obs in observations:
        s = scenario.replace(d1=obs.d1)
        rows.append((received_power_direct(s), received_power_via_ris(s)))
    return np.array(rows, dtype=float)


def calibrate(observations: Sequence[Observation], template: LinkScenario,
              fit_offset: bool = True) -> CalibrationResult:
    """
    Least-squares fit of wall loss (direct path) and system offset (relay path).

    Args:
        observations: Measured rows, at least one
        template: Scenario supplying every other parameter; its d1 is replaced per row
        fit_offset: Fit system_offset_db too (otherwise the template value is kept)

    Returns:
        CalibrationResult with the fitted scenario

    Raises:
        CalibrationError: If there are no observations or the fitted wall loss is negative
    """
    if not observations:
        raise CalibrationError("calibration needs at least one observation", field="observations")
    _require_directivity(template)

    base = _predict(template.replace(wall_loss_db=0.0, system_offset_db=0.0), observations)
    measured = np.array([(obs.p_without, obs.p_with) for obs in observations], dtype=float)

    count = len(observations)
    design = np.zeros((2 * count, 2))
    target = np.zeros(2 * count)
    design[:count, 0] = -1.0
    target[:count] = measured[:, 0] - base[:, 0]
    if fit_offset:
        design[count:, 1] = 1.0
        target[count:] = measured[:, 1] - base[:, 1]
        solution, *_ = np.linalg.lstsq(design, target, rcond=None)
        wall_loss, offset = float(solution[0]), float(solution[1])
    else:
        solution, *_ = np.linalg.lstsq(design[:count, :1], target[:count], rcond=None)
        wall_loss, offset = float(solution[0]), template.system_offset_db

    degenerate = count > 1 and bool(np.all(measured == measured[0])) and len({obs.d1 for obs in observations}) == 1
    if degenerate:
        logger.warning("All calibration observations are identical; the fit is determined by a single point")

    if wall_loss < 0:
        raise CalibrationError(
            f"fitted wall loss is negative ({wall_loss:.2f} dB); the direct-path data are stronger than "
            f"free space for this template",
            field="wall_loss", value=wall_loss
        )

    scenario = template.replace(wall_loss_db=wall_loss, system_offset_db=offset)
    predicted = _predict(scenario, observations)
    result = CalibrationResult(scenario, list(observations), predicted, predicted - measured, degenerate)

    logger.info(f"Calibrated wall loss {wall_loss:.3f} dB, system offset {offset:.3f} dB "
                f"(rms {result.rms:.3f} dB, max {result.max_abs:.3f} dB)")
    if result.max_abs > RESIDUAL_TOLERANCE_DB:
        logger.warning(f"Largest calibration residual {result.max_abs:.2f} dB exceeds "
                       f"{RESIDUAL_TOLERANCE_DB:.0f} dB; the data trend is not free-space-like")
    for message in near_field_warnings(scenario.replace(d1=min(obs.d1 for obs in observations))):
        logger.warning(message)
    return result


def load_observations(path: Path) -> List[Observation]:
    """
    Read d1_m,p_without_dbm,p_with_dbm rows.

    Raises:
        FileOperationError: If the file cannot be read
        ValidationError: If columns are missing or a distance is not positive
        CalibrationError: If the file has no rows
    """
    df = RisDataHandler.load_csv(path.parent, path.name, required_columns=OBSERVATION_COLUMNS)
    if df.empty:
        raise CalibrationError(f"{path.name}: no observations", field="observations")
    observations = [Observation(float(row.d1_m), float(row.p_without_dbm), float(row.p_with_dbm))
                    for row in df.itertuples(index=False)]
    for number, obs in enumerate(observations, start=1):
        if not (math.isfinite(obs.d1) and obs.d1 > 0):
            raise ValidationError(f"{path.name}: d1_m must be > 0 in row {number}", field="d1_m", value=obs.d1)
        if not (math.isfinite(obs.p_without) and math.isfinite(obs.p_with)):
            raise ValidationError(f"{path.name}: non-finite power in row {number}", field="p_dbm")
    logger.info(f"Loaded {len(observations)} observations from {path.name}")
    return observations
