# src/unit_cell.py
"""
Unit-cell transmission models.

Three interchangeable models produce the complex transmission coefficient
t(state, f) of one 1-bit cell:

- IdealCell: equal magnitudes, 0° / 180°
- CircuitCell: PIN-diode loss proxy with a raised-cosine band shape, 0° / 180°
- TabulatedCell: linear interpolation of a measured or simulated S21 table

State 0 is the reference phase; state 1 is the inverted one.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Literal, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from utils.exceptions import ValidationError, OutOfBandError
from utils.load_n_save import RisDataHandler
from utils.logger import setup_logger

logger = setup_logger()

S21_COLUMNS = ['freq_hz', 'mag0_db', 'phase0_deg', 'mag1_db', 'phase1_deg']

CENTER_FREQUENCY_HZ = 5.8e9
DECLARED_BAND_HZ = (5.4e9, 6.6e9)
THRESHOLD_DROP_DB = 3.0

BandwidthReference = Literal['absolute', 'relative']


class DiodeState(Enum):
    OFF = 0
    ON = 1


def _check_positive_frequency(f: float) -> None:
    if not (math.isfinite(f) and f > 0):
        raise ValidationError(f"frequency must be > 0 Hz, got {f}", field="frequency", value=f)


def _check_state(state: int) -> int:
    if state not in (0, 1):
        raise ValidationError(f"cell state must be 0 or 1, got {state}", field="state", value=state)
    return int(state)


@dataclass(frozen=True)
class DiodeCircuitModel:
    """
    Lumped PIN-diode equivalent circuit.

    ON is a series R-L, OFF a series C-L.
    """

    on_resistance: float = 2.0
    on_inductance: float = 0.7e-12
    off_capacitance: float = 0.18e-12
    off_inductance: float = 0.7e-12

    def __post_init__(self):
        if not self.on_resistance > 0:
            raise ValidationError(f"on_resistance must be > 0, got {self.on_resistance}",
                                  field="on_resistance", value=self.on_resistance)
        for name in ('on_inductance', 'off_inductance'):
            value = getattr(self, name)
            if not value >= 0:
                raise ValidationError(f"{name} must be >= 0, got {value}", field=name, value=value)
        if not self.off_capacitance > 0:
            raise ValidationError(f"off_capacitance must be > 0, got {self.off_capacitance}",
                                  field="off_capacitance", value=self.off_capacitance)

    @property
    def off_resonance_hz(self) -> float:
        """Series resonance of the OFF branch, 1 / (2π·sqrt(L·C))."""
        return 1.0 / (2 * math.pi * math.sqrt(self.off_inductance * self.off_capacitance))


def diode_impedance(model: DiodeCircuitModel, state: DiodeState, f: float) -> complex:
    """
    Impedance of the diode equivalent circuit.

    Args:
        model: Circuit values
        state: DiodeState.ON or DiodeState.OFF
        f: Frequency in Hz

    Returns:
        ON: R + jωL; OFF: j(ωL - 1/(ωC))

    Raises:
        ValidationError: If f <= 0
    """
    _check_positive_frequency(f)
    omega = 2 * math.pi * f
    if state is DiodeState.ON:
        return complex(model.on_resistance, omega * model.on_inductance)
    return complex(0.0, omega * model.off_inductance - 1.0 / (omega * model.off_capacitance))


class UnitCellModel(ABC):
    """Per-state complex transmission of one cell."""

    kind: str = "abstract"

    @property
    def validity_band(self) -> Tuple[float, float]:
        """Frequencies (Hz) at which the model may be evaluated."""
        return 0.0, math.inf

    def check_frequency(self, f: float) -> None:
        _check_positive_frequency(f)
        lo, hi = self.validity_band
        if not lo <= f <= hi:
            raise OutOfBandError(f"{self.kind} cell model cannot be evaluated", frequency=f, band=(lo, hi))

    @abstractmethod
    def magnitude_db(self, state: int, f: float) -> float:
        """|S21| in dB."""

    @abstractmethod
    def phase_deg(self, state: int, f: float) -> float:
        """S21 phase in degrees (not reduced)."""

    def transmission(self, state: int, f: float) -> complex:
        state = _check_state(state)
        self.check_frequency(f)
        magnitude = 10 ** (self.magnitude_db(state, f) / 20)
        phase = math.radians(self.phase_deg(state, f))
        return complex(magnitude * math.cos(phase), magnitude * math.sin(phase))


@dataclass(frozen=True)
class IdealCell(UnitCellModel):
    """Lossy-but-flat 1-bit cell: same magnitude in both states, exact inversion."""

    insertion_loss: float = 0.0
    declared_band: Tuple[float, float] = DECLARED_BAND_HZ

    kind = "ideal"

    def __post_init__(self):
        if not (math.isfinite(self.insertion_loss) and self.insertion_loss >= 0):
            raise ValidationError(f"insertion_loss must be >= 0 dB, got {self.insertion_loss}",
                                  field="insertion_loss", value=self.insertion_loss)

    def magnitude_db(self, state: int, f: float) -> float:
        return -self.insertion_loss

    def phase_deg(self, state: int, f: float) -> float:
        return 180.0 if state == 1 else 0.0

    def transmission(self, state: int, f: float) -> complex:
        # exact sign flip; no trigonometry round-off
        state = _check_state(state)
        self.check_frequency(f)
        magnitude = 10 ** (-self.insertion_loss / 20)
        return complex(-magnitude, 0.0) if state == 1 else complex(magnitude, 0.0)


@dataclass(frozen=True)
class CircuitCell(UnitCellModel):
    """
    Circuit-informed cell.

    The minimum loss scales with the resistive part of the ON diode impedance
    (0.5 dB for 2 Ω). The band shape is an empirical fit, not derived from the
    circuit: a raised-cosine window in dB centred on center_frequency,
    reaching edge_loss_db of extra loss at the band edges and rolling off
    quadratically (in dB) outside them. Phases are 0° / 180°.
    """

    diode: DiodeCircuitModel = DiodeCircuitModel()
    center_frequency: float = CENTER_FREQUENCY_HZ
    band: Tuple[float, float] = DECLARED_BAND_HZ
    reference_loss_db: float = 0.5
    reference_resistance: float = 2.0
    edge_loss_db: float = 2.5

    kind = "circuit"

    def __post_init__(self):
        lo, hi = self.band
        if not lo < self.center_frequency < hi:
            raise ValidationError(f"center_frequency must lie inside the band {self.band}",
                                  field="center_frequency", value=self.center_frequency)

    @property
    def minimum_loss_db(self) -> float:
        """Loss at the band centre, proportional to Re(Z_on) of the diode."""
        dissipation = diode_impedance(self.diode, DiodeState.ON, self.center_frequency).real
        return self.reference_loss_db * dissipation / self.reference_resistance

    def band_shape_db(self, f: float) -> float:
        """Extra loss (dB, >= 0) relative to the band centre."""
        offset = f - self.center_frequency
        half_width = (self.center_frequency - self.band[0]) if offset < 0 else (self.band[1] - self.center_frequency)
        ratio = abs(offset) / half_width
        if ratio <= 1.0:
            return self.edge_loss_db * (1 - math.cos(math.pi * ratio)) / 2
        return self.edge_loss_db * (1 + (ratio - 1) ** 2)

    def magnitude_db(self, state: int, f: float) -> float:
        return -(self.minimum_loss_db + self.band_shape_db(f))

    def phase_deg(self, state: int, f: float) -> float:
        return 180.0 if state == 1 else 0.0


@dataclass(frozen=True)
class S21Table:
    """
    Two-state S21 table with strictly increasing frequencies.

    Attributes:
        freq_hz, mag0_db, phase0_deg, mag1_db, phase1_deg: Column arrays
        source: Where the table came from (for log messages)
    """

    freq_hz: np.ndarray
    mag0_db: np.ndarray
    phase0_deg: np.ndarray
    mag1_db: np.ndarray
    phase1_deg: np.ndarray
    source: str = "<memory>"

    def __post_init__(self):
        columns = {name: np.asarray(getattr(self, name), dtype=float) for name in S21_COLUMNS}
        lengths = {len(values) for values in columns.values()}
        if len(lengths) != 1:
            raise ValidationError(f"S21 table {self.source}: columns have different lengths", field="freq_hz")
        if len(columns['freq_hz']) < 2:
            raise ValidationError(f"S21 table {self.source}: at least 2 rows required", field="freq_hz")
        for name, values in columns.items():
            if not np.all(np.isfinite(values)):
                raise ValidationError(f"S21 table {self.source}: non-finite value in {name}", field=name)
        if not np.all(np.diff(columns['freq_hz']) > 0):
            raise ValidationError(f"S21 table {self.source}: frequencies must be strictly increasing",
                                  field="freq_hz")
        if columns['freq_hz'][0] <= 0:
            raise ValidationError(f"S21 table {self.source}: frequencies must be > 0", field="freq_hz")
        for name in ('mag0_db', 'mag1_db'):
            if np.any(columns[name] > 0):
                raise ValidationError(f"S21 table {self.source}: {name} must be <= 0 dB", field=name)
        for name, values in columns.items():
            values.setflags(write=False)
            object.__setattr__(self, name, values)

    @classmethod
    def from_csv(cls, path: Path) -> 'S21Table':
        """
        Load a table with header freq_hz,mag0_db,phase0_deg,mag1_db,phase1_deg.

        Raises:
            FileOperationError: If the file cannot be read
            ValidationError: If columns are missing or the data breaks an invariant
        """
        df = RisDataHandler.load_csv(path.parent, path.name, required_columns=S21_COLUMNS)
        table = cls(*(df[name].to_numpy(dtype=float) for name in S21_COLUMNS), source=path.name)
        logger.info(f"S21 table {path.name}: {len(table.freq_hz)} rows, "
                    f"{table.freq_hz[0] / 1e9:.3f}-{table.freq_hz[-1] / 1e9:.3f} GHz")
        return table


class TabulatedCell(UnitCellModel):
    """Linear interpolation of magnitude (dB) and unwrapped phase (degrees)."""

    kind = "tabulated"

    def __init__(self, table: S21Table):
        self.table = table
        self._mag = (table.mag0_db, table.mag1_db)
        # adjacent rows are assumed less than 180° apart
        self._phase = (np.unwrap(table.phase0_deg, period=360.0),
                       np.unwrap(table.phase1_deg, period=360.0))

    @property
    def validity_band(self) -> Tuple[float, float]:
        return float(self.table.freq_hz[0]), float(self.table.freq_hz[-1])

    def magnitude_db(self, state: int, f: float) -> float:
        return float(np.interp(f, self.table.freq_hz, self._mag[state]))

    def phase_deg(self, state: int, f: float) -> float:
        return float(np.interp(f, self.table.freq_hz, self._phase[state]))

    def __repr__(self) -> str:
        return f"TabulatedCell(source='{self.table.source}')"


def transmission(model: UnitCellModel, state: int, f: float) -> complex:
    """
    Complex transmission coefficient of a cell state.

    Raises:
        ValidationError: Invalid state or non-positive frequency
        OutOfBandError: Frequency outside a tabulated model's span
    """
    return model.transmission(state, f)


def insertion_loss_db(model: UnitCellModel, state: int, f: float) -> float:
    """Insertion loss (positive dB) of one state."""
    state = _check_state(state)
    model.check_frequency(f)
    return -model.magnitude_db(state, f)


def state_phase_difference(model: UnitCellModel, f: float) -> float:
    """
    Phase of state 1 minus phase of state 0, reduced to [0, 360) degrees.
    """
    model.check_frequency(f)
    difference = (model.phase_deg(1, f) - model.phase_deg(0, f)) % 360.0
    return 0.0 if difference >= 360.0 else difference


def _weaker_state_db(model: UnitCellModel, f: float) -> float:
    return min(model.magnitude_db(0, f), model.magnitude_db(1, f))


def _sample_frequencies(model: UnitCellModel, f_center: float) -> np.ndarray:
    """Nodes between which the weaker-state curve is searched for crossings."""
    if isinstance(model, TabulatedCell):
        return np.asarray(model.table.freq_hz, dtype=float)
    lo, hi = model.validity_band
    return np.linspace(max(lo, 0.5 * f_center), min(hi, 1.5 * f_center), 4001)


def three_db_bandwidth(model: UnitCellModel, f_center: float,
                       reference: BandwidthReference = 'absolute') -> float:
    """
    Fractional bandwidth over which both states stay above a threshold.

    Args:
        model: Cell model
        f_center: Centre frequency in Hz, inside the model's band
        reference: 'absolute' (threshold -3 dB) or 'relative' (3 dB below
            the best weaker-state magnitude)

    Returns:
        (f_hi - f_lo) / f_center for the contiguous interval containing f_center

    Raises:
        ValidationError: If the model's response at f_center is already below threshold
        OutOfBandError: If f_center lies outside the model's band
    """
    if reference not in ('absolute', 'relative'):
        raise ValidationError(f"reference must be 'absolute' or 'relative', got {reference!r}",
                              field="reference", value=reference)
    model.check_frequency(f_center)

    if isinstance(model, IdealCell):
        lo, hi = model.declared_band
        if not lo <= f_center <= hi:
            raise OutOfBandError("ideal cell bandwidth", frequency=f_center, band=model.declared_band)
        if reference == 'absolute' and model.insertion_loss > THRESHOLD_DROP_DB:
            raise ValidationError(f"ideal cell loss {model.insertion_loss} dB is already below -3 dB",
                                  field="f_center", value=f_center)
        return (hi - lo) / f_center

    nodes = _sample_frequencies(model, f_center)
    weaker = np.array([_weaker_state_db(model, f) for f in nodes])
    threshold = -THRESHOLD_DROP_DB if reference == 'absolute' else float(weaker.max()) - THRESHOLD_DROP_DB

    def margin(f: float) -> float:
        return _weaker_state_db(model, f) - threshold

    if margin(f_center) < 0:
        raise ValidationError(
            f"response at {f_center / 1e9:.4f} GHz is already below the {threshold:.2f} dB threshold",
            field="f_center", value=f_center
        )

    f_hi = float(nodes[-1])
    previous = f_center
    for f in nodes[nodes > f_center]:
        if margin(f) < 0:
            f_hi = brentq(margin, previous, f, xtol=1e-3)
            break
        previous = f
    else:
        logger.warning(f"Upper band edge not reached inside {model.kind} data; clipped at {f_hi / 1e9:.4f} GHz")

    f_lo = float(nodes[0])
    previous = f_center
    for f in nodes[nodes < f_center][::-1]:
        if margin(f) < 0:
            f_lo = brentq(margin, f, previous, xtol=1e-3)
            break
        previous = f
    else:
        logger.warning(f"Lower band edge not reached inside {model.kind} data; clipped at {f_lo / 1e9:.4f} GHz")

    fraction = (f_hi - f_lo) / f_center
    logger.debug(f"Bandwidth ({reference}, {threshold:.2f} dB): "
                 f"{f_lo / 1e9:.4f}-{f_hi / 1e9:.4f} GHz = {fraction:.4f}")
    return fraction


def load_tabulated_cell(path: Path) -> TabulatedCell:
    """Read an S21 CSV and wrap it as a cell model."""
    return TabulatedCell(S21Table.from_csv(path))


def describe(model: UnitCellModel, f: Optional[float] = None) -> str:
    """One-line description used in logs."""
    if f is None:
        return model.kind
    return (f"{model.kind} cell at {f / 1e9:.3f} GHz: "
            f"|t0| = {model.magnitude_db(0, f):.2f} dB, |t1| = {model.magnitude_db(1, f):.2f} dB, "
            f"Δφ = {state_phase_difference(model, f):.1f}°")
