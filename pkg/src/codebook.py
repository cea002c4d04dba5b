# src/codebook.py
"""
Beam-steering codebooks.

The continuous compensation phase of element i for a beam towards
(theta0, phi0) is

    phi_i = k * (d_i - sin(theta0) * (x_i cos(phi0) + y_i sin(phi0)))  mod 2π

with d_i the feed-to-element distance. The cell adds phi_i to the incident
wave so that the transmitted aperture phase is linear and the beam points at
(theta0, phi0). 1-bit quantization rounds to the nearest of {0, π}.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.constants import c as SPEED_OF_LIGHT

from src.geometry import ArrayLayout, element_grid, feed_distances
from utils.exceptions import ValidationError, DimensionMismatchError
from utils.load_n_save import RisDataHandler, Location
from utils.logger import setup_logger

logger = setup_logger()

TWO_PI = 2 * np.pi
LOWER_THRESHOLD = np.pi / 2
UPPER_THRESHOLD = 3 * np.pi / 2


def cos_sin_deg(angle_deg: float) -> Tuple[float, float]:
    """
    cos and sin of an angle in degrees, exact for multiples of 90°.

    Example:
        > cos_sin_deg(180.0)
        (-1.0, 0.0)
    """
    reduced = angle_deg % 360.0
    exact = {0.0: (1.0, 0.0), 90.0: (0.0, 1.0), 180.0: (-1.0, 0.0), 270.0: (0.0, -1.0)}
    if reduced in exact:
        return exact[reduced]
    radians = math.radians(angle_deg)
    return math.cos(radians), math.sin(radians)


@dataclass(frozen=True)
class BeamTarget:
    """
    Main-beam direction and operating frequency.

    Attributes:
        theta0_deg: Elevation from boresight, degrees in [0, 90)
        phi0_deg: Azimuth, degrees in [0, 360)
        frequency: Hz
    """

    theta0_deg: float
    phi0_deg: float = 0.0
    frequency: float = 5.8e9

    def __post_init__(self):
        if not (math.isfinite(self.theta0_deg) and 0.0 <= self.theta0_deg < 90.0):
            raise ValidationError(f"theta0 out of range [0, 90): {self.theta0_deg}",
                                  field="theta0", value=self.theta0_deg)
        if not (math.isfinite(self.phi0_deg) and 0.0 <= self.phi0_deg < 360.0):
            raise ValidationError(f"phi0 out of range [0, 360): {self.phi0_deg}",
                                  field="phi0", value=self.phi0_deg)
        if not (math.isfinite(self.frequency) and self.frequency > 0):
            raise ValidationError(f"frequency must be > 0 Hz, got {self.frequency}",
                                  field="frequency", value=self.frequency)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency

    @property
    def wavenumber(self) -> float:
        return TWO_PI / self.wavelength

    @property
    def label(self) -> str:
        return f"theta_{self.theta0_deg:05.2f}"


class _GridMatrix:
    """Read-only rows × cols array shared by the phase and code matrices."""

    __slots__ = ['values']

    def __init__(self, values: np.ndarray):
        values = np.array(values, copy=True)
        if values.ndim != 2 or values.size == 0:
            raise ValidationError(f"{type(self).__name__} must be a non-empty 2-D grid, got shape {values.shape}",
                                  field="shape", value=values.shape)
        values.setflags(write=False)
        self.values = values

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def check_layout(self, layout: ArrayLayout) -> None:
        """
        Raises:
            DimensionMismatchError: If the grid does not match the layout
        """
        if self.shape != layout.shape:
            raise DimensionMismatchError(f"{type(self).__name__} does not match the array layout",
                                         expected=layout.shape, actual=self.shape)

    def __eq__(self, other: object) -> bool:
        return type(other) is type(self) and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.shape, self.values.tobytes()))


class PhaseMatrix(_GridMatrix):
    """Compensation phases in radians, every entry in [0, 2π)."""

    __slots__ = []

    def __init__(self, values: np.ndarray):
        super().__init__(np.asarray(values, dtype=float))
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("phase matrix has non-finite entries", field="phases")
        if np.any(self.values < 0) or np.any(self.values >= TWO_PI):
            raise ValidationError("phase matrix entries must lie in [0, 2π)", field="phases")

    def to_csv(self) -> str:
        """Row-major CSV of radians, one grid row per line, no header."""
        df = pd.DataFrame(self.values)
        return RisDataHandler.format_csv(df, formats={column: '%.15f' for column in df.columns}, header=False)

    def save(self, directory: Location, filename: str = "phase.csv") -> Path:
        return RisDataHandler.save_text(self.to_csv(), directory, filename)

    def __repr__(self) -> str:
        return f"PhaseMatrix({self.rows}x{self.cols})"


class CodeMatrix(_GridMatrix):
    """
    Binary state assignment, row 0 = smallest y.

    Bit 0 selects cell state 0 (reference phase), bit 1 selects state 1.
    """

    __slots__ = []

    def __init__(self, bits: np.ndarray):
        raw = np.asarray(bits)
        if raw.size and not np.all((raw == 0) | (raw == 1)):
            raise ValidationError("code matrix entries must be 0 or 1", field="code")
        super().__init__(raw.astype(np.uint8))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> 'CodeMatrix':
        return cls(np.zeros((rows, cols), dtype=np.uint8))

    @classmethod
    def from_text(cls, text: str, source: str = "<text>") -> 'CodeMatrix':
        """
        Parse one line of '0'/'1' characters per row.

        Blank lines and anything after '#' are ignored.

        Raises:
            ValidationError: On a bad character or ragged rows, naming line and column
        """
        rows: List[List[int]] = []
        for line_no, line in enumerate(text.splitlines(), start=1):
            content = line.split('#', 1)[0].rstrip()
            if not content.strip():
                continue
            row = []
            for col_no, char in enumerate(content, start=1):
                if char not in '01':
                    raise ValidationError(
                        f"{source}: invalid character {char!r} in code matrix (line {line_no}, column {col_no})",
                        field="code", value=char
                    )
                row.append(int(char))
            if rows and len(row) != len(rows[0]):
                raise ValidationError(
                    f"{source}: row has {len(row)} entries, expected {len(rows[0])} (line {line_no}, column 1)",
                    field="code"
                )
            rows.append(row)

        if not rows:
            raise ValidationError(f"{source}: code matrix is empty", field="code")
        return cls(np.array(rows, dtype=np.uint8))

    @classmethod
    def load(cls, path: Path) -> 'CodeMatrix':
        """Read a code matrix file."""
        code = cls.from_text(RisDataHandler.load_text(path.parent, path.name), source=path.name)
        logger.debug(f"Loaded {code.rows}x{code.cols} code matrix from {path}")
        return code

    def to_text(self, comment: Optional[str] = None) -> str:
        lines = [f"# {comment}"] if comment else []
        lines.extend("".join(str(bit) for bit in row) for row in self.values)
        return "\n".join(lines) + "\n"

    def save(self, directory: Location, filename: str = "code.txt", comment: Optional[str] = None) -> Path:
        return RisDataHandler.save_text(self.to_text(comment), directory, filename)

    @property
    def ones(self) -> int:
        return int(self.values.sum())

    def __repr__(self) -> str:
        return f"CodeMatrix({self.rows}x{self.cols}, ones={self.ones})"


def phase_compensation(layout: ArrayLayout, target: BeamTarget) -> PhaseMatrix:
    """
    Continuous compensation phase per element.

    Args:
        layout: Array layout (feed geometry included)
        target: Beam direction and frequency

    Returns:
        PhaseMatrix in [0, 2π)

    Example:
        > phase_compensation(ArrayLayout(rows=1, cols=1), BeamTarget(0.0)).values
        array([[0.1894...]])
    """
    x, y = element_grid(layout)
    cos_phi, sin_phi = cos_sin_deg(target.phi0_deg)
    sin_theta = 0.0 if target.theta0_deg == 0 else math.sin(math.radians(target.theta0_deg))

    path = feed_distances(layout) - sin_theta * (x * cos_phi + y * sin_phi)
    phases = np.mod(target.wavenumber * path, TWO_PI)
    # np.mod can round up to exactly 2π
    phases[phases >= TWO_PI] = 0.0
    return PhaseMatrix(phases)


def quantize_1bit(phases: PhaseMatrix) -> CodeMatrix:
    """
    Nearest of {0, π}: bit 1 iff π/2 <= φ < 3π/2.
    """
    values = phases.values
    return CodeMatrix(((values >= LOWER_THRESHOLD) & (values < UPPER_THRESHOLD)).astype(np.uint8))


def quantized_phases(code: CodeMatrix) -> PhaseMatrix:
    """Phases realized by a code: 0 for bit 0, π for bit 1."""
    return PhaseMatrix(code.values.astype(float) * np.pi)


def codebook_for(layout: ArrayLayout, target: BeamTarget) -> Tuple[PhaseMatrix, CodeMatrix]:
    """Phase matrix and its 1-bit code for one target."""
    phases = phase_compensation(layout, target)
    code = quantize_1bit(phases)
    logger.debug(f"Codebook θ0={target.theta0_deg}° φ0={target.phi0_deg}° "
                 f"f={target.frequency / 1e9:.3f} GHz: {code.ones}/{layout.element_count} cells in state 1")
    return phases, code


def scan_codebook(layout: ArrayLayout, targets: Sequence[BeamTarget]) -> List[CodeMatrix]:
    """
    One 1-bit code matrix per target, in input order.

    Raises:
        ValidationError: If targets is empty
    """
    if not targets:
        raise ValidationError("scan needs at least one beam target", field="targets", value=[])
    return [codebook_for(layout, target)[1] for target in targets]


def parse_angle_list(text: Union[str, Sequence[float]], field: str = "thetas") -> List[float]:
    """
    Parse '0,10,45' into [0.0, 10.0, 45.0].

    Raises:
        ValidationError: If the list is empty or an entry is not a number
    """
    if not isinstance(text, str):
        values = [float(v) for v in text]
    else:
        values = []
        for part in text.split(','):
            part = part.strip()
            if not part:
                continue
            try:
                values.append(float(part))
            except ValueError:
                raise ValidationError(f"Invalid value for '{field}': {part!r} is not a number",
                                      field=field, value=part)
    if not values:
        raise ValidationError(f"Invalid value for '{field}': angle list is empty", field=field, value=text)
    return values
