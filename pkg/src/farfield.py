# src/farfield.py
"""
Far-field pattern of the space-fed, coded aperture.

Each element re-radiates the feed wave it receives, weighted by the cell
transmission for its state:

    a_i = cos^q(θf_i) · s_i · e^(-jk d_i) · t(state_i, f)
    E(u, v) = cos^qe(θ) · Σ_i a_i · e^(+jk (x_i u + y_i v))

with u = sinθ cosφ and v = sinθ sinφ. The sum is separable on the
rectangular grid, which both the direct evaluator (matrix transforms) and
the fast evaluator (chirp-z transforms on uniform u-v samples) exploit.
Only the forward hemisphere (z >= 0) radiates.
"""

import math
from abc import ABC, abstractmethod
import dataclasses
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.integrate import trapezoid
from scipy.signal import czt

from src.codebook import CodeMatrix, PhaseMatrix, cos_sin_deg
from src.geometry import ArrayLayout, feed_distances
from src.unit_cell import UnitCellModel
from utils.concurrency import parallel_map
from utils.exceptions import (
    ValidationError, NonUniformGridError, NumericalError, MainLobeClippedError
)
from utils.load_n_save import RisDataHandler, Location
from utils.logger import setup_logger

logger = setup_logger()

CHUNK_SIZE = 4096
DB_FLOOR = -300.0
HALF_POWER_DB = -3.0
LOBE_NULL_DB = -10.0

REFINE_STEP_DEG = 0.05
REFINE_THETA_SPAN_DEG = 1.0
REFINE_PHI_SPAN_DEG = 2.0
REFINE_PHI_MIN_THETA_DEG = 0.5
CUT_SAMPLES = 3601

DIRECTIVITY_THETA_STEP_DEG = 0.5
DIRECTIVITY_PHI_STEP_DEG = 1.0

CUT_NAMES = ("scan", "cross")

PATTERN_FORMATS = {
    'theta_deg': '%.4f',
    'phi_deg': '%.4f',
    'mag_db': '%.6f',
    'real': '%.12e',
    'imag': '%.12e',
}


def exact_cos_sin(angle_deg: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Element-wise cos/sin of degrees, exact at multiples of 90°."""
    angle_deg = np.asarray(angle_deg, dtype=float)
    reduced = np.mod(angle_deg, 360.0)
    radians = np.radians(angle_deg)
    quadrants = [reduced == 0.0, reduced == 90.0, reduced == 180.0, reduced == 270.0]
    cos = np.select(quadrants, [1.0, 0.0, -1.0, 0.0], default=np.cos(radians))
    sin = np.select(quadrants, [0.0, 1.0, 0.0, -1.0], default=np.sin(radians))
    return cos, sin


def direction_cosines(theta_deg: np.ndarray, phi_deg: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(u, v, cosθ) for spherical angles in degrees."""
    cos_t, sin_t = exact_cos_sin(theta_deg)
    cos_p, sin_p = exact_cos_sin(phi_deg)
    return sin_t * cos_p, sin_t * sin_p, cos_t


@dataclass(frozen=True)
class IlluminationModel:
    """
    Feed and element pattern assumptions.

    Attributes:
        feed_q: Feed pattern exponent (cos^q of the feed off-axis angle)
        element_q: Element pattern exponent (cos^qe θ)
        spherical_spreading: Weight elements by 1/d_i
        feed_path_phase: Include the e^(-jk d_i) feed path phase
    """

    feed_q: float = 6.0
    element_q: float = 1.0
    spherical_spreading: bool = True
    feed_path_phase: bool = True

    def __post_init__(self):
        for name in ('feed_q', 'element_q'):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValidationError(f"{name} must be finite and >= 0, got {value}", field=name, value=value)

    @classmethod
    def uniform(cls, element_q: float = 0.0) -> 'IlluminationModel':
        """Feed terms disabled: every element sees the same unit excitation."""
        return cls(feed_q=0.0, element_q=element_q, spherical_spreading=False, feed_path_phase=False)


def feed_illumination(layout: ArrayLayout, illum: IlluminationModel, wavenumber: float) -> np.ndarray:
    """Complex feed wave arriving at each element, shape (rows, cols)."""
    d = feed_distances(layout)
    amplitude = (layout.feed_distance / d) ** illum.feed_q
    if illum.spherical_spreading:
        amplitude = amplitude / d
    if illum.feed_path_phase:
        return amplitude * np.exp(-1j * wavenumber * d)
    return amplitude.astype(complex)


def coded_excitation(layout: ArrayLayout, model: UnitCellModel, illum: IlluminationModel,
                     code: CodeMatrix, f: float) -> np.ndarray:
    """
    Element excitations for a 1-bit code.

    Raises:
        DimensionMismatchError: If the code does not match the layout
        ValidationError / OutOfBandError: If f is not valid for the cell model
    """
    code.check_layout(layout)
    t0 = model.transmission(0, f)
    t1 = model.transmission(1, f)
    cells = np.where(code.values == 1, t1, t0)
    return feed_illumination(layout, illum, 2 * np.pi * f / SPEED_OF_LIGHT) * cells


def continuous_excitation(layout: ArrayLayout, model: UnitCellModel, illum: IlluminationModel,
                          phases: PhaseMatrix, f: float) -> np.ndarray:
    """Element excitations with unquantized compensation phases and state-0 magnitude."""
    phases.check_layout(layout)
    magnitude = abs(model.transmission(0, f))
    return feed_illumination(layout, illum, 2 * np.pi * f / SPEED_OF_LIGHT) * magnitude * np.exp(1j * phases.values)


@dataclass(frozen=True)
class ApertureSource:
    """
    Excited aperture that can be evaluated in any forward direction.

    Attributes:
        layout: Element grid
        excitation: Complex excitation per element, shape (rows, cols)
        wavenumber: k = 2π/λ, rad/m
        element_q: Element pattern exponent
    """

    layout: ArrayLayout
    excitation: np.ndarray
    wavenumber: float
    element_q: float = 1.0

    def __post_init__(self):
        excitation = np.array(self.excitation, dtype=complex, copy=True)
        if excitation.shape != self.layout.shape:
            raise ValidationError(f"excitation shape {excitation.shape} does not match layout {self.layout.shape}",
                                  field="excitation")
        excitation.setflags(write=False)
        object.__setattr__(self, "excitation", excitation)

    @classmethod
    def from_code(cls, layout: ArrayLayout, model: UnitCellModel, illum: IlluminationModel,
                  code: CodeMatrix, f: float) -> 'ApertureSource':
        return cls(layout, coded_excitation(layout, model, illum, code, f),
                   2 * np.pi * f / SPEED_OF_LIGHT, illum.element_q)

    @classmethod
    def from_phases(cls, layout: ArrayLayout, model: UnitCellModel, illum: IlluminationModel,
                    phases: PhaseMatrix, f: float) -> 'ApertureSource':
        return cls(layout, continuous_excitation(layout, model, illum, phases, f),
                   2 * np.pi * f / SPEED_OF_LIGHT, illum.element_q)

    def scaled(self, factor: complex) -> 'ApertureSource':
        return ApertureSource(self.layout, self.excitation * factor, self.wavenumber, self.element_q)

    def element_factor(self, cos_theta: np.ndarray) -> np.ndarray:
        """cos^qe θ in the forward hemisphere, 0 behind the aperture."""
        forward = cos_theta >= 0
        return np.where(forward, np.clip(cos_theta, 0.0, None) ** self.element_q, 0.0)

    def _array_factor_chunk(self, chunk: Tuple[np.ndarray, np.ndarray]) -> np.ndarray:
        u, v = chunk
        k = self.wavenumber
        ax = np.exp(1j * k * np.multiply.outer(u, self.layout.x_coords))
        ay = np.exp(1j * k * np.multiply.outer(v, self.layout.y_coords))
        return np.sum(ay * (ax @ self.excitation.T), axis=1)

    def array_factor(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Σ a_i e^(jk(x_i u + y_i v)) for flat or shaped u, v."""
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        shape = u.shape
        u_flat, v_flat = u.ravel(), v.ravel()
        chunks = [(u_flat[i:i + CHUNK_SIZE], v_flat[i:i + CHUNK_SIZE])
                  for i in range(0, u_flat.size, CHUNK_SIZE)]
        if len(chunks) <= 1:
            values = self._array_factor_chunk(chunks[0]) if chunks else np.zeros(0, dtype=complex)
        else:
            values = np.concatenate(parallel_map(self._array_factor_chunk, chunks).successful)
        return values.reshape(shape)

    def field(self, u: np.ndarray, v: np.ndarray, cos_theta: np.ndarray) -> np.ndarray:
        """Complex far field at direction cosines (u, v) with cosθ = z."""
        cos_theta = np.asarray(cos_theta, dtype=float)
        return self.array_factor(u, v) * self.element_factor(cos_theta)

    def field_at(self, theta_deg: np.ndarray, phi_deg: np.ndarray) -> np.ndarray:
        """Complex far field at spherical angles in degrees."""
        return self.field(*direction_cosines(theta_deg, phi_deg))


class SamplingGrid(ABC):
    """Set of far-field directions arranged as a 2-D array."""

    @property
    @abstractmethod
    def shape(self) -> Tuple[int, int]:
        ...

    @abstractmethod
    def direction_cosines(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(u, v, cosθ) arrays of grid shape; cosθ < 0 marks invisible samples."""

    @abstractmethod
    def angles_deg(self) -> Tuple[np.ndarray, np.ndarray]:
        """(θ, φ) arrays of grid shape, degrees."""


def _strictly_increasing(values: np.ndarray) -> bool:
    return bool(np.all(np.diff(values) > 0))


class AngularGrid(SamplingGrid):
    """
    θ samples on one or more φ cuts; array shape (len(phi), len(theta)).
    """

    def __init__(self, theta_deg: Sequence[float], phi_deg: Sequence[float]):
        self.theta_deg = np.asarray(theta_deg, dtype=float)
        self.phi_deg = np.asarray(phi_deg, dtype=float)
        if self.theta_deg.ndim != 1 or self.theta_deg.size < 2:
            raise ValidationError("angular grid needs at least 2 theta samples", field="theta")
        if not _strictly_increasing(self.theta_deg) or self.theta_deg[0] < 0 or self.theta_deg[-1] > 90:
            raise ValidationError("theta samples must be strictly increasing within [0, 90] degrees", field="theta")
        if self.phi_deg.ndim != 1 or self.phi_deg.size < 1:
            raise ValidationError("angular grid needs at least 1 phi cut", field="phi")
        if not _strictly_increasing(self.phi_deg) or self.phi_deg[0] < 0 or self.phi_deg[-1] >= 360:
            raise ValidationError("phi samples must be strictly increasing within [0, 360) degrees", field="phi")

    @classmethod
    def principal_cuts(cls, phi0_deg: float = 0.0, theta_step_deg: float = 0.5) -> 'AngularGrid':
        """
        Both principal planes through φ0: cuts at φ0, φ0+90, φ0+180 and φ0+270.
        """
        if not (math.isfinite(theta_step_deg) and 0 < theta_step_deg <= 45):
            raise ValidationError(f"theta step must be in (0, 45] degrees, got {theta_step_deg}",
                                  field="theta_step_deg", value=theta_step_deg)
        count = int(round(90.0 / theta_step_deg)) + 1
        phis = sorted({(phi0_deg + 90.0 * quarter) % 360.0 for quarter in range(4)})
        return cls(np.linspace(0.0, 90.0, count), phis)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.phi_deg.size, self.theta_deg.size

    def angles_deg(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.theta_deg, self.phi_deg)

    def direction_cosines(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return direction_cosines(*self.angles_deg())

    def __repr__(self) -> str:
        return f"AngularGrid({self.theta_deg.size} theta x {self.phi_deg.size} phi)"


class UVGrid(SamplingGrid):
    """
    Uniform u-v product grid; array shape (nv, nu). Samples with
    u² + v² > 1 are invisible and carry zero field.
    """

    def __init__(self, u0: float, du: float, nu: int, v0: float, dv: float, nv: int):
        for name, step, count in (('u', du, nu), ('v', dv, nv)):
            if int(count) != count or count < 1:
                raise ValidationError(f"{name} sample count must be >= 1, got {count}", field=f"n{name}", value=count)
            if count > 1 and not (math.isfinite(step) and step > 0):
                raise ValidationError(f"{name} step must be > 0, got {step}", field=f"d{name}", value=step)
        self.u0, self.du, self.nu = float(u0), float(du), int(nu)
        self.v0, self.dv, self.nv = float(v0), float(dv), int(nv)

    @classmethod
    def square(cls, samples: int) -> 'UVGrid':
        """samples × samples grid spanning [-1, 1] in u and v."""
        if samples < 2:
            raise ValidationError(f"uv_samples must be >= 2, got {samples}", field="uv_samples", value=samples)
        step = 2.0 / (samples - 1)
        return cls(-1.0, step, samples, -1.0, step, samples)

    @property
    def u(self) -> np.ndarray:
        return self.u0 + self.du * np.arange(self.nu)

    @property
    def v(self) -> np.ndarray:
        return self.v0 + self.dv * np.arange(self.nv)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.nv, self.nu

    def direction_cosines(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        u, v = np.meshgrid(self.u, self.v)
        rho_sq = u ** 2 + v ** 2
        cos_theta = np.where(rho_sq <= 1.0, np.sqrt(np.clip(1.0 - rho_sq, 0.0, None)), -1.0)
        return u, v, cos_theta

    def angles_deg(self) -> Tuple[np.ndarray, np.ndarray]:
        u, v = np.meshgrid(self.u, self.v)
        theta = np.degrees(np.arcsin(np.clip(np.hypot(u, v), 0.0, 1.0)))
        phi = np.mod(np.degrees(np.arctan2(v, u)), 360.0)
        return theta, phi

    def __repr__(self) -> str:
        return f"UVGrid({self.nu} u x {self.nv} v)"


class UVCuts(SamplingGrid):
    """
    Uniform s = sinθ samples along φ cuts at multiples of 90°; shape (len(phi), count).
    """

    def __init__(self, phi_deg: Sequence[float], count: int, s_max: float = 1.0):
        self.phi_deg = np.asarray(phi_deg, dtype=float)
        if self.phi_deg.ndim != 1 or self.phi_deg.size < 1 or not _strictly_increasing(self.phi_deg):
            raise ValidationError("uv cuts need strictly increasing phi values", field="phi")
        off_axis = self.phi_deg[np.mod(self.phi_deg, 90.0) != 0]
        if off_axis.size:
            raise NonUniformGridError(
                f"uv sampling supports cuts at multiples of 90 degrees only, got {off_axis[0]:g}",
                field="cuts", value=float(off_axis[0])
            )
        if int(count) != count or count < 2:
            raise ValidationError(f"uv cut sample count must be >= 2, got {count}", field="uv_samples", value=count)
        if not 0 < s_max <= 1:
            raise ValidationError(f"s_max must be in (0, 1], got {s_max}", field="s_max", value=s_max)
        self.count = int(count)
        self.s_max = float(s_max)

    @property
    def s(self) -> np.ndarray:
        return np.linspace(0.0, self.s_max, self.count)

    @property
    def step(self) -> float:
        return self.s_max / (self.count - 1)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.phi_deg.size, self.count

    def direction_cosines(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        cos_p, sin_p = exact_cos_sin(self.phi_deg)
        s = self.s
        u = np.outer(cos_p, s)
        v = np.outer(sin_p, s)
        cos_theta = np.broadcast_to(np.sqrt(1.0 - s ** 2), u.shape).copy()
        return u, v, cos_theta

    def angles_deg(self) -> Tuple[np.ndarray, np.ndarray]:
        theta = np.degrees(np.arcsin(self.s))
        return np.meshgrid(theta, self.phi_deg)

    def __repr__(self) -> str:
        return f"UVCuts({self.phi_deg.size} cuts x {self.count} samples)"


@dataclass(frozen=True)
class FarFieldPattern:
    """
    Complex far field sampled on a grid.

    Attributes:
        grid: Sampling grid
        field: Complex field, grid.shape
        source: Aperture that produced the field (used for local re-sampling)
    """

    grid: SamplingGrid
    field: np.ndarray
    source: ApertureSource

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.field)

    @property
    def peak_magnitude(self) -> float:
        return float(self.magnitude.max())

    def normalized_db(self) -> np.ndarray:
        """
        20·log10(|E| / max|E|), floored at -300 dB.

        Raises:
            NumericalError: If the field is zero or non-finite everywhere
        """
        peak = self.peak_magnitude
        if not (math.isfinite(peak) and peak > 0):
            raise NumericalError("far-field pattern is all zero")
        with np.errstate(divide='ignore'):
            db = 20.0 * np.log10(self.magnitude / peak)
        return np.maximum(np.nan_to_num(db, nan=DB_FLOOR, neginf=DB_FLOOR), DB_FLOOR)

    def to_frame(self) -> pd.DataFrame:
        """Flat table theta_deg, phi_deg, mag_db, real, imag (row-major over the grid)."""
        theta, phi = self.grid.angles_deg()
        return pd.DataFrame({
            'theta_deg': theta.ravel(),
            'phi_deg': phi.ravel(),
            'mag_db': self.normalized_db().ravel(),
            'real': self.field.real.ravel(),
            'imag': self.field.imag.ravel(),
        })

    def save_csv(self, directory: Location, filename: str = "pattern.csv"):
        return RisDataHandler.save_csv(self.to_frame(), directory, filename, formats=PATTERN_FORMATS)


def relative_error(reference: np.ndarray, candidate: np.ndarray) -> float:
    """max|candidate - reference| / max|reference|."""
    scale = float(np.max(np.abs(reference)))
    if scale == 0:
        return float(np.max(np.abs(candidate)))
    return float(np.max(np.abs(candidate - reference)) / scale)


def radiate_source(source: ApertureSource, grid: SamplingGrid) -> FarFieldPattern:
    """Direct evaluation of a source on any grid."""
    u, v, cos_theta = grid.direction_cosines()
    return FarFieldPattern(grid, source.field(u, v, cos_theta), source)


def radiate(layout: ArrayLayout, model: UnitCellModel, illum: IlluminationModel,
            code: CodeMatrix, f: float, grid: SamplingGrid) -> FarFieldPattern:
    """
    Far field of a coded aperture by direct summation.

    Raises:
        DimensionMismatchError: If the code does not match the layout
        ValidationError / OutOfBandError: If f is not valid for the cell model
    """
    source = ApertureSource.from_code(layout, model, illum, code, f)
    logger.debug(f"radiate: {layout.rows}x{layout.cols} at {f / 1e9:.3f} GHz on {grid!r}")
    return radiate_source(source, grid)


def _line_transform(data: np.ndarray, coords: np.ndarray, period: float, wavenumber: float,
                    start: float, step: float, count: int, axis: int) -> np.ndarray:
    """
    Σ_n data[n] e^(jk coords[n] (start + m·step)), m = 0..count-1, along axis.
    """
    samples = start + step * np.arange(count)
    if data.shape[axis] == 1 or count == 1:
        kernel = np.exp(1j * wavenumber * np.multiply.outer(coords, samples))
        moved = np.tensordot(np.moveaxis(data, axis, -1), kernel, axes=([-1], [0]))
        return np.moveaxis(moved, -1, axis)

    a = np.exp(-1j * wavenumber * period * start)
    w = np.exp(1j * wavenumber * period * step)
    transformed = czt(data, m=count, w=w, a=a, axis=axis)
    shape = [1] * data.ndim
    shape[axis] = count
    return transformed * np.exp(1j * wavenumber * coords[0] * samples).reshape(shape)


def radiate_source_fast(source: ApertureSource, grid: SamplingGrid) -> FarFieldPattern:
    """
    Transform-based evaluation on uniform u-v samples.

    Raises:
        NonUniformGridError: If the grid is not a UVGrid or UVCuts
    """
    layout = source.layout
    k = source.wavenumber
    exc = source.excitation
    x, y, p = layout.x_coords, layout.y_coords, layout.period

    if isinstance(grid, UVGrid):
        along_x = _line_transform(exc, x, p, k, grid.u0, grid.du, grid.nu, axis=1)
        array_factor = _line_transform(along_x, y, p, k, grid.v0, grid.dv, grid.nv, axis=0)
    elif isinstance(grid, UVCuts):
        rows = []
        for phi in grid.phi_deg:
            cos_p, sin_p = cos_sin_deg(float(phi))
            if cos_p != 0:
                rows.append(_line_transform(exc.sum(axis=0), x, p, k, 0.0, cos_p * grid.step, grid.count, axis=0))
            else:
                rows.append(_line_transform(exc.sum(axis=1), y, p, k, 0.0, sin_p * grid.step, grid.count, axis=0))
        array_factor = np.vstack(rows)
    else:
        raise NonUniformGridError(
            f"fast evaluation needs uniform u-v sampling, got {grid!r}",
            field="sampling", value=type(grid).__name__
        )

    _, _, cos_theta = grid.direction_cosines()
    return FarFieldPattern(grid, array_factor * source.element_factor(cos_theta), source)


def radiate_fast(layout: ArrayLayout, model: UnitCellModel, illum: IlluminationModel,
                 code: CodeMatrix, f: float, grid: SamplingGrid) -> FarFieldPattern:
    """Same contract as radiate, restricted to uniform u-v grids."""
    source = ApertureSource.from_code(layout, model, illum, code, f)
    logger.debug(f"radiate_fast: {layout.rows}x{layout.cols} at {f / 1e9:.3f} GHz on {grid!r}")
    return radiate_source_fast(source, grid)


def _hemisphere_power(source: ApertureSource) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    theta = np.linspace(0.0, 90.0, int(round(90.0 / DIRECTIVITY_THETA_STEP_DEG)) + 1)
    phi = np.linspace(0.0, 360.0, int(round(360.0 / DIRECTIVITY_PHI_STEP_DEG)) + 1)
    theta_mesh, phi_mesh = np.meshgrid(theta, phi)
    power = np.abs(source.field_at(theta_mesh, phi_mesh)) ** 2
    return np.radians(theta), np.radians(phi), power


def _aperture_limit(layout: ArrayLayout, wavenumber: float) -> float:
    """4πA/λ² written in k: A·k²/π."""
    return layout.aperture_area * wavenumber ** 2 / np.pi


def is_electrically_large(layout: ArrayLayout, wavenumber: float) -> bool:
    """Both aperture sides are at least one wavelength."""
    wavelength = 2 * np.pi / wavenumber
    return min(layout.rows, layout.cols) * layout.period >= wavelength


def aperture_power(source: ApertureSource) -> float:
    """
    Power passed by the cells, Σ|a_i|²·(λ/p)², on the scale of ∫|E|² dΩ.

    Equals the hemisphere integral of a dense aperture whose whole spectrum
    falls inside the visible region.
    """
    cell_spectrum = (2 * np.pi / (source.wavenumber * source.layout.period)) ** 2
    return float(np.sum(np.abs(source.excitation) ** 2)) * cell_spectrum


def _directivity_from_samples(source: ApertureSource, theta_rad: np.ndarray, phi_rad: np.ndarray,
                              power: np.ndarray, peak_power: Optional[float]) -> float:
    radiated = trapezoid(trapezoid(power * np.sin(theta_rad), theta_rad, axis=1), phi_rad)
    if not radiated > 0:
        raise NumericalError("radiated power is zero; directivity undefined")
    peak = float(power.max()) if peak_power is None else max(float(peak_power), float(power.max()))
    if not is_electrically_large(source.layout, source.wavenumber):
        return float(4 * np.pi * peak / radiated)

    # 4π·peak / max(radiated, aperture power), factored so the limit is never exceeded
    cell_power = float(np.sum(np.abs(source.excitation) ** 2))
    coherence = min(1.0, peak / (source.layout.element_count * cell_power))
    spill = min(1.0, aperture_power(source) / radiated)
    return float(_aperture_limit(source.layout, source.wavenumber) * coherence * spill)


def directivity(source: ApertureSource, peak_power: Optional[float] = None) -> float:
    """
    Peak directivity over the forward hemisphere (linear).

    Integrates |E|² sinθ over θ in [0°, 90°] (0.5° steps) and φ in [0°, 360°]
    (1° steps) with the trapezoidal rule. For apertures at least one
    wavelength across, the radiated power is the larger of that integral and
    the power the cells pass (aperture_power), so the result never exceeds
    4πA/λ².

    Args:
        source: Excited aperture
        peak_power: Known peak |E|²; the larger of this and the sampled maximum is used

    Raises:
        NumericalError: If the aperture radiates nothing
    """
    return _directivity_from_samples(source, *_hemisphere_power(source), peak_power)


def to_dbi(value: float) -> float:
    return 10.0 * math.log10(value) if value > 0 else -math.inf


@dataclass
class CutProfile:
    """Normalized profile of one great-circle cut through the peak."""
    name: str
    offset_deg: np.ndarray
    db: np.ndarray
    visible: np.ndarray


@dataclass
class PatternMetrics:
    """
    Derived pattern figures.

    Attributes:
        peak_theta_deg, peak_phi_deg: Refined peak direction
        hpbw_deg: Half-power beamwidth per cut
        hpbw_clipped: Cuts whose width ran to the visible edge instead of a -3 dB point
        sll_db: Peak sidelobe level per cut (-inf if none)
        directivity: Peak directivity, linear, forward hemisphere
    """

    peak_theta_deg: float
    peak_phi_deg: float
    hpbw_deg: Dict[str, float] = dataclasses.field(default_factory=dict)
    sll_db: Dict[str, float] = dataclasses.field(default_factory=dict)
    hpbw_clipped: Dict[str, bool] = dataclasses.field(default_factory=dict)
    directivity: float = 0.0

    @property
    def sidelobe_level_db(self) -> float:
        return max(self.sll_db.values(), default=-math.inf)

    @property
    def directivity_dbi(self) -> float:
        return to_dbi(self.directivity)

    def to_dict(self) -> Dict[str, Union[float, str, bool]]:
        values: Dict[str, Union[float, str, bool]] = {
            'peak_theta_deg': self.peak_theta_deg,
            'peak_phi_deg': self.peak_phi_deg,
        }
        for name, width in self.hpbw_deg.items():
            values[f'hpbw_{name}_deg'] = width
            values[f"hpbw_{name}_clipped"] = self.hpbw_clipped.get(name, False)
        for name, level in self.sll_db.items():
            values[f'sll_{name}_db'] = level
        values['sll_db'] = self.sidelobe_level_db
        values['directivity'] = self.directivity
        values['directivity_dbi'] = self.directivity_dbi
        values['hemisphere'] = 'forward'
        return values


def _parabolic_offset(left: float, center: float, right: float) -> float:
    """Vertex offset of the parabola through three equally spaced samples, in steps."""
    denominator = left - 2 * center + right
    if denominator >= 0:
        return 0.0
    return 0.5 * (left - right) / denominator


def _signed_power(source: ApertureSource, signed_theta_deg: np.ndarray, phi_deg: np.ndarray) -> np.ndarray:
    """|E|² where a negative θ means the direction (|θ|, φ + 180°)."""
    cos_t, sin_t = exact_cos_sin(signed_theta_deg)
    cos_p, sin_p = exact_cos_sin(phi_deg)
    return np.abs(source.field(sin_t * cos_p, sin_t * sin_p, cos_t)) ** 2


def _refine_1d(values: np.ndarray, power: np.ndarray) -> float:
    index = int(np.argmax(power))
    if 0 < index < values.size - 1:
        step = values[1] - values[0]
        return float(values[index] + step * _parabolic_offset(power[index - 1], power[index], power[index + 1]))
    return float(values[index])


def refine_peak(source: ApertureSource, theta_deg: float, phi_deg: float) -> Tuple[float, float]:
    """
    Local re-sampling around a coarse peak.

    θ is refined on the signed cut through φ (±1°, 0.05° steps), then φ
    (±2°) when the beam is off boresight, then θ once more.
    """
    offsets = np.arange(-REFINE_THETA_SPAN_DEG, REFINE_THETA_SPAN_DEG + REFINE_STEP_DEG / 2, REFINE_STEP_DEG)

    thetas = theta_deg + offsets
    theta_deg = _refine_1d(thetas, _signed_power(source, thetas, np.full_like(thetas, phi_deg)))

    if abs(theta_deg) > REFINE_PHI_MIN_THETA_DEG:
        phi_offsets = np.arange(-REFINE_PHI_SPAN_DEG, REFINE_PHI_SPAN_DEG + REFINE_STEP_DEG / 2, REFINE_STEP_DEG)
        phis = phi_deg + phi_offsets
        phi_deg = _refine_1d(phis, _signed_power(source, np.full_like(phis, theta_deg), phis))
        thetas = theta_deg + offsets
        theta_deg = _refine_1d(thetas, _signed_power(source, thetas, np.full_like(thetas, phi_deg)))

    if theta_deg < 0:
        theta_deg, phi_deg = -theta_deg, phi_deg + 180.0
    return float(theta_deg), float(phi_deg % 360.0)


def _cut_directions(theta_deg: float, phi_deg: float, name: str,
                    offsets_deg: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Great circle through the peak, along θ̂ ('scan') or φ̂ ('cross')."""
    cos_t, sin_t = cos_sin_deg(theta_deg)
    cos_p, sin_p = cos_sin_deg(phi_deg)
    peak = np.array([sin_t * cos_p, sin_t * sin_p, cos_t])
    if name == "scan":
        tangent = np.array([cos_t * cos_p, cos_t * sin_p, -sin_t])
    elif name == "cross":
        tangent = np.array([-sin_p, cos_p, 0.0])
    else:
        raise ValidationError(f"unknown cut {name!r}; expected one of {', '.join(CUT_NAMES)}", field="cuts", value=name)
    cos_o, sin_o = exact_cos_sin(offsets_deg)
    directions = np.multiply.outer(cos_o, peak) + np.multiply.outer(sin_o, tangent)
    return directions[:, 0], directions[:, 1], directions[:, 2]


def _half_power_width(profile: CutProfile, strict: bool = False) -> Tuple[float, bool]:
    """
    -3 dB width through the peak and whether it was clipped.

    Without a crossing on one side, that side ends at the last visible sample
    (or MainLobeClippedError when strict).
    """
    center = profile.offset_deg.size // 2
    edges = []
    clipped = False
    for step in (1, -1):
        index = center
        while True:
            nxt = index + step
            if nxt < 0 or nxt >= profile.db.size or not profile.visible[nxt]:
                if strict:
                    raise MainLobeClippedError("half-power point not reached inside the visible cut", cut=profile.name)
                edges.append(profile.offset_deg[index])
                clipped = True
                break
            if profile.db[nxt] < HALF_POWER_DB:
                y0, y1 = profile.db[index], profile.db[nxt]
                t0, t1 = profile.offset_deg[index], profile.offset_deg[nxt]
                edges.append(t0 + (HALF_POWER_DB - y0) * (t1 - t0) / (y1 - y0))
                break
            index = nxt
    return float(abs(edges[0] - edges[1])), clipped


def _main_lobe_edge(profile: CutProfile, step: int) -> int:
    """Index of the first local minimum below -10 dB (or the visible edge)."""
    index = profile.offset_deg.size // 2
    while True:
        nxt = index + step
        if nxt < 0 or nxt >= profile.db.size or not profile.visible[nxt]:
            return index
        if profile.db[index] < LOBE_NULL_DB and profile.db[nxt] > profile.db[index]:
            return index
        index = nxt


def _sidelobe_level(profile: CutProfile) -> float:
    right = _main_lobe_edge(profile, 1)
    left = _main_lobe_edge(profile, -1)
    outside = profile.visible.copy()
    outside[left:right + 1] = False
    if not outside.any():
        return -math.inf
    return float(profile.db[outside].max())


def metrics(pattern: FarFieldPattern, cuts: Sequence[str] = CUT_NAMES, strict: bool = False) -> PatternMetrics:
    """
    Peak direction, beamwidth, sidelobe level and directivity of a pattern.

    Args:
        pattern: Sampled pattern (its source is re-sampled around the peak)
        cuts: Great-circle cuts to analyze, any of 'scan' and 'cross'
        strict: Raise instead of reporting a clipped beamwidth

    Returns:
        PatternMetrics

    Raises:
        NumericalError: If the pattern is all zero
        MainLobeClippedError: If strict and a -3 dB point lies outside the visible cut
    """
    pattern.normalized_db()
    source = pattern.source

    theta_grid, phi_grid = pattern.grid.angles_deg()
    index = np.unravel_index(int(np.argmax(pattern.magnitude)), pattern.field.shape)
    theta_peak, phi_peak = refine_peak(source, float(theta_grid[index]), float(phi_grid[index]))
    peak_power = float(_signed_power(source, np.array([theta_peak]), np.array([phi_peak]))[0])

    theta_rad, phi_rad, hemisphere = _hemisphere_power(source)
    offsets = np.linspace(-90.0, 90.0, CUT_SAMPLES)
    raw_cuts = {}
    for name in cuts:
        u, v, z = _cut_directions(theta_peak, phi_peak, name, offsets)
        raw_cuts[name] = (np.abs(source.field(u, v, z)) ** 2, z >= 0)

    peak_power = max([peak_power, pattern.peak_magnitude ** 2, float(hemisphere.max())]
                     + [float(power.max()) for power, _ in raw_cuts.values()])

    result = PatternMetrics(peak_theta_deg=theta_peak, peak_phi_deg=phi_peak)
    for name, (power, visible) in raw_cuts.items():
        with np.errstate(divide='ignore'):
            db = 10.0 * np.log10(power / peak_power)
        db = np.maximum(np.nan_to_num(db, nan=DB_FLOOR, neginf=DB_FLOOR), DB_FLOOR)
        profile = CutProfile(name, offsets, db, visible)
        result.hpbw_deg[name], result.hpbw_clipped[name] = _half_power_width(profile, strict)
        if result.hpbw_clipped[name]:
            logger.warning(f"Main lobe reaches the visible edge on the {name} cut; HPBW is the visible span")
        result.sll_db[name] = _sidelobe_level(profile)

    result.directivity = _directivity_from_samples(source, theta_rad, phi_rad, hemisphere, peak_power)
    logger.debug(f"Pattern metrics: peak ({theta_peak:.3f}°, {phi_peak:.3f}°), "
                 f"D = {result.directivity_dbi:.2f} dBi, SLL = {result.sidelobe_level_db:.2f} dB")
    return result


def aperture_directivity_bound(layout: ArrayLayout, f: float) -> float:
    """4πA/λ², the directivity of a uniformly excited aperture of area A."""
    return _aperture_limit(layout, 2 * np.pi * f / SPEED_OF_LIGHT)
