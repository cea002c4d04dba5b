# src/geometry.py
"""
Aperture geometry of the transmissive surface.

Element phase centres sit at the cell centres of a rectangular grid that is
centred on the origin; the feed phase centre lies on the +z side at
feed_distance, optionally displaced transversely by feed_offset.
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from utils.exceptions import ValidationError

DEFAULT_ROWS = 16
DEFAULT_COLS = 16
DEFAULT_PERIOD_M = 0.018
DEFAULT_FEED_DISTANCE_M = 0.260


@dataclass(frozen=True)
class ArrayLayout:
    """
    Element grid and feed placement.

    Attributes:
        rows: Number of element rows (y direction)
        cols: Number of element columns (x direction)
        period: Element spacing in metres
        feed_distance: Feed phase-centre distance from the aperture plane, metres
        feed_offset: Transverse (x, y) feed displacement, metres
    """

    rows: int = DEFAULT_ROWS
    cols: int = DEFAULT_COLS
    period: float = DEFAULT_PERIOD_M
    feed_distance: float = DEFAULT_FEED_DISTANCE_M
    feed_offset: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if int(self.rows) != self.rows or self.rows < 1:
            raise ValidationError(f"rows must be an integer >= 1, got {self.rows}", field="rows", value=self.rows)
        if int(self.cols) != self.cols or self.cols < 1:
            raise ValidationError(f"cols must be an integer >= 1, got {self.cols}", field="cols", value=self.cols)
        if not (math.isfinite(self.period) and self.period > 0):
            raise ValidationError(f"period must be > 0, got {self.period}", field="period", value=self.period)
        if not (math.isfinite(self.feed_distance) and self.feed_distance > 0):
            raise ValidationError(f"feed_distance must be > 0, got {self.feed_distance}",
                                  field="feed_distance", value=self.feed_distance)
        if len(self.feed_offset) != 2 or not all(math.isfinite(v) for v in self.feed_offset):
            raise ValidationError(f"feed_offset must be two finite lengths, got {self.feed_offset}",
                                  field="feed_offset", value=self.feed_offset)
        object.__setattr__(self, "rows", int(self.rows))
        object.__setattr__(self, "cols", int(self.cols))
        object.__setattr__(self, "feed_offset", (float(self.feed_offset[0]), float(self.feed_offset[1])))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    @property
    def element_count(self) -> int:
        return self.rows * self.cols

    @property
    def diode_count(self) -> int:
        """Two PIN diodes per element."""
        return 2 * self.element_count

    @property
    def x_coords(self) -> np.ndarray:
        """Column positions, metres (length cols)."""
        return (np.arange(self.cols) - (self.cols - 1) / 2) * self.period

    @property
    def y_coords(self) -> np.ndarray:
        """Row positions, metres (length rows); row 0 has the smallest y."""
        return (np.arange(self.rows) - (self.rows - 1) / 2) * self.period

    @property
    def aperture_area(self) -> float:
        """Active aperture area rows·cols·period², m²."""
        return self.element_count * self.period ** 2

    @property
    def aperture_diagonal(self) -> float:
        """Diagonal of the active aperture, metres."""
        return math.hypot(self.cols * self.period, self.rows * self.period)

    def check_index(self, i: int) -> None:
        if not (0 <= i < self.element_count):
            raise ValidationError(
                f"element index {i} out of range [0, {self.element_count})",
                field="index",
                value=i
            )


def element_grid(layout: ArrayLayout) -> Tuple[np.ndarray, np.ndarray]:
    """
    Element positions as (rows, cols) arrays.

    Returns:
        (x, y) arrays, x[r, c] = x_c and y[r, c] = y_r
    """
    return np.meshgrid(layout.x_coords, layout.y_coords)


def element_positions(layout: ArrayLayout) -> np.ndarray:
    """
    Element positions in row-major order.

    Args:
        layout: Array layout

    Returns:
        (rows·cols, 2) array of (x, y) in metres; row r, column c is entry r·cols + c

    Example:
        > element_positions(ArrayLayout(rows=2, cols=2))
        array([[-0.009, -0.009], [ 0.009, -0.009], [-0.009,  0.009], [ 0.009,  0.009]])
    """
    x, y = element_grid(layout)
    return np.column_stack([x.ravel(), y.ravel()])


def feed_distances(layout: ArrayLayout) -> np.ndarray:
    """
    Feed-to-element distances d_i on the (rows, cols) grid, metres.
    """
    x, y = element_grid(layout)
    dx = x - layout.feed_offset[0]
    dy = y - layout.feed_offset[1]
    # sum kept symmetric in dx, dy so transposed grids give identical distances
    return np.sqrt((dx ** 2 + dy ** 2) + layout.feed_distance ** 2)


def feed_distance_to_element(layout: ArrayLayout, i: int) -> float:
    """
    Distance from the feed phase centre to element i (row-major index).

    Raises:
        ValidationError: If i is out of range
    """
    layout.check_index(i)
    return float(feed_distances(layout).ravel()[i])


def feed_off_axis_angles(layout: ArrayLayout) -> np.ndarray:
    """
    Angle between the feed boresight (the aperture normal) and each element, radians.
    """
    return np.arccos(np.clip(layout.feed_distance / feed_distances(layout), -1.0, 1.0))
