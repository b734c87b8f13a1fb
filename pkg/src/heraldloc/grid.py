"""Uniform 1D grids and the sampled-function helpers shared by every module.

All quadratures use the rectangle rule ``sum(f) * dx``; sampled functions are
expected to vanish at the window edges, where it coincides with the
trapezoidal rule.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, TruncationError


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid ``x_k = x_min + k * dx`` for ``k = 0 .. n_points - 1`` (μm)."""

    x_min: float
    dx: float
    n_points: int

    def __post_init__(self):
        if not self.dx > 0:
            raise DomainError(f"grid spacing must be positive, got {self.dx}")
        if self.n_points < 2:
            raise DomainError(f"grid needs at least 2 points, got {self.n_points}")
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "dx", float(self.dx))
        object.__setattr__(self, "n_points", int(self.n_points))

    @classmethod
    def centered(cls, half_width: float, n_points: int) -> "SpatialGrid":
        """Grid spanning ``[-half_width, half_width]`` inclusive, symmetric about 0."""
        if not half_width > 0:
            raise DomainError(f"half_width must be positive, got {half_width}")
        dx = 2.0 * half_width / (n_points - 1)
        return cls(-half_width, dx, n_points)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def x_max(self) -> float:
        return self.x_min + self.dx * (self.n_points - 1)

    def scaled(self, factor: float, pad: int = 0) -> "SpatialGrid":
        """Grid whose nodes are ``factor`` times these nodes, extended by ``pad`` nodes per side."""
        return SpatialGrid(factor * (self.x_min - pad * self.dx), factor * self.dx, self.n_points + 2 * pad)

    def refined(self) -> "SpatialGrid":
        """Cell-centred refinement: every cell of width dx split into two of width dx/2."""
        return SpatialGrid(self.x_min - self.dx / 4, self.dx / 2, 2 * self.n_points)

    def same_as(self, other: "SpatialGrid", rtol: float = 1e-12) -> bool:
        if self.n_points != other.n_points:
            return False
        scale = max(abs(self.x_min), abs(self.x_max), self.dx)
        return abs(self.x_min - other.x_min) <= rtol * scale and abs(self.dx - other.dx) <= rtol * self.dx

    def integrate(self, values: np.ndarray, axis: int = -1):
        return np.sum(values, axis=axis) * self.dx

    def inner(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Matrix of quadrature inner products ``<a_n, b_i> = sum a_n conj(b_i) dx``.

        ``a`` and ``b`` are (modes, points) arrays; 1D inputs are treated as one mode.
        """
        a2 = np.atleast_2d(a)
        b2 = np.atleast_2d(b)
        return (a2 @ b2.conj().T) * self.dx

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "dx": self.dx, "n_points": self.n_points}


def fix_signs(profiles: np.ndarray, rel_level: float = 1e-2) -> np.ndarray:
    """Flip each row so that its leftmost significant lobe is positive.

    The leftmost sample whose magnitude exceeds ``rel_level`` of the row maximum
    lies on the first lobe, so its sign is the sign of the first local extremum.
    Returns the array of applied signs (+1/-1) per row; ``profiles`` is modified in place.
    """
    profiles = np.atleast_2d(profiles)
    signs = np.ones(profiles.shape[0])
    for j, row in enumerate(profiles):
        mag = np.abs(row)
        peak = mag.max()
        if peak == 0:
            continue
        first = np.argmax(mag >= rel_level * peak)
        value = row[first]
        if np.iscomplexobj(row):
            value = value.real if abs(value.real) >= abs(value.imag) else value.imag
        if value < 0:
            row *= -1
            signs[j] = -1.0
    return signs


def count_sign_changes(values: np.ndarray, rel_tol: float = 1e-6) -> int:
    """Number of sign changes, ignoring samples below ``rel_tol`` of the peak magnitude."""
    values = np.real(np.asarray(values))
    peak = np.max(np.abs(values))
    if peak == 0:
        return 0
    significant = values[np.abs(values) > rel_tol * peak]
    return int(np.count_nonzero(np.signbit(significant[1:]) != np.signbit(significant[:-1])))


def sinc_resample(values: np.ndarray, source: SpatialGrid, target_points: np.ndarray,
                  edge_tol: float = 1e-6) -> np.ndarray:
    """Band-limited (Whittaker-Shannon) interpolation of sampled rows onto arbitrary points.

    Target points outside the source window receive zero. Raises TruncationError when
    a row is not negligible at the source window edges, since the zero continuation
    would then cut off real signal.
    """
    values = np.atleast_2d(values)
    peak = np.abs(values).max(axis=1)
    edge = np.maximum(np.abs(values[:, 0]), np.abs(values[:, -1]))
    bad = edge > edge_tol * np.where(peak > 0, peak, 1.0)
    if np.any(bad):
        raise TruncationError(
            f"{int(bad.sum())} sampled function(s) exceed {edge_tol:g} of peak at the window edge "
            f"[{source.x_min:g}, {source.x_max:g}] um; widen the source grid")
    t = np.asarray(target_points, dtype=float)
    inside = (t >= source.x_min - 0.5 * source.dx) & (t <= source.x_max + 0.5 * source.dx)
    out = np.zeros((values.shape[0], t.size), dtype=values.dtype)
    if np.any(inside):
        u = (t[inside, None] - source.x[None, :]) / source.dx
        out[:, inside] = values @ np.sinc(u).T
    return out
