"""Uniform 1D grids, second-order finite differences, and composite quadrature.

Everything downstream (velocity fields, variance products, identity checks)
is built on the four operations in this module: `derivative`,
`second_derivative`, `integrate`, and the node-safe `log_derivative`.
All operations are pure functions of immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Grid1D",
    "ScalarField",
    "derivative",
    "second_derivative",
    "integrate",
    "log_derivative",
    "masked_mass",
    "fill_masked_interior",
    "DEFAULT_FLOOR_SCALE",
]

# Density floor relative to max(rho); points below are flagged as near-node.
DEFAULT_FLOOR_SCALE = 1e-12

MIN_POINTS = 16


@dataclass(frozen=True)
class Grid1D:
    """Uniform spatial grid on [q_min, q_max] with n_points nodes."""

    q_min: float
    q_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < MIN_POINTS:
            raise ValueError(f"n_points must be >= {MIN_POINTS}, got {self.n_points}")
        if not (np.isfinite(self.q_min) and np.isfinite(self.q_max)):
            raise ValueError("grid bounds must be finite")
        if self.q_max <= self.q_min:
            raise ValueError(f"q_max ({self.q_max}) must exceed q_min ({self.q_min})")

    @property
    def spacing(self) -> float:
        return (self.q_max - self.q_min) / (self.n_points - 1)

    @cached_property
    def points(self) -> np.ndarray:
        q = np.linspace(self.q_min, self.q_max, self.n_points)
        q.flags.writeable = False
        return q

    def coarsened(self) -> "Grid1D":
        """Grid over every second node (Richardson-style error estimation).

        For even n_points the final node is dropped; fields are expected to be
        negligible at the boundary, so the estimate is unaffected.
        """
        pts = self.points[::2]
        return Grid1D(float(pts[0]), float(pts[-1]), len(pts))

    def translated(self, offset: float) -> "Grid1D":
        return Grid1D(self.q_min + offset, self.q_max + offset, self.n_points)

    def to_dict(self) -> dict:
        return {"q_min": self.q_min, "q_max": self.q_max, "n_points": self.n_points}


@dataclass(frozen=True)
class ScalarField:
    """Real-valued samples on a Grid1D. Values are read-only after construction."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or len(vals) != self.grid.n_points:
            raise ValueError(
                f"values must be 1-D with length {self.grid.n_points}, got shape {vals.shape}"
            )
        _require_finite(vals)
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def coarsened(self) -> "ScalarField":
        return ScalarField(self.grid.coarsened(), self.values[: _coarse_stop(self.grid) : 2])


def _coarse_stop(grid: Grid1D) -> int:
    # slice stop so values[::2] matches grid.coarsened() for even n_points
    n = grid.n_points
    return n if n % 2 == 1 else n - 1


def _require_finite(vals: np.ndarray) -> None:
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        raise ValueError(f"non-finite value at index {bad[0]} ({vals[bad[0]]!r})")


def derivative(f: ScalarField) -> ScalarField:
    """First derivative: central differences inside, one-sided 3-point stencils
    at both endpoints. Second-order accurate everywhere; exact for quadratics."""
    v = f.values
    h = f.grid.spacing
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    d[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return ScalarField(f.grid, d)


def second_derivative(f: ScalarField) -> ScalarField:
    """Second derivative: three-point stencil inside, one-sided 4-point stencils
    at both endpoints. Second-order accurate; exact for quadratics."""
    v = f.values
    h2 = f.grid.spacing ** 2
    d = np.empty_like(v)
    d[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h2
    d[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2
    d[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h2
    return ScalarField(f.grid, d)


def integrate(f: ScalarField) -> float:
    """Composite Simpson rule (odd n_points); for even n_points, Simpson over
    the first n-2 intervals plus a trapezoid on the last."""
    return _integrate_values(f.values, f.grid.spacing)


def _integrate_values(v: np.ndarray, h: float) -> float:
    _require_finite(v)
    n = len(v)
    if n % 2 == 1:
        return _simpson_odd(v, h)
    return _simpson_odd(v[:-1], h) + 0.5 * h * (v[-2] + v[-1])


def _simpson_odd(v: np.ndarray, h: float) -> float:
    acc = v[0] + v[-1] + 4.0 * np.sum(v[1:-1:2]) + 2.0 * np.sum(v[2:-1:2])
    return float(acc * h / 3.0)


def log_derivative(
    rho: ScalarField, floor: float
) -> tuple[ScalarField, np.ndarray]:
    """d(rho)/dq divided by max(rho, floor), plus a mask of near-node points.

    The mask marks grid points where rho < floor; there the floored value is
    used, keeping the field finite through nodes and far tails.
    """
    if not (floor > 0.0):
        raise ValueError(f"floor must be positive, got {floor}")
    if np.any(rho.values < 0.0):
        i = int(np.argmin(rho.values))
        raise ValueError(f"density must be nonnegative; rho[{i}] = {rho.values[i]}")
    mask = rho.values < floor
    drho = derivative(rho)
    field = ScalarField(rho.grid, drho.values / np.maximum(rho.values, floor))
    return field, mask


def masked_mass(rho: ScalarField, mask: np.ndarray) -> float:
    """Probability mass inside the masked (near-node / far-tail) region."""
    if not np.any(mask):
        return 0.0
    return _integrate_values(np.where(mask, rho.values, 0.0), rho.grid.spacing)


def fill_masked_interior(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Linearly interpolate integrand values across interior masked runs.

    Ratio-type integrands such as (d rho/dq)^2 / rho have removable 0/0
    singularities at density nodes; the floored value there would inject an
    O(h) quadrature error. Interpolating between the flanking unmasked points
    restores second-order accuracy. Runs touching the boundary (far tails,
    where the true integrand is negligible) are left at their floored values.
    """
    if not np.any(mask):
        return values
    out = values.copy()
    n = len(out)
    idx = np.flatnonzero(mask)
    run_start = idx[np.r_[True, np.diff(idx) > 1]]
    run_end = idx[np.r_[np.diff(idx) > 1, True]]
    for lo, hi in zip(run_start, run_end):
        if lo == 0 or hi == n - 1:
            continue
        left, right = lo - 1, hi + 1
        t = (np.arange(lo, hi + 1) - left) / (right - left)
        out[lo : hi + 1] = (1.0 - t) * out[left] + t * out[right]
    return out
