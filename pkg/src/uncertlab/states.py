"""Reference ensemble catalog and tabulated-state loading.

Built-in kinds:

  gaussian_ground    ground oscillator profile; branch width is tied to the
                     multiplier magnitude through a = m omega / |lambda|
  harmonic_excited   n-th oscillator level, same multiplier-linked width
  boosted_gaussian   fixed-width Gaussian density with a linear phase p0 q
  two_gaussian       symmetric superposition of two displaced Gaussians with
                     relative sign +1 or -1 (fixed width a)
  tabulated          density and phase supplied as arrays on an explicit grid

All densities are renormalized numerically on their grid before the ensemble
is assembled, so quadrature normalization holds to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import json
from pathlib import Path

import numpy as np

from .model import BranchState, LambdaDistribution, ModelState
from .numerics import Grid1D, ScalarField, integrate

__all__ = [
    "StateSpec",
    "build",
    "default_grid",
    "analytic_references",
    "load_tabulated",
    "KINDS",
    "DEFAULT_GRID_POINTS",
]

KINDS = (
    "gaussian_ground",
    "harmonic_excited",
    "boosted_gaussian",
    "two_gaussian",
    "tabulated",
)

DEFAULT_GRID_POINTS = 40001
_HALF_WIDTH_SIGMAS = 8.0
_TABULATED_NORM_TOL = 1e-6


@dataclass(frozen=True)
class StateSpec:
    """Parameters selecting one catalog ensemble.

    omega is used by the multiplier-linked kinds (gaussian_ground,
    harmonic_excited); a is the explicit width of the fixed-profile kinds
    (boosted_gaussian, two_gaussian). The unused one is ignored.
    """

    kind: str
    mass: float = 1.0
    hbar: float = 1.0
    omega: float = 1.0
    n_level: int = 0
    a: float = 1.0
    p0: float = 0.0
    separation: float = 0.0
    relative_sign: int = 1
    center: float = 0.0
    grid: Grid1D | None = None
    rho_values: tuple[float, ...] | None = None
    phase_values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(
                f"unknown state kind {self.kind!r}; known kinds: {', '.join(KINDS)}"
            )
        for name in ("mass", "hbar", "omega", "a"):
            v = getattr(self, name)
            if not (v > 0.0):
                raise ValueError(f"{name} must be positive, got {v}")
        if self.n_level < 0:
            raise ValueError(f"n_level must be nonnegative, got {self.n_level}")
        if self.relative_sign not in (1, -1):
            raise ValueError(f"relative_sign must be +1 or -1, got {self.relative_sign}")
        if self.kind == "two_gaussian" and not (self.separation > 0.0):
            raise ValueError("two_gaussian requires a positive separation")
        if self.kind == "tabulated":
            if self.grid is None or self.rho_values is None or self.phase_values is None:
                raise ValueError(
                    "tabulated states need grid, rho_values and phase_values"
                )

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "mass": self.mass,
            "hbar": self.hbar,
            "omega": self.omega,
            "n_level": self.n_level,
            "a": self.a,
            "p0": self.p0,
            "separation": self.separation,
            "relative_sign": self.relative_sign,
            "center": self.center,
        }
        if self.grid is not None:
            d["grid"] = self.grid.to_dict()
        return d


def _hermite_profile(xi, n: int):
    """Normalized oscillator eigenfunction phi_n(xi) by upward recurrence.

    phi_{n+1} = sqrt(2/(n+1)) xi phi_n - sqrt(n/(n+1)) phi_{n-1}; the
    normalized form avoids the overflow of raw Hermite polynomials.
    """
    phi_prev = np.zeros_like(xi)
    phi = np.pi**-0.25 * np.exp(-0.5 * xi**2)
    for k in range(n):
        phi_next = np.sqrt(2.0 / (k + 1)) * xi * phi - np.sqrt(k / (k + 1.0)) * phi_prev
        phi_prev, phi = phi, phi_next
    return phi


def _sigma_envelope(spec: StateSpec, lambda_dist: LambdaDistribution) -> float:
    """Largest position spread over branches, for automatic grid sizing."""
    if spec.kind in ("gaussian_ground", "harmonic_excited"):
        n = spec.n_level if spec.kind == "harmonic_excited" else 0
        sig = 0.0
        for mag in lambda_dist.magnitudes:
            a = spec.mass * spec.omega / mag
            sig = max(sig, np.sqrt((n + 0.5) / a))
        return sig
    if spec.kind == "boosted_gaussian":
        return np.sqrt(0.5 / spec.a)
    if spec.kind == "two_gaussian":
        return np.sqrt(0.5 / spec.a) + 0.5 * spec.separation
    raise ValueError(f"no automatic grid for kind {spec.kind!r}")


def default_grid(
    spec: StateSpec,
    lambda_dist: LambdaDistribution | None = None,
    n_points: int | None = None,
) -> Grid1D:
    """Automatically sized grid: 8 envelope spreads around the center."""
    if lambda_dist is None:
        lambda_dist = LambdaDistribution.two_point(spec.hbar)
    half = _HALF_WIDTH_SIGMAS * _sigma_envelope(spec, lambda_dist)
    return Grid1D(
        spec.center - half, spec.center + half, n_points or DEFAULT_GRID_POINTS
    )


def _normalized_density(grid: Grid1D, values) -> ScalarField:
    f = ScalarField(grid, values)
    return ScalarField(grid, f.values / integrate(f))


def _branch_fields(spec: StateSpec, grid: Grid1D, magnitude: float):
    """(rho, phase, gaussian width tag) for one multiplier magnitude."""
    q = grid.points
    zero = np.zeros_like(q)
    if spec.kind in ("gaussian_ground", "harmonic_excited"):
        a = spec.mass * spec.omega / magnitude
        n = spec.n_level if spec.kind == "harmonic_excited" else 0
        xi = np.sqrt(a) * (q - spec.center)
        psi = a**0.25 * _hermite_profile(xi, n)
        rho = _normalized_density(grid, psi**2)
        return rho, ScalarField(grid, zero), (a if n == 0 else None)
    if spec.kind == "boosted_gaussian":
        rho = _normalized_density(grid, np.exp(-spec.a * (q - spec.center) ** 2))
        return rho, ScalarField(grid, spec.p0 * q), spec.a
    if spec.kind == "two_gaussian":
        s = 0.5 * spec.separation
        psi = np.exp(-0.5 * spec.a * (q - spec.center - s) ** 2)
        psi = psi + spec.relative_sign * np.exp(
            -0.5 * spec.a * (q - spec.center + s) ** 2
        )
        rho = _normalized_density(grid, psi**2)
        return rho, ScalarField(grid, zero), None
    if spec.kind == "tabulated":
        rho = _normalized_density(grid, np.asarray(spec.rho_values, dtype=float))
        phase = ScalarField(grid, np.asarray(spec.phase_values, dtype=float))
        return rho, phase, None
    raise ValueError(f"unknown state kind {spec.kind!r}")


def build(
    spec: StateSpec,
    lambda_dist: LambdaDistribution | None = None,
    grid: Grid1D | None = None,
) -> ModelState:
    """Assemble the ensemble selected by spec.

    lambda_dist defaults to the canonical two-point distribution at the
    spec's hbar. The grid defaults to the spec's own grid if set, otherwise
    to 8 envelope spreads around the center at 40001 points.
    """
    if lambda_dist is None:
        lambda_dist = LambdaDistribution.two_point(spec.hbar)
    if grid is None:
        grid = spec.grid
    if grid is None:
        grid = default_grid(spec, lambda_dist)
    if spec.kind == "tabulated" and grid != spec.grid:
        raise ValueError("tabulated states carry their own grid; do not override it")

    branches = []
    for mag in lambda_dist.magnitudes:
        rho, phase, a_tag = _branch_fields(spec, grid, mag)
        branches.append(
            BranchState(
                magnitude=mag,
                rho=rho,
                phase=phase,
                mass=spec.mass,
                gaussian_a=a_tag,
            )
        )
    return ModelState(
        lambda_dist=lambda_dist,
        branches=tuple(branches),
        hbar=spec.hbar,
    )


def analytic_references(spec: StateSpec) -> dict | None:
    """Closed-form moments for the canonical two-point ensemble, or None.

    Keys: sigma_q, sigma_qdot, product, fisher, momentum_variance,
    convective_variance, mean_momentum, mean_quantum_potential. Kinds
    without closed forms (two_gaussian, tabulated) return None.
    """
    m, hb = spec.mass, spec.hbar
    if spec.kind in ("gaussian_ground", "harmonic_excited"):
        a = m * spec.omega / hb
        n = spec.n_level if spec.kind == "harmonic_excited" else 0
        p0 = 0.0
    elif spec.kind == "boosted_gaussian":
        a = spec.a
        n = 0
        p0 = spec.p0
    else:
        return None
    half = n + 0.5
    fisher = 4.0 * a * half
    var_q = half / a
    var_v = hb**2 * fisher / (4.0 * m**2)
    return {
        "sigma_q": var_q,
        "sigma_qdot": var_v,
        "product": var_q * var_v,
        "fisher": fisher,
        "momentum_variance": hb**2 * fisher / 4.0,
        "convective_variance": 0.0,
        "mean_momentum": p0,
        "mean_quantum_potential": hb**2 * fisher / (8.0 * m),
    }


def load_tabulated(source) -> tuple[StateSpec, float]:
    """Read a tabulated state from a JSON file, path, or mapping.

    Expected shape:

        {"grid": {"q_min": ..., "q_max": ..., "n_points": ...},
         "rho": [...], "phase": [...], "mass": ..., "hbar": ...}

    The density must integrate to 1 within 1e-6; the residual is absorbed by
    renormalization and the applied factor is returned alongside the spec.
    """
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            data = json.load(fh)
    else:
        data = dict(source)

    for key in ("grid", "rho", "phase"):
        if key not in data:
            raise ValueError(f"tabulated state is missing the {key!r} entry")
    gd = data["grid"]
    try:
        grid = Grid1D(float(gd["q_min"]), float(gd["q_max"]), int(gd["n_points"]))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed grid entry: {gd!r}") from exc

    rho = np.asarray(data["rho"], dtype=float)
    phase = np.asarray(data["phase"], dtype=float)
    if rho.shape != (grid.n_points,) or phase.shape != (grid.n_points,):
        raise ValueError(
            f"rho and phase must each have {grid.n_points} entries, "
            f"got {rho.size} and {phase.size}"
        )
    if np.any(rho < 0.0):
        raise ValueError("tabulated density has negative entries")

    peak = float(rho.max())
    edge = max(rho[0], rho[-1])
    if peak <= 0.0:
        raise ValueError("tabulated density is identically zero")
    if edge > 1e-10 * peak:
        norm = integrate(ScalarField(grid, rho))
        q = grid.points
        mean = integrate(ScalarField(grid, q * rho)) / norm
        var = integrate(ScalarField(grid, (q - mean) ** 2 * rho)) / norm
        sig = float(np.sqrt(max(var, 0.0)))
        raise ValueError(
            "tabulated grid is too narrow: density at the boundary is "
            f"{edge / peak:.3e} of the peak; supply data on roughly "
            f"[{mean - 8 * sig:.3g}, {mean + 8 * sig:.3g}]"
        )

    norm = integrate(ScalarField(grid, rho))
    if abs(norm - 1.0) > _TABULATED_NORM_TOL:
        raise ValueError(
            f"tabulated density integrates to {norm!r}; "
            f"only corrections within {_TABULATED_NORM_TOL:.1e} are applied"
        )
    correction = 1.0 / norm
    spec = StateSpec(
        kind="tabulated",
        mass=float(data.get("mass", 1.0)),
        hbar=float(data.get("hbar", 1.0)),
        grid=grid,
        rho_values=tuple(float(v) for v in rho * correction),
        phase_values=tuple(float(v) for v in phase),
    )
    return spec, correction


def with_grid(spec: StateSpec, grid: Grid1D) -> StateSpec:
    """Copy of spec pinned to an explicit grid (catalog kinds only)."""
    if spec.kind == "tabulated":
        raise ValueError("tabulated states carry their own grid; do not override it")
    return replace(spec, grid=grid)
