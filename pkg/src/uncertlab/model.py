"""Ensemble state types: multiplier distribution, per-branch fields, reports.

A model state couples a symmetric discrete distribution of the multiplier
lambda with one (density, phase) branch per multiplier magnitude. The joint
density over (q, lambda) factorizes as rho(q, |lambda|) * P(lambda), with
P(lambda) = P(-lambda) guaranteed structurally: each stored atom stands for
the pair +/-|lambda| sharing one weight.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .numerics import (
    DEFAULT_FLOOR_SCALE,
    Grid1D,
    ScalarField,
    integrate,
)

__all__ = [
    "LambdaDistribution",
    "BranchState",
    "ModelState",
    "VerificationReport",
    "WEIGHT_SUM_TOL",
    "NORMALIZATION_TOL",
    "ENDPOINT_SMALLNESS",
]

WEIGHT_SUM_TOL = 1e-12
NORMALIZATION_TOL = 1e-8
# rho at both grid endpoints must be below this fraction of max(rho)
ENDPOINT_SMALLNESS = 1e-10
_MAGNITUDE_MATCH_RTOL = 1e-9


@dataclass(frozen=True)
class LambdaDistribution:
    """Unbiased discrete multiplier distribution.

    atoms: ((magnitude, weight), ...); magnitude > 0 and each entry stands for
    the signed pair +/-magnitude carrying weight/2 per sign, so the
    distribution is symmetric by construction. Weights sum to one.
    """

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        atoms = tuple((float(m), float(w)) for m, w in self.atoms)
        if not atoms:
            raise ValueError("at least one multiplier atom is required")
        for m, w in atoms:
            if not (m > 0.0):
                raise ValueError(f"multiplier magnitudes must be positive, got {m}")
            if not (w > 0.0):
                raise ValueError(f"atom weights must be positive, got {w}")
        mags = [m for m, _ in atoms]
        if sorted(mags) != mags or len(set(mags)) != len(mags):
            raise ValueError("atom magnitudes must be strictly increasing")
        total = sum(w for _, w in atoms)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"atom weights must sum to 1 (got {total!r})")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def two_point(cls, hbar: float) -> "LambdaDistribution":
        """The canonical distribution: atoms +/-hbar with weight 1/2 each."""
        return cls(atoms=((float(hbar), 1.0),))

    @property
    def magnitudes(self) -> tuple[float, ...]:
        return tuple(m for m, _ in self.atoms)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(w for _, w in self.atoms)

    def is_canonical(self, hbar: float) -> bool:
        """True when this is the two-point distribution at magnitude hbar."""
        if len(self.atoms) != 1:
            return False
        m, _ = self.atoms[0]
        return abs(m - hbar) <= _MAGNITUDE_MATCH_RTOL * hbar

    def signed_atoms(self) -> list[tuple[float, float]]:
        """(signed value, probability) pairs in ascending signed order."""
        neg = [(-m, w / 2.0) for m, w in reversed(self.atoms)]
        pos = [(m, w / 2.0) for m, w in self.atoms]
        return neg + pos


@dataclass(frozen=True)
class BranchState:
    """Density and phase fields for one multiplier magnitude.

    gaussian_a, when set, records that rho is a zero-phase Gaussian
    exp(-a q^2) profile (up to a shift); closed-form velocity distributions
    are only available for such branches.
    """

    magnitude: float
    rho: ScalarField
    phase: ScalarField
    mass: float
    gaussian_a: float | None = None

    def __post_init__(self):
        if not (self.magnitude > 0.0):
            raise ValueError(f"branch magnitude must be positive, got {self.magnitude}")
        if not (self.mass > 0.0):
            raise ValueError(f"mass must be positive, got {self.mass}")
        if self.rho.grid != self.phase.grid:
            raise ValueError("rho and phase must share one grid")
        vals = self.rho.values
        if np.any(vals < 0.0):
            i = int(np.argmin(vals))
            raise ValueError(f"density must be nonnegative; rho[{i}] = {vals[i]}")
        peak = float(vals.max())
        if peak <= 0.0:
            raise ValueError("density is identically zero")
        edge = max(vals[0], vals[-1])
        if edge > ENDPOINT_SMALLNESS * peak:
            raise ValueError(
                "density does not vanish at the grid boundary: "
                f"edge/max = {edge / peak:.3e} (limit {ENDPOINT_SMALLNESS:.1e}); "
                "widen the grid"
            )
        norm = integrate(self.rho)
        if abs(norm - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"density must integrate to 1 (got {norm!r})")

    @property
    def grid(self) -> Grid1D:
        return self.rho.grid

    def coarsened(self) -> "BranchState":
        rho_c = self.rho.coarsened()
        rho_c = ScalarField(rho_c.grid, rho_c.values / integrate(rho_c))
        return BranchState(
            magnitude=self.magnitude,
            rho=rho_c,
            phase=self.phase.coarsened(),
            mass=self.mass,
            gaussian_a=self.gaussian_a,
        )


@dataclass(frozen=True)
class ModelState:
    """Full ensemble: multiplier distribution plus one branch per magnitude."""

    lambda_dist: LambdaDistribution
    branches: tuple[BranchState, ...]
    hbar: float
    floor_scale: float = DEFAULT_FLOOR_SCALE

    def __post_init__(self):
        if not (self.hbar > 0.0):
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        if not (self.floor_scale > 0.0):
            raise ValueError(f"floor_scale must be positive, got {self.floor_scale}")
        branches = tuple(self.branches)
        mags = self.lambda_dist.magnitudes
        if len(branches) != len(mags):
            raise ValueError(
                f"{len(mags)} multiplier atoms but {len(branches)} branches"
            )
        for b, m in zip(branches, mags):
            if abs(b.magnitude - m) > _MAGNITUDE_MATCH_RTOL * m:
                raise ValueError(
                    f"branch magnitude {b.magnitude} does not match atom {m}"
                )
        grid = branches[0].grid
        mass = branches[0].mass
        for b in branches[1:]:
            if b.grid != grid:
                raise ValueError("all branches must share one grid")
            if b.mass != mass:
                raise ValueError("all branches must share one mass")
        joint = sum(
            w * integrate(b.rho) for w, b in zip(self.lambda_dist.weights, branches)
        )
        if abs(joint - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"joint density must integrate to 1 (got {joint!r})")
        object.__setattr__(self, "branches", branches)

    @property
    def grid(self) -> Grid1D:
        return self.branches[0].grid

    @property
    def mass(self) -> float:
        return self.branches[0].mass

    def is_canonical(self) -> bool:
        """True for the two-point multiplier distribution at |lambda| = hbar."""
        return self.lambda_dist.is_canonical(self.hbar)

    def branch_for(self, magnitude: float) -> BranchState:
        for b in self.branches:
            if abs(b.magnitude - magnitude) <= _MAGNITUDE_MATCH_RTOL * b.magnitude:
                return b
        mags = ", ".join(f"{m:g}" for m in self.lambda_dist.magnitudes)
        raise ValueError(
            f"no branch with magnitude {magnitude!r}; available magnitudes: {mags}"
        )

    def single_branch(self) -> BranchState:
        """The unique branch of a canonical state."""
        if not self.is_canonical():
            mags = ", ".join(f"{m:g}" for m in self.lambda_dist.magnitudes)
            raise ValueError(
                "operation requires the canonical two-point multiplier "
                f"distribution at hbar = {self.hbar:g}; got atoms at ({mags}). "
                "Use the general-form operations instead."
            )
        return self.branches[0]

    def floor(self, branch: BranchState) -> float:
        return self.floor_scale * float(branch.rho.values.max())

    def mean_position(self) -> float:
        """Mean of q under the joint density."""
        q = self.grid.points
        return sum(
            w * integrate(ScalarField(self.grid, q * b.rho.values))
            for w, b in zip(self.lambda_dist.weights, self.branches)
        )

    def coarsened(self) -> "ModelState":
        return ModelState(
            lambda_dist=self.lambda_dist,
            branches=tuple(b.coarsened() for b in self.branches),
            hbar=self.hbar,
            floor_scale=self.floor_scale,
        )

    def translated(self, offset: float) -> "ModelState":
        """Same state on a grid shifted by offset (values unchanged)."""
        grid = self.grid.translated(offset)
        branches = tuple(
            BranchState(
                magnitude=b.magnitude,
                rho=ScalarField(grid, b.rho.values),
                phase=ScalarField(grid, b.phase.values),
                mass=b.mass,
                gaussian_a=b.gaussian_a,
            )
            for b in self.branches
        )
        return ModelState(self.lambda_dist, branches, self.hbar, self.floor_scale)

    def fingerprint(self) -> str:
        """Deterministic digest of grid, atoms, and branch fields."""
        m = hashlib.sha256()
        g = self.grid
        m.update(np.array([g.q_min, g.q_max, float(g.n_points)]).tobytes())
        m.update(np.array([self.hbar, self.mass, self.floor_scale]).tobytes())
        m.update(np.asarray(self.lambda_dist.atoms, dtype=float).tobytes())
        for b in self.branches:
            m.update(b.rho.values.tobytes())
            m.update(b.phase.values.tobytes())
        return m.hexdigest()[:16]


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one inequality or identity check.

    kind "inequality": slack = lhs - bound, pass when slack >= -tolerance.
    kind "identity":   slack = |lhs - rhs|,  pass when slack <= tolerance.
    The tolerance recorded is absolute; the grid and diagnostics make every
    failure auditable.
    """

    name: str
    kind: str
    lhs: float
    bound_or_rhs: float
    slack: float
    tolerance: float
    discretization_estimate: float
    masked_mass: float
    passed: bool
    grid: Grid1D
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("inequality", "identity"):
            raise ValueError(f"unknown report kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "lhs": self.lhs,
            "bound_or_rhs": self.bound_or_rhs,
            "slack": self.slack,
            "tolerance": self.tolerance,
            "discretization_estimate": self.discretization_estimate,
            "masked_mass": self.masked_mass,
            "passed": self.passed,
            "grid": self.grid.to_dict(),
            "extras": dict(self.extras),
        }


def make_report(
    name: str,
    kind: str,
    lhs: float,
    bound_or_rhs: float,
    tolerance: float,
    discretization_estimate: float,
    masked_mass: float,
    grid: Grid1D,
    extras: dict | None = None,
) -> VerificationReport:
    if kind == "inequality":
        slack = lhs - bound_or_rhs
        passed = slack >= -tolerance
    else:
        slack = abs(lhs - bound_or_rhs)
        passed = slack <= tolerance
    return VerificationReport(
        name=name,
        kind=kind,
        lhs=float(lhs),
        bound_or_rhs=float(bound_or_rhs),
        slack=float(slack),
        tolerance=float(tolerance),
        discretization_estimate=float(discretization_estimate),
        masked_mass=float(masked_mass),
        passed=bool(passed),
        grid=grid,
        extras=extras or {},
    )
