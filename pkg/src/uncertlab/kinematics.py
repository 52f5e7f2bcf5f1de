"""Velocity and potential fields derived from an ensemble state.

The configuration flows at each signed multiplier value, together with the
fields built from them (deviation from the mean flow, osmotic component,
curvature potential), are all plain functions of (rho, S) on the grid.
"""

from __future__ import annotations

import numpy as np

from .model import BranchState, ModelState
from .numerics import Grid1D, ScalarField, derivative, log_derivative, second_derivative

__all__ = [
    "velocity_field",
    "deviation_field",
    "effective_velocity_field",
    "osmotic_velocity_field",
    "quantum_potential_field",
    "velocity_distribution_analytic",
]


def _resolve_branch(state: ModelState, lambda_signed: float) -> BranchState:
    mag = abs(float(lambda_signed))
    if mag == 0.0:
        raise ValueError("lambda_signed must be nonzero")
    return state.branch_for(mag)


def velocity_field(state: ModelState, lambda_signed: float):
    """Configuration velocity at one signed multiplier value.

    qdot = (grad S)/m + (lambda/2m) * (grad rho)/rho. Returns the field and
    the low-density mask of grid points where the logarithmic derivative was
    floored.
    """
    b = _resolve_branch(state, lambda_signed)
    dS = derivative(b.phase)
    dlog, mask = log_derivative(b.rho, state.floor(b))
    vals = (dS.values + 0.5 * float(lambda_signed) * dlog.values) / b.mass
    return ScalarField(b.grid, vals), mask


def deviation_field(state: ModelState, lambda_signed: float):
    """Squared deviation of the velocity from the phase-gradient flow.

    delta = (lambda/2m)^2 * ((grad rho)/rho)^2, the square of the
    multiplier-dependent part of the velocity. Vanishes pointwise only where
    the density is flat.
    """
    b = _resolve_branch(state, lambda_signed)
    dlog, mask = log_derivative(b.rho, state.floor(b))
    coef = (float(lambda_signed) / (2.0 * b.mass)) ** 2
    return ScalarField(b.grid, coef * dlog.values**2), mask


def effective_velocity_field(state: ModelState, magnitude: float | None = None) -> ScalarField:
    """Average of the two signed flows at one magnitude: (grad S)/m.

    The multiplier term cancels between +|lambda| and -|lambda|, so the
    effective flow carries no density dependence.
    """
    if magnitude is None:
        if len(state.branches) != 1:
            raise ValueError("magnitude is required when several atoms are present")
        b = state.branches[0]
    else:
        b = state.branch_for(abs(float(magnitude)))
    dS = derivative(b.phase)
    return ScalarField(b.grid, dS.values / b.mass)


def osmotic_velocity_field(state: ModelState):
    """u = (hbar/2m) (grad rho)/rho for the canonical two-point ensemble."""
    b = state.single_branch()
    dlog, mask = log_derivative(b.rho, state.floor(b))
    coef = state.hbar / (2.0 * b.mass)
    return ScalarField(b.grid, coef * dlog.values), mask


def quantum_potential_field(state: ModelState):
    """Curvature potential U = -(hbar^2/2m) (d2 sqrt(rho)/dq2) / sqrt(rho).

    The division is floored at sqrt of the density floor; the returned mask
    marks the floored points.
    """
    b = state.single_branch()
    floor = state.floor(b)
    amp = ScalarField(b.grid, np.sqrt(b.rho.values))
    d2 = second_derivative(amp)
    mask = b.rho.values < floor
    denom = np.maximum(amp.values, np.sqrt(floor))
    coef = -state.hbar**2 / (2.0 * b.mass)
    return ScalarField(b.grid, coef * d2.values / denom), mask


def velocity_distribution_analytic(state: ModelState, n_points: int = 4001) -> ScalarField:
    """Closed-form velocity density for zero-phase Gaussian branches.

    Each branch with rho ~ exp(-a q^2) maps, at signed multiplier lambda, to
    a centered Gaussian velocity with variance a lambda^2 / (2 m^2); the full
    distribution is the weight-mixture over signed atoms. Raises ValueError
    when any branch lacks the Gaussian tag or has a nonzero phase.
    """
    sigmas = {}
    for b in state.branches:
        if b.gaussian_a is None:
            raise ValueError(
                "analytic velocity distribution requires Gaussian branches; "
                f"branch at magnitude {b.magnitude:g} has no Gaussian profile tag"
            )
        if np.any(b.phase.values != 0.0):
            raise ValueError(
                "analytic velocity distribution requires zero phase; "
                f"branch at magnitude {b.magnitude:g} has a nonzero phase"
            )
        sigmas[b.magnitude] = np.sqrt(b.gaussian_a / 2.0) * b.magnitude / b.mass

    atoms = state.lambda_dist.signed_atoms()
    smax = max(sigmas[abs(lam)] for lam, _ in atoms)
    grid = Grid1D(-8.0 * smax, 8.0 * smax, n_points)
    v = grid.points
    dens = np.zeros_like(v)
    for lam, p in atoms:
        s = sigmas[abs(lam)]
        dens += p * np.exp(-0.5 * (v / s) ** 2) / (s * np.sqrt(2.0 * np.pi))
    return ScalarField(grid, dens)


def velocity_distribution_cdf(state: ModelState):
    """Callable CDF of the analytic velocity mixture (for distribution tests)."""
    from scipy.special import ndtr

    params = []
    for b in state.branches:
        if b.gaussian_a is None or np.any(b.phase.values != 0.0):
            raise ValueError(
                "analytic velocity distribution requires zero-phase Gaussian branches"
            )
        params.append((b.magnitude, np.sqrt(b.gaussian_a / 2.0) * b.magnitude / b.mass))
    sigmas = dict(params)
    atoms = state.lambda_dist.signed_atoms()

    def cdf(v):
        v = np.asarray(v, dtype=float)
        out = np.zeros_like(v)
        for lam, p in atoms:
            out = out + p * ndtr(v / sigmas[abs(lam)])
        return out

    return cdf
