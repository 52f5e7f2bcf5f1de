"""Verification operations: moments, products, identities, chained bounds.

Every report-producing function evaluates its quantities twice, once on the
working grid and once on the index-decimated grid, and records
|fine - coarse| / 3 as the discretization estimate (the leading-error ratio
for second-order stencils under grid doubling).

Identity checks take a relative tolerance; the absolute tolerance stored in
the report is rtol * max(|lhs|, |rhs|, 1e-300).
"""

from __future__ import annotations

import numpy as np

from .kinematics import (
    deviation_field,
    osmotic_velocity_field,
    quantum_potential_field,
    velocity_field,
)
from .model import BranchState, ModelState, VerificationReport, make_report
from .numerics import (
    ScalarField,
    derivative,
    fill_masked_interior,
    integrate,
    log_derivative,
    masked_mass,
)

__all__ = [
    "position_second_moment",
    "weighted_velocity_deviation",
    "fisher_information",
    "operator_momentum_variance",
    "momentum_variance_decomposition",
    "uncertainty_product_general",
    "uncertainty_product_quantum",
    "q0_optimality_sweep",
    "uncertainty_chain_report",
    "osmotic_uncertainty_product",
    "quantum_potential_identity_report",
    "mean_momentum",
]

_TINY = 1e-300


def _masked_integral(rho: ScalarField, integrand_values, mask) -> float:
    """Integrate an integrand whose masked interior points are unreliable."""
    filled = fill_masked_interior(integrand_values, mask)
    return integrate(ScalarField(rho.grid, filled))


def position_second_moment(state: ModelState, q0: float | None = None) -> float:
    """Joint second moment of position about q0 (default: the ensemble mean)."""
    if q0 is None:
        q0 = state.mean_position()
    q = state.grid.points
    total = 0.0
    for w, b in zip(state.lambda_dist.weights, state.branches):
        total += w * integrate(ScalarField(state.grid, (q - q0) ** 2 * b.rho.values))
    return total


def _branch_deviation_moment(state: ModelState, b: BranchState) -> tuple[float, float]:
    """Integral of (2/lambda)^2 (m qdot - grad S)^2 rho for one branch.

    The multiplier magnitude cancels, so one signed evaluation covers both
    atoms of the pair. Returns (moment, masked mass).
    """
    v, mask = velocity_field(state, b.magnitude)
    dS = derivative(b.phase)
    dev = b.mass * v.values - dS.values
    integrand = (2.0 / b.magnitude) ** 2 * dev**2 * b.rho.values
    value = _masked_integral(b.rho, integrand, mask)
    return value, masked_mass(b.rho, mask)


def weighted_velocity_deviation(state: ModelState) -> tuple[float, float]:
    """Multiplier-weighted second moment of the velocity deviation.

    sum over atoms of P(lambda) * integral (2/lambda)^2 (m qdot - grad S)^2 rho.
    Returns (value, weighted masked mass).
    """
    total = 0.0
    mmass = 0.0
    for w, b in zip(state.lambda_dist.weights, state.branches):
        val, mm = _branch_deviation_moment(state, b)
        total += w * val
        mmass += w * mm
    return total, mmass


def _branch_fisher(state: ModelState, b: BranchState) -> tuple[float, float]:
    dlog, mask = log_derivative(b.rho, state.floor(b))
    integrand = dlog.values**2 * b.rho.values
    value = _masked_integral(b.rho, integrand, mask)
    return value, masked_mass(b.rho, mask)


def fisher_information(state: ModelState) -> tuple[float, float]:
    """Integral of (grad rho)^2 / rho for the canonical single branch.

    Returns (value, masked mass). Low-density points are floored and the
    integrand is bridged across interior floored runs before quadrature.
    """
    return _branch_fisher(state, state.single_branch())


def mean_momentum(state: ModelState) -> float:
    """Expectation of the phase gradient over the canonical branch."""
    b = state.single_branch()
    dS = derivative(b.phase)
    return integrate(ScalarField(b.grid, b.rho.values * dS.values))


def operator_momentum_variance(state: ModelState) -> tuple[float, float]:
    """Momentum variance via the amplitude-gradient form.

    integral [ hbar^2 (grad sqrt(rho))^2 + rho (grad S)^2 ] dq
    minus the squared mean of grad S. The amplitude-gradient integrand is
    bridged across interior floored runs (amplitude kinks at density nodes
    otherwise poison the stencil). Returns (variance, masked mass).
    """
    b = state.single_branch()
    amp = ScalarField(b.grid, np.sqrt(b.rho.values))
    damp = derivative(amp)
    mask = b.rho.values < state.floor(b)
    osmotic_integrand = state.hbar**2 * damp.values**2
    osmotic = _masked_integral(b.rho, osmotic_integrand, mask)
    dS = derivative(b.phase)
    conv = integrate(ScalarField(b.grid, b.rho.values * dS.values**2))
    p_mean = integrate(ScalarField(b.grid, b.rho.values * dS.values))
    return osmotic + conv - p_mean**2, masked_mass(b.rho, mask)


def _convective_variance(state: ModelState) -> float:
    b = state.single_branch()
    dS = derivative(b.phase)
    m1 = integrate(ScalarField(b.grid, b.rho.values * dS.values))
    m2 = integrate(ScalarField(b.grid, b.rho.values * dS.values**2))
    return m2 - m1**2


def _identity_report(
    name: str,
    lhs: float,
    rhs: float,
    rtol: float,
    disc: float,
    mmass: float,
    state: ModelState,
    extras: dict,
) -> VerificationReport:
    tol_abs = rtol * max(abs(lhs), abs(rhs), _TINY)
    extras = dict(extras)
    extras["rtol"] = rtol
    return make_report(
        name=name,
        kind="identity",
        lhs=lhs,
        bound_or_rhs=rhs,
        tolerance=tol_abs,
        discretization_estimate=disc,
        masked_mass=mmass,
        grid=state.grid,
        extras=extras,
    )


def momentum_variance_decomposition(
    state: ModelState, rtol: float = 1e-6
) -> VerificationReport:
    """Check variance(p) = hbar^2/4 * Fisher + variance of the phase gradient."""

    def run(s: ModelState):
        var_p, mm = operator_momentum_variance(s)
        fisher, mm_f = fisher_information(s)
        osmotic = s.hbar**2 / 4.0 * fisher
        conv = _convective_variance(s)
        return var_p, osmotic, conv, max(mm, mm_f)

    var_p, osmotic, conv, mm = run(state)
    var_c, osm_c, conv_c, _ = run(state.coarsened())
    resid_f = var_p - (osmotic + conv)
    resid_c = var_c - (osm_c + conv_c)
    disc = abs(resid_f - resid_c) / 3.0
    return _identity_report(
        "momentum_variance_decomposition",
        lhs=var_p,
        rhs=osmotic + conv,
        rtol=rtol,
        disc=disc,
        mmass=mm,
        state=state,
        extras={
            "osmotic_term": osmotic,
            "convective_term": conv,
            "mean_momentum": mean_momentum(state),
            "residual": resid_f,
        },
    )


def uncertainty_product_general(
    state: ModelState, q0: float | None = None, tolerance: float = 1e-6
) -> VerificationReport:
    """Product of position spread and weighted velocity deviation, bound 1."""
    if q0 is None:
        q0 = state.mean_position()

    def run(s: ModelState):
        sq = position_second_moment(s, q0)
        sv, mm = weighted_velocity_deviation(s)
        return sq, sv, mm

    sq, sv, mm = run(state)
    sq_c, sv_c, _ = run(state.coarsened())
    disc = abs(sq * sv - sq_c * sv_c) / 3.0
    return make_report(
        name="uncertainty_product_general",
        kind="inequality",
        lhs=sq * sv,
        bound_or_rhs=1.0,
        tolerance=tolerance,
        discretization_estimate=disc,
        masked_mass=mm,
        grid=state.grid,
        extras={"q0": q0, "sigma_q": sq, "sigma_qdot": sv, "product": sq * sv},
    )


def uncertainty_product_quantum(
    state: ModelState, q0: float | None = None, tolerance: float = 1e-6
) -> VerificationReport:
    """Position spread times osmotic velocity variance, bound hbar^2/4m^2."""
    if q0 is None:
        q0 = state.mean_position()
    bound = state.hbar**2 / (4.0 * state.mass**2)

    def run(s: ModelState):
        sq = position_second_moment(s, q0)
        fisher, mm = fisher_information(s)
        sv = s.hbar**2 / (4.0 * s.mass**2) * fisher
        return sq, sv, fisher, mm

    sq, sv, fisher, mm = run(state)
    sq_c, sv_c, _, _ = run(state.coarsened())
    disc = abs(sq * sv - sq_c * sv_c) / 3.0
    return make_report(
        name="uncertainty_product_quantum",
        kind="inequality",
        lhs=sq * sv,
        bound_or_rhs=bound,
        tolerance=tolerance,
        discretization_estimate=disc,
        masked_mass=mm,
        grid=state.grid,
        extras={
            "q0": q0,
            "sigma_q": sq,
            "sigma_qdot": sv,
            "fisher_information": fisher,
            "product": sq * sv,
        },
    )


def q0_optimality_sweep(
    state: ModelState,
    q0_values=None,
    half_width_sigmas: float = 1.0,
    n_values: int = 9,
) -> dict:
    """Scan the reference point of the position spread.

    The product is quadratic in q0 with its minimum at the ensemble mean;
    the vertex of a least-squares parabola through the swept products is
    returned alongside the mean for comparison.
    """
    mean = state.mean_position()
    var = position_second_moment(state, mean)
    if q0_values is None:
        half = half_width_sigmas * np.sqrt(var)
        q0_values = mean + np.linspace(-half, half, n_values)
    q0_values = np.asarray(q0_values, dtype=float)
    if q0_values.size < 3:
        raise ValueError("q0 sweep needs at least 3 values")
    sv, mm = weighted_velocity_deviation(state)
    sq = np.array([position_second_moment(state, q0) for q0 in q0_values])
    products = sq * sv
    coeffs = np.polyfit(q0_values, products, 2)
    vertex = -coeffs[1] / (2.0 * coeffs[0])
    return {
        "q0_values": [float(v) for v in q0_values],
        "sigma_q": [float(v) for v in sq],
        "sigma_qdot": float(sv),
        "products": [float(v) for v in products],
        "bound": 1.0,
        "vertex": float(vertex),
        "mean_position": float(mean),
        "masked_mass": float(mm),
        "grid_spacing": state.grid.spacing,
    }


def uncertainty_chain_report(
    state: ModelState, q0: float | None = None, tolerance: float = 1e-6
) -> VerificationReport:
    """Two-link bound: var(q) var(p) >= hbar^2/4 F var(q) / ... >= hbar^2/4.

    The middle member is var(q) times the osmotic part of the momentum
    variance. The reference point must sit on the ensemble mean (within one
    grid spacing) for the lower link to hold.
    """
    mean = state.mean_position()
    if q0 is None:
        q0 = mean
    elif abs(q0 - mean) > state.grid.spacing:
        raise ValueError(
            f"chain reference point q0 = {q0!r} must match the ensemble mean "
            f"{mean!r} within one grid spacing"
        )

    def run(s: ModelState):
        var_q = position_second_moment(s, q0)
        var_p, mm = operator_momentum_variance(s)
        fisher, mm_f = fisher_information(s)
        upper = var_q * var_p
        middle = var_q * s.hbar**2 / 4.0 * fisher
        return upper, middle, max(mm, mm_f)

    lower = state.hbar**2 / 4.0
    upper, middle, mm = run(state)
    upper_c, middle_c, _ = run(state.coarsened())
    disc = max(abs(upper - upper_c), abs(middle - middle_c)) / 3.0
    slack_upper = upper - middle
    slack_lower = middle - lower
    passed = slack_upper >= -tolerance and slack_lower >= -tolerance
    return VerificationReport(
        name="uncertainty_chain",
        kind="inequality",
        lhs=float(upper),
        bound_or_rhs=float(lower),
        slack=float(min(slack_upper, slack_lower)),
        tolerance=float(tolerance),
        discretization_estimate=float(disc),
        masked_mass=float(mm),
        passed=bool(passed),
        grid=state.grid,
        extras={
            "upper": float(upper),
            "middle": float(middle),
            "lower": float(lower),
            "slack_upper": float(slack_upper),
            "slack_lower": float(slack_lower),
            "q0": float(q0),
        },
    )


def osmotic_uncertainty_product(
    state: ModelState, q0: float | None = None, tolerance: float = 1e-6
) -> VerificationReport:
    """Position spread times mean squared osmotic velocity, bound hbar^2/4m^2.

    Also records the mean osmotic velocity (zero for normalized densities
    vanishing at the boundary) and the matching moment of the squared
    deviation field.
    """
    if q0 is None:
        q0 = state.mean_position()
    bound = state.hbar**2 / (4.0 * state.mass**2)
    b = state.single_branch()

    def run(s: ModelState):
        sb = s.single_branch()
        u, mask = osmotic_velocity_field(s)
        mean_u = _masked_integral(sb.rho, sb.rho.values * u.values, mask)
        mean_u2 = _masked_integral(sb.rho, sb.rho.values * u.values**2, mask)
        sq = position_second_moment(s, q0)
        return sq, mean_u, mean_u2, masked_mass(sb.rho, mask)

    sq, mean_u, mean_u2, mm = run(state)
    sq_c, _, mean_u2_c, _ = run(state.coarsened())
    disc = abs(sq * mean_u2 - sq_c * mean_u2_c) / 3.0

    dev, dev_mask = deviation_field(state, state.hbar)
    dev_moment = _masked_integral(b.rho, b.rho.values * dev.values, dev_mask)

    return make_report(
        name="osmotic_uncertainty_product",
        kind="inequality",
        lhs=sq * mean_u2,
        bound_or_rhs=bound,
        tolerance=tolerance,
        discretization_estimate=disc,
        masked_mass=mm,
        grid=state.grid,
        extras={
            "q0": q0,
            "sigma_q": sq,
            "mean_osmotic_velocity": mean_u,
            "mean_squared_osmotic_velocity": mean_u2,
            "deviation_second_moment": dev_moment,
        },
    )


def quantum_potential_identity_report(
    state: ModelState, rtol: float = 1e-5
) -> VerificationReport:
    """Check mean of the curvature potential against hbar^2 F / 8m.

    The identity rests on a vanishing boundary term; its magnitude,
    hbar^2/2m * |sqrt(rho) d sqrt(rho)| at each end of the grid, is reported
    in the extras so a failure from grid truncation is distinguishable from
    a genuine defect.
    """

    def run(s: ModelState):
        sb = s.single_branch()
        u_field, mask = quantum_potential_field(s)
        mean_u = _masked_integral(sb.rho, sb.rho.values * u_field.values, mask)
        fisher, mm_f = fisher_information(s)
        rhs = s.hbar**2 * fisher / (8.0 * sb.mass)
        return mean_u, rhs, fisher, max(masked_mass(sb.rho, mask), mm_f)

    mean_u, rhs, fisher, mm = run(state)
    mean_u_c, rhs_c, _, _ = run(state.coarsened())
    disc = abs((mean_u - rhs) - (mean_u_c - rhs_c)) / 3.0

    b = state.single_branch()
    amp = np.sqrt(b.rho.values)
    damp = derivative(ScalarField(b.grid, amp)).values
    coef = state.hbar**2 / (2.0 * b.mass)
    boundary = coef * (abs(amp[0] * damp[0]) + abs(amp[-1] * damp[-1]))

    return _identity_report(
        "quantum_potential_identity",
        lhs=mean_u,
        rhs=rhs,
        rtol=rtol,
        disc=disc,
        mmass=mm,
        state=state,
        extras={
            "fisher_information": fisher,
            "boundary_residual": float(boundary),
            "residual": mean_u - rhs,
        },
    )
