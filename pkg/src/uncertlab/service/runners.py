"""Translate service requests into core operations and back into schemas."""

from __future__ import annotations

from dataclasses import replace

from ..checks import (
    momentum_variance_decomposition,
    osmotic_uncertainty_product,
    quantum_potential_identity_report,
    uncertainty_chain_report,
    uncertainty_product_general,
    uncertainty_product_quantum,
)
from ..model import LambdaDistribution, ModelState, VerificationReport
from ..montecarlo import estimate_uncertainty_product, sample, velocity_histogram
from ..numerics import Grid1D
from ..states import StateSpec, build, default_grid, load_tabulated
from .schemas import (
    ReportModel,
    RunConfig,
    SampleResponse,
    SweepRequest,
    SweepResponse,
    SweepRow,
    VerifyResponse,
)

_QP_MIN_RTOL = 1e-5


def spec_from_config(cfg: RunConfig) -> StateSpec:
    s = cfg.state
    if s.kind == "tabulated":
        if s.file is not None:
            raise ValueError(
                "tabulated file references must be resolved client-side; "
                "send grid, rho and phase inline"
            )
        spec, _ = load_tabulated(
            {
                "grid": s.grid.model_dump(),
                "rho": s.rho,
                "phase": s.phase,
                "mass": s.mass,
                "hbar": s.hbar,
            }
        )
        return spec
    grid = None
    if s.grid is not None:
        grid = Grid1D(s.grid.q_min, s.grid.q_max, s.grid.n_points)
    return StateSpec(
        kind=s.kind,
        mass=s.mass,
        hbar=s.hbar,
        omega=s.omega,
        n_level=s.n_level,
        a=s.a,
        p0=s.p0,
        separation=s.separation,
        relative_sign=s.relative_sign,
        center=s.center,
        grid=grid,
    )


def state_from_config(cfg: RunConfig) -> ModelState:
    spec = spec_from_config(cfg)
    dist = None
    if cfg.lambda_atoms is not None:
        dist = LambdaDistribution(tuple(cfg.lambda_atoms))
    grid = None
    if cfg.grid is not None:
        grid = Grid1D(cfg.grid.q_min, cfg.grid.q_max, cfg.grid.n_points)
    elif cfg.grid_points is not None and spec.kind != "tabulated":
        grid = default_grid(spec, dist, n_points=cfg.grid_points)
    state = build(spec, lambda_dist=dist, grid=grid)
    if cfg.floor_scale != state.floor_scale:
        state = replace(state, floor_scale=cfg.floor_scale)
    return state


def _q0(cfg: RunConfig) -> float | None:
    return None if cfg.q0 == "mean" else float(cfg.q0)


def _to_model(report: VerificationReport) -> ReportModel:
    return ReportModel(**report.to_dict())


def run_verify(cfg: RunConfig) -> VerifyResponse:
    state = state_from_config(cfg)
    q0 = _q0(cfg)
    tol = cfg.tolerance
    reports = [uncertainty_product_general(state, q0=q0, tolerance=tol)]
    if state.is_canonical():
        reports.append(uncertainty_product_quantum(state, q0=q0, tolerance=tol))
        reports.append(momentum_variance_decomposition(state, rtol=tol))
        reports.append(uncertainty_chain_report(state, tolerance=tol))
        reports.append(osmotic_uncertainty_product(state, q0=q0, tolerance=tol))
        reports.append(
            quantum_potential_identity_report(state, rtol=max(tol, _QP_MIN_RTOL))
        )
    models = [_to_model(r) for r in reports]
    return VerifyResponse(
        config=cfg, reports=models, all_passed=all(r.passed for r in models)
    )


def _format_atoms(atoms) -> str:
    return ";".join(f"{m:g}:{w:g}" for m, w in atoms)


def run_sweep(req: SweepRequest) -> SweepResponse:
    cfg = req.config
    if not req.values:
        raise ValueError("sweep needs at least one value")
    rows: list[SweepRow] = []

    if req.parameter == "slit_width":
        spec = spec_from_config(cfg)
        if spec.kind != "gaussian_ground":
            raise ValueError(
                "slit_width sweeps rescale the ground profile width and "
                f"require kind gaussian_ground, got {spec.kind!r}"
            )
        if cfg.lambda_atoms is not None:
            raise ValueError(
                "slit_width sweeps use the canonical multiplier distribution"
            )
        for value in req.values:
            a = float(value)
            if not (a > 0.0):
                raise ValueError(f"slit width parameter must be positive, got {a}")
            spec_a = replace(spec, omega=a * spec.hbar / spec.mass, grid=None)
            grid = None
            if cfg.grid_points is not None:
                grid = default_grid(spec_a, n_points=cfg.grid_points)
            state = build(spec_a, grid=grid)
            if cfg.floor_scale != state.floor_scale:
                state = replace(state, floor_scale=cfg.floor_scale)
            rep = uncertainty_product_quantum(state, tolerance=cfg.tolerance)
            rows.append(
                SweepRow(
                    value=a,
                    sigma_q=rep.extras["sigma_q"],
                    sigma_qdot=rep.extras["sigma_qdot"],
                    product=rep.lhs,
                    bound=rep.bound_or_rhs,
                    slack=rep.slack,
                )
            )
    elif req.parameter == "q0":
        state = state_from_config(cfg)
        for value in req.values:
            rep = uncertainty_product_general(
                state, q0=float(value), tolerance=cfg.tolerance
            )
            rows.append(
                SweepRow(
                    value=float(value),
                    sigma_q=rep.extras["sigma_q"],
                    sigma_qdot=rep.extras["sigma_qdot"],
                    product=rep.lhs,
                    bound=rep.bound_or_rhs,
                    slack=rep.slack,
                )
            )
    else:
        spec = spec_from_config(cfg)
        for value in req.values:
            try:
                atoms = tuple((float(m), float(w)) for m, w in value)
            except (TypeError, ValueError) as exc:
                raise ValueError(
                    "lambda_atoms sweep values must be lists of "
                    f"[magnitude, weight] pairs, got {value!r}"
                ) from exc
            dist = LambdaDistribution(atoms)
            grid = None
            if cfg.grid_points is not None and spec.kind != "tabulated":
                grid = default_grid(spec, dist, n_points=cfg.grid_points)
            state = build(spec, lambda_dist=dist, grid=grid)
            if cfg.floor_scale != state.floor_scale:
                state = replace(state, floor_scale=cfg.floor_scale)
            rep = uncertainty_product_general(
                state, q0=_q0(cfg), tolerance=cfg.tolerance
            )
            rows.append(
                SweepRow(
                    value=_format_atoms(atoms),
                    sigma_q=rep.extras["sigma_q"],
                    sigma_qdot=rep.extras["sigma_qdot"],
                    product=rep.lhs,
                    bound=rep.bound_or_rhs,
                    slack=rep.slack,
                )
            )
    return SweepResponse(config=cfg, parameter=req.parameter, rows=rows)


def run_sample(cfg: RunConfig) -> SampleResponse:
    state = state_from_config(cfg)
    batch = sample(state, cfg.mc.n_samples, cfg.mc.seed)
    stats = estimate_uncertainty_product(state, batch, q0=_q0(cfg))
    hist = velocity_histogram(state, batch, n_bins=cfg.mc.n_bins)
    samples = None
    if cfg.mc.include_samples:
        samples = [
            (float(q), float(lam))
            for q, lam in zip(batch.positions, batch.lambdas)
        ]
    return SampleResponse(
        config=cfg, stats=_to_model(stats), histogram=hist, samples=samples
    )
