"""Counter-based sampling of (q, lambda) pairs and sample-side estimators.

Sampling is chunked: chunk c of a run with seed s uses a Philox stream keyed
by (s, c) and always generates a full chunk of uniforms before truncation.
Draws are therefore bit-reproducible, independent of how work is split, and
extending a run leaves the existing prefix of samples unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import kstest, kstwobign

from .checks import uncertainty_product_general
from .kinematics import velocity_distribution_cdf, velocity_field
from .model import ModelState, VerificationReport
from .numerics import derivative

__all__ = [
    "CHUNK",
    "SampleBatch",
    "sample",
    "estimate_uncertainty_product",
    "velocity_histogram",
]

CHUNK = 65536


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """One reproducible draw: positions, signed multipliers, seed and origin token."""

    seed: int
    n_samples: int
    positions: np.ndarray
    lambdas: np.ndarray
    state_token: str


def _position_tables(state: ModelState) -> dict:
    """Cumulative distribution tables for inverse-transform position draws."""
    q = state.grid.points
    h = state.grid.spacing
    tables = {}
    for b in state.branches:
        rho = b.rho.values
        cdf = np.concatenate(([0.0], np.cumsum(0.5 * (rho[:-1] + rho[1:]) * h)))
        cdf /= cdf[-1]
        tables[b.magnitude] = cdf
    return tables


def _invert_cdf(q, cdf, u):
    idx = np.clip(np.searchsorted(cdf, u, side="right"), 1, len(cdf) - 1)
    lo = cdf[idx - 1]
    seg = cdf[idx] - lo
    frac = np.where(seg > 0.0, (u - lo) / np.where(seg > 0.0, seg, 1.0), 0.0)
    return q[idx - 1] + frac * (q[idx] - q[idx - 1])


def sample(state: ModelState, n_samples: int, seed: int) -> SampleBatch:
    """Draw n_samples (position, signed multiplier) pairs from the ensemble.

    The multiplier is drawn first from the signed atoms, then the position
    from the matching branch density by linear inversion of its trapezoid
    cumulative table.
    """
    if n_samples <= 0:
        raise ValueError(f"n_samples must be positive, got {n_samples}")
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")

    atoms = state.lambda_dist.signed_atoms()
    lam_values = np.array([lam for lam, _ in atoms])
    cum_p = np.cumsum([p for _, p in atoms])
    cum_p[-1] = 1.0
    tables = _position_tables(state)
    q = state.grid.points

    positions = np.empty(n_samples)
    lambdas = np.empty(n_samples)
    for chunk in range(0, (n_samples + CHUNK - 1) // CHUNK):
        bits = np.random.Philox(key=np.array([seed, chunk], dtype=np.uint64))
        u = np.random.Generator(bits).random((CHUNK, 2))
        start = chunk * CHUNK
        stop = min(start + CHUNK, n_samples)
        u = u[: stop - start]
        atom_idx = np.searchsorted(cum_p, u[:, 0], side="right")
        lam = lam_values[atom_idx]
        pos = np.empty(stop - start)
        for mag, cdf in tables.items():
            sel = np.abs(lam) == mag
            if np.any(sel):
                pos[sel] = _invert_cdf(q, cdf, u[sel, 1])
        positions[start:stop] = pos
        lambdas[start:stop] = lam
    return SampleBatch(
        seed=seed,
        n_samples=n_samples,
        positions=positions,
        lambdas=lambdas,
        state_token=state.fingerprint(),
    )


def _deviation_weight_at(state: ModelState, batch: SampleBatch):
    """(2/lambda)^2 (m qdot - grad S)^2 at each sample, by interpolation."""
    q = state.grid.points
    out = np.empty(batch.n_samples)
    for b in state.branches:
        v, _ = velocity_field(state, b.magnitude)
        dS = derivative(b.phase)
        dev2 = ((2.0 / b.magnitude) * (b.mass * v.values - dS.values)) ** 2
        sel = np.abs(batch.lambdas) == b.magnitude
        if np.any(sel):
            out[sel] = np.interp(batch.positions[sel], q, dev2)
    return out


def estimate_uncertainty_product(
    state: ModelState,
    batch: SampleBatch,
    q0: float | None = None,
    n_sigma: float = 3.0,
) -> VerificationReport:
    """Compare the sampled uncertainty product against quadrature.

    The product of sample means is matched to the grid value within
    n_sigma standard errors; the error combines both factor variances and
    their covariance (first-order propagation through the product).
    """
    if batch.state_token != state.fingerprint():
        raise ValueError("sample batch was drawn from a different state")
    if q0 is None:
        q0 = state.mean_position()

    x = (batch.positions - q0) ** 2
    y = _deviation_weight_at(state, batch)
    n = batch.n_samples
    mx, my = x.mean(), y.mean()
    cov = np.cov(x, y, ddof=1)
    var_prod = my**2 * cov[0, 0] + mx**2 * cov[1, 1] + 2.0 * mx * my * cov[0, 1]
    se = np.sqrt(max(var_prod, 0.0) / n)

    quad = uncertainty_product_general(state, q0=q0)
    mc_product = mx * my
    z = (mc_product - quad.lhs) / se if se > 0 else np.inf
    tol = n_sigma * se
    slack = abs(mc_product - quad.lhs)
    return VerificationReport(
        name="montecarlo_product_concordance",
        kind="identity",
        lhs=float(mc_product),
        bound_or_rhs=float(quad.lhs),
        slack=float(slack),
        tolerance=float(tol),
        discretization_estimate=quad.discretization_estimate,
        masked_mass=quad.masked_mass,
        passed=bool(slack <= tol),
        grid=state.grid,
        extras={
            "n_samples": n,
            "seed": batch.seed,
            "mc_sigma_q": float(mx),
            "mc_sigma_qdot": float(my),
            "se_sigma_q": float(np.sqrt(cov[0, 0] / n)),
            "se_sigma_qdot": float(np.sqrt(cov[1, 1] / n)),
            "se_product": float(se),
            "z_score": float(z),
            "quadrature_sigma_q": quad.extras["sigma_q"],
            "quadrature_sigma_qdot": quad.extras["sigma_qdot"],
            "q0": float(q0),
        },
    )


def sample_velocities(state: ModelState, batch: SampleBatch):
    """Configuration velocities of the sampled pairs."""
    if batch.state_token != state.fingerprint():
        raise ValueError("sample batch was drawn from a different state")
    q = state.grid.points
    out = np.empty(batch.n_samples)
    for lam, _ in state.lambda_dist.signed_atoms():
        sel = batch.lambdas == lam
        if np.any(sel):
            v, _ = velocity_field(state, lam)
            out[sel] = np.interp(batch.positions[sel], q, v.values)
    return out


def velocity_histogram(
    state: ModelState, batch: SampleBatch, n_bins: int = 80
) -> dict:
    """Histogram of sampled velocities with a distribution test if available.

    Bin edges span the sample mean plus or minus six standard deviations;
    values outside are folded into the end bins and counted separately. For
    zero-phase Gaussian branches the empirical distribution is tested
    against the closed-form mixture (exact one-sample statistic, 1 percent
    critical value).
    """
    if n_bins < 2:
        raise ValueError(f"n_bins must be at least 2, got {n_bins}")
    v = sample_velocities(state, batch)
    mean = float(v.mean())
    std = float(v.std(ddof=1))
    lo, hi = mean - 6.0 * std, mean + 6.0 * std
    n_out = int(np.count_nonzero((v < lo) | (v > hi)))
    edges = np.linspace(lo, hi, n_bins + 1)
    counts, _ = np.histogram(np.clip(v, lo, hi), bins=edges)

    result = {
        "n_samples": batch.n_samples,
        "seed": batch.seed,
        "mean": mean,
        "std": std,
        "bin_edges": [float(e) for e in edges],
        "counts": [int(c) for c in counts],
        "n_outliers": n_out,
        "analytic_available": False,
        "ks_statistic": None,
        "ks_pvalue": None,
        "ks_critical_1pct": None,
    }
    try:
        cdf = velocity_distribution_cdf(state)
    except ValueError:
        return result
    ks = kstest(v, cdf)
    result["analytic_available"] = True
    result["ks_statistic"] = float(ks.statistic)
    result["ks_pvalue"] = float(ks.pvalue)
    result["ks_critical_1pct"] = float(kstwobign.isf(0.01) / np.sqrt(batch.n_samples))
    return result
