import numpy as np
import pytest

from uncertlab.model import LambdaDistribution
from uncertlab.montecarlo import (
    CHUNK,
    estimate_uncertainty_product,
    sample,
    sample_velocities,
    velocity_histogram,
)
from uncertlab.states import StateSpec, build, default_grid


@pytest.fixture(scope="module")
def gauss4k():
    spec = StateSpec(kind="gaussian_ground")
    return build(spec, grid=default_grid(spec, n_points=4001))


@pytest.fixture(scope="module")
def two_atom4k():
    spec = StateSpec(kind="gaussian_ground")
    dist = LambdaDistribution(atoms=((0.5, 0.3), (2.0, 0.7)))
    return build(spec, lambda_dist=dist, grid=default_grid(spec, dist, 4001))


class TestSample:
    def test_argument_validation(self, gauss4k):
        with pytest.raises(ValueError, match="n_samples must be positive"):
            sample(gauss4k, 0, seed=1)
        with pytest.raises(ValueError, match="seed must be nonnegative"):
            sample(gauss4k, 10, seed=-1)

    def test_repeat_is_bit_identical(self, gauss4k):
        a = sample(gauss4k, 30_000, seed=5)
        b = sample(gauss4k, 30_000, seed=5)
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.lambdas, b.lambdas)

    def test_prefix_stability_across_chunks(self, gauss4k):
        # 70000 crosses the 65536-sample chunk boundary
        assert 65_536 < 70_000 < 2 * CHUNK
        big = sample(gauss4k, 70_000, seed=5)
        small = sample(gauss4k, 1_000, seed=5)
        assert np.array_equal(big.positions[:1_000], small.positions)

    def test_seed_changes_draws(self, gauss4k):
        a = sample(gauss4k, 10_000, seed=5)
        b = sample(gauss4k, 10_000, seed=6)
        assert not np.array_equal(a.positions, b.positions)

    def test_position_moments(self, gauss4k):
        b = sample(gauss4k, 100_000, seed=0)
        assert abs(b.positions.mean()) < 0.01
        assert np.var(b.positions) == pytest.approx(0.5, abs=0.015)

    def test_lambda_marginal(self, two_atom4k):
        b = sample(two_atom4k, 100_000, seed=3)
        assert set(np.unique(b.lambdas)) == {-2.0, -0.5, 0.5, 2.0}
        frac_heavy = np.mean(np.abs(b.lambdas) == 2.0)
        assert frac_heavy == pytest.approx(0.7, abs=0.01)
        assert abs(np.mean(np.sign(b.lambdas))) < 0.02

    def test_token_ties_batch_to_state(self, gauss4k, two_atom4k):
        b = sample(gauss4k, 1_000, seed=0)
        with pytest.raises(ValueError, match="different state"):
            estimate_uncertainty_product(two_atom4k, b)
        with pytest.raises(ValueError, match="different state"):
            sample_velocities(two_atom4k, b)


class TestEstimate:
    def test_concordance_with_quadrature(self, gauss4k):
        b = sample(gauss4k, 100_000, seed=0)
        rep = estimate_uncertainty_product(gauss4k, b)
        assert rep.passed
        assert rep.kind == "identity"
        assert abs(rep.extras["z_score"]) < 3.0
        assert rep.tolerance == pytest.approx(3.0 * rep.extras["se_product"])
        assert rep.bound_or_rhs == pytest.approx(1.0, abs=1e-6)

    def test_two_atom_concordance(self, two_atom4k):
        b = sample(two_atom4k, 100_000, seed=3)
        rep = estimate_uncertainty_product(two_atom4k, b)
        assert rep.passed
        assert rep.bound_or_rhs == pytest.approx(1.4725, abs=1e-6)


class TestVelocityHistogram:
    def test_gaussian_counts_and_ks(self, gauss4k):
        b = sample(gauss4k, 100_000, seed=7)
        h = velocity_histogram(gauss4k, b, n_bins=40)
        assert sum(h["counts"]) == 100_000
        assert len(h["bin_edges"]) == 41
        assert h["analytic_available"]
        assert h["ks_statistic"] < h["ks_critical_1pct"]
        assert h["std"] == pytest.approx(np.sqrt(0.5), abs=0.01)

    def test_mixture_ks(self, two_atom4k):
        b = sample(two_atom4k, 100_000, seed=3)
        h = velocity_histogram(two_atom4k, b, n_bins=40)
        assert h["analytic_available"]
        assert h["ks_statistic"] < h["ks_critical_1pct"]

    def test_no_closed_form_for_nonzero_phase(self):
        spec = StateSpec(kind="boosted_gaussian", p0=0.5)
        st = build(spec, grid=default_grid(spec, n_points=4001))
        b = sample(st, 5_000, seed=2)
        h = velocity_histogram(st, b)
        assert not h["analytic_available"]
        assert h["ks_statistic"] is None
        # boost shifts every velocity by p0/m
        assert h["mean"] == pytest.approx(0.5, abs=0.05)

    def test_bin_count_validation(self, gauss4k):
        b = sample(gauss4k, 1_000, seed=0)
        with pytest.raises(ValueError, match="n_bins"):
            velocity_histogram(gauss4k, b, n_bins=1)
