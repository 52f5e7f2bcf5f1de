import numpy as np
import pytest

from uncertlab.checks import (
    fisher_information,
    mean_momentum,
    momentum_variance_decomposition,
    operator_momentum_variance,
    osmotic_uncertainty_product,
    position_second_moment,
    q0_optimality_sweep,
    quantum_potential_identity_report,
    uncertainty_chain_report,
    uncertainty_product_general,
    uncertainty_product_quantum,
    weighted_velocity_deviation,
)
from uncertlab.model import BranchState, LambdaDistribution, ModelState
from uncertlab.numerics import Grid1D, ScalarField, integrate
from uncertlab.states import StateSpec, build, default_grid


def _canonical_state(grid, rho_values, phase_values, gaussian_a=None):
    rho = ScalarField(grid, rho_values)
    rho = ScalarField(grid, rho.values / integrate(rho))
    branch = BranchState(
        magnitude=1.0,
        rho=rho,
        phase=ScalarField(grid, phase_values),
        mass=1.0,
        gaussian_a=gaussian_a,
    )
    return ModelState(LambdaDistribution.two_point(1.0), (branch,), hbar=1.0)


def _quadratic_phase_state(c=0.3, n_points=40001):
    grid = default_grid(StateSpec(kind="gaussian_ground"), n_points=n_points)
    q = grid.points
    return _canonical_state(grid, np.exp(-(q**2)), c * q**2, gaussian_a=1.0)


def _asymmetric_state(n_points=8001):
    # unequal superposition: the mean sits well away from the dominant peak
    grid = Grid1D(-10.0, 12.0, n_points)
    q = grid.points
    psi = np.exp(-0.5 * (q - 2.0) ** 2) + 0.5 * np.exp(-0.5 * (q + 2.0) ** 2)
    return _canonical_state(grid, psi**2, np.zeros(n_points))


def _two_atom_state(n_points=4001):
    spec = StateSpec(kind="gaussian_ground")
    dist = LambdaDistribution(atoms=((0.5, 0.3), (2.0, 0.7)))
    return build(spec, lambda_dist=dist, grid=default_grid(spec, dist, n_points))


def test_position_second_moment_parallel_axis(gauss_small):
    var = position_second_moment(gauss_small)
    shifted = position_second_moment(gauss_small, q0=0.8)
    assert var == pytest.approx(0.5, abs=1e-9)
    assert shifted == pytest.approx(var + 0.64, abs=1e-9)


def test_weighted_deviation_equals_fisher_for_canonical(gauss_small):
    dev, _ = weighted_velocity_deviation(gauss_small)
    fisher, _ = fisher_information(gauss_small)
    assert dev == pytest.approx(fisher, rel=1e-12)
    assert fisher == pytest.approx(2.0, abs=1e-8)


def test_weighted_deviation_mixes_branch_widths():
    # branch widths a_i = m omega / |lambda_i| give F_i = 2 a_i
    dev, _ = weighted_velocity_deviation(_two_atom_state())
    assert dev == pytest.approx(0.3 * 4.0 + 0.7 * 1.0, abs=1e-7)


def test_fisher_requires_canonical():
    with pytest.raises(ValueError, match="canonical two-point"):
        fisher_information(_two_atom_state())


def test_operator_momentum_variance_boosted(boosted_small):
    var_p, mm = operator_momentum_variance(boosted_small)
    assert var_p == pytest.approx(0.5, abs=1e-5)
    assert mean_momentum(boosted_small) == pytest.approx(0.7, abs=1e-9)
    assert mm < 1e-10


def test_decomposition_with_quadratic_phase():
    st = _quadratic_phase_state(c=0.3)
    rep = momentum_variance_decomposition(st)
    assert rep.passed
    assert rep.kind == "identity"
    # 0.5 osmotic + 2 c^2 convective
    assert rep.lhs == pytest.approx(0.68, abs=1e-6)
    assert rep.extras["osmotic_term"] == pytest.approx(0.5, abs=1e-6)
    assert rep.extras["convective_term"] == pytest.approx(0.18, abs=1e-6)
    assert rep.tolerance == pytest.approx(1e-6 * max(rep.lhs, rep.bound_or_rhs))


def test_decomposition_handles_interior_node(ho1_state):
    rep = momentum_variance_decomposition(ho1_state)
    assert rep.passed
    assert rep.masked_mass < 1e-3
    assert rep.lhs == pytest.approx(1.5, abs=1e-5)


def test_general_product_saturates_for_gaussian_density(boosted_small):
    rep = uncertainty_product_general(boosted_small)
    assert rep.kind == "inequality"
    assert rep.lhs == pytest.approx(1.0, abs=1e-7)
    assert rep.passed


def test_general_product_grows_off_mean(gauss_small):
    rep = uncertainty_product_general(gauss_small, q0=1.0)
    # (0.5 + 1.0) * 2.0
    assert rep.lhs == pytest.approx(3.0, abs=1e-6)
    assert rep.extras["q0"] == 1.0


def test_quantum_product_requires_canonical():
    with pytest.raises(ValueError, match="canonical two-point"):
        uncertainty_product_quantum(_two_atom_state())


def test_quantum_product_bound_scales_with_mass():
    spec = StateSpec(kind="gaussian_ground", mass=2.0)
    st = build(spec, grid=default_grid(spec, n_points=4001))
    rep = uncertainty_product_quantum(st)
    assert rep.bound_or_rhs == pytest.approx(1.0 / 16.0)
    assert rep.lhs == pytest.approx(rep.bound_or_rhs, abs=1e-8)


class TestQ0Sweep:
    def test_vertex_sits_on_mean_not_mode(self):
        st = _asymmetric_state()
        sw = q0_optimality_sweep(st)
        # quadrature mean of this superposition (30-digit oracle)
        assert sw["mean_position"] == pytest.approx(1.1826709014754890, abs=1e-6)
        assert abs(sw["vertex"] - sw["mean_position"]) < sw["grid_spacing"]
        # the dominant peak is at q = 2; the optimum is not there
        assert abs(sw["vertex"] - 2.0) > 0.5
        best = min(sw["products"])
        assert best >= 1.0 - 1e-6

    def test_explicit_values(self, gauss_small):
        sw = q0_optimality_sweep(gauss_small, q0_values=[-0.5, 0.0, 0.5])
        assert sw["products"][1] == pytest.approx(1.0, abs=1e-6)
        # parallel axis: (0.5 + 0.25) * 2
        assert sw["products"][0] == pytest.approx(1.5, abs=1e-6)
        assert sw["sigma_qdot"] == pytest.approx(2.0, abs=1e-6)

    def test_too_few_values(self, gauss_small):
        with pytest.raises(ValueError, match="at least 3"):
            q0_optimality_sweep(gauss_small, q0_values=[0.0, 0.1])


class TestChain:
    def test_gaussian_chain_saturates(self, gauss_small):
        rep = uncertainty_chain_report(gauss_small, tolerance=1e-4)
        assert rep.passed
        assert rep.extras["upper"] == pytest.approx(0.25, abs=1e-5)
        assert rep.extras["middle"] == pytest.approx(0.25, abs=1e-5)
        assert rep.extras["lower"] == 0.25
        assert rep.slack == min(rep.extras["slack_upper"], rep.extras["slack_lower"])

    def test_quadratic_phase_opens_upper_gap(self):
        st = _quadratic_phase_state(c=0.3)
        rep = uncertainty_chain_report(st)
        assert rep.passed
        # upper - middle = var_q * convective = 0.5 * 0.18
        assert rep.extras["slack_upper"] == pytest.approx(0.09, abs=1e-5)

    def test_reference_point_must_match_mean(self, gauss_small):
        with pytest.raises(ValueError, match="within one grid spacing"):
            uncertainty_chain_report(gauss_small, q0=0.3)


def test_osmotic_product_matches_quantum_form(gauss_small):
    osm = osmotic_uncertainty_product(gauss_small)
    qua = uncertainty_product_quantum(gauss_small)
    assert osm.passed
    assert osm.lhs == pytest.approx(qua.lhs, rel=1e-9)
    assert abs(osm.extras["mean_osmotic_velocity"]) < 1e-10
    assert osm.extras["deviation_second_moment"] == pytest.approx(
        osm.extras["mean_squared_osmotic_velocity"], rel=1e-10
    )


def test_quantum_potential_identity(gauss_small):
    rep = quantum_potential_identity_report(gauss_small)
    assert rep.passed
    assert rep.lhs == pytest.approx(0.25, abs=1e-5)
    assert rep.extras["fisher_information"] == pytest.approx(2.0, abs=1e-6)
    assert rep.extras["boundary_residual"] < 1e-8
    assert rep.tolerance == pytest.approx(1e-5 * max(abs(rep.lhs), abs(rep.bound_or_rhs)))


def test_discretization_estimate_tracks_refinement(gauss_small, gauss_state):
    coarse = uncertainty_product_quantum(gauss_small)
    fine = uncertainty_product_quantum(gauss_state)
    assert fine.discretization_estimate < coarse.discretization_estimate
    assert coarse.discretization_estimate < 1e-8
