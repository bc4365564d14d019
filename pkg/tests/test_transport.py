import numpy as np
import pytest
from scipy import sparse
from scipy.optimize import linprog

from conftest import (
    block_diagonal_q,
    normalized_weights,
    random_mixture,
    random_x_hat,
    two_mode_mixture,
)
from mospa import (
    DiscreteMeasure,
    EmpiricalMeasure,
    Scenario,
    StackedState,
    TransportPlan,
    build_region_measure,
    coupling_cost,
    estimate_region_masses,
    gm_sample,
    mospa_mc,
    solve_assignment,
    solve_transport,
    verify_mospa_wasserstein,
    w2_squared,
)
from mospa.transport import _transportation_simplex


def linprog_transport_cost(cost, a, b):
    """Independent exact LP oracle (dual simplex on the same instance)."""
    m, k = cost.shape
    row_idx = np.repeat(np.arange(m), k)
    col_idx = np.tile(np.arange(k), m) + m
    var = np.arange(m * k)
    A_eq = sparse.coo_matrix(
        (np.ones(2 * m * k), (np.concatenate([row_idx, col_idx]), np.concatenate([var, var]))),
        shape=(m + k, m * k),
    ).tocsr()
    res = linprog(cost.ravel(), A_eq=A_eq, b_eq=np.concatenate([a, b]),
                  bounds=(0, None), method="highs")
    assert res.status == 0, res.message
    return float(res.fun)


def random_instance(rng, m, k):
    cost = rng.random((m, k)) * rng.uniform(0.5, 20)
    a = normalized_weights(rng, m)
    b = normalized_weights(rng, k)
    return cost, a, b


def random_feasible_plan(a, b, rng):
    """Northwest-corner fill under random row/column orders: a basic plan."""
    m, k = len(a), len(b)
    rows, cols = rng.permutation(m), rng.permutation(k)
    flows = np.zeros((m, k))
    ra, rb = a.copy(), b.copy()
    i = j = 0
    while i < m and j < k:
        r, c = rows[i], cols[j]
        t = min(ra[r], rb[c])
        flows[r, c] += t
        ra[r] -= t
        rb[c] -= t
        if ra[r] <= rb[c]:
            i += 1
        else:
            j += 1
    return flows


@pytest.mark.parametrize("shape", [(1, 1), (2, 1), (1, 3), (4, 4), (6, 4), (7, 5)])
def test_simplex_matches_linprog(shape):
    rng = np.random.default_rng(sum(shape))
    m, k = shape
    for _ in range(40):
        cost, a, b = random_instance(rng, m, k)
        flows, u, v, _ = _transportation_simplex(cost, a, b)
        mine = float(np.sum(flows * cost))
        oracle = linprog_transport_cost(cost, a, b)
        assert abs(mine - oracle) <= 1e-9 * max(1.0, oracle)
        assert np.abs(flows.sum(axis=1) - a).max() <= 1e-9
        assert np.abs(flows.sum(axis=0) - b).max() <= 1e-9
        # strong duality and dual feasibility
        assert abs(float(a @ u + b @ v) - mine) <= 1e-9 * max(1.0, mine)
        assert (cost - u[:, None] - v[None, :]).min() >= -1e-9


def test_simplex_matches_linprog_medium():
    rng = np.random.default_rng(77)
    cost, a, b = random_instance(rng, 400, 12)
    flows, _, _, _ = _transportation_simplex(cost, a, b)
    mine = float(np.sum(flows * cost))
    oracle = linprog_transport_cost(cost, a, b)
    assert abs(mine - oracle) <= 1e-9 * max(1.0, oracle)


def test_simplex_uniform_square_matches_assignment():
    # uniform marginals on n x n: optimal transport = optimal assignment / n
    rng = np.random.default_rng(55)
    for _ in range(25):
        n = int(rng.integers(2, 7))
        cost = rng.random((n, n)) * 10
        a = np.full(n, 1.0 / n)
        flows, _, _, _ = _transportation_simplex(cost, a, a.copy())
        mine = float(np.sum(flows * cost))
        _, assign_cost = solve_assignment(cost)
        assert abs(mine - assign_cost / n) <= 1e-12 * max(1.0, assign_cost)


def test_simplex_tiny_cost_scale():
    # the solver's tolerances are proportional to the cost scale, so problems
    # whose whole objective sits near 1e-9 are still solved exactly; the LP
    # oracle needs the instance rescaled into its absolute-tolerance regime
    rng = np.random.default_rng(88)
    for _ in range(20):
        cost = rng.random((15, 6)) * 1e-8
        a = normalized_weights(rng, 15)
        b = normalized_weights(rng, 6)
        flows, _, _, _ = _transportation_simplex(cost, a, b)
        mine = float(np.sum(flows * cost))
        oracle = linprog_transport_cost(cost * 1e8, a, b) / 1e8
        assert abs(mine - oracle) <= 1e-9 * oracle


def test_simplex_degenerate_uniform_marginals():
    # heavily tied flows: every marginal equal
    rng = np.random.default_rng(66)
    cost = rng.random((64, 8))
    a = np.full(64, 1 / 64)
    b = np.full(8, 1 / 8)
    flows, _, _, _ = _transportation_simplex(cost, a, b)
    assert abs(float(np.sum(flows * cost)) - linprog_transport_cost(cost, a, b)) <= 1e-9


def test_transport_self_coupling_is_free():
    rng = np.random.default_rng(5)
    pts = rng.normal(size=(30, 2))
    emp = EmpiricalMeasure(1, 2, pts, np.full(30, 1 / 30))
    nu = DiscreteMeasure(1, 2, pts, np.full(30, 1 / 30))
    plan, cost = solve_transport(emp, nu)
    assert cost <= 1e-12
    assert np.allclose(plan.flows, np.diag(np.full(30, 1 / 30)), atol=1e-12)


def test_transport_forced_plan():
    emp = EmpiricalMeasure(1, 1, [[0.0], [1.0]], [0.5, 0.5])
    nu = DiscreteMeasure(1, 1, [[0.5]], [1.0])
    plan, cost = solve_transport(emp, nu)
    assert cost == pytest.approx(0.25, abs=1e-15)
    assert np.allclose(plan.flows, [[0.5], [0.5]])


def test_w2_single_atom_formula():
    rng = np.random.default_rng(7)
    pts = rng.normal(size=(50, 3), scale=2)
    emp = EmpiricalMeasure(1, 3, pts, np.full(50, 1 / 50))
    atom = np.array([0.5, -1.0, 2.0])
    nu = DiscreteMeasure(1, 3, atom[None, :], [1.0])
    expected = float(emp.weights @ np.einsum("md,md->m", pts - atom, pts - atom))
    assert w2_squared(emp, nu) == pytest.approx(expected, rel=1e-12)


def test_w2_zero_against_itself_as_discrete():
    rng = np.random.default_rng(8)
    pts = rng.normal(size=(20, 2))
    emp = EmpiricalMeasure(2, 1, pts, np.full(20, 1 / 20))
    nu = DiscreteMeasure(2, 1, pts, np.full(20, 1 / 20))
    assert w2_squared(emp, nu) <= 1e-12


def test_w2_scale_equivariance():
    mix = two_mode_mixture(1.0)
    emp = gm_sample(mix, seed=31, m=400)
    x_hat = StackedState(2, 1, [-4.0, 3.0])
    masses = estimate_region_masses(emp, x_hat)
    nu = build_region_measure(x_hat, masses)
    base = w2_squared(emp, nu)
    emp2 = EmpiricalMeasure(2, 1, 2.0 * emp.points, emp.weights)
    nu2 = DiscreteMeasure(2, 1, 2.0 * nu.atoms, nu.masses)
    assert w2_squared(emp2, nu2) == 4.0 * base


def test_coupling_cost_of_optimal_plan_matches_solver():
    rng = np.random.default_rng(9)
    mix = random_mixture(rng, 2, 1, 2)
    emp = gm_sample(mix, seed=3, m=200)
    x_hat = random_x_hat(rng, 2, 1)
    nu = build_region_measure(x_hat, estimate_region_masses(emp, x_hat))
    plan, cost = solve_transport(emp, nu)
    assert coupling_cost(plan, emp, nu) == cost


def test_product_coupling_never_beats_optimum():
    rng = np.random.default_rng(10)
    mix = random_mixture(rng, 2, 1, 2)
    emp = gm_sample(mix, seed=4, m=60)
    x_hat = random_x_hat(rng, 2, 1)
    nu = build_region_measure(x_hat, estimate_region_masses(emp, x_hat))
    _, optimal = solve_transport(emp, nu)
    product = TransportPlan(np.outer(emp.weights, nu.masses), emp.weights, nu.masses)
    assert coupling_cost(product, emp, nu) >= optimal - 1e-9


def test_random_feasible_plans_respect_weak_duality():
    rng = np.random.default_rng(11)
    pts = rng.normal(size=(25, 2), scale=3)
    emp = EmpiricalMeasure(2, 1, pts, normalized_weights(rng, 25))
    atoms = rng.normal(size=(6, 2), scale=3)
    nu = DiscreteMeasure(2, 1, atoms, normalized_weights(rng, 6))
    _, optimal = solve_transport(emp, nu)
    for _ in range(100):
        flows = random_feasible_plan(emp.weights, nu.masses, rng)
        plan = TransportPlan(flows, emp.weights, nu.masses)
        assert coupling_cost(plan, emp, nu) >= optimal - 1e-9


def test_coupling_cost_rejects_infeasible_plan():
    emp = EmpiricalMeasure(1, 1, [[0.0], [1.0]], [0.5, 0.5])
    nu = DiscreteMeasure(1, 1, [[0.0], [1.0]], [0.5, 0.5])
    bad = TransportPlan(np.eye(2) * 0.5, [0.5, 0.5], [0.5, 0.5])
    skewed = DiscreteMeasure(1, 1, [[0.0], [1.0]], [0.25, 0.75])
    with pytest.raises(ValueError, match="column"):
        coupling_cost(bad, emp, skewed)


def test_transport_marginal_validation():
    emp = EmpiricalMeasure(1, 1, [[0.0]], [1.0])
    with pytest.raises(ValueError):
        solve_transport(emp, DiscreteMeasure(1, 2, [[0.0, 1.0]], [1.0]))


def test_same_sample_identity_exact(fig_mixture, fig_x_hat):
    scen = Scenario(2, 1, fig_mixture, seed=20, sample_count=2000)
    report = verify_mospa_wasserstein(scen, fig_x_hat, mode="same-sample")
    assert report.passed
    assert report.rel_diff <= 1e-8
    assert report.abs_diff == abs(report.mospa_value - report.w2_squared)


def test_same_sample_identity_single_target_degenerate():
    mix = random_mixture(np.random.default_rng(12), 1, 2, 2)
    scen = Scenario(1, 2, mix, seed=5, sample_count=500)
    x_hat = StackedState(1, 2, [0.5, -0.5])
    report = verify_mospa_wasserstein(scen, x_hat)
    assert report.abs_diff == 0.0
    assert report.passed


def test_same_sample_identity_weighted(fig_mixture, fig_x_hat):
    rng = np.random.default_rng(13)
    q = block_diagonal_q(rng, 2, 1)
    scen = Scenario(2, 1, fig_mixture, seed=21, sample_count=1000)
    report = verify_mospa_wasserstein(scen, fig_x_hat, q=q)
    assert report.passed
    # cross-check both sides against direct evaluations
    emp = gm_sample(fig_mixture, __import__("mospa.rng", fromlist=["derive_seed"]).derive_seed(21, 1), 1000)
    assert report.mospa_value == mospa_mc(emp, fig_x_hat, q).value


def test_independent_mode_statistical(fig_mixture, fig_x_hat):
    scen = Scenario(2, 1, fig_mixture, seed=22, sample_count=20000)
    report = verify_mospa_wasserstein(scen, fig_x_hat, mode="independent")
    assert report.passed
    assert report.mode == "independent"
    assert report.tolerance > 0
    assert report.w2_std_error is not None


def test_independent_mode_weighted(fig_mixture, fig_x_hat):
    rng = np.random.default_rng(14)
    q = block_diagonal_q(rng, 2, 1)
    scen = Scenario(2, 1, fig_mixture, seed=23, sample_count=20000)
    report = verify_mospa_wasserstein(scen, fig_x_hat, mode="independent", q=q)
    assert report.passed


def test_verify_rejects_unknown_mode(fig_mixture, fig_x_hat):
    scen = Scenario(2, 1, fig_mixture, seed=1, sample_count=100)
    with pytest.raises(ValueError):
        verify_mospa_wasserstein(scen, fig_x_hat, mode="bootstrap")
