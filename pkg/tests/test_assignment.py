import numpy as np
import pytest

from conftest import block_diagonal_q
from mospa import (
    CapacityError,
    StackedState,
    UnsupportedMetricError,
    brute_force_assignment,
    optimal_permutation,
    solve_assignment,
)
from mospa.assignment import batch_optimal_permutations


def test_zero_diagonal():
    perm, cost = solve_assignment([[0.0, 2.0], [2.0, 0.0]])
    assert perm.mapping == (0, 1)
    assert cost == 0.0


def test_all_ties_resolve_lexicographically():
    perm, cost = solve_assignment(np.ones((4, 4)))
    assert perm.mapping == (0, 1, 2, 3)
    assert cost == 4.0


def test_hand_two_by_two():
    for solver in (solve_assignment, brute_force_assignment):
        perm, cost = solver([[5.0, 4.0], [3.0, 7.0]])
        assert perm.mapping == (1, 0)
        assert cost == 7.0


def test_one_by_one():
    perm, cost = brute_force_assignment([[0.0]])
    assert perm.mapping == (0,)
    assert cost == 0.0


def test_input_validation():
    with pytest.raises(ValueError):
        solve_assignment([[1.0, 2.0]])
    with pytest.raises(ValueError):
        solve_assignment([[1.0, np.inf], [0.0, 1.0]])
    with pytest.raises(ValueError):
        solve_assignment([[1.0, -0.5], [0.0, 1.0]])
    with pytest.raises(CapacityError):
        brute_force_assignment(np.ones((9, 9)))


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_solver_matches_brute_force(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(60):
        c = rng.random((n, n))
        p1, c1 = solve_assignment(c)
        p2, c2 = brute_force_assignment(c)
        assert abs(c1 - c2) <= 1e-12
        assert p1.mapping == p2.mapping  # unique optimum almost surely


def test_lexicographic_agreement_on_tied_matrices():
    # integer matrices engineered for plentiful ties
    rng = np.random.default_rng(9)
    for _ in range(200):
        n = int(rng.integers(2, 6))
        c = rng.integers(0, 3, size=(n, n)).astype(float)
        p1, c1 = solve_assignment(c)
        p2, c2 = brute_force_assignment(c)
        assert c1 == c2
        assert p1.mapping == p2.mapping


def test_cost_invariant_under_simultaneous_relabeling():
    rng = np.random.default_rng(17)
    c = rng.random((5, 5))
    _, base = solve_assignment(c)
    for _ in range(10):
        sigma = rng.permutation(5)
        _, relabeled = solve_assignment(c[np.ix_(sigma, sigma)])
        assert abs(relabeled - base) <= 1e-12


def test_optimal_permutation_identity_for_equal_states():
    x = StackedState(3, 2, np.arange(6.0))
    perm, cost = optimal_permutation(x, x)
    assert perm.mapping == (0, 1, 2)
    assert cost == 0.0


def test_optimal_permutation_tie_example():
    x = StackedState(2, 1, [0.0, 0.0])
    x_hat = StackedState(2, 1, [-4.0, 3.0])
    perm, cost = optimal_permutation(x, x_hat)
    assert cost == 25.0
    assert perm.mapping == (0, 1)


def test_optimal_permutation_well_separated():
    x = StackedState(2, 1, [-5.0, 4.0])
    x_hat = StackedState(2, 1, [-4.0, 3.0])
    perm, cost = optimal_permutation(x, x_hat)
    assert perm.mapping == (0, 1)
    assert cost == 2.0


def test_optimal_permutation_cost_symmetry():
    rng = np.random.default_rng(23)
    for _ in range(30):
        x = StackedState(3, 2, rng.normal(size=6))
        y = StackedState(3, 2, rng.normal(size=6))
        assert optimal_permutation(x, y)[1] == pytest.approx(optimal_permutation(y, x)[1], abs=1e-12)


def test_optimal_permutation_dimension_mismatch():
    x = StackedState(2, 1, [0.0, 1.0])
    y = StackedState(2, 2, [0.0, 1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        optimal_permutation(x, y)


def test_coupling_q_rejected():
    x = StackedState(2, 1, [0.0, 1.0])
    y = StackedState(2, 1, [1.0, 0.0])
    q = np.array([[2.0, 0.5], [0.5, 2.0]])  # couples the two scalar targets
    with pytest.raises(UnsupportedMetricError):
        optimal_permutation(x, y, q)


def test_block_q_decomposition_matches_stacked_form():
    rng = np.random.default_rng(5)
    n, d = 3, 2
    q = block_diagonal_q(rng, n, d)
    for _ in range(20):
        x = StackedState(n, d, rng.normal(size=n * d))
        y = StackedState(n, d, rng.normal(size=n * d))
        _, cost = optimal_permutation(x, y, q)
        # exhaustive stacked-form evaluation
        from mospa import permutation_apply, permutation_enumerate

        best = min(
            float((x.data - permutation_apply(p, y).data) @ q @ (x.data - permutation_apply(p, y).data))
            for p in permutation_enumerate(n)
        )
        assert cost == pytest.approx(best, rel=1e-12, abs=1e-12)


def test_batch_matches_single():
    rng = np.random.default_rng(8)
    x_hat = StackedState(3, 2, rng.normal(size=6))
    points = rng.normal(size=(40, 6))
    mappings, costs = batch_optimal_permutations(points, x_hat)
    for i in range(40):
        perm, cost = optimal_permutation(StackedState(3, 2, points[i]), x_hat)
        assert tuple(mappings[i]) == perm.mapping
        assert costs[i] == cost
    _, costs_only = batch_optimal_permutations(points, x_hat, want_mappings=False)
    assert np.allclose(costs_only, costs, rtol=0, atol=1e-12)
