import numpy as np
import pytest

from burstnet import (ConvergenceClass, MeanState, ModelSpec, NoBurstError,
                      boundary_burst_size, burst_map, burst_map_modulus,
                      bursts_to_absorb, coupling_threshold, equilibrium,
                      find_limit_cycle, hitting_time, in_absorbing_set,
                      limit_cycle_ensemble, return_map, sample_boundary_state,
                      stopped_flow_jacobian)

# frozen oracle values (scalar bisection on the boundary burst profile)
COUPLING_THRESHOLD_M1 = 2.480231     # where the jump modulus crosses 2/3
ABSORB_STEPS_2_5 = 2                 # smallest n with modulus(2.5)^n < 1/2


def _absorbing_state(spec, rng):
    x1 = rng.uniform(0.0, 1.0, spec.M) * spec.alpha_arr / 2.0
    if x1.sum() >= 1.0 / spec.beta:
        x1 *= 0.95 / (spec.beta * x1.sum())
    return MeanState(np.vstack([spec.alpha_arr - x1, x1]))


# ---------------------------------------------------------------------------
# absorbing set
# ---------------------------------------------------------------------------

def test_absorbing_set_membership():
    spec = ModelSpec(2, 3, [0.2, 0.3, 0.5], [1.0, 1.0, 1.0], 2.5)
    assert not in_absorbing_set(equilibrium(spec))          # equality fails
    quarter = MeanState(np.vstack([3 * spec.alpha_arr / 4, spec.alpha_arr / 4]))
    assert in_absorbing_set(quarter)
    with pytest.raises(ValueError):
        in_absorbing_set(MeanState(np.full((3, 2), 1 / 6)))


def test_absorbing_set_invariant_under_jump():
    # boundary states with all level-1 entries below the midpoints stay below
    rng = np.random.default_rng(21)
    for _ in range(50):
        M = int(rng.integers(1, 7))
        alpha = rng.dirichlet(np.ones(M))
        beta = float(rng.uniform(2.05, 8.0))
        spec = ModelSpec(2, M, alpha, np.ones(M), beta)
        x = sample_boundary_state(spec, rng)
        if not in_absorbing_set(x):
            continue
        out, s = burst_map(x, spec)
        assert s > 0.0
        assert in_absorbing_set(out)


# ---------------------------------------------------------------------------
# jump modulus and absorption count
# ---------------------------------------------------------------------------

def test_modulus_is_one_without_bursts():
    for beta in (0.5, 1.5, 2.0):
        assert burst_map_modulus(beta) == 1.0


def test_modulus_matches_two_thirds_anchor():
    assert burst_map_modulus(COUPLING_THRESHOLD_M1) == pytest.approx(2 / 3, abs=1e-5)
    assert burst_map_modulus(2.48) == pytest.approx(2 / 3, abs=1e-3)


def test_modulus_strictly_decreasing_and_below_one():
    betas = np.linspace(2.05, 12.0, 40)
    vals = [burst_map_modulus(b) for b in betas]
    assert all(0 < v < 1 for v in vals)
    assert all(b > a for a, b in zip(vals[1:], vals[:-1]))


def test_modulus_exponential_falloff():
    # for large coupling the modulus drops below e^{-g1 g2 beta} with both
    # factors taken at 0.9
    for beta in (15.0, 25.0, 40.0):
        assert burst_map_modulus(beta) < np.exp(-0.81 * beta)


def test_bursts_to_absorb():
    assert bursts_to_absorb(50.0) == 1
    assert bursts_to_absorb(2.5) == ABSORB_STEPS_2_5
    with pytest.raises(ValueError):
        bursts_to_absorb(2.0)
    for beta in np.linspace(2.01, 8.0, 20):
        assert 0.0 < burst_map_modulus(beta) < 1.0
        assert bursts_to_absorb(beta) >= 1


# ---------------------------------------------------------------------------
# stopped-flow Jacobian
# ---------------------------------------------------------------------------

def test_jacobian_single_population_trivial_subspace():
    spec = ModelSpec(2, 1, [1.0], [1.0], 3.0)
    rep = stopped_flow_jacobian(MeanState([[0.9], [0.1]]), spec)
    assert rep.restricted_norm == pytest.approx(0.0, abs=1e-15)


def test_jacobian_equal_rates_eigenvalue():
    # with rho_1 = rho_2 the zero-sum direction (1,-1) is an eigenvector
    # with eigenvalue e^{-2 rho tau}; hand computation vs the SVD route
    rho = 1.4
    spec = ModelSpec(2, 2, [0.5, 0.5], [rho, rho], 3.0)
    x0 = MeanState([[0.45, 0.4], [0.05, 0.1]])
    rep = stopped_flow_jacobian(x0, spec)
    v = np.array([1.0, -1.0])
    np.testing.assert_allclose(rep.MM @ v, np.exp(-2 * rho * rep.tau) * v,
                               atol=1e-14)
    assert rep.restricted_norm == pytest.approx(np.exp(-2 * rho * rep.tau),
                                                abs=1e-12)
    assert rep.restricted_norm < 1.0


def test_jacobian_structure_and_bound():
    rng = np.random.default_rng(22)
    for _ in range(200):
        M = int(rng.integers(2, 21))
        alpha = rng.dirichlet(np.ones(M))
        rho = rng.uniform(0.3, 3.0, M)
        beta = float(rng.uniform(2.05, 6.0))
        spec = ModelSpec(2, M, alpha, rho, beta)
        rep = stopped_flow_jacobian(_absorbing_state(spec, rng), spec)
        np.testing.assert_allclose(rep.MM.sum(axis=0), 0.0, atol=1e-12)
        assert np.all(rep.c > 0) and np.all(rep.c < 1)
        assert rep.c.sum() == pytest.approx(1.0, abs=1e-12)
        assert rep.restricted_norm < 1.0 + np.sqrt(M) / 2.0
        if M == 2:
            assert rep.restricted_norm < 1.0
        assert rep.product == pytest.approx(rep.restricted_norm * rep.g_modulus)


def _stopped_flow_level1(x1_0, spec):
    x0 = MeanState(np.vstack([spec.alpha_arr - x1_0, x1_0]))
    tau = hitting_time(x0, spec)
    return spec.alpha_arr / 2 - (spec.alpha_arr / 2 - x1_0) * np.exp(
        -2 * spec.rho_arr * tau)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(23)
    h = 1e-6
    for _ in range(10):
        M = int(rng.integers(2, 6))
        alpha = rng.dirichlet(np.ones(M))
        rho = rng.uniform(0.4, 2.5, M)
        beta = float(rng.uniform(2.2, 5.0))
        spec = ModelSpec(2, M, alpha, rho, beta)
        x0 = _absorbing_state(spec, rng)
        rep = stopped_flow_jacobian(x0, spec)
        for j in range(M):
            e = np.zeros(M)
            e[j] = h
            col = (_stopped_flow_level1(x0.x[1] + e, spec)
                   - _stopped_flow_level1(x0.x[1] - e, spec)) / (2 * h)
            np.testing.assert_allclose(rep.MM[:, j], col, atol=1e-4)


def test_jacobian_requires_two_levels():
    spec = ModelSpec(3, 2, [0.5, 0.5], [1.0, 1.0], 4.0)
    with pytest.raises(ValueError):
        stopped_flow_jacobian(MeanState(np.full((3, 2), 1 / 6)), spec)


# ---------------------------------------------------------------------------
# coupling threshold
# ---------------------------------------------------------------------------

def test_coupling_threshold_single_population():
    assert coupling_threshold(1) == pytest.approx(COUPLING_THRESHOLD_M1, abs=1e-5)


def test_coupling_threshold_brackets_condition():
    for M in (1, 2, 10, 100):
        bt = coupling_threshold(M)
        allow = 1.0 + np.sqrt(M) / 2.0
        assert burst_map_modulus(bt + 1e-6) * allow < 1.0
        assert burst_map_modulus(bt - 1e-3) * allow > 1.0


def test_coupling_threshold_monotone():
    values = [coupling_threshold(M) for M in (1, 2, 5, 10, 50, 100)]
    assert all(b >= a for a, b in zip(values, values[1:]))


# ---------------------------------------------------------------------------
# limit cycles
# ---------------------------------------------------------------------------

def test_find_limit_cycle_unique_attractor():
    spec = ModelSpec(2, 3, [0.2, 0.35, 0.45], [0.8, 1.4, 2.0], 2.5)
    rng = np.random.default_rng(24)
    stars = []
    for _ in range(8):
        x1 = rng.uniform(0, 1, 3) * spec.alpha_arr
        res = find_limit_cycle(spec, MeanState(np.vstack([spec.alpha_arr - x1, x1])),
                               tol=1e-11, max_iter=200)
        assert res.convergence is not ConvergenceClass.NON_CONVERGENT
        stars.append(res.x_star.x)
    for a in stars:
        for b in stars:
            assert np.abs(a - b).max() < 1e-9


def test_find_limit_cycle_fixed_point_property():
    spec = ModelSpec(2, 2, [0.4, 0.6], [1.0, 2.0], 2.7)
    res = find_limit_cycle(spec, equilibrium(spec), tol=1e-12, max_iter=300)
    again = return_map(res.x_star, spec)
    assert np.abs(again.x - res.x_star.x).max() < 1e-10


def test_find_limit_cycle_no_burst_error():
    spec = ModelSpec(2, 1, [1.0], [1.0], 1.5)
    with pytest.raises(NoBurstError):
        find_limit_cycle(spec, MeanState([[0.8], [0.2]]))


def test_find_limit_cycle_non_convergent_when_starved():
    spec = ModelSpec(2, 2, [0.4, 0.6], [1.0, 2.0], 2.05)
    res = find_limit_cycle(spec, equilibrium(spec), tol=1e-13, max_iter=3)
    assert res.convergence is ConvergenceClass.NON_CONVERGENT


def test_batch_engine_matches_scalar_path():
    spec = ModelSpec(2, 3, [0.3, 0.3, 0.4], [0.9, 1.3, 1.8], 2.4)
    rng = np.random.default_rng(25)
    X1 = rng.uniform(0, 1, size=(12, 3)) * spec.alpha_arr
    stars, iters, classes = limit_cycle_ensemble(spec, X1, tol=1e-10, max_iter=400)
    for i in range(len(X1)):
        res = find_limit_cycle(
            spec, MeanState(np.vstack([spec.alpha_arr - X1[i], X1[i]])),
            tol=1e-10, max_iter=400)
        assert np.abs(res.x_star.x[1] - stars[i]).max() < 1e-8
        assert res.convergence == classes[i]
        assert abs(res.iterations - iters[i]) <= 1
    assert np.all(iters > 0)


def test_empirical_contraction_above_threshold():
    # one full map step contracts pairs inside the absorbing set at least as
    # fast as the product of the two theoretical moduli
    rng = np.random.default_rng(26)
    for M in (2, 4, 9):
        beta = coupling_threshold(M) + 0.3
        alpha = rng.dirichlet(np.ones(M))
        rho = rng.uniform(0.5, 2.0, M)
        spec = ModelSpec(2, M, alpha, rho, beta)
        bound = burst_map_modulus(beta) * (1.0 + np.sqrt(M) / 2.0)
        assert bound < 1.0
        for _ in range(20):
            x = _absorbing_state(spec, rng)
            y = _absorbing_state(spec, rng)
            hx, hy = return_map(x, spec), return_map(y, spec)
            lhs = np.linalg.norm(hx.x[1] - hy.x[1])
            rhs = bound * np.linalg.norm(x.x[1] - y.x[1])
            assert lhs <= rhs + 1e-12
