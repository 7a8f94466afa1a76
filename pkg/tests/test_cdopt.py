import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from _oracles import largest_psi_root, psi, random_instance, threshold_h
from halfbridge.cdopt import (
    CdConfig,
    _tmap,
    cd_loss,
    coordinate_update,
    descent_delta,
    eb_update_b,
    fixed_point_solve,
    kkt_residuals,
    partial_residual_correlation,
    run_cd,
    run_eb,
    threshold_lower_bound,
)
from halfbridge.data import Dataset, standardize
from halfbridge.errors import DegenerateEBError, ParameterDomainError
from halfbridge.harness.simulate import SimScenario, simulate


def _random_data(seed, n=100, p=50, s0=5, sigma=1.0):
    g = np.random.default_rng(seed)
    X = g.standard_normal((n, p))
    beta0 = np.zeros(p)
    beta0[g.choice(p, s0, replace=False)] = g.choice([-1, 1], s0) * g.uniform(0.5, 3, s0)
    return standardize(X, X @ beta0 + sigma * g.standard_normal(n)), beta0


# -- scalar kernels ---------------------------------------------------------

def test_lower_bound_example():
    # 2 (0.1025 / (4 + sqrt 2))^(2/3) = 0.14207 (rounded to 0.1422 elsewhere).
    u = threshold_lower_bound(0.5, 100.0, 10.25, 2.0, 1)
    assert u == pytest.approx(2 * (0.1025 / (4 + math.sqrt(2))) ** (2 / 3), rel=1e-12)
    assert u == pytest.approx(0.1422, abs=2e-4)
    assert u < threshold_h(10.25 / 100, 2.0, 1)[1]


def test_lower_bound_monotone_in_C2():
    us = [threshold_lower_bound(0.5, 100.0, 10.25, C2, 1) for C2 in (0.5, 2.0, 8.0)]
    assert us[0] > us[1] > us[2] > 0


@settings(max_examples=100, deadline=None)
@given(z=st.floats(1e-6, 1e6), xtx=st.floats(1e-3, 1e4), C1=st.floats(1e-3, 1e4),
       C2=st.floats(1e-6, 1e6), gamma=st.integers(0, 4))
def test_lower_bound_positive(z, xtx, C1, C2, gamma):
    assert threshold_lower_bound(z, xtx, C1, C2, gamma) > 0


def test_fixed_point_example():
    bb = fixed_point_solve(10.0, 1.0, 1.0, 1.0, 1)
    assert bb == pytest.approx(largest_psi_root(10.0, 1.0, 1.0, 1), abs=1e-8)
    assert bb == pytest.approx(9.923510, abs=1e-6)
    assert fixed_point_solve(10.0, 1.0, 1.0, 1.0, 1, method="picard") == pytest.approx(bb, abs=1e-7)


def test_fixed_point_absent_below_threshold():
    assert fixed_point_solve(0.1, 1.0, 100.0, 1.0, 1) is None
    assert fixed_point_solve(0.1, 1.0, 100.0, 1.0, 1, method="picard") is None


@pytest.mark.parametrize("gamma", [1, 2, 3])
def test_fixed_point_at_the_threshold(gamma):
    c, C2 = 2.0, 0.7
    bt, h = threshold_h(c, C2, gamma)
    # At a = h the fixed point is the tangency point beta_tilde.  Nudge a up by
    # one part in 1e13 so rounding cannot push it below h; the root then moves
    # by O(sqrt(1e-13)).
    bb = fixed_point_solve(h * (1 + 1e-13), 1.0, c, C2, gamma, eps_inner=1e-12, T=1000)
    assert bb is not None
    assert bb == pytest.approx(bt, rel=1e-5)
    assert fixed_point_solve(h * (1 - 1e-6), 1.0, c, C2, gamma) is None


def test_fixed_point_matches_bisection_on_random_instances():
    g = np.random.default_rng(0)
    done = 0
    while done < 100:
        C1, C2, xtx, gamma = random_instance(g)
        c = C1 / xtx
        bt, h = threshold_h(c, C2, gamma)
        a = h * float(np.exp(g.uniform(0.01, 3.0)))
        bb = fixed_point_solve(a, xtx, C1, C2, gamma, T=200)
        assert bb is not None
        assert bb == pytest.approx(largest_psi_root(a, c, C2, gamma), abs=1e-6, rel=1e-9)
        done += 1


def test_threshold_sandwich_and_lower_bound():
    g = np.random.default_rng(1)
    for _ in range(1000):
        C1, C2, xtx, gamma = random_instance(g)
        bt, h = threshold_h(C1 / xtx, C2, gamma)
        assert 2 * bt * (1 - 1e-9) <= h <= 3 * bt * (1 + 1e-9)
        # u uses |z|/xtx; at the threshold itself |z|/xtx = h.
        assert threshold_lower_bound(h, xtx, C1, C2, gamma) < h


def test_descent_delta_examples():
    assert abs(descent_delta(1e-14, 1.0, 1.0, 1.0, 1, 1)) < 1e-6
    d = descent_delta(99.0, 100.0, 1.0, 1.0, 1, 1)
    assert d == pytest.approx(0.5 * 99 ** 2 - 9900 + 2.5 * math.log1p(math.sqrt(99)), rel=1e-14)
    assert d < 0


@pytest.mark.parametrize("z, xtx, C2, gamma, p", [(3.0, 1.0, 1.0, 1, 1), (5.0, 2.0, 0.3, 2, 3),
                                                   (4.0, 1.0, 0.5, 1, 2), (40.0, 10.0, 2.0, 3, 1)])
def test_delta_at_fixed_point_equals_grid_minimum(z, xtx, C2, gamma, p):
    C1 = p + 2.0 ** -(gamma + 1)
    bb = fixed_point_solve(z / xtx, xtx, C1, C2, gamma)
    assert bb is not None
    grid = np.linspace(bb * 0.5, bb * 1.5, 10**6)
    alpha = 2.0 ** -gamma
    vals = 0.5 * xtx * grid ** 2 - z * grid + (2 ** gamma * p + 0.5) * np.log1p(grid ** alpha / C2)
    d = descent_delta(bb, z, xtx, C2, gamma, p)
    assert abs(d - vals.min()) < 1e-8
    assert np.sign(d) == np.sign(vals.min())


# -- coordinate update ------------------------------------------------------

def test_coordinate_update_zero_correlation():
    X = np.array([[1.0, 1.0], [-1.0, 1.0]])
    data = Dataset(X, np.array([0.0, 0.0]))
    assert coordinate_update(data, np.array([0.7, 0.0]), 0, CdConfig()) == 0.0


@pytest.mark.parametrize("gamma", [0, 1, 2])
def test_coordinate_update_scalar_grid(gamma):
    data = Dataset(np.array([[1.0]]), np.array([8.0]))
    cfg = CdConfig(gamma=gamma, b=1.0)
    new = coordinate_update(data, np.zeros(1), 0, cfg)
    grid = np.linspace(0, 10, 10**6 + 1)
    loss = 0.5 * (8.0 - grid) ** 2 + (2 ** gamma + 0.5) * np.log(grid ** (2.0 ** -gamma) + 1.0)
    assert new == pytest.approx(grid[np.argmin(loss)], abs=1e-5)
    assert cd_loss(data, np.array([new]), gamma, 1.0) <= loss.min() + 1e-10


def test_tie_branch_keeps_incoming_zero():
    gamma, p, C2, xtx = 1, 3, 0.8, 1.0
    C1 = p + 2.0 ** -(gamma + 1)
    mass = 2 ** gamma * p + 0.5

    # At a tie the nonzero stationary point t has psi(t) = |z| / xtx and delta(t) = 0.
    def gap(t):
        z = xtx * psi(t, C1 / xtx, C2, gamma)
        return 0.5 * xtx * t * t - z * t + mass * math.log1p(math.sqrt(t) / C2)

    bt, _ = threshold_h(C1 / xtx, C2, gamma)
    t = brentq(gap, bt * 1.0001, 1e3, xtol=1e-15)
    z = xtx * psi(t, C1 / xtx, C2, gamma)
    bb = fixed_point_solve(z / xtx, xtx, C1, C2, gamma, eps_inner=1e-14, T=1000)
    assert abs(descent_delta(bb, z, xtx, C2, gamma, p)) < 1e-12
    assert _tmap(z, xtx, C1, C2, gamma, p, 0.0, 1e-14, 1000, True) == 0.0
    assert _tmap(z, xtx, C1, C2, gamma, p, 0.4, 1e-14, 1000, True) == pytest.approx(bb)
    assert _tmap(-z, xtx, C1, C2, gamma, p, 0.4, 1e-14, 1000, True) == pytest.approx(-bb)


def test_partial_residual_correlation():
    data, beta0 = _random_data(2, 60, 8)
    assert partial_residual_correlation(data, np.zeros(8), 3) == pytest.approx(data.X[:, 3] @ data.y)
    g = np.random.default_rng(3)
    b = g.standard_normal(8)
    for j in range(8):
        ref = data.X[:, j] @ (data.y - np.delete(data.X, j, 1) @ np.delete(b, j))
        assert partial_residual_correlation(data, b, j) == pytest.approx(ref, rel=1e-12)


# -- full solver ------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ParameterDomainError):
        CdConfig(b=0.0)
    with pytest.raises(ParameterDomainError):
        CdConfig(fixed_point="secant")
    assert CdConfig(b=math.inf).inv_b == 0.0


def test_loss_monotone_and_converges_on_random_instances():
    for seed in range(100):
        data, _ = _random_data(seed)
        gamma = seed % 3
        cfg = CdConfig(gamma=gamma, b=math.log(50) / 50)
        sol = run_cd(data, cfg, record_loss=True)
        tr = sol.loss_trace
        assert np.all(np.diff(tr) <= 1e-10 * np.maximum(1.0, np.abs(tr[:-1])))
        assert sol.converged
        assert sol.final_loss == pytest.approx(tr[-1], rel=1e-9, abs=1e-9)
        resid, zero_ok = kkt_residuals(data, sol.beta_hat, cfg)
        nz = sol.beta_hat != 0
        assert np.all(resid[nz] < 10 * cfg.eps_inner)
        assert np.all(zero_ok)


def test_null_data_is_sparse():
    g = np.random.default_rng(5)
    n, p = 100, 200
    data = standardize(g.standard_normal((n, p)), g.standard_normal(n))
    sol = run_cd(data, CdConfig(gamma=1, b=math.log(p) / p))
    assert sol.s_hat <= 5


def test_sign_equivariance():
    data, _ = _random_data(6, 80, 20)
    cfg = CdConfig(gamma=1, b=0.2)
    base = run_cd(data, cfg).beta_hat
    for j in (0, 7, 19):
        X = data.X.copy()
        X[:, j] *= -1
        flipped = run_cd(Dataset(X, data.y), cfg).beta_hat
        expect = base.copy()
        expect[j] *= -1
        assert np.allclose(flipped, expect, atol=1e-9)


def test_local_minimality_two_dimensional_grid():
    g = np.random.default_rng(7)
    X = g.standard_normal((30, 2))
    data = standardize(X, X @ np.array([1.5, -0.8]) + 0.5 * g.standard_normal(30))
    cfg = CdConfig(gamma=1, b=1.0)
    sol = run_cd(data, cfg)
    bh = sol.beta_hat
    assert np.all(bh != 0)
    a = np.linspace(bh[0] - 0.1, bh[0] + 0.1, 400)
    b = np.linspace(bh[1] - 0.1, bh[1] + 0.1, 400)
    A, B = np.meshgrid(a, b)
    R = data.y[:, None, None] - data.X[:, 0, None, None] * A - data.X[:, 1, None, None] * B
    L = 0.5 * np.sum(R ** 2, axis=0) + 4.5 * np.log(np.sqrt(np.abs(A)) + np.sqrt(np.abs(B)) + 1.0)
    assert sol.final_loss <= L.min() + 1e-10


def test_directional_local_minimality():
    data, _ = _random_data(8, 40, 6, s0=3)
    cfg = CdConfig(gamma=1, b=0.5)
    sol = run_cd(data, cfg)
    g = np.random.default_rng(9)
    for _ in range(50):
        d = g.standard_normal(6)
        d /= np.linalg.norm(d)
        for s in (1e-4, -1e-4):
            assert cd_loss(data, sol.beta_hat + s * d, 1, 0.5) >= sol.final_loss - 1e-12


def test_variance_missing_when_saturated():
    g = np.random.default_rng(10)
    X = g.standard_normal((3, 3))
    data = Dataset(X, X @ np.array([20.0, -15.0, 25.0]))
    sol = run_cd(data, CdConfig(gamma=1, b=1.0))
    assert sol.s_hat == 3 and sol.sigma2_hat is None


def test_multi_start_agreement():
    sc = SimScenario(100, 1000, 10, 1.0, 0.5, seed=11)
    data = simulate(sc)
    cfg = CdConfig(gamma=1, b=math.log(1000) / 1000)
    s0 = run_cd(data, cfg)
    s1 = run_cd(data, cfg, beta_init=np.random.default_rng(12).standard_normal(1000))
    assert np.sum((s0.beta_hat != 0) != (s1.beta_hat != 0)) <= 4
    assert abs(s0.final_loss - s1.final_loss) <= 0.01 * abs(s0.final_loss)


# -- empirical Bayes --------------------------------------------------------

def test_eb_update_example_and_sandwich():
    beta = np.zeros(10)
    beta[:5] = 1.0
    assert eb_update_b(beta, 1) == pytest.approx(2.0)
    g = np.random.default_rng(13)
    for _ in range(50):
        p = int(g.integers(2, 500))
        gamma = int(g.integers(0, 4))
        beta = g.standard_normal(p) * (g.random(p) < 0.3)
        if not beta.any():
            continue
        S = np.sum(np.abs(beta) ** (2.0 ** -gamma))
        b = eb_update_b(beta, gamma)
        k = 2 ** gamma * p
        assert (k - 1.5) / (2 * S) <= b <= 0.5 + (k + 0.5) / (2 * S)
    with pytest.raises(DegenerateEBError):
        eb_update_b(np.zeros(4), 1)


def test_iterated_eb_kills_signals():
    sc = SimScenario(100, 1000, 10, 1.0, 0.5, seed=14)
    data = simulate(sc)
    truth = sc.beta0() != 0
    sol, path = run_eb(data, CdConfig(gamma=1, b=math.log(1000) / 1000))
    assert np.sum(truth & (sol.beta_hat == 0)) >= 5
    assert path[-1] > path[0]
