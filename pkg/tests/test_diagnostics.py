import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from halfbridge.diagnostics import (
    DegenerateChainWarning,
    ess,
    ess_from_array,
    select_by_t_test,
    summarize_ess,
)
from halfbridge.harness.simulate import SimScenario, simulate
from halfbridge.pcg import run_pcg
from halfbridge.trace import Trace


def _ar1(phi, T, seed, m=1):
    g = np.random.default_rng(seed)
    e = g.standard_normal((m, T))
    x = np.empty((m, T))
    x[:, 0] = e[:, 0] / np.sqrt(1 - phi ** 2)
    for t in range(1, T):
        x[:, t] = phi * x[:, t - 1] + e[:, t]
    return x


def test_iid_chain_ess():
    x = np.random.default_rng(0).standard_normal(10**4)
    assert 9000 <= ess_from_array(x) <= 11000


def test_ar1_chain_ess():
    # ESS of AR(1) = T (1 - phi) / (1 + phi) ~ 526.
    assert 400 <= ess_from_array(_ar1(0.9, 10**4, 1)) <= 700


def test_ar1_ess_averages_to_oracle():
    vals = [ess_from_array(_ar1(0.5, 4000, s, m=2)) for s in range(20)]
    assert np.mean(vals) == pytest.approx(8000 / 3, rel=0.1)


def test_constant_chain_is_flagged():
    with pytest.warns(DegenerateChainWarning):
        assert ess_from_array(np.full(500, 2.0)) == 500


def test_ess_by_name_and_index():
    g = np.random.default_rng(2)
    trs = [Trace(g.standard_normal((400, 2)), ["beta1", "sigma2"], chain_id=c) for c in range(3)]
    assert ess(trs, "beta1") == ess(trs, 0)
    with pytest.raises(ValueError):
        ess([Trace(np.zeros((50, 1)), ["beta1"])], 0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32), a=st.floats(0.1, 10.0), c=st.floats(-5, 5))
def test_ess_affine_invariant(seed, a, c):
    x = np.random.default_rng(seed).standard_normal((2, 300))
    assert ess_from_array(a * x + c) == pytest.approx(ess_from_array(x), rel=1e-8)


def test_summarize_groups():
    g = np.random.default_rng(3)
    trs = [Trace(g.standard_normal((200, 4)), ["beta1", "beta2", "beta3", "beta4"])]
    s = summarize_ess(trs, [1.0, 0.0, 0.0, 2.0])
    assert set(s) == {"all", "zero", "nonzero"}
    assert s["all"].max >= s["all"].median >= s["all"].min


def test_t_test_selection():
    g = np.random.default_rng(4)
    draws = np.column_stack([3.0 + 0.1 * g.standard_normal(2000), g.standard_normal(2000)])
    assert list(select_by_t_test(draws)) == [True, False]
    const = np.column_stack([np.full(10, 1.0), np.zeros(10)])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert list(select_by_t_test(const)) == [True, False]


def test_selection_hamming_distance_high_dimensional():
    hd = []
    for r in range(10):
        sc = SimScenario(100, 1000, 10, 1.0, 0.5, seed=100 + r)
        data = simulate(sc)
        trs = run_pcg(data, 1, 1000, 500, seed=r)
        sel = select_by_t_test(trs)
        hd.append(np.sum(sel != (sc.beta0() != 0)))
    assert np.mean(hd) <= 5
