import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from powalloc import special
from powalloc.errors import DomainError, PreconditionError
from powalloc.pair import (
    PairInstance,
    _ExpQuadrature,
    _log_w_density,
    conf_optimum,
    coverage_H,
    critical_threshold,
    expected_max_type2,
    exp_optimum,
    maximizer_r,
    mc_coverage,
    mc_expected_max_type2,
    tol_optimum,
    tolerance_from_threshold,
)
from conftest import ORACLES

R_GRID = np.logspace(-3, 3, 601)


def inst(a1=1.0, a2=4.0, eps=20, N=200.0, alpha=0.05):
    return PairInstance(a1, a2, eps, N, alpha)


# ---------------------------------------------------------------------------
# critical threshold

def test_threshold_at_zero_is_total_difficulty():
    p = inst(3.0, 7.0, N=150.0)
    assert abs(critical_threshold(0.0, p.beta_star, p.N, p.alpha) - 10.0) < 1e-8
    assert abs(critical_threshold(1e-12, p.beta_star, p.N, p.alpha) - 10.0) < 1e-8


def test_threshold_diverges_at_endpoint():
    p = inst()
    end = 1 - p.alpha - p.beta_star
    assert critical_threshold(end - 1e-9, p.beta_star, p.N, p.alpha) > 1e6


def test_threshold_monotone_and_invertible():
    p = inst()
    end = 1 - p.alpha - p.beta_star
    deltas = np.linspace(1e-6, end * (1 - 1e-6), 100)
    d = np.array([critical_threshold(x, p.beta_star, p.N, p.alpha) for x in deltas])
    assert np.all(np.diff(d) > 0)
    back = [tolerance_from_threshold(x, p.beta_star, p.N, p.alpha) for x in d]
    np.testing.assert_allclose(back, deltas, atol=1e-12)


@pytest.mark.parametrize("delta", [-1e-3, 0.95, 2.0])
def test_threshold_domain(delta):
    p = inst()
    with pytest.raises(DomainError):
        critical_threshold(delta, p.beta_star, p.N, p.alpha)


# ---------------------------------------------------------------------------
# coverage

@pytest.mark.parametrize("point", ORACLES["coverage_points"], ids=lambda p: f"a={p['a']}")
def test_coverage_matches_monte_carlo(point):
    p = inst(*point["a"], eps=point["epsilon"])
    h = coverage_H(point["r"], point["d"], p)
    assert abs(h - point["mc"]) < 3 * point["stderr"]


def test_coverage_equal_difficulties_reflection():
    a, dd = 2.0, 1.5
    p = inst(a, a, eps=10)
    d = 2 * a + dd
    m1, m2 = a / (d - a), (d - a) / a
    expected = 2 * special.f_cdf(math.sqrt(m2 / m1), p.nu) - 1
    assert abs(coverage_H(1.0, d, p) - expected) < 1e-12


def test_coverage_vanishes_at_extremes():
    p = inst()
    assert coverage_H(1e-9, 7.0, p) < 1e-3
    assert coverage_H(1e9, 7.0, p) < 1e-3
    assert coverage_H(1.0, 5.0, p) == 0.0
    assert coverage_H(1.0, 4.0, p) == 0.0


@pytest.mark.parametrize("r", [0.3, 1.0, 3.0])
def test_coverage_nondecreasing_in_threshold(r):
    p = inst()
    vals = [coverage_H(r, d, p) for d in np.linspace(5.0, 60.0, 200)]
    assert np.all(np.diff(vals) >= -1e-14)


@pytest.mark.parametrize("a,d", [((1, 4), 7.0), ((3, 3), 9.0), ((10, 2), 14.0), ((0.5, 9), 12.0)])
def test_coverage_unimodal_in_r(a, d):
    p = inst(*a, eps=12)
    h = np.array([coverage_H(r, d, p) for r in np.logspace(-3, 3, 401)])
    diff = np.diff(h)
    sig = np.sign(np.where(np.abs(diff) <= 1e-12, 0.0, diff))
    sig = sig[sig != 0]
    assert np.count_nonzero(np.diff(sig)) <= 1
    assert sig[0] > 0 and sig[-1] < 0


def test_coverage_domain():
    with pytest.raises(DomainError):
        coverage_H(0.0, 7.0, inst())


# ---------------------------------------------------------------------------
# maximizer

def test_maximizer_examples():
    assert abs(maximizer_r(6.0, 1.0, 4.0) - math.sqrt(1.6)) < 1e-15
    for d in (2.5, 7.0, 100.0):
        assert abs(maximizer_r(d, 1.0, 1.0) - 1.0) < 1e-15
    with pytest.raises(DomainError):
        maximizer_r(5.0, 1.0, 4.0)


@pytest.mark.parametrize("a,eps,d", [((1, 4), 20, 6.0), ((2, 2), 5, 6.0), ((9, 1), 50, 11.0)])
def test_maximizer_beats_grid(a, eps, d):
    p = inst(*a, eps=eps)
    best = coverage_H(maximizer_r(d, *a), d, p)
    grid = np.array([coverage_H(r, d, p) for r in R_GRID])
    assert np.all(best >= grid - 1e-12)


# ---------------------------------------------------------------------------
# TOL and CONF

@settings(max_examples=40, deadline=None)
@given(a1=st.floats(0.1, 50), a2=st.floats(0.1, 50), eps=st.integers(2, 300), gamma=st.floats(0.01, 0.99))
def test_tol_attains_gamma(a1, a2, eps, gamma):
    opt = tol_optimum(gamma, inst(a1, a2, eps=eps))
    assert abs(opt.coverage - gamma) < 1e-9
    assert opt.d_star > a1 + a2


def test_tol_equal_difficulties():
    p = inst(3.0, 3.0, eps=15)
    opt = tol_optimum(0.8, p)
    assert opt.r_star == pytest.approx(1.0, abs=1e-14)
    assert opt.d_star == pytest.approx(3.0 * (1 + special.f_quantile(0.9, 14)), rel=1e-13)


def test_tol_monte_carlo():
    o = ORACLES["tol_coverage"]
    p = inst(*o["a"], eps=o["epsilon"])
    opt = tol_optimum(o["gamma"], p)
    assert opt.r_star == pytest.approx(o["r"], rel=1e-10)
    assert opt.d_star == pytest.approx(o["d"], rel=1e-10)
    mc, se = mc_coverage(opt.r_star, opt.d_star, p, draws=400_000, seed=3)
    assert abs(mc - 0.9) < 0.005
    assert abs(o["mc"] - 0.9) < 0.005


def test_tol_threshold_increases_with_gamma():
    p = inst()
    d = [tol_optimum(g, p).d_star for g in np.linspace(0.05, 0.99, 40)]
    assert np.all(np.diff(d) > 0)


@pytest.mark.parametrize("gamma", [0.0, 1.0, -0.1])
def test_tol_domain(gamma):
    with pytest.raises(DomainError):
        tol_optimum(gamma, inst())


@pytest.mark.parametrize("gamma", [0.5, 0.7, 0.9, 0.95])
def test_tol_conf_consistency(gamma):
    p = inst(2.0, 9.0, eps=30)
    t = tol_optimum(gamma, p)
    c = conf_optimum(t.objective, p)
    assert abs(c.objective - gamma) < 1e-6
    assert c.r_star == pytest.approx(t.r_star, rel=1e-6)


def test_conf_sign_pattern():
    assert conf_optimum(0.1, inst(3, 3)).r_star == pytest.approx(1.0, abs=1e-14)
    assert conf_optimum(0.1, inst(1, 4)).r_star > 1
    assert conf_optimum(0.1, inst(4, 1)).r_star < 1


def test_conf_increasing_in_delta():
    p = inst(1.0, 4.0)
    r = [conf_optimum(x, p).r_star for x in np.linspace(0.01, 0.5, 30)]
    assert np.all(np.diff(r) >= 0)


def test_tol_increasing_in_gamma_when_a1_smaller():
    p = inst(1.0, 4.0)
    r = [tol_optimum(g, p).r_star for g in np.linspace(0.5, 0.95, 10)]
    assert np.all(np.diff(r) >= 0)


def test_conf_domain():
    p = inst()
    with pytest.raises(DomainError):
        conf_optimum(0.0, p)
    with pytest.raises(DomainError):
        conf_optimum(1 - p.alpha - p.beta_star, p)


def test_instance_invariants():
    with pytest.raises(PreconditionError):
        PairInstance(0.0, 1.0, 5, 10.0)
    with pytest.raises(PreconditionError):
        PairInstance(1.0, 1.0, 1, 10.0)
    with pytest.raises(PreconditionError):
        PairInstance(1.0, 1.0, 2.5, 10.0)
    p = PairInstance.from_ratio(0.25, 20, 200)
    assert p.a1 / p.a2 == pytest.approx(0.25)
    assert math.sqrt(p.a1 * p.a2) == pytest.approx(20.0)


# ---------------------------------------------------------------------------
# EXP

@pytest.mark.parametrize("nu", [1, 4, 19, 199, 9999])
def test_w_density_normalized(nu):
    quad = _ExpQuadrature(inst(eps=nu + 1))
    assert abs(quad.norm - 1.0) < 1e-10
    # the density is symmetric about zero
    w = np.linspace(0.01, 3, 20)
    np.testing.assert_allclose(_log_w_density(w, nu), _log_w_density(-w, nu), rtol=1e-14)


@pytest.mark.parametrize("idx", [0, 1])
def test_exp_matches_quadrature_oracle(idx):
    o = ORACLES["exp"][idx]
    p = inst(*o["a"], eps=o["epsilon"], N=o["N"])
    opt = exp_optimum(p)
    assert abs(math.log(opt.r_star) - o["s"]) < 2 * o["grid_step"]
    assert abs(opt.objective - o["value"]) < 1e-9
    assert abs(expected_max_type2(math.exp(o["s"]), p) - o["value"]) < 1e-10


def test_exp_matches_monte_carlo():
    o = ORACLES["exp"][0]
    p = inst(*o["a"], eps=o["epsilon"], N=o["N"])
    opt = exp_optimum(p)
    mc, se = mc_expected_max_type2(opt.r_star, p, draws=1_000_000, seed=4)
    assert abs(mc - opt.objective) < 3 * se
    assert abs(o["mc"] - opt.objective) < 3 * o["mc_stderr"]


def test_exp_sign_pattern():
    assert abs(exp_optimum(inst(5, 5)).r_star - 1.0) < 1e-3
    assert exp_optimum(inst(2, 8)).r_star > 1
    assert exp_optimum(inst(8, 2)).r_star < 1


def test_exp_closer_to_one_for_larger_pilots():
    dev = [abs(exp_optimum(PairInstance.from_ratio(0.25, e, 200)).r_star - 1) for e in (20, 50, 100, 500)]
    assert np.all(np.diff(dev) < 0)


def test_exp_is_minimum_on_grid():
    p = inst(2.0, 8.0, eps=10)
    opt = exp_optimum(p)
    grid = [expected_max_type2(r, p) for r in np.logspace(-1, 1, 81)]
    assert opt.objective <= min(grid) + 1e-12
