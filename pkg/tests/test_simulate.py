from dataclasses import replace

import numpy as np
import pytest

from powalloc.errors import PreconditionError
from powalloc.power import Portfolio, allocation_with_corrections
from powalloc.simulate import (
    DEFAULT_SEED,
    FAST_REPLICATES,
    SimulationReport,
    StudyConfig,
    _draw_replicate,
    _policy_k,
    compare_known_sigma,
    compare_unknown_sigma,
    exp_rstar_sweep,
    preset,
    run_study,
    sample_pilot_sd,
    stream,
    tol_conf_rstar_sweep,
)


def small(**kw):
    base = dict(M=5, N=1000.0, replicates=40)
    base.update(kw)
    return StudyConfig(**base)


# ---------------------------------------------------------------------------
# pilot draws and streams

def test_pilot_variance_unbiased():
    s = sample_pilot_sd(2.0, 20, stream(1, 0, 0), 1_000_000)
    assert abs(np.mean(s**2) - 4.0) < 0.02
    assert np.mean(s < 2.0) > 0.5


def test_pilot_draws_deterministic():
    a = sample_pilot_sd(1.3, 8, stream(5, 2, 3), 100)
    b = sample_pilot_sd(1.3, 8, stream(5, 2, 3), 100)
    c = sample_pilot_sd(1.3, 8, stream(5, 2, 4), 100)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("sigma,eps", [(0.0, 5), (1.0, 1), (1.0, 2.5)])
def test_pilot_preconditions(sigma, eps):
    with pytest.raises(PreconditionError):
        sample_pilot_sd(sigma, eps, stream(0, 0, 0))


def test_replicate_draws_independent_of_M():
    a = _draw_replicate(small(M=3), 7, True)
    b = _draw_replicate(small(M=6), 7, True)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y[:3])


# ---------------------------------------------------------------------------
# config

def test_config_collects_errors():
    with pytest.raises(PreconditionError) as err:
        StudyConfig(replicates=0, M=0, gamma=1.5, sigma_range=(0, 1))
    msg = str(err.value)
    for word in ("replicates", "M must", "gamma", "sigma_range"):
        assert word in msg


def test_presets():
    assert preset("fig1").M == 50
    assert preset("fig1").delta_range == (0.01, 1.0)
    assert preset("fig4", fast=True).replicates == FAST_REPLICATES
    assert [preset(f"fig{i}").objective for i in (4, 5, 6)] == ["tol", "conf", "exp"]
    assert preset("fig5").seed == DEFAULT_SEED
    with pytest.raises(PreconditionError):
        preset("fig9")


# ---------------------------------------------------------------------------
# known sigma

def test_known_sigma_dominance_and_limits():
    cfg = small(mode="known_sigma", N_grid=(1e-6, 100.0, 1e3, 1e4, 1e8), replicates=30)
    rep = compare_known_sigma(cfg)
    assert rep.summaries["dominance_all"]
    assert np.all(rep.per_replicate["gap"] >= 0)
    assert rep.column("power_mean")[0] == pytest.approx(0.95, abs=1e-3)
    assert rep.column("mse_mean")[0] == pytest.approx(0.95, abs=1e-3)
    assert rep.column("power_mean")[-1] < 1e-6
    assert rep.column("mse_mean")[-1] < 1e-6
    assert np.all(np.diff(rep.column("power_mean")) < 0)
    np.testing.assert_allclose(rep.column("gap_mean"), rep.per_replicate["gap"].mean(axis=1), rtol=1e-12)


def test_known_sigma_empty_grid():
    cfg = small(mode="unknown_sigma", N_grid=())
    with pytest.raises(PreconditionError):
        compare_known_sigma(cfg)


# ---------------------------------------------------------------------------
# unknown sigma

@pytest.mark.parametrize("objective", ["tol", "conf", "exp"])
def test_unknown_sigma_report_consistency(objective):
    rep = compare_unknown_sigma(small(objective=objective))
    assert rep.columns == ("replicate", "beta_star", "excess_naive", "excess_oracle_surrogate", "excess_surrogate_s")
    for p in ("naive", "oracle_surrogate", "surrogate_s"):
        e = rep.per_replicate[p]
        assert np.all(e >= -1e-12)
        assert abs(rep.summaries[f"{p}.mean"] - e.mean()) < 1e-12
        assert abs(rep.summaries[f"{p}.quantile_gamma"] - np.quantile(e, 0.7)) < 1e-12
        assert abs(rep.summaries[f"{p}.within_delta"] - np.mean(e <= 0.2)) < 1e-12
        realized = e + rep.per_replicate["beta_star"]
        assert np.all((realized > 0) & (realized <= 0.95 + 1e-12))


def test_policy_allocations_conserve_budget():
    cfg = small()
    sigma, delta, s = _draw_replicate(cfg, 3, True)
    port = Portfolio.from_arrays(delta, cfg.N, cfg.alpha, pilot_s=s, epsilons=[cfg.epsilon] * cfg.M)
    for p in cfg.policies:
        k, _ = _policy_k(p, cfg, sigma, delta, s)
        assert abs(allocation_with_corrections(k, s, port).n.sum() - cfg.N) < 1e-9


def test_oracle_with_huge_pilots():
    rep = compare_unknown_sigma(small(epsilon=10**6, policies=("oracle_surrogate",), objective="exp"))
    assert np.all(rep.per_replicate["oracle_surrogate"] < 0.01)


def test_workers_do_not_change_results():
    cfg = small(replicates=12)
    one = compare_unknown_sigma(cfg)
    two = compare_unknown_sigma(replace(cfg, workers=2))
    assert one.rows == two.rows
    assert one.summaries == two.summaries
    assert one.to_csv() == two.to_csv()


def test_seed_changes_results():
    a = compare_unknown_sigma(small(replicates=5))
    b = compare_unknown_sigma(small(replicates=5, seed=1))
    assert a.rows != b.rows


# ---------------------------------------------------------------------------
# sweeps

def test_exp_sweep_patterns():
    cfg = StudyConfig(mode="exp_sweep", N=200.0, ratios=(0.1, 0.3, 1.0, 3.0, 10.0), epsilons=(20, 500))
    rep = exp_rstar_sweep(cfg)
    eps, ratio, r = rep.column("epsilon"), rep.column("ratio"), rep.column("r_star")
    assert np.all(np.abs(r[ratio == 1.0] - 1) < 1e-3)
    assert np.all(r[ratio < 1] > 1) and np.all(r[ratio > 1] < 1)
    dev20 = np.abs(np.log(r[eps == 20]))
    dev500 = np.abs(np.log(r[eps == 500]))
    off = ratio[eps == 20] != 1.0
    assert np.all(dev500[off] < dev20[off])


def test_tol_conf_sweep_patterns():
    cfg = StudyConfig(mode="tol_conf_sweep", N=200.0, ratios=(0.25, 1.0, 4.0))
    rep = tol_conf_rstar_sweep(cfg)
    obj, ratio, level, r = (rep.column(c) for c in ("objective", "ratio", "level", "r_star"))
    assert np.all(np.abs(r[ratio == 1.0] - 1) < 1e-12)
    up = (obj == "tol") & (ratio == 0.25)
    assert np.all(np.diff(r[up]) > 0)
    down = (obj == "conf") & (ratio == 4.0)
    assert down.sum() > 3 and np.all(np.diff(r[down]) < 0)
    # CONF points beyond the attainable tolerance are skipped
    assert np.all(level[obj == "conf"] < 0.95)


def test_run_study_dispatch():
    assert run_study(small(mode="known_sigma", replicates=3)).columns[0] == "N"
    assert run_study(small(replicates=3)).columns[0] == "replicate"


# ---------------------------------------------------------------------------
# CSV

def test_csv_round_trip(tmp_path):
    rep = compare_unknown_sigma(small(replicates=6))
    path = tmp_path / "out.csv"
    text = rep.to_csv(path)
    assert path.read_text() == text
    assert "\r" not in text
    back = SimulationReport.from_csv(text)
    assert back.columns == rep.columns
    assert back.name == rep.name
    assert back.to_csv() == text
    for got, want in zip(back.rows, rep.rows):
        np.testing.assert_allclose(got, want, rtol=1e-9)
    assert back.metadata["config.seed"] == DEFAULT_SEED
    assert back.metadata["beta_star_proxy"] == "none"


def test_csv_booleans():
    rep = compare_known_sigma(small(mode="known_sigma", replicates=3, N_grid=(100.0, 1000.0)))
    text = rep.to_csv()
    assert ",true\n" in text
    assert SimulationReport.from_csv(text).summaries["dominance_all"] is True
