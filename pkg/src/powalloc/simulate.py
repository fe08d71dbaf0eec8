"""Monte Carlo studies and parameter sweeps.

Random draws for experiment ``j`` of replicate ``rep`` come from a Philox
stream keyed by (seed, rep, j), so results do not depend on the order in
which replicates run or on how many worker processes share them.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
import io
import math

import numpy as np

from powalloc import pair, surrogate
from powalloc.errors import PreconditionError
from powalloc.power import (
    beta_star_from_difficulties,
    difficulty,
    realized_max_type2_batch,
    type2_errors,
)

DEFAULT_SEED = 20_240_917
FAST_REPLICATES = 200
POLICIES = ("naive", "oracle_surrogate", "surrogate_s")
MODES = ("known_sigma", "unknown_sigma", "tol_conf_sweep", "exp_sweep")
FIG1_GRID = (1e3, 2e3, 5e3, 1e4, 2e4, 5e4, 8e4, 1e5, 2e5, 5e5, 1e6)
RATIO_GRID = tuple(float(v) for v in np.logspace(-1.0, 1.0, 21))
GAMMA_GRID = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
DELTA_GRID = tuple(round(0.02 * i, 2) for i in range(1, 21))


@dataclass(frozen=True)
class StudyConfig:
    """Everything a study needs; unused fields are ignored by each mode."""

    mode: str = "unknown_sigma"
    name: str = "custom"
    M: int = 10
    N: float = 1000.0
    N_grid: tuple = FIG1_GRID
    epsilon: int = 20
    sigma_range: tuple = (0.5, 2.0)
    delta_range: tuple = (0.1, 1.0)
    alpha: float = 0.05
    replicates: int = 1000
    seed: int = DEFAULT_SEED
    objective: str = "tol"
    gamma: float = 0.7
    delta: float = 0.2
    policies: tuple = POLICIES
    ratios: tuple = RATIO_GRID
    epsilons: tuple = (20, 50, 100, 500)
    gammas: tuple = GAMMA_GRID
    deltas: tuple = DELTA_GRID
    scale: float = 20.0
    workers: int = 1

    def __post_init__(self):
        for name in ("N_grid", "sigma_range", "delta_range", "policies", "ratios", "epsilons", "gammas", "deltas"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        errs = []
        if self.mode not in MODES:
            errs.append(f"mode must be one of {MODES}")
        if self.replicates < 1:
            errs.append("replicates must be >= 1")
        if self.M < 1:
            errs.append("M must be >= 1")
        if not self.N > 0:
            errs.append("N must be positive")
        if self.epsilon < 2:
            errs.append("pilot size must be >= 2")
        for name in ("sigma_range", "delta_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                errs.append(f"{name} needs 0 < low <= high")
        if not 0 < self.alpha < 1:
            errs.append("alpha must lie in (0, 1)")
        if not 0 < self.gamma < 1:
            errs.append("gamma must lie in (0, 1)")
        if not self.delta > 0:
            errs.append("delta must be positive")
        if self.objective not in surrogate.OBJECTIVES:
            errs.append(f"objective must be one of {surrogate.OBJECTIVES}")
        if not set(self.policies) <= set(POLICIES) or not self.policies:
            errs.append(f"policies must be a nonempty subset of {POLICIES}")
        if self.mode == "known_sigma" and not self.N_grid:
            errs.append("N_grid must not be empty")
        if self.mode in ("tol_conf_sweep", "exp_sweep") and not self.ratios:
            errs.append("ratios must not be empty")
        if self.workers < 1:
            errs.append("workers must be >= 1")
        if errs:
            raise PreconditionError("; ".join(errs))


def preset(name, fast=False):
    """Configuration of a named figure study; ``fast`` caps replicates at 200."""
    table = {
        "fig1": dict(mode="known_sigma", M=50, delta_range=(0.01, 1.0)),
        "fig2": dict(mode="tol_conf_sweep", N=200.0),
        "fig3": dict(mode="exp_sweep", N=200.0),
        "fig4": dict(mode="unknown_sigma", objective="tol"),
        "fig5": dict(mode="unknown_sigma", objective="conf"),
        "fig6": dict(mode="unknown_sigma", objective="exp"),
    }
    if name not in table:
        raise PreconditionError(f"unknown study {name!r}; choose from {sorted(table)}")
    cfg = StudyConfig(name=name, **table[name])
    return replace(cfg, replicates=FAST_REPLICATES) if fast else cfg


# ---------------------------------------------------------------------------
# reports

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return str(v)


def _parse(text):
    if text in ("true", "false"):
        return text == "true"
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


@dataclass
class SimulationReport:
    """A table (one row per replicate or sweep point) plus summaries and metadata.

    ``per_replicate`` maps a label to the raw realized values behind the
    summaries; it is kept in memory only.
    """

    name: str
    columns: tuple
    rows: list
    summaries: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    per_replicate: dict = field(default_factory=dict)

    def column(self, name):
        j = self.columns.index(name)
        return np.array([row[j] for row in self.rows])

    def to_csv(self, dest=None):
        """CSV text: header, rows, then ``# key=value`` lines. Writes to ``dest`` if given."""
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(_fmt(v) for v in row) + "\n")
        buf.write(f"# report={self.name}\n")
        for k, v in self.summaries.items():
            buf.write(f"# summary.{k}={_fmt(v)}\n")
        for k, v in self.metadata.items():
            buf.write(f"# {k}={_fmt(v)}\n")
        text = buf.getvalue()
        if dest is not None:
            with open(dest, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text):
        lines = text.splitlines()
        columns = tuple(lines[0].split(","))
        rows, summaries, metadata, name = [], {}, {}, ""
        for line in lines[1:]:
            if line.startswith("# "):
                key, _, val = line[2:].partition("=")
                if key == "report":
                    name = val
                elif key.startswith("summary."):
                    summaries[key[len("summary."):]] = _parse(val)
                else:
                    metadata[key] = _parse(val)
            elif line:
                rows.append(tuple(_parse(v) for v in line.split(",")))
        return cls(name, columns, rows, summaries, metadata)


# ---------------------------------------------------------------------------
# random draws

def stream(seed, rep, j):
    """Independent generator for experiment ``j`` of replicate ``rep``."""
    ss = np.random.SeedSequence(seed, spawn_key=(rep, j))
    return np.random.Generator(np.random.Philox(ss))


def sample_pilot_sd(sigma, epsilon, rng, size=None):
    """Sample sd of a normal pilot of size ``epsilon``, via its chi-squared law."""
    if not sigma > 0:
        raise PreconditionError(f"sigma must be positive, got {sigma!r}")
    if int(epsilon) != epsilon or epsilon < 2:
        raise PreconditionError(f"pilot size must be >= 2, got {epsilon!r}")
    nu = epsilon - 1
    return sigma * np.sqrt(rng.chisquare(nu, size) / nu)


def _draw_experiment(cfg, rep, j, with_pilot):
    rng = stream(cfg.seed, rep, j)
    sigma = rng.uniform(*cfg.sigma_range)
    delta = rng.uniform(*cfg.delta_range)
    s = sample_pilot_sd(sigma, cfg.epsilon, rng) if with_pilot else None
    return sigma, delta, s


def _draw_replicate(cfg, rep, with_pilot):
    draws = [_draw_experiment(cfg, rep, j, with_pilot) for j in range(cfg.M)]
    sigma = np.array([d[0] for d in draws])
    delta = np.array([d[1] for d in draws])
    s = np.array([d[2] for d in draws]) if with_pilot else None
    return sigma, delta, s


def _map(fun, cfg):
    reps = range(cfg.replicates)
    if cfg.workers == 1:
        return [fun(cfg, r) for r in reps]
    chunk = max(1, cfg.replicates // (4 * cfg.workers))
    with ProcessPoolExecutor(cfg.workers) as pool:
        return list(pool.map(fun, [cfg] * cfg.replicates, reps, chunksize=chunk))


def _config_echo(cfg):
    return {f"config.{f.name}": _echo(getattr(cfg, f.name)) for f in fields(cfg) if f.name != "workers"}


def _echo(v):
    if isinstance(v, tuple):
        return " ".join(_fmt(x) for x in v)
    return v


# ---------------------------------------------------------------------------
# known sigma: power-optimal against MSE-optimal

def _known_sigma_replicate(cfg, rep):
    sigma, delta, _ = _draw_replicate(cfg, rep, False)
    a = difficulty(sigma, delta)
    w = sigma**2 / np.sum(sigma**2)
    power, mse = [], []
    for N in cfg.N_grid:
        power.append(beta_star_from_difficulties(a, N, cfg.alpha))
        mse.append(float(np.max(type2_errors(sigma, N * w, delta, cfg.alpha))))
    return power, mse


def compare_known_sigma(cfg):
    """Worst-case Type-2 error of the power-optimal and MSE-optimal splits across N."""
    if not cfg.N_grid:
        raise PreconditionError("N_grid must not be empty")
    out = _map(_known_sigma_replicate, cfg)
    power = np.array([o[0] for o in out]).T
    mse = np.array([o[1] for o in out]).T
    gap = mse - power
    rows = []
    for i, N in enumerate(cfg.N_grid):
        rows.append((float(N), power[i].mean(), mse[i].mean(), gap[i].mean(),
                     float(np.median(power[i])), float(np.median(mse[i])), bool(np.all(gap[i] >= 0.0))))
    cols = ("N", "power_mean", "mse_mean", "gap_mean", "power_median", "mse_median", "dominance")
    summaries = {"dominance_all": bool(np.all(gap >= 0.0))}
    return SimulationReport(cfg.name, cols, rows, summaries, _config_echo(cfg),
                            {"power": power, "mse": mse, "gap": gap})


# ---------------------------------------------------------------------------
# unknown sigma: policies on pilot estimates

def _policy_k(policy, cfg, sigma, delta, s):
    m = sigma.size
    eps = np.full(m, cfg.epsilon)
    if policy == "naive":
        return np.ones(m), float("nan")
    if policy == "oracle_surrogate":
        a = difficulty(sigma, delta)
        beta_ref = beta_star_from_difficulties(a, cfg.N, cfg.alpha)
    else:
        a = difficulty(s, delta)
        beta_ref = beta_star_from_difficulties(a, cfg.N, cfg.alpha)
    plan = surrogate.solve(cfg.objective, a, eps, cfg.N, cfg.alpha, cfg.gamma, cfg.delta, beta_ref)
    return plan.k, plan.objective_value


def _unknown_sigma_replicate(cfg, rep):
    sigma, delta, s = _draw_replicate(cfg, rep, True)
    beta_star = beta_star_from_difficulties(difficulty(sigma, delta), cfg.N, cfg.alpha)
    excess, certified = [], []
    for policy in cfg.policies:
        k, value = _policy_k(policy, cfg, sigma, delta, s)
        realized = realized_max_type2_batch(k, s, sigma, delta, cfg.N, cfg.alpha)[0]
        excess.append(realized - beta_star)
        certified.append(value)
    return beta_star, excess, certified


def compare_unknown_sigma(cfg, objective=None):
    """Excess worst-case Type-2 error over beta*(sigma) for each policy.

    Summaries per policy: mean, median, the gamma-quantile (TOL view),
    and the fraction of replicates within delta (CONF view).
    """
    if objective is not None:
        cfg = replace(cfg, objective=objective)
    out = _map(_unknown_sigma_replicate, cfg)
    beta_star = np.array([o[0] for o in out])
    excess = np.array([o[1] for o in out])
    certified = np.array([o[2] for o in out])
    rows = [(r, beta_star[r], *excess[r]) for r in range(cfg.replicates)]
    cols = ("replicate", "beta_star", *(f"excess_{p}" for p in cfg.policies))
    summaries = {"beta_star_mean": float(beta_star.mean())}
    per_rep = {"beta_star": beta_star}
    for i, p in enumerate(cfg.policies):
        e = excess[:, i]
        per_rep[p] = e
        summaries[f"{p}.mean"] = float(e.mean())
        summaries[f"{p}.median"] = float(np.median(e))
        summaries[f"{p}.quantile_gamma"] = float(np.quantile(e, cfg.gamma))
        summaries[f"{p}.within_delta"] = float(np.mean(e <= cfg.delta))
        if p != "naive":
            summaries[f"{p}.certified_mean"] = float(np.mean(certified[:, i]))
    meta = _config_echo(cfg)
    meta["beta_star_proxy"] = "plug-in beta*(S) for surrogate_s under conf" if cfg.objective == "conf" else "none"
    return SimulationReport(cfg.name, cols, rows, summaries, meta, per_rep)


# ---------------------------------------------------------------------------
# two-experiment sweeps

def exp_rstar_sweep(cfg):
    """EXP-optimal ratio over difficulty ratios, one curve per pilot size."""
    rows = []
    for eps in cfg.epsilons:
        for ratio in cfg.ratios:
            inst = pair.PairInstance.from_ratio(ratio, eps, cfg.N, cfg.scale, cfg.alpha)
            opt = pair.exp_optimum(inst)
            rows.append((int(eps), ratio, inst.a1, inst.a2, opt.r_star, opt.objective))
    cols = ("epsilon", "ratio", "a1", "a2", "r_star", "expected_max_beta")
    return SimulationReport(cfg.name, cols, rows, {}, _config_echo(cfg))


def tol_conf_rstar_sweep(cfg):
    """TOL-optimal ratio over (ratio, gamma) and CONF-optimal ratio over (ratio, delta).

    CONF points with delta outside the attainable range for an instance are skipped.
    """
    rows = []
    for ratio in cfg.ratios:
        inst = pair.PairInstance.from_ratio(ratio, cfg.epsilon, cfg.N, cfg.scale, cfg.alpha)
        for g in cfg.gammas:
            opt = pair.tol_optimum(g, inst)
            rows.append(("tol", ratio, g, opt.r_star, opt.d_star, opt.objective))
        limit = 1.0 - cfg.alpha - inst.beta_star
        for dl in cfg.deltas:
            if dl < limit:
                opt = pair.conf_optimum(dl, inst)
                rows.append(("conf", ratio, dl, opt.r_star, opt.d_star, opt.objective))
    cols = ("objective", "ratio", "level", "r_star", "d_star", "value")
    return SimulationReport(cfg.name, cols, rows, {}, _config_echo(cfg))


def run_study(cfg):
    if cfg.mode == "known_sigma":
        return compare_known_sigma(cfg)
    if cfg.mode == "unknown_sigma":
        return compare_unknown_sigma(cfg)
    if cfg.mode == "exp_sweep":
        return exp_rstar_sweep(cfg)
    return tol_conf_rstar_sweep(cfg)


def stderr(values):
    v = np.asarray(values, dtype=float)
    return float(v.std(ddof=1) / math.sqrt(v.size))
