"""Command-line front end.

Configuration is one YAML document whose ``kind`` key is ``portfolio``
or ``study``. A portfolio document::

    kind: portfolio
    budget: 1000
    alpha: 0.05
    experiments:
      - {sigma: 1.0, delta_gap: 0.5}
      - {delta_gap: 0.3, pilot: {s: 1.2, epsilon: 20}}

A study document holds :class:`~powalloc.simulate.StudyConfig` fields,
optionally starting from a named preset via ``study: fig4``.
"""

import argparse
from dataclasses import dataclass, fields, replace
import sys

import yaml

from powalloc import pair, simulate, surrogate
from powalloc.errors import ConfigError, DomainError, NumericError, PreconditionError
from powalloc.power import (
    allocation_with_corrections,
    ExperimentSpec,
    Pilot,
    Portfolio,
    difficulty,
    mse_optimal_allocation,
    power_optimal_allocation,
)
from powalloc.simulate import SimulationReport, StudyConfig

DEFAULT_GAMMA = 0.7
DEFAULT_DELTA = 0.2

PORTFOLIO_KEYS = {"kind", "budget", "alpha", "experiments", "gamma", "delta"}
EXPERIMENT_KEYS = {"sigma", "delta_gap", "theta", "pilot"}
PILOT_KEYS = {"s", "epsilon"}
STUDY_FIELDS = {f.name for f in fields(StudyConfig)} - {"name"}
STUDY_KEYS = {"kind", "study"} | STUDY_FIELDS
TUPLE_FIELDS = {"N_grid", "sigma_range", "delta_range", "policies", "ratios", "epsilons", "gammas", "deltas"}


@dataclass(frozen=True)
class ParsedConfig:
    kind: str
    portfolio: Portfolio | None = None
    study: StudyConfig | None = None
    gamma: float | None = None
    delta: float | None = None


@dataclass(frozen=True)
class RunConfig:
    command: str
    target: str | None
    config: ParsedConfig | None
    out: str | None = None
    svg: str | None = None
    seed: int | None = None
    fast: bool = False
    gamma: float | None = None
    delta: float | None = None


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _unknown(d, allowed, path, problems):
    for key in d:
        if key not in allowed:
            problems.append(f"{path}.{key}: unknown key")


def _experiment(i, e, problems):
    path = f"experiments[{i}]"
    if not isinstance(e, dict):
        problems.append(f"{path}: must be a mapping")
        return None
    _unknown(e, EXPERIMENT_KEYS, path, problems)
    bad = len(problems)
    if "delta_gap" not in e:
        problems.append(f"{path}.delta_gap: missing required field")
    elif not _is_num(e["delta_gap"]) or not e["delta_gap"] > 0:
        problems.append(f"{path}.delta_gap: must be positive (experiment {i})")
    if "sigma" in e and (not _is_num(e["sigma"]) or not e["sigma"] > 0):
        problems.append(f"{path}.sigma: must be positive")
    if "theta" in e and not _is_num(e["theta"]):
        problems.append(f"{path}.theta: must be a number")
    pilot = None
    if "pilot" in e:
        p = e["pilot"]
        if not isinstance(p, dict):
            problems.append(f"{path}.pilot: must be a mapping")
        else:
            _unknown(p, PILOT_KEYS, f"{path}.pilot", problems)
            eps = p.get("epsilon")
            if eps is None:
                problems.append(f"{path}.pilot.epsilon: missing required field")
            elif not isinstance(eps, int) or isinstance(eps, bool) or eps < 2:
                problems.append(f"{path}.pilot.epsilon: pilot size must be >= 2")
            if "s" in p and (not _is_num(p["s"]) or not p["s"] > 0):
                problems.append(f"{path}.pilot.s: must be positive")
            if len(problems) == bad:
                pilot = Pilot(eps, None if "s" not in p else float(p["s"]))
    if "sigma" not in e and (pilot is None or pilot.s is None) and len(problems) == bad:
        problems.append(f"{path}: needs sigma or pilot.s")
    if len(problems) > bad:
        return None
    return ExperimentSpec(float(e["delta_gap"]), sigma=None if "sigma" not in e else float(e["sigma"]),
                          pilot=pilot, theta=float(e.get("theta", 0.0)))


def _objective_params(doc, problems):
    gamma, delta = doc.get("gamma"), doc.get("delta")
    if gamma is not None and (not _is_num(gamma) or not 0 < gamma < 1):
        problems.append("gamma: must lie in (0, 1)")
    if delta is not None and (not _is_num(delta) or not delta > 0):
        problems.append("delta: must be positive")
    return gamma, delta


def _portfolio(doc, problems):
    _unknown(doc, PORTFOLIO_KEYS, "", problems)
    for key in ("budget", "experiments"):
        if key not in doc:
            problems.append(f".{key}: missing required field")
    budget = doc.get("budget")
    if budget is not None and (not _is_num(budget) or not budget > 0):
        problems.append(".budget: must be positive")
    alpha = doc.get("alpha", 0.05)
    if not _is_num(alpha) or not 0 < alpha < 1:
        problems.append(".alpha: must lie in (0, 1)")
    exps = doc.get("experiments", [])
    if not isinstance(exps, list) or not exps:
        problems.append(".experiments: must be a nonempty list")
        exps = []
    specs = [_experiment(i, e, problems) for i, e in enumerate(exps)]
    gamma, delta = _objective_params(doc, problems)
    if problems:
        raise ConfigError(problems)
    return ParsedConfig("portfolio", Portfolio(tuple(specs), float(budget), float(alpha)), gamma=gamma, delta=delta)


def _study(doc, problems):
    _unknown(doc, STUDY_KEYS, "", problems)
    if problems:
        raise ConfigError(problems)
    values = {k: (tuple(v) if k in TUPLE_FIELDS and isinstance(v, list) else v)
              for k, v in doc.items() if k in STUDY_FIELDS}
    try:
        base = simulate.preset(doc["study"]) if "study" in doc else StudyConfig()
        cfg = replace(base, **values)
    except (PreconditionError, TypeError) as exc:
        raise ConfigError([f".study: {exc}"]) from exc
    return ParsedConfig("study", study=cfg)


def parse_config(document):
    """Validate a YAML document; raises :class:`ConfigError` listing every problem."""
    try:
        doc = yaml.safe_load(document)
    except yaml.YAMLError as exc:
        raise ConfigError([f"malformed document: {exc}"]) from exc
    if not isinstance(doc, dict):
        raise ConfigError(["document must be a mapping"])
    kind = doc.get("kind")
    if kind == "portfolio":
        return _portfolio(doc, [])
    if kind == "study":
        return _study(doc, [])
    raise ConfigError([f".kind: must be 'portfolio' or 'study', got {kind!r}"])


# ---------------------------------------------------------------------------
# commands

def _need_portfolio(run):
    if run.config is None or run.config.kind != "portfolio":
        raise PreconditionError("this command needs --config with kind: portfolio")
    return run.config.portfolio


def _resolve(run, name, default):
    flag = getattr(run, name)
    if flag is not None:
        return flag, "flag"
    doc = getattr(run.config, name) if run.config else None
    if doc is not None:
        return doc, "config"
    return default, "default"


def _allocation_report(name, portfolio, result):
    rows = [(i, portfolio.sigmas[i], portfolio.deltas[i], result.n[i], result.per_experiment_beta[i])
            for i in range(len(portfolio))]
    meta = {"max_beta": result.max_beta, "budget": portfolio.budget, "alpha": portfolio.alpha}
    return SimulationReport(name, ("index", "sigma", "delta", "n", "beta"), rows, {}, meta)


def cmd_allocate(run):
    p = _need_portfolio(run)
    return _allocation_report("allocate", p, power_optimal_allocation(p)), None


def cmd_mse(run):
    p = _need_portfolio(run)
    return _allocation_report("mse", p, mse_optimal_allocation(p)), None


def cmd_two_exp(run):
    p = _need_portfolio(run)
    if len(p) != 2:
        raise PreconditionError(f"two-exp needs exactly 2 experiments, got {len(p)}")
    eps = p.epsilons
    if eps[0] != eps[1]:
        raise PreconditionError("two-exp needs equal pilot sizes")
    a = difficulty(p.sigmas, p.deltas)
    inst = pair.PairInstance(float(a[0]), float(a[1]), int(eps[0]), p.budget, p.alpha)
    meta = {"beta_star": inst.beta_star}
    if run.target == "tol":
        gamma, src = _resolve(run, "gamma", DEFAULT_GAMMA)
        opt = pair.tol_optimum(gamma, inst)
        meta.update(gamma=gamma, gamma_source=src, coverage=opt.coverage)
    elif run.target == "conf":
        delta, src = _resolve(run, "delta", DEFAULT_DELTA)
        opt = pair.conf_optimum(delta, inst)
        meta.update(delta=delta, delta_source=src)
    else:
        opt = pair.exp_optimum(inst)
    d = float("nan") if opt.d_star is None else opt.d_star
    row = (run.target, inst.a1, inst.a2, inst.epsilon, opt.r_star, d, opt.objective)
    cols = ("objective", "a1", "a2", "epsilon", "r_star", "d_star", "value")
    return SimulationReport(f"two-exp-{run.target}", cols, [row], {}, meta), None


def cmd_surrogate(run):
    p = _need_portfolio(run)
    gamma, g_src = _resolve(run, "gamma", DEFAULT_GAMMA)
    delta, d_src = _resolve(run, "delta", DEFAULT_DELTA)
    eps = p.epsilons
    if all(e.pilot.s is not None for e in p.experiments):
        basis = "pilot"
        plan, alloc = surrogate.surrogate_s_pipeline(p.pilot_s, eps, p.deltas, p.budget, p.alpha,
                                                     run.target, gamma, delta)
        est = p.pilot_s
    else:
        basis = "sigma"
        est = p.sigmas
        plan = surrogate.solve(run.target, difficulty(est, p.deltas), eps, p.budget, p.alpha, gamma, delta)
        alloc = allocation_with_corrections(plan.k, est, p)
    rows = [(i, est[i], int(eps[i]), plan.c[i], plan.k[i], alloc.n[i]) for i in range(len(p))]
    meta = {"objective": run.target, "basis": basis, "certified_gamma": plan.certified_gamma,
            "k_min": float(plan.k.min())}
    key = {"tol": "delta_R", "conf": "gamma_R", "exp": "g_R"}[run.target]
    meta[key] = plan.objective_value
    if run.target == "tol":
        meta.update(gamma=gamma, gamma_source=g_src)
    if run.target == "conf":
        meta.update(delta=delta, delta_source=d_src)
        meta["beta_star_proxy"] = "plug-in beta*(S)" if basis == "pilot" else "beta*(sigma)"
    cols = ("index", "s", "epsilon", "c", "k", "n")
    return SimulationReport(f"surrogate-{run.target}", cols, rows, {}, meta), None


def cmd_simulate(run):
    if run.target == "custom":
        if run.config is None or run.config.kind != "study":
            raise PreconditionError("simulate custom needs --config with kind: study")
        cfg = run.config.study
    else:
        cfg = simulate.preset(run.target)
        if run.config is not None:
            if run.config.kind != "study":
                raise PreconditionError("simulate needs a study config")
            cfg = replace(run.config.study, name=run.target)
    if run.fast and cfg.replicates > simulate.FAST_REPLICATES:
        cfg = replace(cfg, replicates=simulate.FAST_REPLICATES)
    if run.seed is not None:
        cfg = replace(cfg, seed=run.seed)
    if run.gamma is not None:
        cfg = replace(cfg, gamma=run.gamma)
    if run.delta is not None:
        cfg = replace(cfg, delta=run.delta)
    return simulate.run_study(cfg), cfg.mode


def cmd_validate(run):
    if run.config is None:
        raise PreconditionError("validate needs --config")
    c = run.config
    if c.kind == "portfolio":
        meta = {"kind": "portfolio", "M": len(c.portfolio), "budget": c.portfolio.budget,
                "alpha": c.portfolio.alpha}
    else:
        meta = {"kind": "study", "mode": c.study.mode, "replicates": c.study.replicates}
    return SimulationReport("validate", ("status",), [("valid",)], {}, meta), None


COMMANDS = {
    "allocate": (cmd_allocate, "power.power_optimal_allocation"),
    "mse": (cmd_mse, "power.mse_optimal_allocation"),
    "two-exp": (cmd_two_exp, "pair"),
    "surrogate": (cmd_surrogate, "surrogate"),
    "simulate": (cmd_simulate, "simulate"),
    "validate": (cmd_validate, "cli.parse_config"),
}


def dispatch(run, stdout=None):
    """Run one command; returns the report (and writes CSV/SVG as requested)."""
    fun, _ = COMMANDS[run.command]
    report, mode = fun(run)
    text = report.to_csv(run.out)
    if run.out is None:
        (stdout or sys.stdout).write(text)
    if run.svg is not None:
        if mode is None:
            raise PreconditionError("--svg applies to simulate only")
        from powalloc.plots import write_svg
        write_svg(report, mode, run.svg)
    return report


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML configuration document")
    common.add_argument("--out", help="CSV output path (default: stdout)")
    common.add_argument("--svg", help="SVG figure path (simulate only)")
    common.add_argument("--seed", type=int, help="master seed for simulations")
    common.add_argument("--fast", action="store_true", help="cap replicates at 200")
    common.add_argument("--gamma", type=float, help="confidence level for TOL")
    common.add_argument("--delta", type=float, help="tolerance for CONF")

    parser = argparse.ArgumentParser(prog="powalloc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("allocate", parents=[common], help="power-optimal allocation for known sigmas")
    sub.add_parser("mse", parents=[common], help="MSE-optimal allocation")
    p = sub.add_parser("two-exp", parents=[common], help="exact two-experiment optimum")
    p.add_argument("target", choices=["tol", "conf", "exp"])
    p = sub.add_parser("surrogate", parents=[common], help="robust correction factors and allocation")
    p.add_argument("target", choices=list(surrogate.OBJECTIVES))
    p = sub.add_parser("simulate", parents=[common], help="figure studies")
    p.add_argument("target", choices=["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "custom"])
    sub.add_parser("validate", parents=[common], help="check a configuration document")
    return parser


def main(argv=None, stdout=None, stderr=None):
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    label = COMMANDS[args.command][1]
    try:
        config = None
        if args.config is not None:
            with open(args.config, encoding="utf-8") as fh:
                config = parse_config(fh.read())
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise PreconditionError("seed must be an unsigned 64-bit integer")
        run = RunConfig(args.command, getattr(args, "target", None), config, args.out, args.svg,
                        args.seed, args.fast, args.gamma, args.delta)
        dispatch(run, stdout)
    except ConfigError as exc:
        for problem in exc.problems:
            stderr.write(f"error: config: {problem}\n")
        return 2
    except (DomainError, PreconditionError, NumericError, OSError, RuntimeError) as exc:
        extra = f" {exc.diagnostics}" if isinstance(exc, NumericError) else ""
        stderr.write(f"error: {label}: {exc}{extra}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
