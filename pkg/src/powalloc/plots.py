"""SVG figures for simulation reports. Needs matplotlib (the ``plot`` extra)."""

import numpy as np


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise RuntimeError("SVG output needs matplotlib; install the 'plot' extra") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _known_sigma(ax, report):
    N = report.column("N")
    ax.plot(N, report.column("mse_mean"), color="tab:red", label="MSE-optimal")
    ax.plot(N, report.column("power_mean"), color="tab:green", label="power-optimal")
    ax.plot(N, report.column("gap_mean"), "--", color="tab:blue", label="difference")
    ax.set_xscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel("worst-case Type-2 error")


def _unknown_sigma(ax, report):
    colors = {"naive": "tab:blue", "oracle_surrogate": "tab:orange", "surrogate_s": "tab:green"}
    for col in report.columns[2:]:
        policy = col[len("excess_"):]
        vals = report.column(col)
        ax.hist(vals, bins=40, density=True, histtype="step", color=colors[policy], label=policy)
        ax.axvline(float(np.mean(vals)), color=colors[policy], linestyle=":")
    ax.set_xlabel("excess worst-case Type-2 error")
    ax.set_ylabel("density")


def _sweep(ax, report, group, x):
    keys = report.column(group)
    for key in dict.fromkeys(keys.tolist()):
        sel = keys == key
        ax.plot(report.column(x)[sel], report.column("r_star")[sel], label=f"{group}={key}")
    ax.set_xscale("log")
    ax.set_xlabel("difficulty ratio a1/a2")
    ax.set_ylabel("r*")


def write_svg(report, mode, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if mode == "known_sigma":
        _known_sigma(ax, report)
    elif mode == "unknown_sigma":
        _unknown_sigma(ax, report)
    elif mode == "exp_sweep":
        _sweep(ax, report, "epsilon", "ratio")
    else:
        rows = [r for r in report.rows if r[0] == "tol"]
        ratio = np.array([r[1] for r in rows])
        for g in sorted({r[2] for r in rows}):
            sel = np.array([r[2] == g for r in rows])
            ax.plot(ratio[sel], np.array([r[3] for r in rows])[sel], label=f"gamma={g:g}")
        ax.set_xscale("log")
        ax.set_xlabel("difficulty ratio a1/a2")
        ax.set_ylabel("r* (TOL)")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
