"""Static figures for experiment bundles: a matplotlib PNG plus a gnuplot
script reading the same CSV, so either toolchain reproduces the figure."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGSIZE = (6.0, 6.0 * 0.618)


def decay_figure(path, t, values, ci=None, fit=None, title="", ylabel="distance", loglog=True):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if ci is not None:
        ci = np.asarray(ci, dtype=float)
        ax.fill_between(t, np.maximum(v - ci, 1e-300), v + ci, alpha=0.25, lw=0)
    ax.plot(t, v, "o-", ms=3, lw=1, label="measured")
    if fit is not None:
        tt = np.linspace(fit.window[0], fit.window[1], 50)
        ax.plot(tt, np.exp(fit.intercept) * tt**fit.slope, "--", lw=1, label=f"fit slope {fit.slope:.3f}")
    if loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def profile_figure(path, x, ys, labels, xlabel, ylabel, title="", logx=True):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    for y, lab in zip(ys, labels):
        ax.plot(x, y, lw=1, label=lab)
    ax.axhline(0.0, color="0.5", lw=0.5)
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(frameon=False, fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def gnuplot_script(csv_name, png_name, title="", ycol=2, loglog=True):
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set terminal pngcairo size 720,445",
        f"set output '{png_name}'",
        f"set title '{title}'",
        "set xlabel 't'",
    ]
    if loglog:
        lines.append("set logscale xy")
    lines.append(f"plot '{csv_name}' using 1:{ycol} with linespoints")
    return "\n".join(lines) + "\n"
