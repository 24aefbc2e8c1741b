"""Static SVG figures from result tables.

Three kinds: per-iteration error traces (mean with standard-error bands over
replications), error against the swept beta2 mixing parameter, and the
theoretical rate-exponent curves.
"""

import re
from collections import defaultdict

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .errors import ConfigError
from .experiments import ResultRow
from .pipeline import rate_curves

PLOT_KINDS = ("error-vs-iteration", "error-vs-beta2", "rate-curves")


def _mean_stderr(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, 0.0
    return mean, float(arr.std(ddof=1) / np.sqrt(arr.size))


def _group(rows: list[ResultRow]):
    """-> {experiment: {method: {iteration: [errors]}}}"""
    out: dict = defaultdict(lambda: defaultdict(lambda: defaultdict(list)))
    for row in rows:
        if row.method == "error" or not np.isfinite(row.hamming_error):
            continue
        out[row.experiment][row.method][row.iteration].append(row.hamming_error)
    return out


def _save(fig, out_path):
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _plot_error_vs_iteration(datasets, out_path):
    grouped = {label: _group(rows) for label, rows in datasets}
    experiments = sorted({exp for g in grouped.values() for exp in g})
    if not experiments:
        raise ConfigError("no plottable rows; need methods score/rscore/oracle-N")
    ncols = min(len(experiments), 2)
    nrows = (len(experiments) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(5.5 * ncols, 3.8 * nrows),
                             squeeze=False)
    for ax, exp in zip(axes.flat, experiments):
        for label, g in grouped.items():
            methods = g.get(exp, {})
            prefix = f"{label}: " if len(datasets) > 1 else ""
            if "rscore" in methods:
                iters = sorted(methods["rscore"])
                stats = [_mean_stderr(methods["rscore"][m]) for m in iters]
                means = np.array([s[0] for s in stats])
                errs = np.array([s[1] for s in stats])
                ax.plot(iters, means, marker="o", label=f"{prefix}rscore")
                ax.fill_between(iters, means - errs, means + errs, alpha=0.2)
            for flat, style in (("score", "--"), ("oracle-N", ":")):
                if flat in methods:
                    vals = [v for per in methods[flat].values() for v in per]
                    mean, err = _mean_stderr(vals)
                    ax.axhline(mean, linestyle=style, color="gray")
                    ax.annotate(f"{prefix}{flat}", xy=(0.02, mean),
                                xycoords=("axes fraction", "data"),
                                fontsize=8, va="bottom")
        ax.set_title(exp)
        ax.set_xlabel("iteration")
        ax.set_ylabel("error rate")
        ax.set_ylim(bottom=0)
        if any("rscore" in g.get(exp, {}) for g in grouped.values()):
            ax.legend(fontsize=8)
    for ax in axes.flat[len(experiments):]:
        ax.axis("off")
    fig.tight_layout()
    _save(fig, out_path)


_BETA2_RE = re.compile(r":beta2=([0-9.eE+-]+)$")


def _plot_error_vs_beta2(datasets, out_path):
    fig, ax = plt.subplots(figsize=(6, 4))
    plotted = False
    for label, rows in datasets:
        grouped = _group(rows)
        series: dict[str, dict[float, tuple[float, float]]] = defaultdict(dict)
        for exp, methods in grouped.items():
            match = _BETA2_RE.search(exp)
            if not match:
                continue
            beta2 = float(match.group(1))
            for method, per_iter in methods.items():
                # final available iteration per replication
                per_rep: dict[int, tuple[int, float]] = {}
                for row in rows:
                    if (row.experiment == exp and row.method == method
                            and np.isfinite(row.hamming_error)):
                        prev = per_rep.get(row.replication)
                        if prev is None or row.iteration > prev[0]:
                            per_rep[row.replication] = (row.iteration, row.hamming_error)
                series[method][beta2] = _mean_stderr([v for _, v in per_rep.values()])
        for method, points in sorted(series.items()):
            xs = sorted(points)
            means = np.array([points[x][0] for x in xs])
            errs = np.array([points[x][1] for x in xs])
            prefix = f"{label}: " if len(datasets) > 1 else ""
            ax.errorbar(xs, means, yerr=errs, marker="o", capsize=3,
                        label=f"{prefix}{method}")
            plotted = True
    if not plotted:
        raise ConfigError("no rows with ':beta2=<value>' experiment ids; "
                          "run a beta2 sweep first")
    ax.set_xlabel("beta2")
    ax.set_ylabel("error rate")
    ax.set_ylim(bottom=0)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, out_path)


def _plot_rate_curves(out_path, points: int = 500):
    grid = np.linspace(0.01, 0.49, points)
    a0, a1 = rate_curves(grid)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(grid, a0, color="blue", label="baseline exponent")
    ax.plot(grid, a1, color="red", label="recursive exponent")
    ax.axvline(1.0 / 6.0, color="gray", linestyle=":", linewidth=0.8)
    ax.set_xlabel("beta")
    ax.set_ylabel("error-rate exponent")
    ax.legend()
    fig.tight_layout()
    _save(fig, out_path)


def plot_results(datasets, kind: str, out_path):
    """Render one figure of the given kind to ``out_path`` (SVG).

    ``datasets`` is a list of (label, rows) pairs so externally computed
    result tables can be overlaid against local ones.
    """
    if kind == "rate-curves":
        _plot_rate_curves(out_path)
        return
    if not datasets or all(not rows for _, rows in datasets):
        raise ConfigError(f"no result rows supplied for kind {kind!r}")
    if kind == "error-vs-iteration":
        _plot_error_vs_iteration(datasets, out_path)
    elif kind == "error-vs-beta2":
        _plot_error_vs_beta2(datasets, out_path)
    else:
        raise ConfigError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
