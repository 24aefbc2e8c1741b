"""Command-line interface.

Subcommands:
  gen    generate a network from a config and write it to disk
  fit    run spectral clustering (plain or recursive) on an edge-list file
  exp    run a config-driven experiment batch to results.csv / timings.csv
  plot   render an SVG figure from results CSVs
  rates  emit the theoretical rate-curve data and figure

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import io
from .errors import ConfigError, LogitDcbmError
from .experiments import (build_model, list_presets, parse_config, preset_path,
                          read_results_csv, run_experiment, write_results_csv,
                          write_timings_csv)
from .model import mean_matrices, sample_adjacency, snr
from .pipeline import RScoreConfig, hamming_error, r_score, rate_curves, trace_to_csv
from .refit import save_fit
from .rng import substream
from .spectral import score
from .plots import PLOT_KINDS, plot_results

log = logging.getLogger(__name__)


def _resolve_config(args) -> str:
    if getattr(args, "preset", None):
        return str(preset_path(args.preset))
    if getattr(args, "config", None):
        if not os.path.isfile(args.config):
            raise ConfigError(f"config file not found: {args.config}")
        return args.config
    raise ConfigError("need --config PATH or --preset NAME "
                      f"(presets: {', '.join(list_presets())})")


def _cmd_gen(args) -> int:
    configs = parse_config(_resolve_config(args))
    if len(configs) > 1:
        log.info("config expands to %d experiments; generating the first", len(configs))
    cfg = configs[0]
    if args.seed is not None:
        from dataclasses import replace
        cfg = replace(cfg, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    params = build_model(cfg, replication=0)
    _, omega, _ = mean_matrices(params)
    A = sample_adjacency(omega, substream(cfg.seed, cfg.id, 0, "sample"))
    io.save_edge_list(os.path.join(args.out, "edges.txt"), A)
    io.save_partition(os.path.join(args.out, "truth_partition.txt"), params.labels)
    io.save_vector_csv(os.path.join(args.out, "theta.csv"), params.theta)
    io.save_matrix_csv(os.path.join(args.out, "P.csv"), params.P)
    print(f"wrote n={A.n} network with {A.edge_count()} edges to {args.out} "
          f"(calibrated SNR {snr(cfg.theta.b_n, params.P):.4g})")
    return 0


def _cmd_fit(args) -> int:
    A = io.load_edge_list(args.edges)
    truth = io.load_partition(args.truth) if args.truth else None
    os.makedirs(args.out, exist_ok=True)
    if args.method == "score":
        labels = score(A.as_float(), args.k, rng=substream(args.seed, 0),
                       restarts=args.restarts)
        io.save_partition(os.path.join(args.out, "partition.txt"), labels)
        if truth is not None:
            print(f"hamming error: {hamming_error(labels, truth):.6f}")
    else:
        cfg = RScoreConfig(K=args.k, iterations=args.iters, seed=args.seed,
                           restarts=args.restarts)
        labels, trace = r_score(A, cfg, truth=truth)
        io.save_partition(os.path.join(args.out, "partition.txt"), labels)
        trace_to_csv(trace, os.path.join(args.out, "trace.csv"))
        final_fit = next((it.fit for it in reversed(trace.iterations)
                          if it.fit is not None), None)
        if final_fit is not None:
            save_fit(final_fit, os.path.join(args.out, "fit"))
        if truth is not None:
            print(f"hamming error: {hamming_error(labels, truth):.6f} "
                  f"after {len(trace) - 1} refit iterations")
    print(f"wrote partition to {args.out}")
    return 0


def _cmd_exp(args) -> int:
    configs = parse_config(_resolve_config(args))
    if args.seed is not None:
        from dataclasses import replace
        configs = [replace(cfg, seed=args.seed) for cfg in configs]
    os.makedirs(args.out, exist_ok=True)
    all_rows = []
    all_times = []
    for cfg in configs:
        log.info("running experiment %s (%d replications)", cfg.id, cfg.replications)
        rows, times = run_experiment(cfg, threads=args.threads)
        all_rows.extend(rows)
        all_times.extend(times)
        finite = [r.hamming_error for r in rows if r.method == "score"
                  and np.isfinite(r.hamming_error)]
        final = {}
        for r in rows:
            if r.method == "rscore" and np.isfinite(r.hamming_error):
                prev = final.get(r.replication)
                if prev is None or r.iteration > prev[0]:
                    final[r.replication] = (r.iteration, r.hamming_error)
        if finite and final:
            print(f"{cfg.id}: mean error {np.mean(finite):.4f} (plain) -> "
                  f"{np.mean([v for _, v in final.values()]):.4f} (recursive)")
    write_results_csv(all_rows, os.path.join(args.out, "results.csv"))
    write_timings_csv(all_times, os.path.join(args.out, "timings.csv"))
    print(f"wrote {len(all_rows)} result rows to {args.out}/results.csv")
    return 0


def _cmd_plot(args) -> int:
    datasets = []
    for path in args.results:
        label = os.path.splitext(os.path.basename(path))[0]
        datasets.append((label, read_results_csv(path)))
    plot_results(datasets, args.kind, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_rates(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    grid = np.linspace(0.01, 0.49, args.points)
    a0, a1 = rate_curves(grid)
    csv_path = os.path.join(args.out, "rates.csv")
    with open(csv_path, "w") as fh:
        fh.write("beta,a0,a1\n")
        for b, x, y in zip(grid, a0, a1):
            fh.write(f"{b!r},{x!r},{y!r}\n")
    plot_results([], "rate-curves", os.path.join(args.out, "rates.svg"))
    print(f"wrote {csv_path} and rates.svg")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logitdcbm",
        description="Simulation and community detection for logit-link "
                    "degree-corrected block models.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_opts(p):
        p.add_argument("--config", help="experiment config file (INI)")
        p.add_argument("--preset", help="name of a shipped preset config")
        p.add_argument("--seed", type=int, default=None, help="override master seed")

    p_gen = sub.add_parser("gen", help="generate a network and write it to disk")
    add_config_opts(p_gen)
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.set_defaults(func=_cmd_gen)

    p_fit = sub.add_parser("fit", help="cluster an edge-list file")
    p_fit.add_argument("--edges", required=True, help="edge-list file")
    p_fit.add_argument("--k", type=int, required=True, help="number of communities")
    p_fit.add_argument("--method", choices=("score", "rscore"), default="rscore")
    p_fit.add_argument("--iters", type=int, default=10, help="refit iterations")
    p_fit.add_argument("--restarts", type=int, default=100)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--truth", help="optional ground-truth partition file")
    p_fit.add_argument("--out", required=True, help="output directory")
    p_fit.set_defaults(func=_cmd_fit)

    p_exp = sub.add_parser("exp", help="run a config-driven experiment batch")
    add_config_opts(p_exp)
    p_exp.add_argument("--out", required=True, help="output directory")
    p_exp.add_argument("--threads", type=int, default=1,
                       help="replication worker processes")
    p_exp.set_defaults(func=_cmd_exp)

    p_plot = sub.add_parser("plot", help="render an SVG figure from results CSVs")
    p_plot.add_argument("--results", nargs="*", default=[],
                        help="results.csv files (several overlay)")
    p_plot.add_argument("--kind", choices=PLOT_KINDS, required=True)
    p_plot.add_argument("--out", required=True, help="output SVG path")
    p_plot.set_defaults(func=_cmd_plot)

    p_rates = sub.add_parser("rates", help="emit rate-curve data and figure")
    p_rates.add_argument("--out", required=True, help="output directory")
    p_rates.add_argument("--points", type=int, default=500)
    p_rates.set_defaults(func=_cmd_rates)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except LogitDcbmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
