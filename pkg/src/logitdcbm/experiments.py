"""Config-driven simulation experiments with seeded replications.

A config is a flat INI file with typed sections ([experiment], [model],
[theta], [algorithm], optional [sweep]); see the shipped presets for the
schema. Each replication draws its model, sample, and algorithm streams from
(master seed, experiment id, replication, stage), so any single replication is
reproducible without running the others. Results go to a deterministic
results.csv; wall-clock timings go to a separate timings.csv because they can
never be byte-stable.
"""

import concurrent.futures
import configparser
import importlib.resources
import logging
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .model import (Adjacency, ModelParams, ThetaSpec, gen_partition, gen_theta,
                    mean_matrices, sample_adjacency)
from .pipeline import RScoreConfig, RScoreTrace, r_score, renormalized_matrix
from .rng import substream
from .spectral import score_detailed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MixingSpec:
    """Mixing-matrix construction: uniform off-diagonal or the two-block form.

    ``uniform_offdiag``: P = beta * 11' + (1 - beta) * I.
    ``two_block`` (K even): P = [[P1, P2], [P2, P1]] with
    P1 = 0.5 b1 * 11' + (1 - 0.5 b1) I and P2 = 0.5 (b1 + b2) * 11'.
    """

    kind: str
    beta: float | None = None
    beta1: float | None = None
    beta2: float | None = None

    def matrix(self, K: int) -> np.ndarray:
        if self.kind == "uniform_offdiag":
            if self.beta is None:
                raise ConfigError("uniform_offdiag mixing needs beta")
            return self.beta * np.ones((K, K)) + (1.0 - self.beta) * np.eye(K)
        if self.kind == "two_block":
            if self.beta1 is None or self.beta2 is None:
                raise ConfigError("two_block mixing needs beta1 and beta2")
            if K % 2 != 0:
                raise ConfigError("two_block mixing needs even K")
            half = K // 2
            P1 = (0.5 * self.beta1 * np.ones((half, half))
                  + (1.0 - 0.5 * self.beta1) * np.eye(half))
            P2 = 0.5 * (self.beta1 + self.beta2) * np.ones((half, half))
            return np.block([[P1, P2], [P2, P1]])
        raise ConfigError(f"unknown mixing kind {self.kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    id: str
    n: int
    K: int
    sizes: tuple[int, ...]
    theta: ThetaSpec
    mixing: MixingSpec
    replications: int
    seed: int
    iterations: int = 10
    restarts: int = 100
    clip: float | None = None
    early_stop: bool = True
    include_oracle: bool = False
    cycle_m: int = 3

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if sum(self.sizes) != self.n:
            raise ConfigError(f"sizes sum to {sum(self.sizes)}, expected n={self.n}")


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    replication: int
    seed: int
    method: str       # score | rscore | oracle-N
    iteration: int
    hamming_error: float


@dataclass(frozen=True)
class TimingRow:
    experiment: str
    replication: int
    method: str
    seconds: float


def _parse_number(text: str) -> float:
    """Float parser that also accepts simple fractions like ``23/30``."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _parse_bool(text: str) -> bool:
    val = text.strip().lower()
    if val in ("true", "yes", "on", "1"):
        return True
    if val in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_clip(text: str) -> float | None:
    val = text.strip().lower()
    if val == "auto":
        return None
    if val in ("none", "off"):
        return float("inf")
    return _parse_number(text)


def _theta_from_section(sec) -> ThetaSpec:
    dist = sec.get("distribution", fallback=None)
    if dist is None:
        raise ConfigError("[theta] needs a distribution")
    b_n = _parse_number(sec.get("b_n", fallback="nan"))
    if dist == "uniform":
        return ThetaSpec.uniform(lo=_parse_number(sec["lo"]),
                                 hi=_parse_number(sec["hi"]), b_n=b_n)
    if dist == "pareto":
        return ThetaSpec.pareto(scale=_parse_number(sec["scale"]),
                                shape=_parse_number(sec["shape"]),
                                truncation=_parse_number(sec["truncation"]), b_n=b_n)
    raise ConfigError(f"unknown theta distribution {dist!r}")


def parse_config(path) -> list[ExperimentConfig]:
    """Parse an experiment config file, expanding any [sweep] section.

    Returns one config per sweep value (suffixing the experiment id with
    ``:param=value``), or a single config when no sweep is present.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    try:
        exp = parser["experiment"]
        mdl = parser["model"]
        theta = _theta_from_section(parser["theta"])
    except KeyError as exc:
        raise ConfigError(f"{path}: missing section {exc}") from exc

    n = mdl.getint("n")
    K = mdl.getint("K")
    if n is None or K is None:
        raise ConfigError(f"{path}: [model] needs n and K")
    if "sizes" in mdl:
        sizes = tuple(int(tok) for tok in mdl["sizes"].split(","))
    else:
        if n % K != 0:
            raise ConfigError(f"{path}: n={n} not divisible by K={K}; give explicit sizes")
        sizes = (n // K,) * K

    kind = mdl.get("mixing", fallback="uniform_offdiag")
    mixing = MixingSpec(
        kind=kind,
        beta=_parse_number(mdl["beta"]) if "beta" in mdl else None,
        beta1=_parse_number(mdl["beta1"]) if "beta1" in mdl else None,
        beta2=_parse_number(mdl["beta2"]) if "beta2" in mdl else None)
    mixing.matrix(K)  # validate early

    alg = parser["algorithm"] if parser.has_section("algorithm") else {}
    base = ExperimentConfig(
        id=exp.get("id", fallback="experiment"),
        n=n, K=K, sizes=sizes, theta=theta, mixing=mixing,
        replications=exp.getint("replications", fallback=1),
        seed=exp.getint("seed", fallback=0),
        iterations=int(alg.get("iterations", 10)),
        restarts=int(alg.get("restarts", 100)),
        clip=_parse_clip(alg.get("clip", "auto")),
        early_stop=_parse_bool(alg.get("early_stop", "true")),
        include_oracle=_parse_bool(alg.get("include_oracle", "false")),
        cycle_m=int(alg.get("cycle_m", 3)))

    if not parser.has_section("sweep"):
        return [base]
    sweep = parser["sweep"]
    param = sweep.get("param")
    if param not in ("beta", "beta1", "beta2", "b_n"):
        raise ConfigError(f"{path}: sweep param must be beta/beta1/beta2/b_n, got {param!r}")
    configs = []
    for token in sweep.get("values", "").split(","):
        token = token.strip()
        if not token:
            continue
        value = _parse_number(token)
        if param == "b_n":
            cfg = replace(base, theta=replace(base.theta, b_n=value))
        else:
            cfg = replace(base, mixing=replace(base.mixing, **{param: value}))
        configs.append(replace(cfg, id=f"{base.id}:{param}={token}"))
    if not configs:
        raise ConfigError(f"{path}: [sweep] has no values")
    return configs


def build_model(cfg: ExperimentConfig, replication: int) -> ModelParams:
    """Ground-truth parameters for one replication of an experiment."""
    rng = substream(cfg.seed, cfg.id, replication, "model")
    labels = gen_partition(cfg.n, cfg.sizes)
    theta = gen_theta(cfg.theta, cfg.n, rng)
    return ModelParams(n=cfg.n, K=cfg.K, theta=theta, labels=labels,
                       P=cfg.mixing.matrix(cfg.K))


def run_replication(cfg: ExperimentConfig, replication: int
                    ) -> tuple[list[ResultRow], list[TimingRow], RScoreTrace]:
    """Generate, sample, cluster, and score one replication."""
    params = build_model(cfg, replication)
    _, omega, nfactor = mean_matrices(params)
    A = sample_adjacency(omega, substream(cfg.seed, cfg.id, replication, "sample"))
    rep_seed = int(substream(cfg.seed, cfg.id, replication, "algorithm").integers(2 ** 62))

    rcfg = RScoreConfig(K=cfg.K, iterations=cfg.iterations, clip=cfg.clip,
                        restarts=cfg.restarts, seed=rep_seed,
                        early_stop=cfg.early_stop, cycle_m=cfg.cycle_m)
    _, trace = r_score(A, rcfg, truth=params.labels)

    rows = []
    timings = []
    for it in trace.iterations:
        method = "score" if it.index == 0 else "rscore"
        rows.append(ResultRow(experiment=cfg.id, replication=replication,
                              seed=rep_seed, method=method, iteration=it.index,
                              hamming_error=it.hamming))
    timings.append(TimingRow(cfg.id, replication, "score", trace.iterations[0].seconds))
    timings.append(TimingRow(cfg.id, replication, "rscore",
                             sum(it.seconds for it in trace.iterations)))

    if cfg.include_oracle:
        import time

        from .pipeline import hamming_error
        tic = time.perf_counter()
        quotient = renormalized_matrix(A, nfactor)
        oracle_labels, _ = score_detailed(
            quotient, cfg.K, clip=cfg.clip,
            rng=substream(cfg.seed, cfg.id, replication, "oracle"),
            restarts=cfg.restarts)
        rows.append(ResultRow(experiment=cfg.id, replication=replication,
                              seed=rep_seed, method="oracle-N", iteration=0,
                              hamming_error=hamming_error(oracle_labels, params.labels)))
        timings.append(TimingRow(cfg.id, replication, "oracle-N",
                                 time.perf_counter() - tic))
    return rows, timings, trace


def _worker(args):
    cfg, replication = args
    rows, timings, _ = run_replication(cfg, replication)
    return replication, rows, timings


def run_experiment(cfg: ExperimentConfig, threads: int = 1
                   ) -> tuple[list[ResultRow], list[TimingRow]]:
    """All replications of one experiment; output order is deterministic."""
    results: dict[int, list[ResultRow]] = {}
    timings: dict[int, list[TimingRow]] = {}
    if threads <= 1:
        for r in range(cfg.replications):
            try:
                rows, times, _ = run_replication(cfg, r)
            except Exception as exc:  # record, do not abort the batch
                log.error("experiment %s replication %d failed: %s", cfg.id, r, exc)
                rows, times = [ResultRow(cfg.id, r, 0, "error", 0, float("nan"))], []
            results[r], timings[r] = rows, times
    else:
        jobs = [(cfg, r) for r in range(cfg.replications)]
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            for r, rows, times in pool.map(_worker, jobs):
                results[r], timings[r] = rows, times
    all_rows = [row for r in sorted(results) for row in results[r]]
    all_times = [row for r in sorted(timings) for row in timings[r]]
    return all_rows, all_times


RESULTS_HEADER = "experiment,replication,seed,method,iteration,hamming_error"


def write_results_csv(rows: list[ResultRow], path):
    with open(path, "w") as fh:
        fh.write(RESULTS_HEADER + "\n")
        for row in rows:
            fh.write(f"{row.experiment},{row.replication},{row.seed},"
                     f"{row.method},{row.iteration},{row.hamming_error!r}\n")


def read_results_csv(path) -> list[ResultRow]:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != RESULTS_HEADER:
            raise ConfigError(f"{path}: unexpected results header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise ConfigError(f"{path}:{lineno}: expected 6 columns")
            rows.append(ResultRow(experiment=parts[0], replication=int(parts[1]),
                                  seed=int(parts[2]), method=parts[3],
                                  iteration=int(parts[4]),
                                  hamming_error=float(parts[5])))
    return rows


def write_timings_csv(rows: list[TimingRow], path):
    with open(path, "w") as fh:
        fh.write("experiment,replication,method,seconds\n")
        for row in rows:
            fh.write(f"{row.experiment},{row.replication},{row.method},"
                     f"{row.seconds:.6f}\n")


def list_presets() -> list[str]:
    root = importlib.resources.files("logitdcbm") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def preset_path(name: str):
    """Filesystem path of a shipped preset config (without the .ini suffix)."""
    root = importlib.resources.files("logitdcbm") / "presets"
    candidate = root / f"{name}.ini"
    if not candidate.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(list_presets())}")
    return candidate
