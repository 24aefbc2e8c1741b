"""Recursive refit-and-recluster loop, Hamming scoring, and diagnostics.

One round of the recursion estimates (theta, P) from the current partition via
cycle ratios, assembles the renormalizer N_hat, and re-runs spectral-ratio
clustering on the entry-wise quotient A / N_hat. If N_hat is close to the true
nonlinear factor matrix, the quotient is approximately a rank-K signal plus
noise, which is exactly the regime where the spectral step works well.
"""

import itertools
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .errors import ConfigError, DomainError, EstimationError
from .model import Adjacency, ModelParams, mean_matrices
from .refit import FitBundle, refit_from_partition
from .rng import substream
from .spectral import kmeans, score_detailed, score_embedding, top_k_eigenpairs

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RScoreConfig:
    """Settings for the recursive loop.

    ``iterations`` counts refit rounds; 0 means plain spectral-ratio
    clustering on A. ``clip=None`` uses the log(n) default. With
    ``early_stop`` the loop halts once two consecutive partitions agree.
    ``reuse_partition`` additionally seeds each k-means with the previous
    partition (off by default: every iteration re-initializes independently).
    """

    K: int
    iterations: int = 10
    clip: float | None = None
    restarts: int = 100
    seed: int = 0
    early_stop: bool = True
    reuse_partition: bool = False
    cycle_m: int = 3
    theta_fallback: float | None = None

    def __post_init__(self):
        if self.K < 2:
            raise ConfigError("recursion needs K >= 2")
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")


@dataclass(frozen=True)
class RScoreIteration:
    """State after one loop iteration (index 0 is the initial clustering).

    ``seconds`` is the wall-clock duration of the iteration; it is carried for
    reporting only and excluded from deterministic trace exports.
    """

    index: int
    labels: np.ndarray
    fit: FitBundle | None
    hamming: float | None
    lambda1: float
    lambdaK: float
    seconds: float = 0.0


@dataclass
class RScoreTrace:
    iterations: list[RScoreIteration] = field(default_factory=list)

    def labels_at(self, m: int) -> np.ndarray:
        return self.iterations[m].labels

    def errors(self) -> list[float | None]:
        return [it.hamming for it in self.iterations]

    def __len__(self):
        return len(self.iterations)


def renormalized_matrix(A: Adjacency, N_hat: np.ndarray) -> np.ndarray:
    """Entry-wise quotient A / N_hat with zero diagonal.

    Zero entries of A stay zero, so only observed edges are rescaled.
    """
    out = A.as_float() / N_hat
    np.fill_diagonal(out, 0.0)
    return out


def r_score(A: Adjacency, cfg: RScoreConfig,
            truth: np.ndarray | None = None) -> tuple[np.ndarray, RScoreTrace]:
    """Run the recursive loop on an adjacency matrix.

    Returns the final partition and the full per-iteration trace. Iteration m
    draws its k-means stream from (cfg.seed, m), so traces are reproducible
    while iterations stay decorrelated. A refit failure (for example a
    community collapsing below 3 nodes) stops the loop with a warning and the
    last valid partition is returned.
    """
    if A.n < 3 * cfg.K:
        raise ConfigError(f"need n >= 3K nodes, got n={A.n}, K={cfg.K}")
    trace = RScoreTrace()

    def record(m, labels, fit, pairs, seconds):
        err = hamming_error(labels, truth) if truth is not None else None
        trace.iterations.append(RScoreIteration(
            index=m, labels=labels, fit=fit, hamming=err,
            lambda1=float(pairs.values[0]), lambdaK=float(pairs.values[-1]),
            seconds=seconds))

    tic = time.perf_counter()
    labels, pairs = score_detailed(A.as_float(), cfg.K, clip=cfg.clip,
                                   rng=substream(cfg.seed, 0), restarts=cfg.restarts)
    record(0, labels, None, pairs, time.perf_counter() - tic)

    for m in range(1, cfg.iterations + 1):
        tic = time.perf_counter()
        try:
            fit = refit_from_partition(A, labels, m=cfg.cycle_m,
                                       fallback=cfg.theta_fallback)
        except EstimationError as exc:
            log.warning("iteration %d: refit failed (%s); keeping previous partition", m, exc)
            break
        quotient = renormalized_matrix(A, fit.N_hat)
        rng_m = substream(cfg.seed, m)
        pairs_m = top_k_eigenpairs(quotient, cfg.K)
        threshold = math.log(max(A.n, 2)) if cfg.clip is None else float(cfg.clip)
        R = score_embedding(pairs_m, threshold)
        new_labels = kmeans(R, cfg.K, restarts=cfg.restarts, rng=rng_m,
                            init_labels=labels if cfg.reuse_partition else None)
        record(m, new_labels, fit, pairs_m, time.perf_counter() - tic)
        converged = bool(np.array_equal(new_labels, labels))
        labels = new_labels
        if cfg.early_stop and converged:
            break
    return labels, trace


def _confusion(est: np.ndarray, truth: np.ndarray, K: int) -> np.ndarray:
    conf = np.zeros((K, K), dtype=np.int64)
    np.add.at(conf, (est - 1, truth - 1), 1)
    return conf


def _hamming_exhaustive(conf: np.ndarray, n: int) -> float:
    K = conf.shape[0]
    best = 0
    for perm in itertools.permutations(range(K)):
        agree = sum(conf[perm[k], k] for k in range(K))
        if agree > best:
            best = agree
    return (n - best) / n


def _hamming_assignment(conf: np.ndarray, n: int) -> float:
    rows, cols = scipy.optimize.linear_sum_assignment(conf, maximize=True)
    return (n - int(conf[rows, cols].sum())) / n


def hamming_error(est: np.ndarray, truth: np.ndarray) -> float:
    """Fraction of misclustered nodes, minimized over label permutations.

    Exhaustive search over the K! permutations of the confusion matrix for
    K <= 8; optimal assignment above that.
    """
    est = np.asarray(est, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if est.shape != truth.shape:
        raise ConfigError(f"partition lengths differ: {est.shape} vs {truth.shape}")
    if est.min() < 1 or truth.min() < 1:
        raise ConfigError("labels must be >= 1")
    K = int(max(est.max(), truth.max()))
    conf = _confusion(est, truth, K)
    n = est.size
    if K <= 8:
        return _hamming_exhaustive(conf, n)
    return _hamming_assignment(conf, n)


def rate_curves(beta):
    """Theoretical error-rate exponents (a0, a1) for activity scale n^(-beta).

    a0 = min(1 - 2 beta, 4 beta); a1 = 6 beta on (0, 1/8] and 1 - 2 beta on
    (1/8, 1/2). Accepts scalars or arrays on the open interval (0, 1/2).
    """
    beta_arr = np.asarray(beta, dtype=float)
    if np.any(beta_arr <= 0.0) or np.any(beta_arr >= 0.5):
        raise DomainError("beta must lie in (0, 1/2)")
    a0 = np.minimum(1.0 - 2.0 * beta_arr, 4.0 * beta_arr)
    a1 = np.where(beta_arr <= 0.125, 6.0 * beta_arr, 1.0 - 2.0 * beta_arr)
    if np.isscalar(beta) or beta_arr.ndim == 0:
        return float(a0), float(a1)
    return a0, a1


@dataclass(frozen=True)
class ConditionReport:
    """Realized constants behind the method's working assumptions.

    Purely informational; nothing here blocks execution. ``flags`` lists
    degenerate findings (e.g. a singular mixing matrix).
    """

    balance_ratio: float          # min_k n_k / n
    theta_spread: float           # max theta / min theta
    signal_constant: float        # sqrt(n) * mean(theta) * |lambda_min(P)| / log(n)
    snr_calibrated: float         # ||theta|| * |lambda_min(P)|
    spectral_snr: float           # |lambda_K(tilde)| / sqrt(lambda_1(tilde))
    gap_ratio: float              # (lambda_1 - |lambda_2|) / lambda_1 of P diag(s)
    eta_ratio: float              # max/min entry of its leading right eigenvector
    nonlinearity_ratio: float     # ||(N - 11') o tilde||_2 / |lambda_K(tilde)|
    flags: tuple[str, ...]


def check_conditions(params: ModelParams) -> ConditionReport:
    """Report the constants appearing in the method's sufficient conditions."""
    n, K = params.n, params.K
    flags: list[str] = []
    sizes = params.community_sizes()
    balance = float(sizes.min() / n)
    spread = float(params.theta.max() / params.theta.min())
    lam_P = np.linalg.eigvalsh(params.P)
    lam_min_abs = float(np.min(np.abs(lam_P)))
    if lam_min_abs == 0.0:
        flags.append("mixing matrix is singular (|lambda_min(P)| = 0); "
                     "signal condition violated")
    theta_bar = float(params.theta.mean())
    signal = math.sqrt(n) * theta_bar * lam_min_abs / math.log(n)
    snr_cal = float(np.linalg.norm(params.theta) * lam_min_abs)

    tilde, _, nfactor = mean_matrices(params)
    lam_tilde = np.linalg.eigvalsh(tilde)
    order = np.argsort(-np.abs(lam_tilde))
    lam1 = float(lam_tilde[order[0]])
    lamK = float(lam_tilde[order[K - 1]])
    spectral_snr = abs(lamK) / math.sqrt(lam1) if lam1 > 0 else 0.0

    # leading eigen structure of P diag(s), s_k = sum of theta^2 in community k
    s = np.array([float((params.theta[params.labels == k + 1] ** 2).sum())
                  for k in range(K)])
    G = params.P * s[None, :]
    eigvals, eigvecs = np.linalg.eig(G)
    g_order = np.argsort(-np.abs(eigvals))
    g1 = float(np.real(eigvals[g_order[0]]))
    g2 = float(np.abs(eigvals[g_order[1]])) if K >= 2 else 0.0
    gap = (g1 - g2) / g1 if g1 > 0 else 0.0
    eta = np.real(eigvecs[:, g_order[0]])
    lead = np.argmax(np.abs(eta))
    if eta[lead] < 0:
        eta = -eta
    if np.any(eta <= 0):
        flags.append("leading right eigenvector of P diag(s) is not positive")
        eta_ratio = math.inf
    else:
        eta_ratio = float(eta.max() / eta.min())

    perturb = (nfactor - 1.0) * tilde
    pert_norm = float(np.max(np.abs(np.linalg.eigvalsh(perturb))))
    nonlin = pert_norm / abs(lamK) if lamK != 0 else math.inf

    return ConditionReport(
        balance_ratio=balance, theta_spread=spread, signal_constant=signal,
        snr_calibrated=snr_cal, spectral_snr=spectral_snr, gap_ratio=gap,
        eta_ratio=eta_ratio, nonlinearity_ratio=nonlin, flags=tuple(flags))


def trace_to_csv(trace: RScoreTrace, path):
    """Write the per-iteration trace to CSV.

    Columns: iteration, hamming_error, lambda1, lambdaK, theta_hat_mean,
    P_offdiag_mean. Missing values (no truth supplied, no fit at iteration 0)
    are left empty.
    """

    def fmt(x):
        return "" if x is None else repr(float(x))

    with open(path, "w") as fh:
        fh.write("iteration,hamming_error,lambda1,lambdaK,theta_hat_mean,P_offdiag_mean\n")
        for it in trace.iterations:
            theta_mean = None
            p_off = None
            if it.fit is not None:
                theta_mean = float(it.fit.theta_hat.mean())
                K = it.fit.P_hat.shape[0]
                if K > 1:
                    off = it.fit.P_hat[~np.eye(K, dtype=bool)]
                    p_off = float(off.mean())
            fh.write(f"{it.index},{fmt(it.hamming)},{fmt(it.lambda1)},"
                     f"{fmt(it.lambdaK)},{fmt(theta_mean)},{fmt(p_off)}\n")
