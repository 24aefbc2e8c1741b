"""Logit-link degree-corrected block model: parameters, mean matrices, sampling.

The model assigns each node a positive activity level theta_i and a community
label; a K x K mixing matrix P with unit diagonal couples communities. Edge
probabilities follow the logit link,

    P(A_ij = 1) = tilde_ij / (1 + tilde_ij),   tilde_ij = theta_i theta_j P[c_i, c_j],

so the mean matrix factors as ``omega = nfactor * tilde`` with
``nfactor = 1 / (1 + tilde)``. ``tilde`` has rank K; ``omega`` generally does not.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

log = logging.getLogger(__name__)

SYMMETRY_ATOL = 1e-12


def require_symmetric(M: np.ndarray, atol: float = SYMMETRY_ATOL, name: str = "matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError(f"{name} must be square, got shape {M.shape}")
    if not np.allclose(M, M.T, rtol=0.0, atol=atol):
        raise DomainError(f"{name} is not symmetric to within {atol}")
    return M


def labels_to_onehot(labels: np.ndarray, K: int) -> np.ndarray:
    """n x K one-hot membership matrix for labels in {1..K}."""
    labels = np.asarray(labels, dtype=int)
    onehot = np.zeros((labels.size, K))
    onehot[np.arange(labels.size), labels - 1] = 1.0
    return onehot


def onehot_to_labels(onehot: np.ndarray) -> np.ndarray:
    return np.argmax(np.asarray(onehot), axis=1) + 1


@dataclass(frozen=True)
class ModelParams:
    """Ground-truth generative parameters.

    Attributes:
        n: node count.
        K: community count.
        theta: positive activity levels, length n.
        labels: community labels in {1..K}, every community non-empty.
        P: K x K symmetric non-negative mixing matrix with unit diagonal.
    """

    n: int
    K: int
    theta: np.ndarray
    labels: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        P = np.asarray(self.P, dtype=float)
        if theta.shape != (self.n,):
            raise ConfigError(f"theta must have length n={self.n}, got {theta.shape}")
        if np.any(theta <= 0):
            raise ConfigError("all theta entries must be positive")
        if labels.shape != (self.n,):
            raise ConfigError(f"labels must have length n={self.n}, got {labels.shape}")
        if labels.min(initial=1) < 1 or labels.max(initial=self.K) > self.K:
            raise ConfigError(f"labels must lie in 1..{self.K}")
        counts = np.bincount(labels, minlength=self.K + 1)[1:]
        if np.any(counts == 0):
            empty = [k + 1 for k in range(self.K) if counts[k] == 0]
            raise ConfigError(f"communities {empty} are empty")
        if P.shape != (self.K, self.K):
            raise ConfigError(f"P must be {self.K}x{self.K}, got {P.shape}")
        require_symmetric(P, name="P")
        if np.any(P < 0):
            raise ConfigError("P entries must be non-negative")
        if not np.allclose(np.diag(P), 1.0, rtol=0.0, atol=1e-12):
            raise ConfigError("P must have unit diagonal")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "P", P)

    def community_sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.K + 1)[1:]

    def onehot(self) -> np.ndarray:
        return labels_to_onehot(self.labels, self.K)


@dataclass(frozen=True)
class ThetaSpec:
    """How to draw raw activity levels and the norm they are rescaled to.

    ``distribution`` is "uniform" (params lo <= hi) or "pareto" (params
    scale, shape, plus a truncation cap applied to the raw draws before
    rescaling). After drawing, the vector is rescaled so its Euclidean norm
    equals ``b_n``.
    """

    distribution: str
    b_n: float
    lo: float | None = None
    hi: float | None = None
    scale: float | None = None
    shape: float | None = None
    truncation: float | None = None

    def __post_init__(self):
        if self.b_n <= 0:
            raise ConfigError("b_n must be positive")
        if self.distribution == "uniform":
            if self.lo is None or self.hi is None:
                raise ConfigError("uniform spec needs lo and hi")
            # lo == hi is allowed: degenerate (constant) draws.
            if self.lo <= 0 or self.hi < self.lo:
                raise ConfigError("uniform spec needs 0 < lo <= hi")
        elif self.distribution == "pareto":
            if self.scale is None or self.shape is None or self.truncation is None:
                raise ConfigError("pareto spec needs scale, shape, truncation")
            if min(self.scale, self.shape, self.truncation) <= 0:
                raise ConfigError("pareto scale, shape, truncation must be positive")
        else:
            raise ConfigError(f"unknown theta distribution {self.distribution!r}")

    @classmethod
    def uniform(cls, lo: float, hi: float, b_n: float) -> "ThetaSpec":
        return cls(distribution="uniform", b_n=b_n, lo=lo, hi=hi)

    @classmethod
    def pareto(cls, scale: float, shape: float, truncation: float, b_n: float) -> "ThetaSpec":
        return cls(distribution="pareto", b_n=b_n, scale=scale, shape=shape,
                   truncation=truncation)


class Adjacency:
    """Undirected simple graph: dense binary matrix plus per-node neighbor lists.

    Invariants checked at construction: entries in {0,1}, symmetric, zero
    diagonal. The neighbor lists are derived from the dense view and always
    consistent with it.
    """

    def __init__(self, dense: np.ndarray):
        dense = np.asarray(dense)
        if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
            raise DomainError(f"adjacency must be square, got shape {dense.shape}")
        as_int = dense.astype(np.uint8)
        if not np.array_equal(as_int, dense) or np.any(as_int > 1):
            raise DomainError("adjacency entries must be 0 or 1")
        if np.any(np.diag(as_int) != 0):
            raise DomainError("adjacency diagonal must be zero")
        if not np.array_equal(as_int, as_int.T):
            raise DomainError("adjacency must be symmetric")
        self.dense = as_int
        self.n = as_int.shape[0]
        self.neighbors = [np.flatnonzero(row) for row in as_int]

    def degrees(self) -> np.ndarray:
        return self.dense.sum(axis=1, dtype=np.int64)

    def edge_count(self) -> int:
        return int(self.dense.sum(dtype=np.int64)) // 2

    def as_float(self) -> np.ndarray:
        return self.dense.astype(float)


def gen_partition(n: int, sizes, rng: np.random.Generator | None = None,
                  shuffle: bool = False) -> np.ndarray:
    """Block partition: the first sizes[0] nodes get label 1, and so on.

    ``shuffle=True`` permutes node order with the supplied generator after the
    block assignment; it is off by default so fixtures stay deterministic.
    """
    sizes = np.asarray(sizes, dtype=int)
    if np.any(sizes < 1):
        raise ConfigError("every community size must be at least 1")
    if sizes.sum() != n:
        raise ConfigError(f"sizes sum to {sizes.sum()}, expected n={n}")
    labels = np.repeat(np.arange(1, sizes.size + 1), sizes)
    if shuffle:
        if rng is None:
            raise ConfigError("shuffle=True requires a generator")
        labels = rng.permutation(labels)
    return labels


def gen_theta(spec: ThetaSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw raw activity levels per ``spec`` and rescale to ||theta||_2 = b_n."""
    if spec.distribution == "uniform":
        raw = rng.uniform(spec.lo, spec.hi, size=n)
        if spec.lo == spec.hi:
            raw = np.full(n, spec.lo)
    else:
        # classical Pareto(scale, shape); numpy's pareto() is the Lomax form
        raw = spec.scale * (1.0 + rng.pareto(spec.shape, size=n))
        raw = np.minimum(raw, spec.truncation)
    return spec.b_n * raw / np.linalg.norm(raw)


def build_tilde_omega(params: ModelParams) -> np.ndarray:
    """Rank-K mean factor: entry (i,j) = theta_i theta_j P[c_i, c_j]."""
    block = params.P[np.ix_(params.labels - 1, params.labels - 1)]
    return np.outer(params.theta, params.theta) * block


def logit_link(tilde: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map a non-negative rate matrix through the logit link.

    Returns ``(omega, nfactor)`` with ``nfactor = 1/(1+tilde)`` and
    ``omega = tilde/(1+tilde) = nfactor * tilde``; omega entries lie in [0, 1).
    """
    tilde = np.asarray(tilde, dtype=float)
    if np.any(tilde < 0):
        raise DomainError("logit link requires non-negative entries")
    nfactor = 1.0 / (1.0 + tilde)
    omega = tilde * nfactor
    return omega, nfactor


def mean_matrices(params: ModelParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Convenience: (tilde, omega, nfactor) for a parameter set."""
    tilde = build_tilde_omega(params)
    omega, nfactor = logit_link(tilde)
    return tilde, omega, nfactor


def sample_adjacency(omega: np.ndarray, rng: np.random.Generator) -> Adjacency:
    """Sample a graph with independent Bernoulli(omega_ij) upper-triangle entries.

    The lower triangle mirrors the upper one and the diagonal is zero, so the
    diagonal of ``omega`` is never used.
    """
    omega = np.asarray(omega, dtype=float)
    require_symmetric(omega, atol=1e-9, name="omega")
    if np.any(omega < 0) or np.any(omega > 1):
        raise DomainError("edge probabilities must lie in [0, 1]")
    n = omega.shape[0]
    iu = np.triu_indices(n, k=1)
    draws = rng.random(iu[0].size)
    dense = np.zeros((n, n), dtype=np.uint8)
    dense[iu] = draws < omega[iu]
    dense |= dense.T
    return Adjacency(dense)


def snr(b_n: float, P: np.ndarray) -> float:
    """Signal-to-noise calibration b_n * |smallest-magnitude eigenvalue of P|.

    For P = beta * ones + (1 - beta) * I this equals b_n * (1 - beta).
    """
    P = require_symmetric(P, name="P")
    eigvals = np.linalg.eigvalsh(P)
    return float(b_n * np.min(np.abs(eigvals)))
