"""Ratio-of-cycle-count estimators and renormalization-matrix assembly.

The logit link leaves a nonlinear factor 1/(1 + theta_i theta_j P_kl) in every
edge probability, which rules out closed-form moment estimators built from a
single count. The estimators here pair two counts whose expectations carry the
same nonlinear factors, so the factors cancel in the ratio:

* ``estimate_x0``: ratio of an edge count to a complement-weighted count over
  a rectangular block, when activity levels are known.
* ``estimate_theta``: per node i, the ratio of open 3-cycle counts
  sum_{j != k} A_ij (1 - A_jk) A_ki  over  sum_{j != k} (1 - A_ij) A_jk (1 - A_ki)
  with j, k running over i's estimated community. The ratio estimates
  theta_i^2. Longer alternating odd cycles give the same identity.
* ``estimate_P``: block version of the x0 ratio with plugged-in theta-hats.

All cycle sums are evaluated with exact closed forms (expansions of the
distinct-index constraint), never by enumerating tuples, except for odd cycle
lengths >= 7 where a direct enumeration over tiny communities is provided.
Every formula accepts a real-valued matrix in place of the binary adjacency,
so plugging in the model mean reproduces the true parameters exactly.
"""

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EstimationError
from .model import Adjacency

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CycleCounts:
    """Numerator/denominator pair of alternating-cycle sums at one node."""

    phi1: float
    phi2: float


def _as_matrix(A) -> np.ndarray:
    if isinstance(A, Adjacency):
        return A.as_float()
    return np.asarray(A, dtype=float)


def _offdiag(M: np.ndarray) -> np.ndarray:
    out = M.copy()
    np.fill_diagonal(out, 0.0)
    return out


def cycle_counts_m3(A, i: int, S) -> CycleCounts:
    """Open 3-cycle sums at node ``i`` over the index set ``S`` (i not in S).

    phi1 = sum_{j != k in S} A_ij (1 - A_jk) A_ki
    phi2 = sum_{j != k in S} (1 - A_ij) A_jk (1 - A_ki)

    Computed via the quadratic-form expansion of the distinct-index constraint
    over the restricted submatrix, O(|S|^2); works for binary and real input.
    """
    M = _as_matrix(A)
    S = np.asarray(S, dtype=int)
    if np.any(S == i):
        raise ConfigError(f"node {i} must not belong to S")
    a = M[i, S]
    Boff = _offdiag(M[np.ix_(S, S)])
    s1 = a.sum()
    s2 = (a * a).sum()
    t = a @ Boff @ a
    phi1 = s1 * s1 - s2 - t
    u = 1.0 - a
    phi2 = u @ Boff @ u
    return CycleCounts(phi1=float(phi1), phi2=float(phi2))


def _community_cycle_sums_m3(M: np.ndarray, members: np.ndarray):
    """phi1/phi2 vectors for every node of one community, index set C \\ {i}.

    Expansion over the community submatrix with zeroed diagonal B:
    writing r = B[a], s1 = B.sum(1), s2 = (B^2).sum(1), t = diag(B^3),
        phi1[a] = s1[a]^2 - s2[a] - t[a]
        phi2[a] = B.sum() - 2 (B s1)[a] + t[a] - 2 (s1[a] - s2[a]).
    r[a] = 0 removes node a from every sum automatically.
    """
    B = _offdiag(M[np.ix_(members, members)])
    s1 = B.sum(axis=1)
    s2 = (B * B).sum(axis=1)
    t = ((B @ B) * B).sum(axis=1)
    phi1 = s1 * s1 - s2 - t
    phi2 = B.sum() - 2.0 * (B @ s1) + t - 2.0 * (s1 - s2)
    return phi1, phi2


def _community_cycle_sums_m5(M: np.ndarray, members: np.ndarray):
    """phi1/phi2 vectors for alternating 5-cycles within one community.

    The distinct-index constraint is expanded by inclusion-exclusion over the
    index collisions that the zero diagonals do not already remove; terms are
    assembled from per-community matrix products so each node costs a handful
    of mat-vecs.
    """
    sub = M[np.ix_(members, members)]
    B = _offdiag(sub)
    U = _offdiag(1.0 - sub)
    UB = U @ B
    dUB = np.diag(UB).copy()
    D3U = (UB * U).sum(axis=1)          # diag(U B U)
    D3B = (UB * B).sum(axis=0)          # diag(B U B)
    W3n = U * U * B
    W3d = B * B * U
    c = B.shape[0]
    phi1 = np.empty(c)
    phi2 = np.empty(c)
    for a in range(c):
        r = B[a]
        w = U[a]
        Ucol = U[:, a]
        Bcol = B[:, a]
        # numerator chain U, B, U with endpoint weights r
        v1 = U @ r
        v2 = B @ v1
        v3 = U @ v2
        q1 = r @ v3 - 2.0 * v1[a] * v2[a]
        q2 = np.sum(r * (dUB - Ucol * Bcol) * v1)
        q3 = np.sum(r * r * (D3U - 2.0 * Ucol * UB[:, a]))
        q4 = r @ (W3n @ r)
        phi1[a] = q1 - 2.0 * q2 - q3 + q4
        # denominator chain B, U, B with endpoint weights w
        z1 = B @ w
        z2 = U @ z1
        z3 = B @ z2
        p1 = w @ z3 - 2.0 * z1[a] * z2[a]
        p2 = np.sum(w * (dUB - Ucol * Bcol) * z1)
        p3 = np.sum(w * w * (D3B - 2.0 * Bcol * UB[a, :]))
        p4 = w @ (W3d @ w)
        phi2[a] = p1 - 2.0 * p2 - p3 + p4
    return phi1, phi2


def _cycle_sums_enum(M: np.ndarray, i: int, S: np.ndarray, m: int):
    """Direct enumeration of alternating m-cycle sums over distinct tuples.

    Exponential in m; only meant for odd m >= 7 on very small index sets.
    """
    phi1 = 0.0
    phi2 = 0.0
    for tup in itertools.permutations(S, m - 1):
        path = (i,) + tup + (i,)
        p1 = 1.0
        p2 = 1.0
        for step in range(m):
            x, y = path[step], path[step + 1]
            if step % 2 == 0:
                p1 *= M[x, y]
                p2 *= 1.0 - M[x, y]
            else:
                p1 *= 1.0 - M[x, y]
                p2 *= M[x, y]
        phi1 += p1
        phi2 += p2
    return phi1, phi2


def _theta_from_ratios(phi1, phi2, members, labels, community, fallback):
    """sqrt(phi1/phi2) with the degenerate-denominator policy applied."""
    theta = np.full(members.size, np.nan)
    good = phi2 > 0.0
    theta[good] = np.sqrt(np.maximum(phi1[good], 0.0) / phi2[good])
    n_bad = int(np.count_nonzero(~good))
    if n_bad:
        if fallback is not None:
            fill = float(fallback)
        elif np.any(good):
            fill = float(theta[good].mean())
        else:
            raise EstimationError(
                f"community {community}: no node has a positive cycle denominator",
                community=community, size=members.size)
        log.warning("community %d: %d degenerate cycle denominators, imputing %.6g",
                    community, n_bad, fill)
        theta[~good] = fill
    return theta


def estimate_theta(A, labels: np.ndarray, fallback: float | None = None) -> np.ndarray:
    """Per-node activity estimates from 3-cycle ratios within estimated communities.

    For node i in community k, theta_i is estimated by sqrt(phi1/phi2) with the
    cycle sums taken over S = C_k \\ {i}. Nodes with a zero denominator get
    ``fallback`` (default: the mean of the successful estimates in the same
    community); the event is logged. Communities smaller than 3 raise
    ``EstimationError``.
    """
    M = _as_matrix(A)
    labels = np.asarray(labels, dtype=int)
    theta = np.empty(labels.size)
    for k in np.unique(labels):
        members = np.flatnonzero(labels == k)
        if members.size < 3:
            raise EstimationError(
                f"community {k} has {members.size} nodes; cycle ratios need at least 3",
                community=int(k), size=int(members.size))
        phi1, phi2 = _community_cycle_sums_m3(M, members)
        theta[members] = _theta_from_ratios(phi1, phi2, members, labels, int(k), fallback)
    return theta


def estimate_theta_general_m(A, labels: np.ndarray, m: int,
                             fallback: float | None = None) -> np.ndarray:
    """Activity estimates from alternating m-cycle ratios, odd m >= 3.

    m = 3 matches ``estimate_theta`` exactly. m = 5 uses closed forms and is
    practical at desk scale; larger odd m falls back to direct enumeration and
    is only feasible for very small communities.
    """
    if m % 2 == 0 or m < 3:
        raise ConfigError(f"cycle length must be odd and >= 3, got {m}")
    if m == 3:
        return estimate_theta(A, labels, fallback=fallback)
    M = _as_matrix(A)
    labels = np.asarray(labels, dtype=int)
    theta = np.empty(labels.size)
    for k in np.unique(labels):
        members = np.flatnonzero(labels == k)
        if members.size < m:
            raise EstimationError(
                f"community {k} has {members.size} nodes; {m}-cycles need at least {m}",
                community=int(k), size=int(members.size))
        if m == 5:
            phi1, phi2 = _community_cycle_sums_m5(M, members)
        else:
            phi1 = np.empty(members.size)
            phi2 = np.empty(members.size)
            for idx, i in enumerate(members):
                S = members[members != i]
                phi1[idx], phi2[idx] = _cycle_sums_enum(M, i, S, m)
        theta[members] = _theta_from_ratios(phi1, phi2, members, labels, int(k), fallback)
    return theta


def estimate_x0(A, theta_rows: np.ndarray, theta_cols: np.ndarray | None = None) -> float:
    """Scale estimate sum(A_ij) / sum(theta_i theta_j (1 - A_ij)) over all pairs.

    ``A`` may be rectangular (rows and columns indexing different node sets,
    with ``theta_cols`` for the columns) or a square adjacency, in which case
    ``theta_rows`` applies to both axes.
    """
    M = _as_matrix(A)
    tr = np.asarray(theta_rows, dtype=float)
    tc = tr if theta_cols is None else np.asarray(theta_cols, dtype=float)
    if M.shape != (tr.size, tc.size):
        raise ConfigError(f"matrix shape {M.shape} does not match theta lengths "
                          f"({tr.size}, {tc.size})")
    num = float(M.sum())
    den = float(tr.sum() * tc.sum() - tr @ M @ tc)
    if den <= 0.0:
        raise EstimationError("zero denominator in scale ratio",
                              numerator=num, denominator=den)
    return num / den


def estimate_P(A, labels: np.ndarray, theta_hat: np.ndarray,
               include_diagonal: bool = False) -> np.ndarray:
    """Mixing-matrix estimate from block edge counts and plugged-in thetas.

    Off-diagonal entries are the block ratios
    ``sum A_ij / sum theta_i theta_j (1 - A_ij)`` over i in C_k, j in C_l;
    the result is symmetrized and the diagonal is forced to 1 (the
    identifiability convention). ``include_diagonal=True`` fills the diagonal
    from the same ratio instead; that variant is a diagnostic only.
    """
    M = _as_matrix(A)
    labels = np.asarray(labels, dtype=int)
    theta_hat = np.asarray(theta_hat, dtype=float)
    ks = np.unique(labels)
    K = int(ks.max())
    groups = {int(k): np.flatnonzero(labels == k) for k in ks}
    P_hat = np.zeros((K, K))
    for k in range(1, K + 1):
        for l in range(1, K + 1):
            if k == l and not include_diagonal:
                continue
            gk = groups.get(k)
            gl = groups.get(l)
            if gk is None or gl is None:
                raise EstimationError(f"community {k if gk is None else l} is empty")
            block = M[np.ix_(gk, gl)]
            tk = theta_hat[gk]
            tl = theta_hat[gl]
            num = float(block.sum())
            den = float(tk.sum() * tl.sum() - tk @ block @ tl)
            if den <= 0.0:
                log.warning("block (%d, %d): zero denominator, setting entry to 0", k, l)
                P_hat[k - 1, l - 1] = 0.0
            else:
                P_hat[k - 1, l - 1] = num / den
    P_hat = 0.5 * (P_hat + P_hat.T)
    if not include_diagonal:
        np.fill_diagonal(P_hat, 1.0)
    return P_hat


def assemble_N(theta_hat: np.ndarray, P_hat: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Renormalization matrix 1 / (1 + theta_i theta_j P[k, l]) from estimates.

    Negative mixing entries (possible only from external input; the block
    ratios are non-negative) are clamped to 0 first, with a logged warning.
    Entries lie in (0, 1]; the diagonal uses the same formula and is only
    meaningful for diagnostics.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    P_hat = np.asarray(P_hat, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if np.any(theta_hat < 0):
        raise ConfigError("theta_hat entries must be non-negative")
    if np.any(P_hat < 0):
        log.warning("clamping %d negative mixing entries to 0",
                    int(np.count_nonzero(P_hat < 0)))
        P_hat = np.maximum(P_hat, 0.0)
    tilde_hat = np.outer(theta_hat, theta_hat) * P_hat[np.ix_(labels - 1, labels - 1)]
    return 1.0 / (1.0 + tilde_hat)


@dataclass(frozen=True)
class FitBundle:
    """One refitting pass: activity estimates, mixing estimate, renormalizer."""

    theta_hat: np.ndarray
    P_hat: np.ndarray
    labels: np.ndarray
    N_hat: np.ndarray


def refit_from_partition(A, labels: np.ndarray, m: int = 3,
                         fallback: float | None = None) -> FitBundle:
    """Full refitting pass given an estimated partition: theta, P, then N."""
    labels = np.asarray(labels, dtype=int)
    theta_hat = (estimate_theta(A, labels, fallback=fallback) if m == 3
                 else estimate_theta_general_m(A, labels, m, fallback=fallback))
    P_hat = estimate_P(A, labels, theta_hat)
    N_hat = assemble_N(theta_hat, P_hat, labels)
    return FitBundle(theta_hat=theta_hat, P_hat=P_hat, labels=labels, N_hat=N_hat)


def save_fit(bundle: FitBundle, directory):
    """Write theta_hat.csv, P_hat.csv, partition.txt to ``directory``.

    The renormalization matrix is never persisted; it is rebuilt on load.
    """
    import os

    from .io import save_matrix_csv, save_partition, save_vector_csv

    os.makedirs(directory, exist_ok=True)
    save_vector_csv(os.path.join(directory, "theta_hat.csv"), bundle.theta_hat)
    save_matrix_csv(os.path.join(directory, "P_hat.csv"), bundle.P_hat)
    save_partition(os.path.join(directory, "partition.txt"), bundle.labels)


def load_fit(directory) -> FitBundle:
    import os

    from .io import load_matrix_csv, load_partition, load_vector_csv

    theta_hat = load_vector_csv(os.path.join(directory, "theta_hat.csv"))
    P_hat = load_matrix_csv(os.path.join(directory, "P_hat.csv"))
    labels = load_partition(os.path.join(directory, "partition.txt"))
    N_hat = assemble_N(theta_hat, P_hat, labels)
    return FitBundle(theta_hat=theta_hat, P_hat=P_hat, labels=labels, N_hat=N_hat)
