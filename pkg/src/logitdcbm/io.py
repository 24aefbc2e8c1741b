"""File formats: edge lists, partition files, raw CSV matrix dumps.

Edge list format: a header line ``n=<count>`` followed by one ``i j`` pair per
edge (0-based node ids, i < j, whitespace separated). Partition files carry
one label per line (labels in 1..K). Matrix dumps are plain CSV, row-major,
no header.
"""

import numpy as np

from .errors import ConfigError
from .model import Adjacency


def save_edge_list(path, adj: Adjacency):
    with open(path, "w") as fh:
        fh.write(f"n={adj.n}\n")
        rows, cols = np.nonzero(np.triu(adj.dense, k=1))
        for i, j in zip(rows, cols):
            fh.write(f"{i} {j}\n")


def load_edge_list(path) -> Adjacency:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("n="):
            raise ConfigError(f"{path}: expected 'n=<count>' header, got {header!r}")
        try:
            n = int(header[2:])
        except ValueError as exc:
            raise ConfigError(f"{path}: bad node count in header {header!r}") from exc
        dense = np.zeros((n, n), dtype=np.uint8)
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ConfigError(f"{path}:{lineno}: expected 'i j', got {line!r}")
            i, j = int(parts[0]), int(parts[1])
            if not (0 <= i < j < n):
                raise ConfigError(f"{path}:{lineno}: edge ({i}, {j}) out of range for n={n}")
            dense[i, j] = 1
            dense[j, i] = 1
    return Adjacency(dense)


def save_partition(path, labels: np.ndarray):
    labels = np.asarray(labels, dtype=int)
    with open(path, "w") as fh:
        for lab in labels:
            fh.write(f"{lab}\n")


def load_partition(path) -> np.ndarray:
    labels = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                labels.append(int(line))
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad label {line!r}") from exc
    if not labels:
        raise ConfigError(f"{path}: empty partition file")
    out = np.asarray(labels, dtype=int)
    if out.min() < 1:
        raise ConfigError(f"{path}: labels must be >= 1")
    return out


def save_matrix_csv(path, M: np.ndarray):
    M = np.asarray(M, dtype=float)
    with open(path, "w") as fh:
        for row in M:
            fh.write(",".join(repr(float(x)) for x in row))
            fh.write("\n")


def load_matrix_csv(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(x) for x in line.split(",")])
    return np.asarray(rows, dtype=float)


def save_vector_csv(path, v: np.ndarray):
    v = np.asarray(v, dtype=float)
    with open(path, "w") as fh:
        for x in v:
            fh.write(f"{float(x)!r}\n")


def load_vector_csv(path) -> np.ndarray:
    vals = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                vals.append(float(line))
    return np.asarray(vals, dtype=float)
