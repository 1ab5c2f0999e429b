"""Undirected simple graphs on vertices 0..n-1 with bit-packed adjacency rows.

Each row is stored as ``ceil(n / 64)`` little-endian ``uint64`` words, so
intersection and union reduce to word-parallel AND / OR over the whole
matrix.
"""

from __future__ import annotations

from functools import cached_property
from pathlib import Path

import numpy as np

_WORD = 64


def _words(n: int) -> int:
    return max(1, (n + _WORD - 1) // _WORD)


class Graph:
    """Immutable graph backed by a packed ``(n, words)`` uint64 matrix."""

    def __init__(self, n: int, rows: np.ndarray):
        if rows.shape != (n, _words(n)) or rows.dtype != np.uint64:
            raise ValueError("packed rows have the wrong shape or dtype")
        rows = rows.copy()
        rows.flags.writeable = False
        self.n = int(n)
        self._rows = rows

    # construction -------------------------------------------------------

    @classmethod
    def empty(cls, n: int) -> Graph:
        return cls(n, np.zeros((n, _words(n)), dtype=np.uint64))

    @classmethod
    def complete(cls, n: int) -> Graph:
        dense = np.ones((n, n), dtype=bool)
        np.fill_diagonal(dense, False)
        return cls.from_dense(dense)

    @classmethod
    def from_edges(cls, n: int, edges) -> Graph:
        """Build from an iterable or ``(m, 2)`` array of vertex pairs."""
        arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(arr[:, 0] == arr[:, 1]):
            raise ValueError("self-loops are not allowed")
        rows = np.zeros((n, _words(n)), dtype=np.uint64)
        canon = np.sort(arr, axis=1)
        if canon.size:
            canon = np.unique(canon, axis=0)
            u = np.concatenate([canon[:, 0], canon[:, 1]])
            v = np.concatenate([canon[:, 1], canon[:, 0]])
            bits = np.left_shift(np.uint64(1), (v % _WORD).astype(np.uint64))
            np.bitwise_or.at(rows, (u, v // _WORD), bits)
        g = cls(n, rows)
        canon.flags.writeable = False
        g.__dict__["edges"] = canon
        return g

    @classmethod
    def from_dense(cls, dense) -> Graph:
        dense = np.asarray(dense, dtype=bool)
        n = dense.shape[0]
        if dense.shape != (n, n):
            raise ValueError("adjacency matrix must be square")
        if np.any(np.diag(dense)) or not np.array_equal(dense, dense.T):
            raise ValueError("adjacency must be symmetric with an empty diagonal")
        padded = np.zeros((n, _words(n) * _WORD), dtype=np.uint8)
        padded[:, :n] = dense
        packed = np.packbits(padded, axis=1, bitorder="little")
        return cls(n, packed.view(np.uint64).reshape(n, _words(n)))

    # views ----------------------------------------------------------------

    @property
    def rows(self) -> np.ndarray:
        return self._rows

    @cached_property
    def dense(self) -> np.ndarray:
        """``(n, n)`` uint8 adjacency matrix (read-only)."""
        bits = np.unpackbits(self._rows.view(np.uint8), axis=1, bitorder="little")
        out = np.ascontiguousarray(bits[:, : self.n])
        out.flags.writeable = False
        return out

    @cached_property
    def edges(self) -> np.ndarray:
        """``(m, 2)`` int64 array of edges ``i < j`` in row-major order."""
        i, j = np.nonzero(np.triu(self.dense, 1))
        out = np.stack([i, j], axis=1).astype(np.int64)
        out.flags.writeable = False
        return out

    @cached_property
    def num_edges(self) -> int:
        return int(np.bitwise_count(self._rows).sum()) // 2

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bitwise_count(self._rows).sum(axis=1).astype(np.int64)

    def has_edge(self, i: int, j: int) -> bool:
        return bool((int(self._rows[i, j // _WORD]) >> (j % _WORD)) & 1)

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.dense[i])

    # operations -----------------------------------------------------------

    def _check(self, other: Graph) -> None:
        if self.n != other.n:
            raise ValueError(f"vertex counts differ: {self.n} != {other.n}")

    def __and__(self, other: Graph) -> Graph:
        self._check(other)
        return Graph(self.n, self._rows & other._rows)

    def __or__(self, other: Graph) -> Graph:
        self._check(other)
        return Graph(self.n, self._rows | other._rows)

    def is_subgraph_of(self, other: Graph) -> bool:
        self._check(other)
        return bool(np.all((self._rows & ~other._rows) == 0))

    def relabel(self, mapping) -> Graph:
        """Rename vertex ``i`` to ``mapping[i]``."""
        mapping = np.asarray(mapping, dtype=np.int64)
        if mapping.shape != (self.n,):
            raise ValueError("mapping length must equal n")
        e = self.edges
        return Graph.from_edges(self.n, mapping[e]) if len(e) else Graph.empty(self.n)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self._rows, other._rows)

    def __hash__(self) -> int:
        return hash((self.n, self._rows.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.num_edges})"


def intersection_graph(a: Graph, b: Graph) -> Graph:
    return a & b


def union_graph(a: Graph, b: Graph) -> Graph:
    return a | b


# edge-list text format: "n m" then m lines "i j" with i < j ---------------


def write_edge_list(graph: Graph, path) -> None:
    e = graph.edges
    with open(path, "w") as fh:
        fh.write(f"{graph.n} {len(e)}\n")
        for i, j in e:
            fh.write(f"{i} {j}\n")


def read_edge_list(path) -> Graph:
    lines = Path(path).read_text().split("\n")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError(f"{path}: header must be 'n m'")
    n, m = int(header[0]), int(header[1])
    body = [ln.split() for ln in lines[1:] if ln.strip()]
    if len(body) != m:
        raise ValueError(f"{path}: header promises {m} edges, found {len(body)}")
    edges = np.array([[int(a), int(b)] for a, b in body], dtype=np.int64).reshape(-1, 2)
    if len(edges) and np.any(edges[:, 0] >= edges[:, 1]):
        raise ValueError(f"{path}: edges must be written as 'i j' with i < j")
    return Graph.from_edges(n, edges)
