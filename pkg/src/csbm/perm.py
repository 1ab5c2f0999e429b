"""Vertex permutations, their lifted action on unordered pairs, and mismatch counts."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from pathlib import Path

import numpy as np


class Permutation:
    """A bijection of ``{0, ..., n-1}``; ``pi(i)`` is the image of ``i``."""

    __slots__ = ("_m",)

    def __init__(self, mapping):
        m = np.array(mapping, dtype=np.int64).reshape(-1)
        n = len(m)
        if n and not np.array_equal(np.sort(m), np.arange(n)):
            raise ValueError("mapping is not a bijection of 0..n-1")
        m.flags.writeable = False
        self._m = m

    @classmethod
    def identity(cls, n: int) -> Permutation:
        return cls(np.arange(n))

    @classmethod
    def random(cls, n: int, rng) -> Permutation:
        return cls(rng.permutation(n))

    @classmethod
    def transposition(cls, n: int, a: int, b: int) -> Permutation:
        m = np.arange(n)
        m[a], m[b] = b, a
        return cls(m)

    @property
    def mapping(self) -> np.ndarray:
        return self._m

    @property
    def n(self) -> int:
        return len(self._m)

    def __call__(self, i):
        return self._m[i]

    def __len__(self) -> int:
        return len(self._m)

    def inverse(self) -> Permutation:
        inv = np.empty_like(self._m)
        inv[self._m] = np.arange(len(self._m))
        return Permutation(inv)

    def compose(self, other: Permutation) -> Permutation:
        """``(self o other)(i) = self(other(i))``."""
        if len(other) != len(self):
            raise ValueError("permutation sizes differ")
        return Permutation(self._m[other._m])

    def is_identity(self) -> bool:
        return bool(np.array_equal(self._m, np.arange(len(self._m))))

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(int(x) for x in self._m)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return np.array_equal(self._m, other._m)

    def __hash__(self) -> int:
        return hash(self._m.tobytes())

    def __repr__(self) -> str:
        return f"Permutation({list(self.as_tuple())})"


def compose(p: Permutation, q: Permutation) -> Permutation:
    return p.compose(q)


def inverse(p: Permutation) -> Permutation:
    return p.inverse()


def _pair(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


def lift_apply(pi: Permutation, pair) -> tuple[int, int]:
    """Image of the unordered pair ``{i, j}`` under the lifted permutation."""
    i, j = pair
    if i == j:
        raise ValueError("a vertex pair needs two distinct vertices")
    return _pair(int(pi(i)), int(pi(j)))


def all_pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


@dataclass(frozen=True)
class PairCycleDecomposition:
    """Cycles of a lifted permutation, each started at its smallest pair."""

    cycles: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def fixed_points(self) -> tuple[tuple[int, int], ...]:
        return tuple(c[0] for c in self.cycles if len(c) == 1)

    @property
    def nontrivial(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        return tuple(c for c in self.cycles if len(c) >= 2)

    def lengths(self) -> list[int]:
        return [len(c) for c in self.cycles]


def pair_cycles(tau_star: Permutation, tau: Permutation) -> PairCycleDecomposition:
    """Cycle decomposition of ``l(tau_star)^-1 o l(tau)`` on unordered pairs.

    Consecutive entries satisfy ``e_{k+1} = tau_star^-1(tau(e_k))``. Pairs are
    scanned in lexicographic order, so every cycle begins at its smallest
    pair and the cycles come out sorted by that pair.
    """
    if len(tau_star) != len(tau):
        raise ValueError("permutation sizes differ")
    step = tau_star.inverse().compose(tau).mapping
    seen: set[tuple[int, int]] = set()
    cycles = []
    for start in all_pairs(len(tau)):
        if start in seen:
            continue
        cyc = [start]
        seen.add(start)
        e = _pair(int(step[start[0]]), int(step[start[1]]))
        while e != start:
            cyc.append(e)
            seen.add(e)
            e = _pair(int(step[e[0]]), int(step[e[1]]))
        cycles.append(tuple(cyc))
    return PairCycleDecomposition(tuple(cycles))


@dataclass(frozen=True)
class MismatchCounts:
    k1: int
    k2: int
    m_plus: int
    m_minus: int
    e_tr_plus: int
    e_tr_minus: int


def _sigma_array(labels) -> np.ndarray:
    return np.asarray(getattr(labels, "sigma", labels), dtype=np.int64)


def mismatched_pair_counts(labels, pi_star: Permutation, pi: Permutation) -> tuple[int, int]:
    """Count pairs in E+ and E- whose images under ``pi`` and ``pi_star`` differ.

    Plain enumeration over all ``n(n-1)/2`` pairs.
    """
    sigma = _sigma_array(labels)
    n = len(sigma)
    i, j = np.triu_indices(n, 1)
    a, b = pi.mapping[i], pi.mapping[j]
    c, d = pi_star.mapping[i], pi_star.mapping[j]
    same_image = ((a == c) & (b == d)) | ((a == d) & (b == c))
    intra = sigma[i] == sigma[j]
    moved = ~same_image
    return int(np.sum(moved & intra)), int(np.sum(moved & ~intra))


def mismatch_counts(labels, pi_star: Permutation, pi: Permutation) -> MismatchCounts:
    """Mismatch counts of ``pi`` against ``pi_star`` from the closed-form identity.

    Under ``__debug__`` (i.e. unless Python runs with ``-O``) the closed form is
    also checked against :func:`mismatched_pair_counts`.
    """
    sigma = _sigma_array(labels)
    n = len(sigma)
    if len(pi) != n or len(pi_star) != n:
        raise ValueError("labeling and permutations must have the same size")
    plus = sigma == 1
    wrong = pi.mapping != pi_star.mapping
    k1 = int(np.sum(wrong & plus))
    k2 = int(np.sum(wrong & ~plus))
    n_plus = int(plus.sum())
    n_minus = n - n_plus

    # u, v transposed relative to pi_star  <=>  they form a 2-cycle of pi_star^-1 o pi
    rel = pi_star.inverse().compose(pi).mapping
    u = np.arange(n)
    swapped = (rel != u) & (rel[rel] == u) & (u < rel)
    us = u[swapped]
    vs = rel[swapped]
    same = sigma[us] == sigma[vs]
    e_tr_plus = int(same.sum())
    e_tr_minus = int((~same).sum())

    m_plus = comb(k1, 2) + k1 * (n_plus - k1) + comb(k2, 2) + k2 * (n_minus - k2) - e_tr_plus
    m_minus = k1 * n_minus + k2 * n_plus - k1 * k2 - e_tr_minus

    if __debug__:
        bp, bm = mismatched_pair_counts(sigma, pi_star, pi)
        if (bp, bm) != (m_plus, m_minus):
            raise AssertionError(
                f"closed-form mismatch counts ({m_plus}, {m_minus}) disagree "
                f"with enumeration ({bp}, {bm})"
            )
    return MismatchCounts(k1, k2, m_plus, m_minus, e_tr_plus, e_tr_minus)


# permutation file: line i holds pi(i) -------------------------------------


def write_permutation(pi: Permutation, path) -> None:
    Path(path).write_text("".join(f"{int(x)}\n" for x in pi.mapping))


def read_permutation(path) -> Permutation:
    vals = [int(t) for t in Path(path).read_text().split()]
    return Permutation(vals)
