"""Correlated stochastic block models: sampling, subsampling and splitting."""

from __future__ import annotations

import enum
import itertools
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .graph import Graph, read_edge_list, write_edge_list
from .perm import Permutation, read_permutation, write_permutation


class Scaling(str, enum.Enum):
    LOG_OVER_N = "log"  # p = alpha log(n)/n, q = beta log(n)/n
    RAW = "raw"  # p = alpha, q = beta


@dataclass(frozen=True)
class ModelParams:
    n: int
    alpha: float
    beta: float
    s: float = 1.0
    k_graphs: int = 2
    scaling: Scaling = Scaling.LOG_OVER_N

    def __post_init__(self):
        object.__setattr__(self, "scaling", Scaling(self.scaling))
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be nonnegative")
        if not 0.0 <= self.s <= 1.0:
            raise ValueError(f"s must lie in [0, 1], got {self.s}")
        if int(self.k_graphs) != self.k_graphs or self.k_graphs < 2:
            raise ValueError(f"k_graphs must be an integer >= 2, got {self.k_graphs}")
        for name, val in (("p", self.p), ("q", self.q)):
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"derived {name} = {val} lies outside [0, 1]")

    @property
    def scale(self) -> float:
        if self.scaling is Scaling.RAW:
            return 1.0
        return math.log(self.n) / self.n

    @property
    def p(self) -> float:
        return self.alpha * self.scale

    @property
    def q(self) -> float:
        return self.beta * self.scale

    def replace(self, **changes) -> ModelParams:
        d = asdict(self)
        d.update(changes)
        return ModelParams(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scaling"] = self.scaling.value
        return d


@dataclass(frozen=True)
class Labeling:
    sigma: tuple[int, ...]

    def __post_init__(self):
        sig = tuple(int(x) for x in self.sigma)
        if any(x not in (1, -1) for x in sig):
            raise ValueError("labels must be +1 or -1")
        object.__setattr__(self, "sigma", sig)

    @property
    def n(self) -> int:
        return len(self.sigma)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.sigma, dtype=np.int64)

    @property
    def v_plus(self) -> np.ndarray:
        return np.flatnonzero(self.array == 1)

    @property
    def v_minus(self) -> np.ndarray:
        return np.flatnonzero(self.array == -1)

    def flipped(self) -> Labeling:
        return Labeling(tuple(-x for x in self.sigma))

    def same_community(self) -> np.ndarray:
        """Boolean ``(n, n)`` matrix, True where sigma_i == sigma_j."""
        a = self.array
        return a[:, None] == a[None, :]


@dataclass(frozen=True)
class EdgeJointLaw:
    """Joint law of ``(A_e, B'_e)`` for intra (p..) and inter (q..) pairs."""

    p00: float
    p01: float
    p10: float
    p11: float
    q00: float
    q01: float
    q10: float
    q11: float

    def table(self, intra: bool) -> np.ndarray:
        """2x2 array indexed ``[a, b]``."""
        if intra:
            return np.array([[self.p00, self.p01], [self.p10, self.p11]])
        return np.array([[self.q00, self.q01], [self.q10, self.q11]])

    def cells(self) -> tuple[float, ...]:
        return (self.p00, self.p01, self.p10, self.p11, self.q00, self.q01, self.q10, self.q11)


def joint_law_from_rates(p: float, q: float, s: float) -> EdgeJointLaw:
    both = s * s
    one = s * (1.0 - s)
    return EdgeJointLaw(
        p00=1.0 - p * (2 * s - s * s), p01=one * p, p10=one * p, p11=both * p,
        q00=1.0 - q * (2 * s - s * s), q01=one * q, q10=one * q, q11=both * q,
    )


def edge_joint_law(params: ModelParams) -> EdgeJointLaw:
    return joint_law_from_rates(params.p, params.q, params.s)


@dataclass(frozen=True)
class CorrelatedFamily:
    params: ModelParams
    labels: Labeling
    parent: Graph
    g1: Graph
    g_prime: tuple[Graph, ...]
    g_relabelled: tuple[Graph, ...]
    pi_star: tuple[Permutation, ...]

    @property
    def g2(self) -> Graph:
        return self.g_relabelled[0]

    @property
    def g2_prime(self) -> Graph:
        return self.g_prime[0]

    def check_invariants(self) -> None:
        for child in (self.g1, *self.g_prime):
            if not child.is_subgraph_of(self.parent):
                raise AssertionError("child graph has an edge missing from the parent")
        for gp, g, pi in zip(self.g_prime, self.g_relabelled, self.pi_star):
            if gp.relabel(pi.mapping) != g:
                raise AssertionError("relabelled child does not match its permutation")


# sampling ------------------------------------------------------------------


def sample_labeling(params: ModelParams, rng) -> Labeling:
    return Labeling(tuple(rng.choice(np.array([1, -1]), size=params.n)))


def _bernoulli_positions(total: int, prob: float, rng) -> np.ndarray:
    """Sorted indices in ``[0, total)`` kept independently with probability ``prob``.

    Geometric gap sampling, so cost scales with the number of hits.
    """
    if total <= 0 or prob <= 0.0:
        return np.zeros(0, dtype=np.int64)
    if prob >= 1.0:
        return np.arange(total, dtype=np.int64)
    out = []
    last = -1
    while True:
        mean = (total - last) * prob
        size = int(mean + 6.0 * math.sqrt(mean) + 16)
        gaps = rng.geometric(prob, size=size).astype(np.int64)
        pos = last + np.cumsum(gaps)
        hit = pos[pos < total]
        out.append(hit)
        if len(hit) < len(pos):
            break
        last = int(pos[-1])
    return np.concatenate(out)


def _triangle_pairs(members: np.ndarray, prob: float, rng) -> np.ndarray:
    a = len(members)
    total = a * (a - 1) // 2
    k = _bernoulli_positions(total, prob, rng)
    if not len(k):
        return np.zeros((0, 2), dtype=np.int64)
    r = np.arange(a, dtype=np.int64)
    row_start = r * a - r * (r + 1) // 2
    row = np.searchsorted(row_start, k, side="right") - 1
    col = k - row_start[row] + row + 1
    return np.stack([members[row], members[col]], axis=1)


def _rectangle_pairs(left: np.ndarray, right: np.ndarray, prob: float, rng) -> np.ndarray:
    k = _bernoulli_positions(len(left) * len(right), prob, rng)
    if not len(k):
        return np.zeros((0, 2), dtype=np.int64)
    row, col = np.divmod(k, len(right))
    return np.stack([left[row], right[col]], axis=1)


def sample_sbm_rates(n: int, p: float, q: float, labels: Labeling, rng) -> Graph:
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError("edge probabilities must lie in [0, 1]")
    if labels.n != n:
        raise ValueError("labeling size does not match n")
    vp, vm = labels.v_plus, labels.v_minus
    parts = [
        _triangle_pairs(vp, p, rng),
        _triangle_pairs(vm, p, rng),
        _rectangle_pairs(vp, vm, q, rng),
    ]
    return Graph.from_edges(n, np.concatenate(parts))


def sample_sbm(params: ModelParams, labels: Labeling, rng) -> Graph:
    return sample_sbm_rates(params.n, params.p, params.q, labels, rng)


def subsample(parent: Graph, s: float, rng) -> Graph:
    """Keep each parent edge independently with probability ``s``."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    e = parent.edges
    keep = rng.random(len(e)) < s
    return Graph.from_edges(parent.n, e[keep])


def generate_family(params: ModelParams, rng) -> CorrelatedFamily:
    labels = sample_labeling(params, rng)
    parent = sample_sbm(params, labels, rng)
    g1 = subsample(parent, params.s, rng)
    g_prime = tuple(subsample(parent, params.s, rng) for _ in range(params.k_graphs - 1))
    pis = tuple(Permutation.random(params.n, rng) for _ in range(params.k_graphs - 1))
    relabelled = tuple(g.relabel(pi.mapping) for g, pi in zip(g_prime, pis))
    return CorrelatedFamily(params, labels, parent, g1, g_prime, relabelled, pis)


def unrelabel(g: Graph, pi: Permutation) -> Graph:
    """Inverse of relabeling by ``pi``: edge (pi(i), pi(j)) of ``g`` becomes (i, j)."""
    return g.relabel(pi.inverse().mapping)


def overlay_by_permutations(g1: Graph, others: Sequence[tuple[Graph, Permutation]]) -> Graph:
    """Union of ``g1`` with each other graph pulled back through its permutation."""
    out = g1
    for g, pi in others:
        if g.n != g1.n or len(pi) != g1.n:
            raise ValueError("all graphs and permutations must share n")
        out = out | unrelabel(g, pi)
    return out


# splitters -------------------------------------------------------------------


def union_pair_weights(s: float) -> tuple[float, float, float]:
    """``(r10, r01, r11)``: membership law of a union edge across two children."""
    if not 0.0 < s <= 1.0:
        raise ValueError("splitting needs s in (0, 1]")
    z = 1.0 - (1.0 - s) ** 2
    return s * (1 - s) / z, s * (1 - s) / z, s * s / z


def union_k_weights(s: float, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Patterns ``x`` in ``{0,1}^k`` minus zero, and their probabilities ``r_x``."""
    if not 0.0 < s <= 1.0:
        raise ValueError("splitting needs s in (0, 1]")
    if k < 2:
        raise ValueError("k must be at least 2")
    patterns = np.array([x for x in itertools.product((0, 1), repeat=k) if any(x)], dtype=np.int64)
    z = 1.0 - (1.0 - s) ** k
    sizes = patterns.sum(axis=1)
    weights = s ** sizes * (1.0 - s) ** (k - sizes) / z
    return patterns, weights


def split_union_pair(h: Graph, s: float, rng) -> tuple[Graph, Graph]:
    r10, r01, _ = union_pair_weights(s)
    e = h.edges
    u = rng.random(len(e))
    only1 = u < r10
    only2 = (u >= r10) & (u < r10 + r01)
    both = u >= r10 + r01
    return Graph.from_edges(h.n, e[only1 | both]), Graph.from_edges(h.n, e[only2 | both])


def split_union_k(h: Graph, s: float, k: int, rng) -> list[Graph]:
    patterns, weights = union_k_weights(s, k)
    e = h.edges
    draw = rng.choice(len(patterns), size=len(e), p=weights / weights.sum())
    member = patterns[draw]
    return [Graph.from_edges(h.n, e[member[:, c] == 1]) for c in range(k)]


# family directory format ---------------------------------------------------


def write_family(family: CorrelatedFamily, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    (d / "params.json").write_text(json.dumps(family.params.to_dict(), indent=2) + "\n")
    write_labels(family.labels, d / "labels.txt")
    write_edge_list(family.parent, d / "parent.edges")
    write_edge_list(family.g1, d / "g1.edges")
    for k, (gp, g, pi) in enumerate(zip(family.g_prime, family.g_relabelled, family.pi_star), start=2):
        write_edge_list(gp, d / f"g{k}_prime.edges")
        write_edge_list(g, d / f"g{k}.edges")
        write_permutation(pi, d / f"pi_star_{k}.txt")
    return d


def write_labels(labels: Labeling, path) -> None:
    Path(path).write_text("".join(f"{x:+d}\n" for x in labels.sigma))


def read_labels(path) -> Labeling:
    return Labeling(tuple(int(t) for t in Path(path).read_text().split()))


def read_family(directory) -> CorrelatedFamily:
    d = Path(directory)
    params = ModelParams(**json.loads((d / "params.json").read_text()))
    ks = range(2, params.k_graphs + 1)
    return CorrelatedFamily(
        params=params,
        labels=read_labels(d / "labels.txt"),
        parent=read_edge_list(d / "parent.edges"),
        g1=read_edge_list(d / "g1.edges"),
        g_prime=tuple(read_edge_list(d / f"g{k}_prime.edges") for k in ks),
        g_relabelled=tuple(read_edge_list(d / f"g{k}.edges") for k in ks),
        pi_star=tuple(read_permutation(d / f"pi_star_{k}.txt") for k in ks),
    )
