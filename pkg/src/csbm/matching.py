"""Graph matching estimators and the diagnostics used to analyse them."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from . import kernels
from .graph import Graph
from .model import CorrelatedFamily, EdgeJointLaw, Labeling
from .perm import Permutation
from .streams import as_stream

log = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 9


def _check_sizes(*graphs: Graph) -> None:
    if len({g.n for g in graphs}) != 1:
        raise ValueError("graphs must have the same number of vertices")


def _edge_bits(g: Graph, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    words = g.rows[i, j // 64]
    return ((words >> (j % 64).astype(np.uint64)) & np.uint64(1)).astype(np.int64)


def agreement_score(g1: Graph, g2: Graph, pi: Permutation) -> int:
    """Number of edges (i, j) of ``g1`` with (pi(i), pi(j)) an edge of ``g2``."""
    _check_sizes(g1, g2)
    if len(pi) != g1.n:
        raise ValueError("permutation size does not match the graphs")
    e = g1.edges
    if not len(e):
        return 0
    m = pi.mapping
    return int(_edge_bits(g2, m[e[:, 0]], m[e[:, 1]]).sum())


@dataclass(frozen=True)
class MatchScore:
    agreements: int
    x_stat: int
    y_plus: int
    y_minus: int


def score_stats(family: CorrelatedFamily, pi: Permutation) -> MatchScore:
    g1, g2, pi_star = family.g1, family.g2, family.pi_star[0]
    _check_sizes(g1, g2)
    agree = agreement_score(g1, g2, pi)
    x = agreement_score(g1, g2, pi_star) - agree
    # Y+/Y-: pairs with A_e = B'_e = 1 that pi maps differently from pi_star
    both = (g1 & family.g2_prime).edges
    if not len(both):
        return MatchScore(agree, x, 0, 0)
    i, j = both[:, 0], both[:, 1]
    a, b = pi.mapping[i], pi.mapping[j]
    c, d = pi_star.mapping[i], pi_star.mapping[j]
    moved = ~(((a == c) & (b == d)) | ((a == d) & (b == c)))
    sigma = family.labels.array
    intra = sigma[i] == sigma[j]
    return MatchScore(agree, x, int(np.sum(moved & intra)), int(np.sum(moved & ~intra)))


@dataclass(frozen=True)
class ExhaustiveResult:
    permutation: Permutation
    score: int
    n_maximizers: int


def exhaustive_search(g1: Graph, g2: Graph, limit: int = EXHAUSTIVE_LIMIT) -> ExhaustiveResult:
    _check_sizes(g1, g2)
    if g1.n > limit:
        raise ValueError(f"exhaustive search limited to n <= {limit}, got n = {g1.n}")
    perm, best, count = kernels.exhaustive_argmax(g1.dense, g2.dense)
    if count > 1:
        log.info("agreement argmax is not unique: %d maximisers (n=%d)", count, g1.n)
    return ExhaustiveResult(Permutation(perm), int(best), int(count))


def match_exhaustive(g1: Graph, g2: Graph, limit: int = EXHAUSTIVE_LIMIT) -> Permutation:
    """Agreement maximiser over all of S_n; ties go to the lexicographically smallest."""
    return exhaustive_search(g1, g2, limit).permutation


@dataclass(frozen=True)
class SearchConfig:
    """Local search settings. ``max_moves=None`` means ``50 * n**2`` per run.

    ``init`` is ``"profile"`` (degree-profile assignment, perturbed on
    restarts), ``"degree"`` (rank by degree) or ``"identity"`` (first run from
    the identity, then degree ranks). ``polish`` alternates the swap climb with assignment steps that re-match
    every vertex to maximise agreements with the current neighbour images.
    """

    restarts: int = 20
    max_moves: int | None = None
    init: str = "profile"
    seed: int = 0
    polish: bool = True
    polish_rounds: int = 50


def degree_greedy_init(g1: Graph, g2: Graph, rng) -> np.ndarray:
    """Pair vertices by rank of degree, breaking degree ties at random."""
    d1, d2 = g1.degrees, g2.degrees
    o1 = np.lexsort((rng.random(g1.n), -d1))
    o2 = np.lexsort((rng.random(g2.n), -d2))
    perm = np.empty(g1.n, dtype=np.int64)
    perm[o1] = o2
    return perm


PROFILE_QUANTILES = np.linspace(0.0, 1.0, 17)


def _degree_profiles(g: Graph) -> np.ndarray:
    """Per-vertex quantiles of neighbour degrees, scaled by the mean degree."""
    d = g.degrees.astype(np.float64)
    scale = max(d.mean(), 1.0)
    out = np.zeros((g.n, len(PROFILE_QUANTILES) + 1))
    dense = g.dense.astype(bool)
    for i in range(g.n):
        nb = d[dense[i]]
        if len(nb):
            out[i, :-1] = np.quantile(nb, PROFILE_QUANTILES) / scale
        out[i, -1] = d[i] / scale
    return out


def degree_profile_cost(g1: Graph, g2: Graph) -> np.ndarray:
    """L1 distance between degree profiles; ``cost[i, v]`` is small when i looks like v."""
    return cdist(_degree_profiles(g1), _degree_profiles(g2), metric="cityblock")


def degree_profile_init(cost: np.ndarray, rng=None, noise: float = 0.0) -> np.ndarray:
    if noise > 0.0:
        cost = cost + rng.random(cost.shape) * noise * cost.std()
    return linear_sum_assignment(cost)[1].astype(np.int64)


def assignment_polish(A: np.ndarray, B: np.ndarray, perm: np.ndarray, rounds: int) -> np.ndarray:
    """Re-match all vertices at once against the current neighbour images.

    Each round solves a linear assignment on ``W[i, v] = #{j : A[i, j] = 1,
    B[v, perm[j]] = 1}``. Iterates can lose score on the way, so the best one
    seen (the input included) is returned.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)

    def score(p):
        return float(np.sum(A * B[np.ix_(p, p)]))

    best, best_val = perm, score(perm)
    for _ in range(rounds):
        W = A @ B[:, perm].T
        _, cols = linear_sum_assignment(W, maximize=True)
        new = cols.astype(np.int64)
        if np.array_equal(new, perm):
            break
        perm = new
        val = score(perm)
        if val > best_val:
            best, best_val = perm, val
    return best.copy()


def match_local_search(g1: Graph, g2: Graph, config: SearchConfig | None = None) -> Permutation:
    """Multi-restart hill climbing on the agreement score (swaps plus assignment polish)."""
    config = config or SearchConfig()
    _check_sizes(g1, g2)
    n = g1.n
    rng = np.random.default_rng(config.seed)
    max_moves = config.max_moves if config.max_moves is not None else 50 * n * n
    A, B = g1.dense, g2.dense
    best_perm, best_score = None, -1
    ceiling = min(g1.num_edges, g2.num_edges)
    cost = degree_profile_cost(g1, g2) if config.init == "profile" else None
    for r in range(config.restarts + 1):
        if config.init == "identity" and r == 0:
            perm = np.arange(n, dtype=np.int64)
        elif config.init == "profile":
            perm = degree_profile_init(cost, rng, noise=0.0 if r == 0 else 1.0)
        elif config.init in ("degree", "identity"):
            perm = degree_greedy_init(g1, g2, rng)
        else:
            raise ValueError(f"unknown init {config.init!r}")
        kernels.local_search(A, B, perm, max_moves)
        if config.polish:
            perm = assignment_polish(A, B, perm, config.polish_rounds)
            kernels.local_search(A, B, perm, max_moves)
        score = agreement_score(g1, g2, Permutation(perm))
        if score > best_score:
            best_perm, best_score = perm.copy(), score
        if best_score >= ceiling:
            break
    return Permutation(best_perm)


# MAP estimator given community labels ----------------------------------------


@dataclass(frozen=True)
class PosteriorStats:
    mu_plus_11: int
    mu_minus_11: int
    nu_plus: int
    nu_minus: int
    log_posterior_unnormalized: float


def posterior_weights(law: EdgeJointLaw) -> np.ndarray:
    """Log coefficients of (mu+_11, mu-_11, nu+, nu-) in the unnormalised posterior."""
    cells = law.cells()
    if min(cells) <= 0.0:
        raise ValueError("the posterior needs every joint-law cell strictly positive")
    return np.array([
        math.log(law.p00 * law.p11 / (law.p01 * law.p10)),
        math.log(law.q00 * law.q11 / (law.q01 * law.q10)),
        math.log(law.p01 / law.p00),
        math.log(law.q01 / law.q00),
    ])


def posterior_stats(g1: Graph, g2: Graph, labels: Labeling, law: EdgeJointLaw,
                    pi: Permutation) -> PosteriorStats:
    _check_sizes(g1, g2)
    A = g1.dense.astype(np.int64)
    Bp = g2.dense[np.ix_(pi.mapping, pi.mapping)].astype(np.int64)
    iu = np.triu_indices(g1.n, 1)
    same = labels.same_community()[iu]
    a, b = A[iu], Bp[iu]
    counts = np.array([
        np.sum(a * b * same), np.sum(a * b * ~same), np.sum(b * same), np.sum(b * ~same)
    ], dtype=np.int64)
    value = float(counts @ posterior_weights(law))
    return PosteriorStats(*(int(c) for c in counts), value)


def map_argmax_set(g1: Graph, g2: Graph, labels: Labeling, law: EdgeJointLaw,
                   limit: int = EXHAUSTIVE_LIMIT, rtol: float = 1e-9) -> np.ndarray:
    """Every permutation (rows, lexicographic order) maximising the posterior."""
    _check_sizes(g1, g2)
    if g1.n > limit:
        raise ValueError(f"MAP scan limited to n <= {limit}, got n = {g1.n}")
    w = posterior_weights(law)
    perms, stats = kernels.enumerate_map_stats(g1.dense, g2.dense, labels.same_community())
    values = stats @ w
    top = values.max()
    return perms[values >= top - rtol * max(1.0, abs(top))]


def map_match_with_labels(g1: Graph, g2: Graph, labels: Labeling, law: EdgeJointLaw,
                          rng=None, limit: int = EXHAUSTIVE_LIMIT) -> Permutation:
    """Posterior mode given sigma; ties resolved uniformly at random from ``rng``."""
    best = map_argmax_set(g1, g2, labels, law, limit)
    rng = as_stream(rng)
    return Permutation(best[rng.integers(len(best))])


# anchor sets -----------------------------------------------------------------


@dataclass(frozen=True)
class AnchorSets:
    t_all: frozenset = field(default_factory=frozenset)
    t_plus: frozenset = field(default_factory=frozenset)
    t_minus: frozenset = field(default_factory=frozenset)


def anchor_sets(g1: Graph, g2: Graph, pi: Permutation, labels: Labeling) -> AnchorSets:
    """Vertices ``i`` with ``A[i, j] * B[pi(i), pi(j)] == 0`` for every ``j``.

    ``g2`` is the graph ``pi`` maps into, so with ``pi = pi_star`` pass the
    relabelled copy and these are the isolated vertices of the intersection
    of ``g1`` and the un-relabelled ``g2``.
    """
    _check_sizes(g1, g2)
    n = g1.n
    touched = np.zeros(n, dtype=bool)
    e = g1.edges
    if len(e):
        m = pi.mapping
        hit = _edge_bits(g2, m[e[:, 0]], m[e[:, 1]]).astype(bool)
        touched[e[hit, 0]] = True
        touched[e[hit, 1]] = True
    sigma = labels.array
    t = np.flatnonzero(~touched)
    return AnchorSets(
        frozenset(int(i) for i in t),
        frozenset(int(i) for i in t if sigma[i] == 1),
        frozenset(int(i) for i in t if sigma[i] == -1),
    )
