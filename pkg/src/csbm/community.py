"""Community recovery: single-graph spectral + majority, and the overlay pipelines."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import Graph
from .matching import SearchConfig, match_exhaustive, match_local_search
from .model import CorrelatedFamily, Labeling, ModelParams, overlay_by_permutations
from .perm import Permutation

POWER_ITERATIONS = 200
POWER_TOL = 1e-8
REFINE_ROUNDS = 2
MATCHERS = ("exhaustive", "local", "oracle")


class SpectralConvergenceWarning(RuntimeWarning):
    pass


def overlap(sigma_hat: Labeling, sigma: Labeling) -> float:
    """|sum_i sigma_hat_i sigma_i| / n."""
    a, b = np.asarray(getattr(sigma_hat, "array", sigma_hat)), np.asarray(getattr(sigma, "array", sigma))
    if a.shape != b.shape:
        raise ValueError("labelings have different sizes")
    if a.size == 0:
        return 1.0
    return abs(int(np.dot(a.astype(np.int64), b.astype(np.int64)))) / a.size


@dataclass(frozen=True)
class RecoveryResult:
    sigma_hat: Labeling
    overlap: float
    exact: bool
    permutations: tuple = ()
    matched: bool | None = None
    matched_region: int | None = None
    degenerate: bool = False
    converged: bool = True


def _result(sigma_hat: Labeling, truth: Labeling, **extra) -> RecoveryResult:
    ov = overlap(sigma_hat, truth)
    return RecoveryResult(sigma_hat, ov, ov == 1.0, **extra)


# single graph ----------------------------------------------------------------


def _adjacency(g: Graph) -> sp.csr_matrix:
    e = g.edges
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(g.n, g.n))


@dataclass(frozen=True)
class SpectralResult:
    vector: np.ndarray
    eigenvalue: float
    iterations: int
    converged: bool


def spectral_vector(g: Graph, seed=0, iterations: int = POWER_ITERATIONS,
                    tol: float = POWER_TOL) -> SpectralResult:
    """Leading (largest |eigenvalue|) eigenvector of ``A - rho (J - I)``.

    ``rho`` is the edge density, which removes the all-ones direction that
    would otherwise dominate; what remains on top is the community vector.
    """
    n = g.n
    A = _adjacency(g)
    rho = g.num_edges / (n * (n - 1) / 2) if n > 1 else 0.0

    def apply(x):
        return A @ x - rho * (x.sum() - x)

    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    lam, converged, it = 0.0, False, 0
    for it in range(1, iterations + 1):
        y = apply(x)
        norm = np.linalg.norm(y)
        if norm == 0.0:
            converged = True
            break
        lam = float(x @ y)
        y /= norm
        # sign-insensitive change in direction
        if min(np.linalg.norm(y - x), np.linalg.norm(y + x)) < tol:
            x, converged = y, True
            break
        x = y
    return SpectralResult(x, lam, it, converged)


def majority_refine(g: Graph, sigma: np.ndarray, assortative: bool,
                    rounds: int = REFINE_ROUNDS) -> np.ndarray:
    """Synchronous neighbour-majority relabelling; a tied vote keeps the current label."""
    A = _adjacency(g)
    sigma = np.asarray(sigma, dtype=np.int64).copy()
    for _ in range(rounds):
        votes = A @ sigma
        if not assortative:
            votes = -votes
        new = np.where(votes > 0, 1, np.where(votes < 0, -1, sigma))
        if np.array_equal(new, sigma):
            break
        sigma = new
    return sigma


def _recover(g: Graph, assortative: bool, seed, rounds: int) -> tuple[np.ndarray, bool]:
    sv = spectral_vector(g, seed)
    sigma = np.where(sv.vector >= 0, 1, -1).astype(np.int64)
    return majority_refine(g, sigma, assortative, rounds), sv.converged


def recover_single_detailed(g: Graph, params_hint: ModelParams, seed=0,
                            rounds: int = REFINE_ROUNDS) -> tuple[Labeling, bool]:
    """Like :func:`recover_single` but returns the convergence flag instead of warning."""
    if g.n < 4:
        raise ValueError("single-graph recovery needs n >= 4")
    sigma, converged = _recover(g, params_hint.alpha >= params_hint.beta, seed, rounds)
    return Labeling(tuple(int(v) for v in sigma)), converged


def recover_single(g: Graph, params_hint: ModelParams, seed=0, rounds: int = REFINE_ROUNDS) -> Labeling:
    """Spectral bipartition followed by ``rounds`` majority refinements.

    If power iteration stops before converging, the last iterate is used and
    a :class:`SpectralConvergenceWarning` is issued.
    """
    sigma, converged = recover_single_detailed(g, params_hint, seed, rounds)
    if not converged:
        warnings.warn("power iteration did not converge; using the last iterate",
                      SpectralConvergenceWarning, stacklevel=2)
    return sigma


# overlay pipelines ---------------------------------------------------------------


def estimate_permutation(g1: Graph, g2: Graph, matcher: str, truth: Permutation | None = None,
                         search: SearchConfig | None = None) -> Permutation:
    if matcher == "exhaustive":
        return match_exhaustive(g1, g2)
    if matcher == "local":
        return match_local_search(g1, g2, search)
    if matcher == "oracle":
        if truth is None:
            raise ValueError("the oracle matcher needs the true permutation")
        return truth
    raise ValueError(f"unknown matcher {matcher!r}; expected one of {MATCHERS}")


def recover_k(family: CorrelatedFamily, matcher: str = "exhaustive", seed=0,
              search: SearchConfig | None = None) -> RecoveryResult:
    """Match ``g1`` to every other graph, overlay all of them, and recover on the union."""
    if not family.g_relabelled:
        raise ValueError("recovery from a family needs at least two graphs")
    pis = tuple(estimate_permutation(family.g1, g, matcher, truth, search)
                for g, truth in zip(family.g_relabelled, family.pi_star))
    h = overlay_by_permutations(family.g1, list(zip(family.g_relabelled, pis)))
    sigma_hat, converged = recover_single_detailed(h, family.params, seed)
    matched = all(a == b for a, b in zip(pis, family.pi_star))
    return _result(sigma_hat, family.labels, permutations=pis, matched=matched, converged=converged)


def recover_pair(family: CorrelatedFamily, matcher: str = "exhaustive", seed=0,
                 search: SearchConfig | None = None) -> RecoveryResult:
    if family.params.k_graphs != 2:
        raise ValueError("recover_pair needs a family of exactly two graphs")
    return recover_k(family, matcher, seed, search)


def recover_two_stage(family: CorrelatedFamily, matcher: str = "exhaustive", seed=0,
                      search: SearchConfig | None = None) -> RecoveryResult:
    """Oracle-assisted diagnostic: recover on the correctly matched region, then vote.

    The region ``{i : pi_hat(i) = pi_star(i)}`` needs the ground truth, so this
    measures what the pipeline could do, not a usable estimator.
    """
    if family.params.k_graphs != 2:
        raise ValueError("the two-stage pipeline needs a family of exactly two graphs")
    pi_star = family.pi_star[0]
    pi_hat = estimate_permutation(family.g1, family.g2, matcher, pi_star, search)
    region = pi_hat.mapping == pi_star.mapping
    size = int(region.sum())
    n = family.params.n
    if size < 3:
        sigma = Labeling((1,) * n)
        return _result(sigma, family.labels, permutations=(pi_hat,), matched=False,
                       matched_region=size, degenerate=True)
    h = overlay_by_permutations(family.g1, [(family.g2, pi_hat)])
    idx = np.flatnonzero(region)
    sub = Graph.from_dense(h.dense[np.ix_(idx, idx)])
    assortative = family.params.alpha >= family.params.beta
    sub_sigma, converged = _recover(sub, assortative, seed, REFINE_ROUNDS)
    sigma = np.zeros(n, dtype=np.int64)
    sigma[idx] = sub_sigma
    # outside the region: one vote from the labelled neighbours in the overlay
    outside = ~region
    if outside.any():
        votes = _adjacency(h) @ sigma
        if not assortative:
            votes = -votes
        sigma[outside] = np.where(votes[outside] >= 0, 1, -1)
    return _result(Labeling(tuple(int(v) for v in sigma)), family.labels, permutations=(pi_hat,),
                   matched=size == n, matched_region=size, converged=converged)
