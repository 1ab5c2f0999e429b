"""Fast self-checks behind ``csbm validate``; each compares two independent routes."""

from __future__ import annotations

import numpy as np

from . import kernels
from .analysis import PgfParams, classify, mc_estimate, pgf_cycle, simulate_cycle
from .model import ModelParams, Scaling, generate_family, joint_law_from_rates, union_k_weights
from .perm import Permutation, mismatch_counts, mismatched_pair_counts
from .streams import derive


def _check_mismatch(seed, quick):
    rng = derive(seed, "validate", "mismatch")
    trials = 200 if quick else 2000
    for _ in range(trials):
        n = int(rng.integers(2, 9))
        sigma = rng.choice([1, -1], size=n)
        ps, p = Permutation.random(n, rng), Permutation.random(n, rng)
        mc = mismatch_counts(sigma, ps, p)
        if (mc.m_plus, mc.m_minus) != mismatched_pair_counts(sigma, ps, p):
            return False, f"closed form disagrees at n={n}"
    return True, f"{trials} random (labels, pi*, pi) triples"


def _check_backends(seed, quick):
    backends = kernels.available_backends()
    if len(backends) < 2:
        return True, "compiled backend not built; python only"
    rng = derive(seed, "validate", "backends")
    py, cy = backends["python"], backends["cython"]
    for _ in range(10 if quick else 50):
        n = int(rng.integers(2, 7))
        A = np.triu(rng.random((n, n)) < 0.5, 1)
        B = np.triu(rng.random((n, n)) < 0.5, 1)
        A, B = (A | A.T).astype(np.uint8), (B | B.T).astype(np.uint8)
        a, b = py.exhaustive_argmax(A, B), cy.exhaustive_argmax(A, B)
        if not (np.array_equal(a[0], b[0]) and a[1:] == b[1:]):
            return False, f"exhaustive search differs at n={n}"
        p1 = rng.permutation(n).astype(np.int64)
        p2 = p1.copy()
        if py.local_search(A, B, p1, 10**6) != cy.local_search(A, B, p2, 10**6) or not np.array_equal(p1, p2):
            return False, f"local search differs at n={n}"
    return True, "python and compiled kernels agree"


def _check_pgf(seed, quick):
    rng = derive(seed, "validate", "pgf")
    law = joint_law_from_rates(0.3, 0.1, 0.7)
    pattern = tuple(int(v) for v in rng.choice([1, -1], size=4))
    unit = pgf_cycle(PgfParams(1.0, 1.0, 1.0, law, pattern))
    if abs(unit - 1.0) > 1e-12:
        return False, f"unit-argument value {unit!r}"
    samples = simulate_cycle(law, pattern, 50_000 if quick else 1_000_000, rng)
    val = pgf_cycle(PgfParams(0.6, 1.5, 2.0, law, pattern))
    mean, se = mc_estimate(samples, 0.6, 1.5, 2.0)
    z = (val - mean) / se
    return abs(z) <= 4.0, f"recursion {val:.6f} vs simulation {mean:.6f} (z={z:+.2f})"


def _check_model(seed, quick):
    fam = generate_family(ModelParams(40, 0.3, 0.1, 0.6, 3, Scaling.RAW), derive(seed, "validate", "model"))
    fam.check_invariants()
    _, w = union_k_weights(0.5, 3)
    if abs(w.sum() - 1.0) > 1e-12:
        return False, "union weights do not sum to one"
    return True, "family subgraph/relabel invariants and splitter weights"


def _check_regions(seed, quick):
    got = [classify(8, 1, 0.5).region.value, classify(9, 0.5, 0.25).region.value,
           classify(16, 1, 0.75).region.value, classify(3, 3, 0.5).region.value]
    want = ["Cyan", "Yellow", "Green", "Red"]
    return got == want, ", ".join(got)


CHECKS = (
    ("mismatch counts", _check_mismatch),
    ("kernel backends", _check_backends),
    ("cycle generating function", _check_pgf),
    ("family invariants", _check_model),
    ("region examples", _check_regions),
)


def run_checks(seed: int = 0, quick: bool = True):
    for name, fn in CHECKS:
        try:
            passed, detail = fn(seed, quick)
        except Exception as exc:
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        yield name, bool(passed), detail
