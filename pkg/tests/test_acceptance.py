"""End-to-end acceptance checks, one test per criterion, each reporting a PASS/FAIL line."""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from csbm.analysis import Region, classify, mc_estimate, pgf_cycle, PgfParams, phase_grid, simulate_cycle
from csbm.community import overlap, recover_pair, recover_single_detailed
from csbm.harness import ExperimentConfig, run_sweep, write_csv
from csbm.matching import exhaustive_search, map_argmax_set, match_exhaustive
from csbm.model import (Labeling, ModelParams, Scaling, edge_joint_law, generate_family,
                        joint_law_from_rates, sample_labeling, sample_sbm_rates, split_union_k,
                        split_union_pair, subsample, union_k_weights)
from csbm.perm import Permutation, mismatch_counts
from csbm.streams import derive

RAW = Scaling.RAW
MASTER = 20261016


@pytest.fixture
def report(capsys):
    start = time.perf_counter()

    def emit(label, passed, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if passed else 'FAIL'}] {label}: {detail} "
                  f"({time.perf_counter() - start:.1f}s)")
        assert passed, detail

    return emit


def pair_types(labels):
    s = labels.array
    iu = np.triu_indices(len(s), 1)
    return iu, (s[:, None] == s[None, :])[iu]


def cell_counts(a_dense, b_dense, iu, mask):
    a, b = a_dense[iu][mask].astype(int), b_dense[iu][mask].astype(int)
    return np.bincount(2 * a + b, minlength=4)


def test_criterion_01_mismatch_closed_form(report):
    rng = np.random.default_rng(derive(MASTER, "c1", "labels").integers(2**63))
    checked = 0
    for n in range(2, 8):
        ident = Permutation.identity(n)
        labelings = rng.choice([1, -1], size=(20, n))
        pairs = list(itertools.combinations(range(n), 2))
        for mapping in itertools.permutations(range(n)):
            pi = Permutation(mapping)
            for sigma in labelings:
                mc = mismatch_counts(sigma, ident, pi)
                plus = minus = 0
                for i, j in pairs:
                    if {mapping[i], mapping[j]} != {i, j}:
                        if sigma[i] == sigma[j]:
                            plus += 1
                        else:
                            minus += 1
                if (mc.m_plus, mc.m_minus) != (plus, minus):
                    report("1 mismatch counts", False, f"n={n} pi={mapping} sigma={sigma.tolist()}")
                checked += 1
    report("1 mismatch counts", True, f"{checked} (permutation, labeling) cases, all exact")


def test_criterion_02_joint_law(report):
    P = ModelParams(300, 0.2, 0.05, 0.5, scaling=RAW)
    law = edge_joint_law(P)
    counts = {True: np.zeros(4, dtype=np.int64), False: np.zeros(4, dtype=np.int64)}
    for t in range(2000):
        fam = generate_family(P, derive(MASTER, "c2", t, "family"))
        iu, intra = pair_types(fam.labels)
        a, b = fam.g1.dense, fam.g2_prime.dense
        for kind in (True, False):
            counts[kind] += cell_counts(a, b, iu, intra if kind else ~intra)
    worst = 0.0
    for kind in (True, False):
        total = counts[kind].sum()
        want = law.table(kind).ravel()
        freq = counts[kind] / total
        se = np.sqrt(want * (1 - want) / total)
        worst = max(worst, float(np.max(np.abs(freq - want) / se)))
    report("2 joint-law fidelity", worst <= 3.0, f"largest deviation {worst:.2f} SE over 8 cells")


def test_criterion_03_splitters(report):
    n, p, q, s = 300, 0.3, 0.1, 0.5
    P = ModelParams(n, p, q, s, scaling=RAW)
    pvals = []
    for K in (2, 3):
        z = 1 - (1 - s) ** K
        direct = np.zeros(2 ** K, dtype=np.int64)
        split = np.zeros(2 ** K, dtype=np.int64)
        slots = 0
        for t in range(3):
            rng = derive(MASTER, "c3", K, t)
            labels = sample_labeling(P, rng)
            parent = sample_sbm_rates(n, p, q, labels, rng)
            kids = [subsample(parent, s, rng) for _ in range(K)]
            h = sample_sbm_rates(n, p * z, q * z, labels, rng)
            parts = list(split_union_pair(h, s, rng)) if K == 2 else split_union_k(h, s, K, rng)
            iu, _ = pair_types(labels)
            code = lambda gs: sum(g.dense[iu].astype(np.int64) << (K - 1 - c) for c, g in enumerate(gs))
            direct += np.bincount(code(kids), minlength=2 ** K)
            split += np.bincount(code(parts), minlength=2 ** K)
            slots += len(iu[0])
        table = np.stack([direct, split])
        table = table[:, table.sum(axis=0) > 0]
        pvals.append(stats.chi2_contingency(table)[1])
    pats, w = union_k_weights(0.5, 3)
    r111 = float(w[(pats == 1).all(axis=1)][0])
    ok = min(pvals) > 1e-3 and abs(r111 - 1 / 7) <= 1e-12 and slots >= 10 ** 5
    report("3 splitter equivalence", ok,
           f"chi-square p (K=2, K=3) = {pvals[0]:.3g}, {pvals[1]:.3g}; {slots} slots each; r111 = {r111!r}")


def exact_cells(rate, s):
    r, s = Fraction(rate), Fraction(s)
    both, one = s * s * r, s * (1 - s) * r
    return [[1 - 2 * one - both, one], [one, both]]


def likelihood_argmax(A, B, sigma, p, q, s):
    n = len(sigma)
    cells = {True: exact_cells(p, s), False: exact_cells(q, s)}
    pairs = list(itertools.combinations(range(n), 2))
    best, arg = None, []
    for m in itertools.permutations(range(n)):
        val = Fraction(1)
        for i, j in pairs:
            val *= cells[bool(sigma[i] == sigma[j])][A[i, j]][B[m[i], m[j]]]
        if best is None or val > best:
            best, arg = val, [m]
        elif val == best:
            arg.append(m)
    return sorted(arg)


def test_criterion_04_map_equals_bayes(report):
    mismatches, total = [], 0
    for n in (4, 5, 6):
        for t in range(100):
            rng = derive(MASTER, "c4", n, t)
            P = ModelParams(n, float(rng.uniform(0.2, 0.9)), float(rng.uniform(0.05, 0.6)),
                            float(rng.uniform(0.3, 0.95)), scaling=RAW)
            fam = generate_family(P, rng)
            got = sorted(tuple(int(v) for v in r)
                         for r in map_argmax_set(fam.g1, fam.g2, fam.labels, edge_joint_law(P)))
            want = likelihood_argmax(fam.g1.dense.astype(int), fam.g2.dense.astype(int),
                                     fam.labels.array, P.alpha, P.beta, P.s)
            total += 1
            if got != want:
                mismatches.append((n, t))
    report("4 MAP = brute-force Bayes", not mismatches,
           f"{total - len(mismatches)}/{total} argmax sets identical")


def test_criterion_05_pgf_monte_carlo(report):
    rng = derive(MASTER, "c5")
    worst, unit_err = 0.0, 0.0
    for _ in range(10):
        L = int(rng.integers(2, 7))
        pattern = tuple(int(v) for v in rng.choice([1, -1], size=L))
        law = joint_law_from_rates(rng.uniform(0.05, 0.6), rng.uniform(0.01, 0.3), rng.uniform(0.2, 0.95))
        th, w, z = rng.uniform(0.5, 1.0), rng.uniform(1, 3), rng.uniform(1, 3)
        samples = simulate_cycle(law, pattern, 10 ** 6, rng)
        mean, se = mc_estimate(samples, th, w, z)
        worst = max(worst, abs(pgf_cycle(PgfParams(th, w, z, law, pattern)) - mean) / se)
        unit_err = max(unit_err, abs(pgf_cycle(PgfParams(1.0, 1.0, 1.0, law, pattern)) - 1.0))
    report("5 generating function vs simulation", worst <= 3.0 and unit_err <= 1e-12,
           f"largest deviation {worst:.2f} SE; unit-argument error {unit_err:.1e}")


def test_criterion_06_matching_monotone(report):
    svals = (0.3, 0.5, 0.7, 0.9, 1.0)
    rates = []
    asym_hits = asym_total = 0
    for k, s in enumerate(svals):
        P = ModelParams(8, 0.8, 0.2, s, scaling=RAW)
        hits = 0
        for t in range(200):
            fam = generate_family(P, derive(MASTER, "c6", k, t))
            ok = match_exhaustive(fam.g1, fam.g2) == fam.pi_star[0]
            hits += ok
            if s == 1.0 and exhaustive_search(fam.parent, fam.parent).n_maximizers == 1:
                asym_total += 1
                asym_hits += ok
        rates.append(hits / 200)
    rho = stats.spearmanr(svals, rates)[0]
    asym = asym_hits / asym_total
    report("6 matching monotone in s", rho > 0 and asym >= 0.95,
           f"rates {rates}, Spearman {rho:.3f}; s=1 asymmetric parents {asym_hits}/{asym_total}")


def test_criterion_07_connectivity(report):
    # alpha / beta = 4 with s^2 (alpha + beta) / 2 = c
    alpha, beta = 8.0, 2.0
    cs = (0.6, 0.8, 1.0, 1.2, 1.4)
    svals = [math.sqrt(2 * c / (alpha + beta)) for c in cs]
    cfg = ExperimentConfig(pipeline="intersection-connectivity", n=5000, alpha=alpha, beta=beta,
                           scaling="log", axes=[("s", svals)], trials=50, seed=MASTER)
    records = run_sweep(cfg)
    frac = [np.mean([r.connected for r in records if r.point == k]) for k in range(len(cs))]
    report("7 intersection connectivity", frac[0] < 0.1 and frac[-1] > 0.9,
           "connected fraction by c: " + ", ".join(f"{c}:{f:.2f}" for c, f in zip(cs, frac)))


def test_criterion_08_cyan_advantage(report):
    P = ModelParams(4000, 8, 1, 0.5)
    assert classify(8, 1, 0.5).region is Region.CYAN
    single = pair = 0
    for t in range(100):
        fam = generate_family(P, derive(MASTER, 0, t, "family"))
        sigma, _ = recover_single_detailed(fam.g1, P, seed=derive(MASTER, 0, t, "recover-single"))
        single += overlap(sigma, fam.labels) == 1.0
        pair += recover_pair(fam, "oracle", seed=derive(MASTER, 0, t, "recover-pair")).exact
    gap = pair - single
    report("8 cyan-region overlay advantage", gap >= 20,
           f"single {single}/100, overlay {pair}/100, gap {gap} points")


def oracle_region(a, b, s):
    d = abs(a ** 0.5 - b ** 0.5)
    band = 1e-12

    def beats(x, y):
        if y == float("inf"):
            return False
        return None if abs(x - y) <= band else x > y

    one = beats(d, (2 / s) ** 0.5) if s > 0 else False
    two = beats(d, (2 / (2 * s - s * s)) ** 0.5) if s > 0 else False
    feas = beats(s * s * (a + b), 2.0 * 1.0) if s > 0 else False
    if one is None or two is None:
        return "BoundaryIndeterminate"
    if one:
        return "Green"
    if not two:
        return "Red"
    if feas is None:
        return "BoundaryIndeterminate"
    return "Cyan" if feas else "Yellow"


def test_criterion_09_phase_grid(report):
    t0 = time.perf_counter()
    grid = np.linspace(0, 40, 100)
    bad = 0
    symmetric = diagonal = True
    for s in (0.25, 0.5, 0.75):
        reg = phase_grid("alpha", grid, "beta", grid, {"s": s}).regions()
        for iy, b in enumerate(grid):
            for ix, a in enumerate(grid):
                bad += reg[iy, ix] != oracle_region(a, b, s)
        symmetric &= bool((reg == reg.T).all())
        diagonal &= all(reg[i, i] == "Red" for i in range(len(grid)))
    elapsed = time.perf_counter() - t0
    report("9 phase-grid golden", bad == 0 and symmetric and diagonal and elapsed < 10,
           f"{3 * 100 * 100 - bad}/30000 cells agree; symmetric={symmetric}; red diagonal={diagonal}")


def test_criterion_10_determinism(report, tmp_path):
    cfgs = [
        ExperimentConfig(pipeline="match-exhaustive", n=8, trials=20, seed=MASTER,
                         axes=[("s", [0.5, 0.9])]),
        ExperimentConfig(pipeline="recover-two-stage", n=60, alpha=0.5, beta=0.05, s=0.8, matcher="local",
                         restarts=2, trials=6, seed=MASTER),
        ExperimentConfig(pipeline="pgf-validate", n=100, alpha=0.5, beta=0.2, s=0.6, trials=6,
                         pgf_samples=5000, seed=MASTER),
    ]
    identical = True
    for i, cfg in enumerate(cfgs):
        blobs = set()
        for threads in (1, 3, 8):
            path = tmp_path / f"{i}-{threads}.csv"
            write_csv(run_sweep(cfg, threads=threads), cfg, path)
            blobs.add(path.read_bytes())
        identical &= len(blobs) == 1
    report("10 determinism across thread counts", identical,
           f"{len(cfgs)} sweeps x threads 1/3/8 byte-identical={identical}")
