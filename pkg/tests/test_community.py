import numpy as np
import pytest
from hypothesis import given, strategies as st

import csbm.community as cm
from csbm.community import (RecoveryResult, SpectralConvergenceWarning, majority_refine, overlap,
                            recover_k, recover_pair, recover_single, recover_single_detailed,
                            recover_two_stage, spectral_vector)
from csbm.graph import Graph, union_graph
from csbm.matching import SearchConfig, exhaustive_search, match_exhaustive
from csbm.model import Labeling, ModelParams, Scaling, generate_family, overlay_by_permutations, sample_sbm
from csbm.perm import mismatch_counts
from csbm.streams import derive

RAW = Scaling.RAW
quiet = pytest.mark.filterwarnings("ignore::csbm.community.SpectralConvergenceWarning")


def labeling(signs):
    return Labeling(tuple(int(v) for v in signs))


# overlap ----------------------------------------------------------------------------


def test_overlap_examples():
    s = labeling([1, 1, -1, -1])
    assert overlap(s, s) == 1.0
    assert overlap(s.flipped(), s) == 1.0
    assert overlap(labeling([1, -1, -1, -1]), s) == 0.5


def test_overlap_size_mismatch():
    with pytest.raises(ValueError):
        overlap(labeling([1, 1]), labeling([1, 1, 1]))


@given(st.lists(st.sampled_from([1, -1]), min_size=1, max_size=40), st.integers(0, 2**32 - 1))
def test_overlap_symmetry_and_exactness(signs, seed):
    a = labeling(signs)
    b = labeling(np.random.default_rng(seed).choice([1, -1], size=len(signs)))
    v = overlap(a, b)
    assert 0.0 <= v <= 1.0
    assert v == overlap(a.flipped(), b) == overlap(b, a)
    assert (v == 1.0) == (a == b or a.flipped() == b)


# single graph ------------------------------------------------------------------------


def two_cliques(n):
    dense = np.zeros((n, n), dtype=bool)
    h = n // 2
    dense[:h, :h] = True
    dense[h:, h:] = True
    np.fill_diagonal(dense, False)
    return Graph.from_dense(dense), labeling([1] * h + [-1] * (n - h))


@pytest.mark.parametrize("n", [4, 10, 51])
def test_two_cliques_exact(n):
    g, truth = two_cliques(n)
    for seed in range(5):
        got = recover_single(g, ModelParams(n, 1.0, 0.0, scaling=RAW), seed=seed)
        assert overlap(got, truth) == 1.0


def test_recover_single_small_n_rejected():
    with pytest.raises(ValueError):
        recover_single(Graph.empty(3), ModelParams(3, 0.5, 0.1, scaling=RAW))


def test_recover_single_deterministic():
    P = ModelParams(300, 8, 1, 0.5)
    fam = generate_family(P, np.random.default_rng(0))
    assert recover_single(fam.g1, P, seed=3) == recover_single(fam.g1, P, seed=3)


def test_recover_single_rate_above_threshold():
    P = ModelParams(4000, 6.0, 0.5, 1.0)
    hits = 0
    for t in range(50):
        rng = derive(77, 0, t, "family")
        labels = Labeling(tuple(rng.choice(np.array([1, -1]), size=P.n)))
        g = sample_sbm(P, labels, rng)
        hits += overlap(recover_single(g, P, seed=derive(77, 0, t, "recover")), labels) == 1.0
    assert hits / 50 >= 0.8


@quiet
def test_recover_single_no_information():
    P = ModelParams(2000, 5.0, 5.0, 1.0)
    vals = []
    for t in range(5):
        fam = generate_family(P, derive(5, 0, t, "family"))
        vals.append(overlap(recover_single(fam.parent, P, seed=t), fam.labels))
    assert np.mean(vals) < 0.1


def test_disassortative_direction():
    # complete bipartite graph: edges only across communities
    n = 12
    truth = labeling([1] * 6 + [-1] * 6)
    dense = truth.array[:, None] != truth.array[None, :]
    g = Graph.from_dense(dense)
    got = recover_single(g, ModelParams(n, 0.0, 1.0, scaling=RAW), seed=1)
    assert overlap(got, truth) == 1.0


def test_majority_tie_keeps_label():
    g = Graph.from_edges(4, [(0, 1), (0, 2)])
    sigma = np.array([1, 1, -1, -1])
    out = majority_refine(g, sigma, assortative=True, rounds=1)
    assert out[0] == 1  # one +1 and one -1 neighbour
    assert out[3] == -1  # isolated vertex keeps its label


def test_nonconvergence_warns(monkeypatch):
    P = ModelParams(200, 5, 5, 1.0)
    fam = generate_family(P, np.random.default_rng(1))
    assert not spectral_vector(fam.parent, 0, iterations=2).converged
    monkeypatch.setattr(cm, "spectral_vector", lambda g, seed: spectral_vector(g, seed, iterations=2))
    with pytest.warns(SpectralConvergenceWarning):
        recover_single(fam.parent, P)
    _, converged = recover_single_detailed(fam.parent, P)
    assert not converged


# overlay pipelines -----------------------------------------------------------------


@quiet
def test_pair_s1_equals_single_on_parent():
    P = ModelParams(7, 0.6, 0.3, 1.0, scaling=RAW)
    rng = np.random.default_rng(2)
    done = 0
    while done < 5:
        fam = generate_family(P, rng)
        if exhaustive_search(fam.parent, fam.parent).n_maximizers != 1:
            continue
        res = recover_pair(fam, "exhaustive", seed=done)
        assert res.matched
        assert res.sigma_hat == recover_single(fam.parent, P, seed=done)
        done += 1


@quiet
def test_pair_factorization_on_matched_event():
    P = ModelParams(8, 0.8, 0.3, 0.9, scaling=RAW)
    seen = 0
    for t in range(30):
        fam = generate_family(P, derive(9, 0, t, "family"))
        res = recover_pair(fam, "exhaustive", seed=t)
        if res.matched:
            h_star = union_graph(fam.g1, fam.g2_prime)
            assert res.sigma_hat == recover_single(h_star, P, seed=t)
            seen += 1
    assert seen > 0


def test_oracle_overlay_is_true_union_and_edge_rates():
    P = ModelParams(200, 0.3, 0.1, 0.5, scaling=RAW)
    intra_hits = intra_total = 0
    for t in range(5):
        fam = generate_family(P, derive(10, 0, t, "family"))
        h = overlay_by_permutations(fam.g1, [(fam.g2, fam.pi_star[0])])
        assert h == union_graph(fam.g1, fam.g2_prime)
        same = fam.labels.same_community()
        iu = np.triu_indices(P.n, 1)
        intra_hits += int(h.dense[iu][same[iu]].sum())
        intra_total += int(same[iu].sum())
        res = recover_pair(fam, "oracle", seed=t)
        assert res.sigma_hat == recover_single(h, P, seed=t)
    rate = intra_hits / intra_total
    want = 0.3 * (1 - 0.5 ** 2)
    se = np.sqrt(want * (1 - want) / intra_total)
    assert abs(rate - want) < 4 * se


def test_k_overlay_edge_rate():
    P = ModelParams(200, 0.3, 0.1, 0.4, k_graphs=3, scaling=RAW)
    hits = total = 0
    for t in range(5):
        fam = generate_family(P, derive(11, 0, t, "family"))
        h = overlay_by_permutations(fam.g1, list(zip(fam.g_relabelled, fam.pi_star)))
        same = fam.labels.same_community()
        iu = np.triu_indices(P.n, 1)
        hits += int(h.dense[iu][same[iu]].sum())
        total += int(same[iu].sum())
        res = recover_k(fam, "oracle", seed=t)
        assert res.matched and res.sigma_hat == recover_single(h, P, seed=t)
    want = 0.3 * (1 - 0.6 ** 3)
    assert abs(hits / total - want) < 4 * np.sqrt(want * (1 - want) / total)


def test_recover_k_equals_pair_for_two_graphs():
    P = ModelParams(8, 0.7, 0.2, 0.8, scaling=RAW)
    for t in range(5):
        fam = generate_family(P, derive(12, 0, t, "family"))
        assert recover_k(fam, "exhaustive", seed=t) == recover_pair(fam, "exhaustive", seed=t)


def test_pipeline_errors():
    fam3 = generate_family(ModelParams(8, 0.5, 0.2, 0.8, k_graphs=3, scaling=RAW), np.random.default_rng(0))
    with pytest.raises(ValueError):
        recover_pair(fam3)
    with pytest.raises(ValueError):
        recover_two_stage(fam3)
    fam = generate_family(ModelParams(8, 0.5, 0.2, 0.8, scaling=RAW), np.random.default_rng(0))
    with pytest.raises(ValueError):
        recover_pair(fam, "bogus")


def test_pipeline_seeded_determinism():
    P = ModelParams(60, 0.5, 0.1, 0.8, scaling=RAW)
    fam = generate_family(P, np.random.default_rng(3))
    cfg = SearchConfig(restarts=2, seed=5)
    a = recover_two_stage(fam, "local", seed=4, search=cfg)
    b = recover_two_stage(fam, "local", seed=4, search=cfg)
    assert a == b


# two-stage ------------------------------------------------------------------------


def test_two_stage_perfect_matching_equals_pair():
    P = ModelParams(300, 8, 1, 0.6)
    for t in range(3):
        fam = generate_family(P, derive(13, 0, t, "family"))
        a = recover_two_stage(fam, "oracle", seed=t)
        b = recover_pair(fam, "oracle", seed=t)
        assert a.sigma_hat == b.sigma_hat and a.matched_region == P.n and not a.degenerate


def test_two_stage_region_count():
    P = ModelParams(40, 0.3, 0.05, 0.6, scaling=RAW)
    for t in range(5):
        fam = generate_family(P, derive(14, 0, t, "family"))
        res = recover_two_stage(fam, "local", seed=t, search=SearchConfig(restarts=1, seed=t))
        mc = mismatch_counts(fam.labels, fam.pi_star[0], res.permutations[0])
        assert res.matched_region == P.n - (mc.k1 + mc.k2)


def test_two_stage_degenerate():
    # empty graphs: the exhaustive matcher returns the identity, which is almost never pi_star
    P = ModelParams(8, 0.0, 0.0, 0.5, scaling=RAW)
    rng = np.random.default_rng(15)
    while True:
        fam = generate_family(P, rng)
        if int((fam.pi_star[0].mapping == np.arange(8)).sum()) < 3:
            break
    res = recover_two_stage(fam, "exhaustive")
    assert res.degenerate and res.matched_region < 3
    assert isinstance(res, RecoveryResult)
