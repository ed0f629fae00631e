import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ffast.crt import crt_reconstruct
from ffast.decoder import full_pipeline
from ffast.frontend import FrontendPlan
from ffast.graphs import (
    AliasGraph,
    balls_and_bins_graph,
    crt_graph,
    empirical_degree_distribution,
    ensemble_equivalence_check,
    expander_check,
    peel_graph,
    row_major_labels,
    trapping_pair,
)
from ffast.spectrum import random_sparse_spectrum, random_support

EXAMPLE_GRAPH = crt_graph([1, 3, 5, 10, 13], 20, [4, 5])


def naive_peel(adj):
    # set-based reference peeler, one variable at a time
    alive = set(range(adj.shape[0]))
    changed = True
    while changed and alive:
        changed = False
        for v in sorted(alive):
            for s in range(adj.shape[1]):
                if sum(adj[u, s] == adj[v, s] for u in alive) == 1:
                    alive.discard(v)
                    changed = True
                    break
    return len(alive)


def test_alias_graph_validation():
    with pytest.raises(ValueError):
        AliasGraph(1, (4, 5), np.array([[4, 0]]))
    with pytest.raises(ValueError):
        AliasGraph(2, (4, 5), np.array([[0, 0]]))


def test_balls_and_bins():
    assert balls_and_bins_graph(0, [4, 5], 0).adjacency.shape == (0, 2)
    g = balls_and_bins_graph(5, [4, 5], 1)
    assert g.d == 2 and sum(g.stage_sizes) == 9
    assert np.array_equal(g.adjacency, balls_and_bins_graph(5, [4, 5], 1).adjacency)
    big = balls_and_bins_graph(10**4, [4073] * 3, 2)
    for i in range(3):
        assert big.check_degrees(i).mean() == pytest.approx(10**4 / 4073, rel=0.05)


def test_crt_graph_examples():
    assert EXAMPLE_GRAPH.adjacency[3].tolist() == [2, 0]  # location 10
    assert crt_graph([0], 60, [3, 4, 5]).adjacency.tolist() == [[0, 0, 0]]
    with pytest.raises(ValueError):
        crt_graph([20], 20, [4, 5])
    with pytest.raises(ValueError):
        crt_graph([1], 20, [3])


def test_row_major_labels_match_residue_pairs():
    factors = [3, 4, 5]
    n = 60
    g = crt_graph(np.arange(n), n, [12, 20, 15])
    lab = row_major_labels(g, factors, 2)
    for v in range(n):
        r = [v % p for p in factors]
        want = [r[0] * 4 + r[1], r[1] * 5 + r[2], r[2] * 3 + r[0]]
        assert lab.adjacency[v].tolist() == want
    # relabelling is a bijection per stage, so it changes nothing structural
    for i in range(3):
        pairs = set(zip(g.adjacency[:, i].tolist(), lab.adjacency[:, i].tolist()))
        assert len(pairs) == len({a for a, _ in pairs}) == len({b for _, b in pairs})
        # inverse: the check index is the CRT lift of the residue pair
        for c in range(g.stage_sizes[i]):
            p, q = factors[i], factors[(i + 1) % 3]
            assert crt_reconstruct([c % p, c % q], [p, q]) == c


def test_peel_graph_examples():
    out = peel_graph(EXAMPLE_GRAPH)
    assert out.decoded_count == 5 and out.residual_variables == 0 and out.success
    twin = AliasGraph(2, (4, 5), np.array([[1, 2], [1, 2]]))
    out = peel_graph(twin)
    assert (out.decoded_count, out.residual_variables) == (0, 2)
    empty = peel_graph(balls_and_bins_graph(0, [3, 4], 0))
    assert empty.success and empty.iterations == 1


@given(st.integers(0, 2**32 - 1), st.integers(0, 40), st.lists(st.integers(2, 12), min_size=2, max_size=4))
@settings(max_examples=150, deadline=None)
def test_peel_graph_matches_naive(seed, k, sizes):
    g = balls_and_bins_graph(k, sizes, seed)
    out = peel_graph(g)
    assert out.decoded_count + out.residual_variables == k
    assert out.residual_variables == naive_peel(g.adjacency)
    assert peel_graph(g, stage_order="descending").residual_variables == out.residual_variables


def test_peel_graph_above_threshold():
    k = 5000
    f = int(0.5 * k)
    ok = sum(peel_graph(balls_and_bins_graph(k, [f, f + 1, f + 3], s)).success for s in range(100))
    assert ok >= 99


def test_expander_examples():
    twin = AliasGraph(2, (4, 5), np.array([[1, 2], [1, 2]]))
    r = expander_check(twin, 2)
    assert not r.holds and r.witness == (0, 1) and r.exhaustive
    r = expander_check(EXAMPLE_GRAPH, 5)
    assert r.holds and r.exhaustive and r.subsets_checked == 31


def test_expander_random_small_graphs():
    # for pairs, expansion fails exactly when two variables share all three checks:
    # a birthday problem over 7*8*9 neighbour tuples
    trials = 400
    holds = sum(expander_check(balls_and_bins_graph(20, [7, 8, 9], s), 2).holds for s in range(trials))
    p = math.prod(1 - i / 504 for i in range(20))
    assert abs(holds / trials - p) < 4 * math.sqrt(p * (1 - p) / trials)


def test_expander_sampled_branch():
    g = balls_and_bins_graph(200, [400, 401, 403], 0)
    r = expander_check(g, 6, samples=200, exhaustive_limit=10)
    assert not r.exhaustive and r.miss_bound == pytest.approx(3 / 200)


def test_degree_distribution():
    r = empirical_degree_distribution(balls_and_bins_graph(0, [5, 6], 0))
    assert all(h.tolist() == [f] for h, f in zip(r.histograms, [5, 6]))
    k = 10**5
    f = int(0.4073 * k)
    r = empirical_degree_distribution(balls_and_bins_graph(k, [f, f + 1, f + 3], 0))
    for m, v in zip(r.means, r.variances):
        assert m == pytest.approx(1 / 0.4073, rel=0.02)
        assert v == pytest.approx(1 / 0.4073, rel=0.05)
    assert r.max_edge_deviation < 0.01
    r = empirical_degree_distribution(balls_and_bins_graph(k, [k, k + 1, k + 3], 0))
    assert r.means[0] == pytest.approx(1.0, rel=0.01)


def test_ensemble_equivalence():
    assert ensemble_equivalence_check(5, 60, [3, 4, 5]).all_equal_P
    r = ensemble_equivalence_check(5, 120, [3, 4, 5])
    assert r.P == 2 and r.all_equal_P and r.min_preimages == r.max_preimages == 2
    assert ensemble_equivalence_check(3, 20, [4, 5]).P == 1
    with pytest.raises(ValueError):
        ensemble_equivalence_check(3, 50, [3, 4, 5])
    with pytest.raises(ValueError):
        ensemble_equivalence_check(3, 48, [4, 6])
    # exhaustive count against a plain tuple scan
    counts = {}
    for v in range(120):
        counts[(v % 3, v % 4, v % 5)] = counts.get((v % 3, v % 4, v % 5), 0) + 1
    assert set(counts.values()) == {2} and len(counts) == 60


def test_crt_neighbours_uniform_chi_square():
    r = ensemble_equivalence_check(10, 420, [3, 4, 5, 7], trials=400, seed=5)
    assert r.p_value > 1e-3


def test_trapping_pair():
    assert trapping_pair(7, 120, [3, 4, 5]) == (7, 67)
    with pytest.raises(ValueError):
        trapping_pair(7, 60, [3, 4, 5])


def test_graph_dump(tmp_path):
    EXAMPLE_GRAPH.dump_csv(tmp_path / "g.csv")
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0] == "variable,stage,check" and lines[1 + 2 * 3 : 3 + 2 * 3] == ["3,0,2", "3,1,0"]


@pytest.mark.parametrize("seed", range(40))
def test_graph_and_signal_decoding_agree(seed):
    n, sizes = 7980, [19, 20, 21]
    X = random_sparse_spectrum(n, 36, seed=seed)
    g = peel_graph(crt_graph(X.locations, n, sizes))
    rep = full_pipeline(X, FrontendPlan.from_sizes(n, sizes))
    assert g.success == bool(rep.exact)


def test_less_sparse_stopping_sets_at_least_eight():
    # d=3 pair-product stages, P=1; record every stalled outcome
    factors = [11, 12, 13]
    n = math.prod(factors)
    sizes = [132, 156, 143]
    residuals = []
    for s in range(300):
        out = peel_graph(crt_graph(random_support(n, 300, s), n, sizes))
        if not out.success:
            residuals.append(out.residual_variables)
    assert residuals and min(residuals) >= 8


def test_minimum_stopping_set_is_a_cube():
    # the 2x2x2 residue cube is a stopping set of size 8 in the pair-product design
    factors = [11, 12, 13]
    n = math.prod(factors)
    cube = [crt_reconstruct(list(r), factors) for r in itertools.product([0, 1], [0, 1], [0, 1])]
    out = peel_graph(crt_graph(cube, n, [132, 156, 143]))
    assert out.residual_variables == 8
