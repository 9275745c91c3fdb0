import math

import pytest

from geostrat.centrality import CentralityConfig, betweenness_all, degree_all
from geostrat.errors import ScenarioError, ValidationError
from geostrat.fragmentation import (
    RelayCoreSpec,
    build_relay_core_graph,
    fragment_city,
    merge_cities,
    relay_betweenness,
    relay_degree,
    relay_ids,
    relay_strategic,
    sweep,
)
from oracles import brute_betweenness

UNWEIGHTED = CentralityConfig(theta=0.0)


def test_closed_forms():
    assert relay_degree(RelayCoreSpec(2, 3, 1)) == 6
    assert relay_degree(RelayCoreSpec(2, 1, 1)) == 2
    assert relay_degree(RelayCoreSpec(3, 4, 2)) == 13
    assert relay_betweenness(RelayCoreSpec(2, 3, 1)) == 9.0
    assert relay_betweenness(RelayCoreSpec(3, 2, 2)) == 6.0
    assert relay_betweenness(RelayCoreSpec(2, 1, 1)) == 1.0


def test_strategic_exact_and_approx():
    exact, approx = relay_strategic(RelayCoreSpec(2, 3, 1))
    assert exact == pytest.approx(1.5, rel=1e-12)
    assert approx == pytest.approx(1.5, rel=1e-12)
    # K=1 makes the approximation exact for any (M, N): B/D = C(M,2)N^2/(MN)
    exact, approx = relay_strategic(RelayCoreSpec(2, 100, 1))
    assert exact == pytest.approx(50.0, rel=1e-12)
    assert approx == pytest.approx(50.0, rel=1e-12)
    # K ~ N degrades the approximation
    exact, approx = relay_strategic(RelayCoreSpec(2, 3, 3))
    assert exact == pytest.approx(0.375, rel=1e-12)
    assert approx == pytest.approx(0.5, rel=1e-12)


def test_spec_validation():
    with pytest.raises(ValidationError):
        RelayCoreSpec(1, 3, 1)
    with pytest.raises(ValidationError):
        RelayCoreSpec(2, 0, 1)
    with pytest.raises(ValidationError):
        RelayCoreSpec(2, 3, 0)


def test_build_relay_core_counts():
    g = build_relay_core_graph(RelayCoreSpec(2, 3, 1))
    assert len(g.cities) == 7
    assert len(g.edges) == 2 * math.comb(3, 2) + 6 + 0 == 12
    g2 = build_relay_core_graph(RelayCoreSpec(2, 3, 2))
    assert len(g2.cities) == 8
    assert len(g2.edges) == 6 + 12 + 1 == 19


def test_computed_centrality_matches_formulas():
    spec = RelayCoreSpec(2, 3, 1)
    g = build_relay_core_graph(spec)
    rid = relay_ids(spec)[0]
    assert degree_all(g)[rid] == 6
    b = betweenness_all(g, UNWEIGHTED)
    assert b[rid] == 9.0
    # cross-check with the brute-force path enumerator
    oracle = brute_betweenness(g, theta=0.0)
    assert oracle[rid] == 9.0


def test_sweep_formula_equivalence_sample():
    rows = sweep([2, 3], [1, 2, 3], [1, 2])
    for m, n, k, d_f, d_c, b_f, b_c, s_exact, s_approx in rows:
        assert d_c == d_f
        assert b_c == pytest.approx(b_f, rel=1e-12, abs=1e-12)
        assert s_exact == pytest.approx(b_f / d_f, rel=1e-12)
    # monotonicity over this sample grid: S_exact decreasing in K, increasing in N
    by_mn = {}
    for m, n, k, *_rest, s_exact, _s_approx in rows:
        by_mn.setdefault((m, n), []).append((k, s_exact))
    for series in by_mn.values():
        vals = [s for _, s in sorted(series)]
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_fragment_relay_halves_betweenness():
    spec = RelayCoreSpec(2, 3, 1)
    g = build_relay_core_graph(spec)
    rid = relay_ids(spec)[0]
    g2 = fragment_city(g, rid, 2)
    assert len(g2.cities) == 8
    b = betweenness_all(g2, UNWEIGHTED)
    new_ids = sorted(set(c.id for c in g2.cities) - set(c.id for c in g.cities))
    assert len(new_ids) == 2
    for nid in new_ids:
        assert b[nid] == pytest.approx(4.5, rel=1e-12)
    # matches Eq-style closed form for K=2 and the brute-force oracle
    assert relay_betweenness(RelayCoreSpec(2, 3, 2)) == 4.5
    oracle = brute_betweenness(g2, theta=0.0)
    for nid in new_ids:
        assert oracle[nid] == pytest.approx(4.5, rel=1e-12)


def test_fragment_degree0_gives_clique():
    g = build_relay_core_graph(RelayCoreSpec(2, 1, 1))
    from geostrat.graph import City, SpatialGraph
    iso = City(id=99, name="iso", country="synthetic", province=None,
               lat=1.0, lon=1.0, population=8.0)
    g = SpatialGraph.create(list(g.cities) + [iso], g.edges, g.config)
    g2 = fragment_city(g, 99, 3)
    new_ids = sorted(set(c.id for c in g2.cities) - set(c.id for c in g.cities))
    assert len(new_ids) == 3
    deg = degree_all(g2)
    assert all(deg[i] == 2 for i in new_ids)
    assert all(g2.city(i).population == pytest.approx(8.0 / 3) for i in new_ids)


def test_fragment_then_merge_round_trip():
    spec = RelayCoreSpec(2, 3, 1)
    g = build_relay_core_graph(spec)
    rid = relay_ids(spec)[0]
    s_before = betweenness_all(g, UNWEIGHTED)[rid] / degree_all(g)[rid]
    g2 = fragment_city(g, rid, 3)
    new_ids = sorted(set(c.id for c in g2.cities) - set(c.id for c in g.cities))
    g3 = merge_cities(g2, new_ids)
    merged_id = max(c.id for c in g3.cities)
    assert g3.city(merged_id).population == pytest.approx(1.0, rel=1e-12)
    s_after = betweenness_all(g3, UNWEIGHTED)[merged_id] / degree_all(g3)[merged_id]
    assert s_after == pytest.approx(s_before, abs=1e-9)
    assert len(g3.cities) == len(g.cities)
    assert len(g3.edges) == len(g.edges)


def test_merge_colocated_cities_sums_population():
    from geostrat.graph import City, GraphConfig, SpatialGraph
    cities = [City(id=1, name="a", country="X", province=None, lat=10.0, lon=10.0,
                   population=30_000.0),
              City(id=2, name="b", country="X", province=None, lat=10.0, lon=10.0,
                   population=20_000.0)]
    g = SpatialGraph.create(cities, [], GraphConfig())
    g2 = merge_cities(g, [1, 2])
    assert len(g2.cities) == 1
    merged = g2.cities[0]
    assert merged.population == 50_000.0
    assert merged.lat == pytest.approx(10.0, abs=1e-9)
    assert merged.lon == pytest.approx(10.0, abs=1e-9)


def test_fragment_and_merge_argument_errors():
    g = build_relay_core_graph(RelayCoreSpec(2, 2, 1))
    with pytest.raises(ScenarioError):
        fragment_city(g, 0, 1)
    with pytest.raises(ScenarioError):
        fragment_city(g, 12345, 2)
    with pytest.raises(ScenarioError):
        merge_cities(g, [0])
    with pytest.raises(ScenarioError):
        merge_cities(g, [0, 999])


def test_approximation_bound_over_grid():
    for m in (2, 3, 4):
        for n in range(1, 7):
            for k in range(1, 5):
                exact, approx = relay_strategic(RelayCoreSpec(m, n, k))
                assert abs(exact - approx) / exact <= k / (m * n) + 1e-12


def test_strategic_monotonicity_over_grid():
    for m in (2, 3, 4):
        for k in range(1, 5):
            series = [relay_strategic(RelayCoreSpec(m, n, k))[0] for n in range(1, 7)]
            assert all(a < b for a, b in zip(series, series[1:]))
        for n in range(1, 7):
            series = [relay_strategic(RelayCoreSpec(m, n, k))[0] for k in range(1, 5)]
            assert all(a > b for a, b in zip(series, series[1:]))
