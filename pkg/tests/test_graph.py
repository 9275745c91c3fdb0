import json
import math

import numpy as np
import pytest

from geostrat import geometry, io
from geostrat.errors import DegeneratePairError, ValidationError
from geostrat.graph import (
    City,
    Edge,
    GraphConfig,
    SpatialGraph,
    build_graph,
    build_graph_report,
    connected_components,
    gravity_flow,
)

# latitude degrees spanning a given north-south great-circle distance
DEG_PER_KM = 180.0 / (math.pi * geometry.EARTH_RADIUS_KM)


def make_city(cid, lat, lon, pop=20_000.0, name=None):
    return City(id=cid, name=name or f"c{cid}", country="X", province=None,
                lat=lat, lon=lon, population=pop)


def test_city_validation():
    with pytest.raises(ValidationError):
        make_city(1, 91.0, 0.0)
    with pytest.raises(ValidationError):
        City(id=1, name="x", country="X", province=None, lat=0, lon=0,
             population=-5.0)


def test_gravity_flow_values():
    assert gravity_flow(1, 1, 1) == 1.0
    # 1e5 * 5e4 / 1e4, evaluated directly
    assert gravity_flow(100_000, 50_000, 100) == pytest.approx(5.0e5)
    # inverse-square scaling
    f1 = gravity_flow(7000, 7000, 123.0)
    f2 = gravity_flow(7000, 7000, 246.0)
    assert f1 == pytest.approx(4.0 * f2, rel=1e-12)
    with pytest.raises(DegeneratePairError):
        gravity_flow(1, 1, 0)


def test_build_pair_inside_and_outside_radius():
    inside = [make_city(1, 0.0, 0.0), make_city(2, 499.0 * DEG_PER_KM, 0.0)]
    outside = [make_city(1, 0.0, 0.0), make_city(2, 501.0 * DEG_PER_KM, 0.0)]
    cfg = GraphConfig(radius_km=500.0, min_population=10_000.0)
    assert len(build_graph(inside, cfg).edges) == 1
    assert len(build_graph(outside, cfg).edges) == 0


def test_build_line_of_three_forms_path():
    step = 400.0 * DEG_PER_KM
    cities = [make_city(i + 1, i * step, 0.0) for i in range(3)]
    g = build_graph(cities, GraphConfig())
    assert [(e.a, e.b) for e in g.edges] == [(1, 2), (2, 3)]


def test_min_population_filters_nodes_but_radius_does_not():
    cities = [make_city(1, 0, 0, pop=5000.0), make_city(2, 1.0, 0), make_city(3, 2.0, 0)]
    g = build_graph(cities, GraphConfig(min_population=10_000.0))
    assert [c.id for c in g.cities] == [2, 3]
    tiny = build_graph(cities, GraphConfig(min_population=10_000.0, radius_km=0.001))
    assert [c.id for c in tiny.cities] == [2, 3]  # degree-0 nodes retained


def test_duplicate_ids_rejected():
    cities = [make_city(1, 0, 0), make_city(1, 1, 1)]
    with pytest.raises(ValidationError, match="duplicate"):
        build_graph(cities, GraphConfig())


def test_colocated_reject_and_merge():
    cities = [make_city(1, 5.0, 5.0, pop=30_000), make_city(2, 5.0, 5.0, pop=20_000),
              make_city(3, 6.0, 5.0)]
    with pytest.raises(DegeneratePairError, match=r"\[\[1, 2\]\]"):
        build_graph(cities, GraphConfig())
    g, report = build_graph_report(cities, GraphConfig(colocated="merge"))
    assert [c.id for c in g.cities] == [1, 3]
    assert g.city(1).population == 50_000
    assert report.n_merged_away == 1
    assert report.colocated_groups == [[1, 2]]


def test_flow_consistency_and_edge_invariants():
    rng = np.random.default_rng(7)
    cities = [make_city(i, float(la), float(lo), pop=float(p))
              for i, (la, lo, p) in enumerate(zip(
                  rng.uniform(-20, 20, 40), rng.uniform(-20, 20, 40),
                  rng.uniform(10_000, 1e6, 40)))]
    g = build_graph(cities, GraphConfig(radius_km=800.0))
    assert len(g.edges) > 0
    for e in g.edges:
        assert e.a < e.b
        assert 0 < e.distance_km <= 800.0
        ca, cb = g.city(e.a), g.city(e.b)
        recomputed = gravity_flow(ca.population, cb.population, e.distance_km)
        assert abs(recomputed - e.flow) <= 1e-12 * e.flow


def test_build_invariant_under_input_order_and_monotone_in_config():
    rng = np.random.default_rng(13)
    cities = [make_city(i, float(la), float(lo), pop=float(p))
              for i, (la, lo, p) in enumerate(zip(
                  rng.uniform(-30, 30, 60), rng.uniform(-30, 30, 60),
                  rng.uniform(5_000, 1e6, 60)))]
    g1 = build_graph(cities, GraphConfig())
    g2 = build_graph(list(reversed(cities)), GraphConfig())
    assert g1.edges == g2.edges and g1.cities == g2.cities

    small = build_graph(cities, GraphConfig(radius_km=300.0))
    big = build_graph(cities, GraphConfig(radius_km=600.0))
    assert {(e.a, e.b) for e in small.edges} <= {(e.a, e.b) for e in big.edges}

    strict = build_graph(cities, GraphConfig(min_population=50_000.0))
    loose = build_graph(cities, GraphConfig(min_population=5_000.0))
    assert {(e.a, e.b) for e in strict.edges} <= {(e.a, e.b) for e in loose.edges}
    assert {c.id for c in strict.cities} <= {c.id for c in loose.cities}


def test_connected_components_ordering():
    empty = SpatialGraph.create([], [], GraphConfig())
    assert connected_components(empty) == []
    cities = [make_city(i, 0.0, i * 0.01, pop=1.0) for i in range(6)]
    edges = [Edge(a=0, b=1, distance_km=1, flow=1), Edge(a=1, b=2, distance_km=1, flow=1),
             Edge(a=3, b=4, distance_km=1, flow=1), Edge(a=4, b=5, distance_km=1, flow=1),
             Edge(a=3, b=5, distance_km=1, flow=1)]
    g = SpatialGraph.create(cities, edges, GraphConfig(min_population=0.0, flow_rule="uniform", metric="none"))
    comps = connected_components(g)
    assert comps == [{0, 1, 2}, {3, 4, 5}]
    path = SpatialGraph.create(cities[:3], edges[:2], GraphConfig(min_population=0.0, flow_rule="uniform", metric="none"))
    assert connected_components(path) == [{0, 1, 2}]


def test_graph_export_import_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    cities = [make_city(i, float(la), float(lo), pop=float(p))
              for i, (la, lo, p) in enumerate(zip(
                  rng.uniform(-10, 10, 30), rng.uniform(-10, 10, 30),
                  rng.uniform(10_000, 1e6, 30)))]
    g = build_graph(cities, GraphConfig())
    path = str(tmp_path / "g.edges")
    io.write_graph(g, path)
    g2 = io.read_graph(path)
    assert g2.cities == g.cities
    assert g2.edges == g.edges
    assert g2.config == g.config
    # byte-identical re-export
    io.write_graph(g2, str(tmp_path / "g2.edges"))
    assert (tmp_path / "g.edges").read_bytes() == (tmp_path / "g2.edges").read_bytes()
    sidecar = json.loads((tmp_path / "g.edges.json").read_text())
    assert sidecar["counts"] == {"n_cities": len(g.cities), "n_edges": len(g.edges)}


def _square_island(lon0, lon1, lat0=-5.0, lat1=5.0):
    return {"type": "Polygon", "coordinates": [[
        [lon0, lat0], [lon1, lat0], [lon1, lat1], [lon0, lat1], [lon0, lat0]]]}


def test_landmask_sea_filter(tmp_path):
    # two islands separated by a sea gap much wider than 50 km, plus a
    # contiguous landmass pair for contrast
    mask = {"type": "FeatureCollection", "features": [
        {"type": "Feature", "properties": {}, "geometry": _square_island(-1.0, 0.5)},
        {"type": "Feature", "properties": {}, "geometry": _square_island(3.0, 5.0)},
    ]}
    mask_path = str(tmp_path / "mask.geojson")
    with open(mask_path, "w") as fh:
        json.dump(mask, fh)
    cities = [make_city(1, 0.0, 0.0), make_city(2, 0.0, 4.0),  # ~445 km apart, ~278 km sea
              make_city(3, 0.0, 0.3)]                          # same island as 1
    open_cfg = GraphConfig(radius_km=500.0)
    assert len(build_graph(cities, open_cfg).edges) == 3
    sea_cfg = GraphConfig(radius_km=500.0, sea_filter="landmask", landmask_path=mask_path)
    g, report = build_graph_report(cities, sea_cfg)
    assert {(e.a, e.b) for e in g.edges} == {(1, 3)}
    assert report.n_edges_rejected_sea == 2
