"""Relay/core algebra, the synthetic relay-core topology, and city surgery.

The closed forms describe K mutually connected relay nodes bridging M
complete cores of N nodes each:

    degree      D = M*N + (K - 1)
    betweenness B = C(M, 2) * N^2 / K          (mean over the K relays)
    strategic   S = B / D ~= (M - 1) * N / 2K  (for N >> K)

build_relay_core_graph realizes the topology so the formulas can be checked
against computed centralities; fragment_city / merge_cities implement the
corresponding what-if edits on arbitrary graphs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from . import geometry
from .centrality import CentralityConfig, betweenness_all, degree_all
from .errors import ScenarioError, ValidationError
from .graph import City, Edge, GraphConfig, SpatialGraph, gravity_flow

# Nominal spacing for edges that have no geometric meaning (abstract graphs,
# clique edges among co-located fragments).
NOMINAL_DISTANCE_KM = 1.0


@dataclass(frozen=True)
class RelayCoreSpec:
    m_cores: int
    core_size: int
    relays: int

    def __post_init__(self):
        if self.m_cores < 2:
            raise ValidationError("need at least 2 cores")
        if self.core_size < 1 or self.relays < 1:
            raise ValidationError("core_size and relays must be >= 1")


def relay_degree(spec: RelayCoreSpec) -> int:
    """Links per relay node: every core node plus the other relays."""
    return spec.m_cores * spec.core_size + spec.relays - 1


def relay_betweenness(spec: RelayCoreSpec) -> float:
    """Mean shortest-path load per relay: C(M,2) * N^2 cross pairs split K ways."""
    return math.comb(spec.m_cores, 2) * spec.core_size ** 2 / spec.relays


def relay_strategic(spec: RelayCoreSpec) -> tuple:
    """(exact, approximation): exact is B/D; approx (M-1)N/2K holds for N >> K."""
    exact = relay_betweenness(spec) / relay_degree(spec)
    approx = (spec.m_cores - 1) * spec.core_size / (2.0 * spec.relays)
    return exact, approx


def build_relay_core_graph(spec: RelayCoreSpec) -> SpatialGraph:
    """M complete cores bridged by K mutually connected relay nodes.

    Node ids: core c (0-based) node j -> c * N + j; relay k -> M * N + k.
    Every relay links to every core node and to every other relay; cores
    have no direct links to each other. Flows are uniform so the shortest
    paths are theta-independent; coordinates are placeholders on a small
    grid (the topology is abstract).
    """
    m, n, k = spec.m_cores, spec.core_size, spec.relays
    total = m * n + k
    cities = [
        City(id=i, name=(f"core-{i // n}-{i % n}" if i < m * n else f"relay-{i - m * n}"),
             country="synthetic", province=None,
             lat=round(0.01 * (i // 360), 6), lon=round(0.01 * (i % 360), 6),
             population=1.0)
        for i in range(total)
    ]
    edges = []
    for c in range(m):
        base = c * n
        for x in range(n):
            for y in range(x + 1, n):
                edges.append(Edge(a=base + x, b=base + y,
                                  distance_km=NOMINAL_DISTANCE_KM, flow=1.0))
    for r in range(k):
        rid = m * n + r
        for i in range(m * n):
            edges.append(Edge(a=i, b=rid, distance_km=NOMINAL_DISTANCE_KM, flow=1.0))
        for r2 in range(r + 1, k):
            edges.append(Edge(a=rid, b=m * n + r2,
                              distance_km=NOMINAL_DISTANCE_KM, flow=1.0))
    cfg = GraphConfig(flow_rule="uniform", metric="none", min_population=0.0, theta=0.0)
    return SpatialGraph.create(cities, edges, cfg)


def relay_ids(spec: RelayCoreSpec) -> list:
    return [spec.m_cores * spec.core_size + r for r in range(spec.relays)]


def sweep(m_values: Iterable[int], n_values: Iterable[int], k_values: Iterable[int]) -> list:
    """Formula-vs-computed comparison rows over the (M, N, K) grid.

    Each row: (M, N, K, D_formula, D_computed, B_formula, B_computed,
    S_exact, S_approx) where computed values are the mean over relay nodes
    of unweighted fractional centralities on the constructed graph.
    """
    rows = []
    cfg = CentralityConfig(theta=0.0, count_mode="fractional")
    for m in m_values:
        for n in n_values:
            for k in k_values:
                spec = RelayCoreSpec(m_cores=m, core_size=n, relays=k)
                g = build_relay_core_graph(spec)
                deg = degree_all(g)
                bet = betweenness_all(g, cfg)
                rids = relay_ids(spec)
                d_comp = float(np.mean([deg[i] for i in rids]))
                b_comp = float(np.mean([bet[i] for i in rids]))
                exact, approx = relay_strategic(spec)
                rows.append((m, n, k, relay_degree(spec), d_comp,
                             relay_betweenness(spec), b_comp, exact, approx))
    return rows


def _next_id(g: SpatialGraph) -> int:
    return max(c.id for c in g.cities) + 1


def fragment_city(g: SpatialGraph, city_id: int, k: int) -> SpatialGraph:
    """Split a city into k co-located fragments.

    Each fragment inherits every original edge (same distance; flow
    recomputed from the fragment population under the gravity rule, or kept
    uniform), the fragments are mutually interconnected at nominal distance,
    and the population is divided equally. Fragment ids are fresh
    consecutive ids, so the original id disappears. A degree-0 city may be
    fragmented; the result is a k-clique.
    """
    if k < 2:
        raise ScenarioError("fragment needs k >= 2", field="k")
    if city_id not in g.cities_by_id:
        raise ScenarioError(f"unknown city {city_id}", field="city")
    original = g.city(city_id)
    base = _next_id(g)
    share = original.population / k
    fragments = [
        replace(original, id=base + i, name=f"{original.name}/{i + 1}", population=share)
        for i in range(k)
    ]
    uniform = g.config.flow_rule == "uniform"
    edges = []
    for e in g.edges:
        if e.a != city_id and e.b != city_id:
            edges.append(e)
            continue
        other = g.city(e.b if e.a == city_id else e.a)
        for f in fragments:
            flow = e.flow if uniform else gravity_flow(f.population, other.population, e.distance_km)
            lo, hi = min(f.id, other.id), max(f.id, other.id)
            edges.append(Edge(a=lo, b=hi, distance_km=e.distance_km, flow=flow))
    for i in range(k):
        for j in range(i + 1, k):
            flow = 1.0 if uniform else gravity_flow(share, share, NOMINAL_DISTANCE_KM)
            edges.append(Edge(a=fragments[i].id, b=fragments[j].id,
                              distance_km=NOMINAL_DISTANCE_KM, flow=flow))
    cities = [c for c in g.cities if c.id != city_id] + fragments
    return SpatialGraph.create(cities, edges, g.config)


def merge_cities(g: SpatialGraph, city_ids: Sequence[int]) -> SpatialGraph:
    """Collapse several cities into one node at their population centroid.

    The merged city takes a fresh id, the summed population, and the
    population-weighted centroid position (computed on the unit sphere, so
    it is safe across the antimeridian). Its edges are rebuilt by the radius
    rule under the graph's config for gravity graphs; for uniform-flow
    graphs it simply links to the union of the former neighbours.
    """
    ids = list(dict.fromkeys(city_ids))
    if len(ids) < 2:
        raise ScenarioError("merge needs >= 2 distinct cities", field="cities")
    missing = [i for i in ids if i not in g.cities_by_id]
    if missing:
        raise ScenarioError(f"unknown cities {missing}", field="cities")
    merged_set = set(ids)
    members = [g.city(i) for i in ids]
    pop = float(sum(c.population for c in members))
    if pop > 0:
        w = np.array([c.population for c in members])
    else:
        w = np.ones(len(members))
    xyz = geometry.latlon_to_unit_xyz(np.array([c.lat for c in members]),
                                      np.array([c.lon for c in members]))
    centroid = (xyz * (w / w.sum())[:, None]).sum(axis=0)
    norm = np.linalg.norm(centroid)
    if norm < 1e-12:
        raise ScenarioError("cities are antipodal; centroid undefined", field="cities")
    centroid /= norm
    lat = math.degrees(math.asin(max(-1.0, min(1.0, centroid[2]))))
    lon = math.degrees(math.atan2(centroid[1], centroid[0]))

    keep = sorted(members, key=lambda c: c.id)[0]
    new_city = City(id=_next_id(g), name="+".join(c.name for c in sorted(members, key=lambda c: c.id)),
                    country=keep.country, province=keep.province,
                    lat=lat, lon=lon, population=pop)
    cities = [c for c in g.cities if c.id not in merged_set]
    edges = [e for e in g.edges if e.a not in merged_set and e.b not in merged_set]

    if g.config.flow_rule == "uniform":
        neighbors = set()
        for e in g.edges:
            if e.a in merged_set and e.b not in merged_set:
                neighbors.add(e.b)
            elif e.b in merged_set and e.a not in merged_set:
                neighbors.add(e.a)
        for nid in sorted(neighbors):
            lo, hi = min(nid, new_city.id), max(nid, new_city.id)
            edges.append(Edge(a=lo, b=hi, distance_km=NOMINAL_DISTANCE_KM, flow=1.0))
    else:
        for c in cities:
            if c.population < g.config.min_population or new_city.population < g.config.min_population:
                continue
            d = geometry.haversine_km(new_city.lat, new_city.lon, c.lat, c.lon)
            if 0 < d <= g.config.radius_km:
                lo, hi = min(c.id, new_city.id), max(c.id, new_city.id)
                edges.append(Edge(a=lo, b=hi, distance_km=d,
                                  flow=gravity_flow(c.population, new_city.population, d)))
    cities = cities + [new_city]
    return SpatialGraph.create(cities, edges, g.config)
