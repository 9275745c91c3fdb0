"""Named what-if overlays on a base graph: mutation log, replay, metrics.

A Scenario owns an ordered mutation log; the materialized graph is always
exactly the result of replaying that log on the base graph. Metrics are
cached per scenario and invalidated by every mutation; betweenness is
recomputed only for connected components whose structure actually changed.
"""
from __future__ import annotations

import json
import secrets
import threading
from dataclasses import dataclass, field
from typing import Optional

from . import fragmentation
from .centrality import CentralityConfig, betweenness_all, degree_all, strategic_all
from .errors import ScenarioError
from .geometry import haversine_km
from .graph import City, Edge, SpatialGraph, connected_components, gravity_flow

MUTATION_OPS = ("merge", "fragment", "add_edge", "remove_edge", "add_city")


def validate_mutation(mut: dict) -> dict:
    """Check a raw mutation dict; returns it normalized. Raises ScenarioError."""
    if not isinstance(mut, dict):
        raise ScenarioError("mutation must be an object", field="op")
    op = mut.get("op")
    if op not in MUTATION_OPS:
        raise ScenarioError(f"unknown op {op!r}; expected one of {MUTATION_OPS}", field="op")
    out = {"op": op}
    if op == "merge":
        cities = mut.get("cities")
        if not isinstance(cities, list) or len(cities) < 2 or not all(isinstance(c, int) for c in cities):
            raise ScenarioError("merge needs a list of >= 2 integer city ids", field="cities")
        out["cities"] = cities
    elif op == "fragment":
        if not isinstance(mut.get("city"), int):
            raise ScenarioError("fragment needs an integer city id", field="city")
        if not isinstance(mut.get("k"), int) or mut["k"] < 2:
            raise ScenarioError("fragment needs integer k >= 2", field="k")
        out["city"] = mut["city"]
        out["k"] = mut["k"]
    elif op in ("add_edge", "remove_edge"):
        for key in ("a", "b"):
            if not isinstance(mut.get(key), int):
                raise ScenarioError(f"{op} needs integer city id {key!r}", field=key)
        if mut["a"] == mut["b"]:
            raise ScenarioError("edge endpoints must differ", field="b")
        out["a"], out["b"] = mut["a"], mut["b"]
    elif op == "add_city":
        c = mut.get("city")
        if not isinstance(c, dict):
            raise ScenarioError("add_city needs a city object", field="city")
        required = {"id", "name", "lat", "lon", "population"}
        missing = required - set(c)
        if missing:
            raise ScenarioError(f"city object missing fields {sorted(missing)}", field="city")
        out["city"] = c
    return out


def apply_mutation(g: SpatialGraph, mut: dict) -> SpatialGraph:
    """One validated mutation -> new graph. Deterministic."""
    mut = validate_mutation(mut)
    op = mut["op"]
    if op == "merge":
        return fragmentation.merge_cities(g, mut["cities"])
    if op == "fragment":
        return fragmentation.fragment_city(g, mut["city"], mut["k"])
    if op == "add_edge":
        return _add_edge(g, mut["a"], mut["b"])
    if op == "remove_edge":
        return _remove_edge(g, mut["a"], mut["b"])
    return _add_city(g, mut["city"])


def _add_edge(g: SpatialGraph, a: int, b: int) -> SpatialGraph:
    for cid in (a, b):
        if cid not in g.cities_by_id:
            raise ScenarioError(f"unknown city {cid}", field="a" if cid == a else "b")
    if g.has_edge(a, b):
        raise ScenarioError(f"edge ({a}, {b}) already exists", field="b")
    ca, cb = g.city(a), g.city(b)
    if g.config.flow_rule == "uniform":
        edge = Edge(a=min(a, b), b=max(a, b),
                    distance_km=fragmentation.NOMINAL_DISTANCE_KM, flow=1.0)
    else:
        d = haversine_km(ca.lat, ca.lon, cb.lat, cb.lon)
        if d == 0:
            raise ScenarioError("cities are co-located; link undefined", field="b")
        edge = Edge(a=min(a, b), b=max(a, b), distance_km=d,
                    flow=gravity_flow(ca.population, cb.population, d))
    return SpatialGraph.create(g.cities, list(g.edges) + [edge], g.config)


def _remove_edge(g: SpatialGraph, a: int, b: int) -> SpatialGraph:
    lo, hi = min(a, b), max(a, b)
    if not g.has_edge(lo, hi):
        raise ScenarioError(f"edge ({lo}, {hi}) does not exist", field="b")
    edges = [e for e in g.edges if (e.a, e.b) != (lo, hi)]
    return SpatialGraph.create(g.cities, edges, g.config)


def _add_city(g: SpatialGraph, c: dict) -> SpatialGraph:
    if c["id"] in g.cities_by_id:
        raise ScenarioError(f"city id {c['id']} already exists", field="city")
    city = City(id=c["id"], name=c["name"], country=c.get("country", ""),
                province=c.get("province"), lat=c["lat"], lon=c["lon"],
                population=c["population"])
    edges = list(g.edges)
    if g.config.flow_rule == "gravity":
        # connect by the radius rule under the graph's config
        if city.population >= g.config.min_population:
            for other in g.cities:
                if other.population < g.config.min_population:
                    continue
                d = haversine_km(city.lat, city.lon, other.lat, other.lon)
                if 0 < d <= g.config.radius_km:
                    edges.append(Edge(a=min(city.id, other.id), b=max(city.id, other.id),
                                      distance_km=d,
                                      flow=gravity_flow(city.population, other.population, d)))
    return SpatialGraph.create(list(g.cities) + [city], edges, g.config)


def replay(base: SpatialGraph, log: list) -> SpatialGraph:
    g = base
    for mut in log:
        g = apply_mutation(g, mut)
    return g


@dataclass
class ScenarioMetrics:
    degree: dict
    betweenness: dict
    strategic: dict
    version: int
    theta: float

    def for_city(self, cid: int) -> dict:
        return {"degree": self.degree.get(cid, 0),
                "betweenness": self.betweenness.get(cid, 0.0),
                "strategic": self.strategic.get(cid, 0.0)}


@dataclass
class Scenario:
    id: str
    name: str
    base: SpatialGraph
    centrality_config: CentralityConfig
    log: list = field(default_factory=list)
    graph: SpatialGraph = None
    metrics: Optional[ScenarioMetrics] = None
    stale: bool = True
    version: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if self.graph is None:
            self.graph = self.base

    def apply(self, mutations: list) -> None:
        """Append validated mutations and invalidate metrics (no recompute)."""
        validated = [validate_mutation(m) for m in mutations]
        g = self.graph
        for m in validated:
            g = apply_mutation(g, m)
        self.graph = g
        self.log.extend(validated)
        self.metrics = None
        self.stale = True
        self.version += 1

    def recompute(self, cache: Optional[dict] = None) -> ScenarioMetrics:
        """Full metrics for the current graph; per-component caching.

        cache maps component fingerprints to betweenness sub-results so
        untouched components are not recomputed across scenarios/versions.
        """
        g = self.graph
        deg = degree_all(g)
        bet: dict = {}
        if cache is None:
            bet = betweenness_all(g, self.centrality_config)
        else:
            for comp in connected_components(g):
                key = _component_fingerprint(g, comp, self.centrality_config)
                if key not in cache:
                    sub = _subgraph(g, comp)
                    cache[key] = betweenness_all(sub, self.centrality_config)
                bet.update(cache[key])
        stra = strategic_all(deg, bet)
        self.metrics = ScenarioMetrics(degree=deg, betweenness=bet, strategic=stra,
                                       version=self.version,
                                       theta=self.centrality_config.theta)
        self.stale = False
        return self.metrics


def _subgraph(g: SpatialGraph, ids: set) -> SpatialGraph:
    cities = [c for c in g.cities if c.id in ids]
    edges = [e for e in g.edges if e.a in ids]
    return SpatialGraph.create(cities, edges, g.config)


def _component_fingerprint(g: SpatialGraph, comp: set, cfg: CentralityConfig) -> tuple:
    """Hashable exact identity of a component's betweenness inputs."""
    edges = tuple((e.a, e.b, e.flow) for e in g.edges if e.a in comp)
    return (tuple(sorted(comp)), edges, cfg.theta, cfg.tie_tolerance, cfg.count_mode)


def new_scenario_id() -> str:
    return secrets.token_hex(8)


def diff_metrics(a: ScenarioMetrics, b: ScenarioMetrics, ids_a, ids_b) -> list:
    """Per-city metric deltas between two scenarios (b relative to a)."""
    rows = []
    for cid in sorted(set(ids_a) | set(ids_b)):
        in_a, in_b = cid in ids_a, cid in ids_b
        before = a.for_city(cid) if in_a else None
        after = b.for_city(cid) if in_b else None
        delta = None
        if in_a and in_b:
            delta = {k: after[k] - before[k] for k in ("degree", "betweenness", "strategic")}
        rows.append({"city_id": cid, "before": before, "after": after, "delta": delta})
    return rows


def save_log(scenario: Scenario, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"name": scenario.name, "mutations": scenario.log}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")


def load_log(path: str) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    muts = doc["mutations"] if isinstance(doc, dict) else doc
    return [validate_mutation(m) for m in muts]
