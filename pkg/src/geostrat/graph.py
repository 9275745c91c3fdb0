"""City records, gravity-weighted edges, and spatial graph construction.

The interaction network links every pair of cities closer than a hard-disk
radius, weighting each link by the gravity flow pop_a * pop_b / d^2. Built
graphs are immutable snapshots: analytics and scenario overlays consume them
read-only and produce new instances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from . import geometry
from .errors import DegeneratePairError, ValidationError


@dataclass(frozen=True)
class City:
    """A geolocated populated place; one node of the interaction network."""

    id: int
    name: str
    country: str
    province: Optional[str]
    lat: float
    lon: float
    population: float

    def __post_init__(self):
        geometry.validate_latlon(self.lat, self.lon)
        if not math.isfinite(self.population) or self.population < 0:
            raise ValidationError(f"city {self.id}: population {self.population} invalid")


@dataclass(frozen=True)
class Edge:
    """Undirected link, stored once with a < b."""

    a: int
    b: int
    distance_km: float
    flow: float

    def __post_init__(self):
        if self.a >= self.b:
            raise ValidationError(f"edge ({self.a}, {self.b}) must satisfy a < b")
        if not (self.distance_km > 0):
            raise ValidationError(f"edge ({self.a}, {self.b}) distance must be > 0")


def gravity_flow(pop_a: float, pop_b: float, d_km: float) -> float:
    """Gravity interaction flow pop_a * pop_b / d^2. Symmetric in (a, b)."""
    if d_km == 0:
        raise DegeneratePairError("gravity flow undefined at zero distance")
    if d_km < 0:
        raise ValidationError(f"negative distance {d_km}")
    if pop_a < 0 or pop_b < 0:
        raise ValidationError("populations must be non-negative")
    return pop_a * pop_b / (d_km * d_km)


@dataclass(frozen=True)
class GraphConfig:
    """Construction parameters; kept on the graph for reproducibility.

    flow_rule "gravity" derives each edge flow from endpoint populations and
    distance; "uniform" assigns flow 1.0 to every edge (used by abstract
    topologies where only the wiring matters). metric records which distance
    function the edges were built with.
    """

    radius_km: float = 500.0
    min_population: float = 10_000.0
    sea_filter: str = "none"  # none | landmask
    landmask_path: Optional[str] = None
    sea_crossing_max_km: float = 50.0
    sea_sample_step_km: float = 5.0
    theta: float = 0.5
    colocated: str = "reject"  # reject | merge
    flow_rule: str = "gravity"  # gravity | uniform
    metric: str = "haversine"  # haversine | toroidal | none
    box: Optional[float] = None  # toroidal box size

    def __post_init__(self):
        if self.radius_km <= 0:
            raise ValidationError("radius_km must be > 0")
        if self.sea_filter not in ("none", "landmask"):
            raise ValidationError(f"unknown sea_filter {self.sea_filter!r}")
        if self.sea_filter == "landmask" and not self.landmask_path:
            raise ValidationError("sea_filter=landmask requires landmask_path")
        if self.colocated not in ("reject", "merge"):
            raise ValidationError(f"unknown colocated policy {self.colocated!r}")
        if self.flow_rule not in ("gravity", "uniform"):
            raise ValidationError(f"unknown flow_rule {self.flow_rule!r}")
        if self.metric not in ("haversine", "toroidal", "none"):
            raise ValidationError(f"unknown metric {self.metric!r}")
        if not (0.0 <= self.theta <= 1.0):
            raise ValidationError("theta must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "radius_km": self.radius_km,
            "min_population": self.min_population,
            "sea_filter": self.sea_filter,
            "landmask_path": self.landmask_path,
            "sea_crossing_max_km": self.sea_crossing_max_km,
            "sea_sample_step_km": self.sea_sample_step_km,
            "theta": self.theta,
            "colocated": self.colocated,
            "flow_rule": self.flow_rule,
            "metric": self.metric,
            "box": self.box,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GraphConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


class Adjacency:
    """CSR view of a graph: arrays shared by the centrality and ABM kernels."""

    def __init__(self, ids, indptr, indices, flows, distances, populations):
        self.ids = ids  # node id per index, ascending
        self.indptr = indptr
        self.indices = indices
        self.flows = flows
        self.distances = distances
        self.populations = populations
        self.index_of = {int(v): k for k, v in enumerate(ids)}

    @property
    def n(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class SpatialGraph:
    """Immutable snapshot of cities plus gravity-weighted edges."""

    cities: tuple
    edges: tuple
    config: GraphConfig
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @staticmethod
    def create(cities: Iterable[City], edges: Iterable[Edge], config: GraphConfig) -> "SpatialGraph":
        """Canonicalize (sort, check referential integrity) and freeze."""
        cities = tuple(sorted(cities, key=lambda c: c.id))
        ids = [c.id for c in cities]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValidationError(f"duplicate city ids: {dupes}")
        idset = set(ids)
        edges = tuple(sorted(edges, key=lambda e: (e.a, e.b)))
        for e in edges:
            if e.a not in idset or e.b not in idset:
                raise ValidationError(f"edge ({e.a}, {e.b}) references a missing city")
        seen = set()
        for e in edges:
            if (e.a, e.b) in seen:
                raise ValidationError(f"duplicate edge ({e.a}, {e.b})")
            seen.add((e.a, e.b))
        return SpatialGraph(cities=cities, edges=edges, config=config)

    def city(self, city_id: int) -> City:
        return self.cities_by_id[city_id]

    @property
    def cities_by_id(self) -> dict:
        if "by_id" not in self._cache:
            self._cache["by_id"] = {c.id: c for c in self.cities}
        return self._cache["by_id"]

    def has_edge(self, a: int, b: int) -> bool:
        if "edge_set" not in self._cache:
            self._cache["edge_set"] = {(e.a, e.b) for e in self.edges}
        lo, hi = min(a, b), max(a, b)
        return (lo, hi) in self._cache["edge_set"]

    def adjacency(self) -> Adjacency:
        """CSR arrays over node indices (ids ascending); built once, cached."""
        if "adj" not in self._cache:
            n = len(self.cities)
            ids = np.array([c.id for c in self.cities], dtype=np.int64)
            pops = np.array([c.population for c in self.cities], dtype=np.float64)
            index = {int(v): k for k, v in enumerate(ids)}
            deg = np.zeros(n, dtype=np.int64)
            ea = np.empty(len(self.edges), dtype=np.int64)
            eb = np.empty(len(self.edges), dtype=np.int64)
            for k, e in enumerate(self.edges):
                ea[k], eb[k] = index[e.a], index[e.b]
            np.add.at(deg, ea, 1)
            np.add.at(deg, eb, 1)
            indptr = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(deg, out=indptr[1:])
            indices = np.empty(indptr[-1], dtype=np.int64)
            flows = np.empty(indptr[-1], dtype=np.float64)
            dists = np.empty(indptr[-1], dtype=np.float64)
            cursor = indptr[:-1].copy()
            for k, e in enumerate(self.edges):
                i, j = ea[k], eb[k]
                indices[cursor[i]] = j
                flows[cursor[i]] = e.flow
                dists[cursor[i]] = e.distance_km
                cursor[i] += 1
                indices[cursor[j]] = i
                flows[cursor[j]] = e.flow
                dists[cursor[j]] = e.distance_km
                cursor[j] += 1
            self._cache["adj"] = Adjacency(ids, indptr, indices, flows, dists, pops)
        return self._cache["adj"]

    def summary(self) -> dict:
        return {
            "n_cities": len(self.cities),
            "n_edges": len(self.edges),
            "total_population": float(sum(c.population for c in self.cities)),
            "config": self.config.to_dict(),
        }


@dataclass
class BuildReport:
    """Diagnostics from build_graph: what was dropped or merged and why."""

    n_input: int = 0
    n_kept: int = 0
    n_below_min_population: int = 0
    colocated_groups: list = field(default_factory=list)
    n_merged_away: int = 0
    n_edges: int = 0
    n_edges_rejected_sea: int = 0

    def to_dict(self) -> dict:
        return {
            "n_input": self.n_input,
            "n_kept": self.n_kept,
            "n_below_min_population": self.n_below_min_population,
            "colocated_groups": self.colocated_groups,
            "n_merged_away": self.n_merged_away,
            "n_edges": self.n_edges,
            "n_edges_rejected_sea": self.n_edges_rejected_sea,
        }


def _resolve_colocated(cities: Sequence[City], policy: str, report: BuildReport) -> list:
    groups: dict = {}
    for c in cities:
        groups.setdefault((c.lat, c.lon), []).append(c)
    clashes = {k: v for k, v in groups.items() if len(v) > 1}
    if not clashes:
        return list(cities)
    listing = [sorted(c.id for c in group) for group in clashes.values()]
    listing.sort()
    report.colocated_groups = listing
    if policy == "reject":
        raise DegeneratePairError(
            f"co-located distinct cities (zero distance): {listing}; "
            "deduplicate the input or set colocated='merge'"
        )
    merged = []
    for group in groups.values():
        if len(group) == 1:
            merged.append(group[0])
            continue
        group = sorted(group, key=lambda c: c.id)
        keep = group[0]
        merged.append(replace(keep, population=float(sum(c.population for c in group))))
        report.n_merged_away += len(group) - 1
    merged.sort(key=lambda c: c.id)
    return merged


class LandMask:
    """Point-in-land test backed by user-supplied polygons (GeoJSON).

    Accepts Polygon / MultiPolygon geometries in a FeatureCollection, a bare
    GeometryCollection, or a single geometry. Coordinates are (lon, lat).
    """

    def __init__(self, polygons):
        from shapely.geometry import MultiPolygon
        from shapely.prepared import prep

        self._geom = MultiPolygon(polygons) if len(polygons) != 1 else polygons[0]
        self._prepared = prep(self._geom)

    @classmethod
    def from_geojson(cls, path: str) -> "LandMask":
        import json

        from shapely.geometry import shape

        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        geoms = []
        if doc.get("type") == "FeatureCollection":
            geoms = [shape(f["geometry"]) for f in doc["features"]]
        elif doc.get("type") == "Feature":
            geoms = [shape(doc["geometry"])]
        else:
            geoms = [shape(doc)]
        polys = []
        for g in geoms:
            if g.geom_type == "Polygon":
                polys.append(g)
            elif g.geom_type == "MultiPolygon":
                polys.extend(g.geoms)
            else:
                raise ValidationError(f"landmask geometry {g.geom_type} not polygonal")
        if not polys:
            raise ValidationError("landmask file contains no polygons")
        return cls(polys)

    def contains(self, lat: float, lon: float) -> bool:
        from shapely.geometry import Point

        return self._prepared.intersects(Point(lon, lat))

    def sea_crossing_km(self, lat1, lon1, lat2, lon2, step_km: float) -> float:
        """Total length of the sampled great-circle chord that falls at sea."""
        lats, lons = geometry.great_circle_samples(lat1, lon1, lat2, lon2, step_km)
        total = geometry.haversine_km(lat1, lon1, lat2, lon2)
        seg = total / max(1, len(lats) - 1)
        sea = sum(1 for la, lo in zip(lats, lons) if not self.contains(la, lo))
        return sea * seg


def build_graph(cities: Iterable[City], config: GraphConfig) -> SpatialGraph:
    """Build the hard-disk gravity network. See build_graph_report for diagnostics."""
    g, _ = build_graph_report(cities, config)
    return g


def build_graph_report(cities: Iterable[City], config: GraphConfig):
    """Build the graph and return (graph, BuildReport).

    Node set: cities with population >= config.min_population (others are
    dropped and counted). Edge set: all unordered pairs within radius_km of
    great-circle distance, optionally filtered by the sea-crossing rule.
    Isolated cities stay in the graph as degree-0 nodes. Deterministic: the
    result depends only on the city set and config, not on input order.
    """
    report = BuildReport()
    cities = list(cities)
    report.n_input = len(cities)
    ids = [c.id for c in cities]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ValidationError(f"duplicate city ids: {dupes}")

    kept = [c for c in cities if c.population >= config.min_population]
    report.n_below_min_population = len(cities) - len(kept)
    kept = _resolve_colocated(kept, config.colocated, report)
    kept.sort(key=lambda c: c.id)
    report.n_kept = len(kept)

    lats = np.array([c.lat for c in kept], dtype=np.float64)
    lons = np.array([c.lon for c in kept], dtype=np.float64)
    ii, jj, dist = geometry.pairs_within_radius(lats, lons, config.radius_km)

    mask = None
    if config.sea_filter == "landmask":
        mask = LandMask.from_geojson(config.landmask_path)

    edges = []
    for i, j, d in zip(ii, jj, dist):
        a, b = kept[i], kept[j]
        if mask is not None:
            crossing = mask.sea_crossing_km(a.lat, a.lon, b.lat, b.lon, config.sea_sample_step_km)
            if crossing > config.sea_crossing_max_km:
                report.n_edges_rejected_sea += 1
                continue
        if config.flow_rule == "uniform":
            flow = 1.0
        else:
            flow = gravity_flow(a.population, b.population, float(d))
        edges.append(Edge(a=a.id, b=b.id, distance_km=float(d), flow=flow))
    report.n_edges = len(edges)
    return SpatialGraph.create(kept, edges, config), report


def connected_components(g: SpatialGraph) -> list:
    """Partition of city ids into components, ordered by smallest member id."""
    adj = g.adjacency()
    n = adj.n
    label = np.full(n, -1, dtype=np.int64)
    comp = 0
    for start in range(n):
        if label[start] != -1:
            continue
        stack = [start]
        label[start] = comp
        while stack:
            u = stack.pop()
            for k in range(adj.indptr[u], adj.indptr[u + 1]):
                v = adj.indices[k]
                if label[v] == -1:
                    label[v] = comp
                    stack.append(v)
        comp += 1
    groups: dict = {}
    for idx in range(n):
        groups.setdefault(int(label[idx]), set()).add(int(adj.ids[idx]))
    return sorted(groups.values(), key=min)
