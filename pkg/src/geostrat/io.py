"""Readers and writers for every file format the CLI and service exchange.

All writers are canonical: rows sorted on their natural key and floats
rendered with repr (shortest exact round-trip), so identical inputs always
produce byte-identical files.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import MalformedInputError, ValidationError
from .graph import City, Edge, GraphConfig, SpatialGraph

CITY_HEADER = ["id", "name", "country", "province", "lat", "lon", "population"]
EVENT_HEADER = ["event_id", "date", "lat", "lon", "deaths", "kind"]
CENTRALITY_HEADER = ["city_id", "degree", "betweenness", "strategic"]
ZONE_HEADER = [
    "center_city_id", "population", "D_z", "B_z", "S_z", "A_z", "deaths_z",
    "major", "dist_to_major_km", "A_star", "vuln_ratio",
]
SWEEP_HEADER = [
    "M", "N", "K", "D_formula", "D_computed", "B_formula", "B_computed",
    "S_exact", "S_approx",
]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def read_cities_csv(path: str) -> list:
    """Parse the city CSV (see CITY_HEADER). Hard error on malformed rows."""
    cities = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedInputError("empty city file", line=1)
        if header != CITY_HEADER:
            raise MalformedInputError(
                f"expected header {','.join(CITY_HEADER)}, got {','.join(header)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(CITY_HEADER):
                raise MalformedInputError(f"expected {len(CITY_HEADER)} fields, got {len(row)}", line=lineno)
            try:
                cities.append(City(
                    id=int(row[0]), name=row[1], country=row[2],
                    province=row[3] or None,
                    lat=float(row[4]), lon=float(row[5]), population=float(row[6]),
                ))
            except (ValueError, ValidationError) as exc:
                raise MalformedInputError(str(exc), line=lineno) from exc
    return cities


def write_cities_csv(cities: Iterable[City], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CITY_HEADER)
        for c in sorted(cities, key=lambda c: c.id):
            writer.writerow([c.id, c.name, c.country, c.province or "",
                             _fmt(c.lat), _fmt(c.lon), _fmt(c.population)])


def write_graph(g: SpatialGraph, path: str, report: Optional[dict] = None) -> None:
    """Edge list `a b distance_km flow` sorted by (a, b), plus a JSON sidecar.

    The sidecar (path + '.json') carries the build config, counts, and the
    full city table so a graph file pair is self-contained.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for e in g.edges:
            fh.write(f"{e.a} {e.b} {_fmt(e.distance_km)} {_fmt(e.flow)}\n")
    sidecar = {
        "config": g.config.to_dict(),
        "counts": {"n_cities": len(g.cities), "n_edges": len(g.edges)},
        "cities": [
            {"id": c.id, "name": c.name, "country": c.country,
             "province": c.province, "lat": c.lat, "lon": c.lon,
             "population": c.population}
            for c in g.cities
        ],
    }
    if report is not None:
        sidecar["build_report"] = report
    with open(path + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_graph(path: str) -> SpatialGraph:
    """Rebuild a SpatialGraph from an edge list + sidecar pair."""
    with open(path + ".json", "r", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    config = GraphConfig.from_dict(sidecar["config"])
    cities = [City(**c) for c in sidecar["cities"]]
    edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise MalformedInputError("expected `a b distance_km flow`", line=lineno)
            try:
                edges.append(Edge(a=int(parts[0]), b=int(parts[1]),
                                  distance_km=float(parts[2]), flow=float(parts[3])))
            except ValueError as exc:
                raise MalformedInputError(str(exc), line=lineno) from exc
    return SpatialGraph.create(cities, edges, config)


def write_centrality_csv(rows, path: str, theta: float, tie_tolerance: float,
                         count_mode: str = "fractional") -> None:
    """`city_id,degree,betweenness,strategic` sorted by id, config in a comment."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# theta={_fmt(theta)} tie_tolerance={_fmt(tie_tolerance)} "
                 f"count_mode={count_mode} pair_convention=unordered\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CENTRALITY_HEADER)
        for r in sorted(rows, key=lambda r: r.city_id):
            writer.writerow([r.city_id, r.degree, _fmt(r.betweenness), _fmt(r.strategic)])


def read_centrality_csv(path: str):
    """Returns ({city_id: (degree, betweenness, strategic)}, metadata dict)."""
    meta = {}
    out = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if first.startswith("#"):
            for tok in first[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = v
        else:
            raise MalformedInputError("missing config comment line", line=1)
        reader = csv.reader(fh)
        header = next(reader)
        if header != CENTRALITY_HEADER:
            raise MalformedInputError(f"expected header {','.join(CENTRALITY_HEADER)}", line=2)
        for lineno, row in enumerate(reader, start=3):
            if not row:
                continue
            try:
                out[int(row[0])] = (int(row[1]), float(row[2]), float(row[3]))
            except ValueError as exc:
                raise MalformedInputError(str(exc), line=lineno) from exc
    return out, meta


def write_zones_csv(zones, path: str, a_star=None, vuln_ratio=None) -> None:
    """Zone report; a_star/vuln_ratio are optional {center_id: value} maps."""
    a_star = a_star or {}
    vuln_ratio = vuln_ratio or {}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ZONE_HEADER)
        for z in sorted(zones, key=lambda z: z.zone.center_city):
            cid = z.zone.center_city
            writer.writerow([
                cid, _fmt(z.population), z.D_z, _fmt(z.B_z), _fmt(z.S_z),
                z.A_z, z.deaths_z, int(z.major),
                _fmt(z.dist_to_major_km),
                _fmt(a_star.get(cid)), _fmt(vuln_ratio.get(cid)),
            ])


@dataclass
class ZoneRow:
    """One row of the zone report CSV (see ZONE_HEADER)."""

    center_city_id: int
    population: float
    D_z: int
    B_z: float
    S_z: float
    A_z: int
    deaths_z: int
    major: bool
    dist_to_major_km: Optional[float]
    A_star: Optional[float]
    vuln_ratio: Optional[float]


def read_zones_csv(path: str) -> list:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ZONE_HEADER:
            raise MalformedInputError(f"expected header {','.join(ZONE_HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append(ZoneRow(
                    center_city_id=int(row[0]), population=float(row[1]),
                    D_z=int(row[2]), B_z=float(row[3]), S_z=float(row[4]),
                    A_z=int(row[5]), deaths_z=int(row[6]), major=bool(int(row[7])),
                    dist_to_major_km=float(row[8]) if row[8] else None,
                    A_star=float(row[9]) if row[9] else None,
                    vuln_ratio=float(row[10]) if row[10] else None,
                ))
            except ValueError as exc:
                raise MalformedInputError(str(exc), line=lineno) from exc
    return rows


ASSIGNED_EVENT_HEADER = EVENT_HEADER + ["assigned_city", "assignment_distance_km"]


def write_assigned_events_csv(events, path: str) -> None:
    """Event CSV extended with the nearest-city assignment columns."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ASSIGNED_EVENT_HEADER)
        for e in events:
            writer.writerow([
                e.event_id, e.date.isoformat(), _fmt(e.lat), _fmt(e.lon),
                "" if e.deaths is None else e.deaths, e.kind,
                "" if e.assigned_city is None else e.assigned_city,
                _fmt(e.assignment_distance_km),
            ])


def read_assigned_events_csv(path: str) -> list:
    import datetime as dt

    from .ingest import ConflictEvent

    events = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ASSIGNED_EVENT_HEADER:
            raise MalformedInputError(
                f"expected header {','.join(ASSIGNED_EVENT_HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                events.append(ConflictEvent(
                    event_id=row[0], date=dt.date.fromisoformat(row[1]),
                    lat=float(row[2]), lon=float(row[3]),
                    deaths=int(row[4]) if row[4] else None, kind=row[5],
                    assigned_city=int(row[6]) if row[6] else None,
                    assignment_distance_km=float(row[7]) if row[7] else None,
                ))
            except ValueError as exc:
                raise MalformedInputError(str(exc), line=lineno) from exc
    return events


def write_fit_json(fit, path: str, config: Optional[dict] = None) -> None:
    doc = {"a": fit.a, "b": fit.b, "r2_adjusted": fit.r2_adjusted,
           "n": fit.n, "selection": fit.selection}
    if config:
        doc["config"] = config
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_fit_json(path: str):
    from .zones import RiskFit

    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return RiskFit(a=doc["a"], b=doc["b"], r2_adjusted=doc["r2_adjusted"],
                   n=doc["n"], selection=doc["selection"])


def write_json(doc: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
