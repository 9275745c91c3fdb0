"""Conflict-event parsing, validation, and nearest-city assignment.

No event datasets ship with the package (licensing); this module provides
the schema, a strict loader, and the assignment step that clusters events
onto the city network. Synthetic fixtures live in geostrat.synthetic.
"""
from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import geometry
from .errors import MalformedInputError, ValidationError
from .graph import SpatialGraph

EVENT_KINDS = ("terrorism", "battle")

# Default study window, closed interval.
DEFAULT_WINDOW = (dt.date(2002, 1, 1), dt.date(2014, 12, 31))


@dataclass(frozen=True)
class ConflictEvent:
    """A geolocated, dated attack or battle record."""

    event_id: str
    date: dt.date
    lat: float
    lon: float
    deaths: Optional[int]  # None = unknown toll (excluded from mortality sums)
    kind: str
    assigned_city: Optional[int] = None
    assignment_distance_km: Optional[float] = None


@dataclass
class RejectionReport:
    """Counts per rejection reason; parsed = accepted + sum(rejections)."""

    n_rows: int = 0
    n_accepted: int = 0
    missing_coordinate: int = 0
    invalid_coordinate: int = 0
    outside_window: int = 0
    invalid_deaths: int = 0

    def to_dict(self) -> dict:
        return {
            "n_rows": self.n_rows,
            "n_accepted": self.n_accepted,
            "rejections": {
                "missing_coordinate": self.missing_coordinate,
                "invalid_coordinate": self.invalid_coordinate,
                "outside_window": self.outside_window,
                "invalid_deaths": self.invalid_deaths,
            },
        }


def parse_events(path: str, kind: Optional[str] = None,
                 window: tuple = DEFAULT_WINDOW):
    """Load an event CSV; returns (events, RejectionReport).

    Rows with missing or out-of-range coordinates are dropped and counted,
    as are rows dated outside the closed window. A malformed header or an
    unparseable row is a hard error carrying the line number. When `kind`
    is given it overrides the file's kind column.
    """
    from .io import EVENT_HEADER

    if kind is not None and kind not in EVENT_KINDS:
        raise ValidationError(f"kind must be one of {EVENT_KINDS}")
    report = RejectionReport()
    events = []
    start, end = window
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedInputError("empty event file", line=1)
        if header != EVENT_HEADER:
            raise MalformedInputError(
                f"expected header {','.join(EVENT_HEADER)}, got {','.join(header)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(EVENT_HEADER):
                raise MalformedInputError(
                    f"expected {len(EVENT_HEADER)} fields, got {len(row)}", line=lineno)
            report.n_rows += 1
            event_id, date_s, lat_s, lon_s, deaths_s, kind_s = row
            try:
                date = dt.date.fromisoformat(date_s)
            except ValueError as exc:
                raise MalformedInputError(f"bad date {date_s!r}", line=lineno) from exc
            row_kind = kind or kind_s
            if row_kind not in EVENT_KINDS:
                raise MalformedInputError(f"unknown kind {kind_s!r}", line=lineno)
            if not lat_s.strip() or not lon_s.strip():
                report.missing_coordinate += 1
                continue
            try:
                lat, lon = float(lat_s), float(lon_s)
                geometry.validate_latlon(lat, lon)
            except (ValueError, ValidationError):
                report.invalid_coordinate += 1
                continue
            if not (start <= date <= end):
                report.outside_window += 1
                continue
            deaths: Optional[int]
            if deaths_s.strip() == "":
                deaths = None
            else:
                try:
                    deaths = int(deaths_s)
                except ValueError:
                    report.invalid_deaths += 1
                    continue
                if deaths < 0:
                    report.invalid_deaths += 1
                    continue
            events.append(ConflictEvent(event_id=event_id, date=date, lat=lat,
                                        lon=lon, deaths=deaths, kind=row_kind))
            report.n_accepted += 1
    return events, report


def write_events_csv(events: Iterable[ConflictEvent], path: str) -> None:
    from .io import EVENT_HEADER

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EVENT_HEADER)
        for e in events:
            writer.writerow([
                e.event_id, e.date.isoformat(), repr(e.lat), repr(e.lon),
                "" if e.deaths is None else e.deaths, e.kind,
            ])


@dataclass
class AssignmentSummary:
    n_events: int
    mean_distance_km: Optional[float]
    max_distance_km: Optional[float]

    def to_dict(self) -> dict:
        return {
            "n_events": self.n_events,
            "mean_distance_km": self.mean_distance_km,
            "max_distance_km": self.max_distance_km,
        }


def assign_nearest_city(events: Sequence[ConflictEvent], g: SpatialGraph,
                        tie_tolerance_km: float = 1e-9):
    """Attach each event to its nearest city (great circle).

    Ties within tie_tolerance_km go to the lower city id. The KD-tree is an
    optimization only; correctness is pinned to the exhaustive scan by tests.
    Returns (assigned events, AssignmentSummary).
    """
    if not g.cities:
        raise ValidationError("graph has no cities to assign events to")
    if not events:
        return [], AssignmentSummary(0, None, None)
    ids = np.array([c.id for c in g.cities], dtype=np.int64)
    city_xyz = geometry.latlon_to_unit_xyz(
        np.array([c.lat for c in g.cities]), np.array([c.lon for c in g.cities]))
    tree = cKDTree(city_xyz)
    ev_lat = np.array([e.lat for e in events])
    ev_lon = np.array([e.lon for e in events])
    ev_xyz = geometry.latlon_to_unit_xyz(ev_lat, ev_lon)

    # Chord tolerance matching the great-circle tie tolerance near the match.
    _, nearest = tree.query(ev_xyz, k=1)
    base_lat = np.array([g.cities[i].lat for i in nearest])
    base_lon = np.array([g.cities[i].lon for i in nearest])
    base_d = geometry.haversine_km_vec(ev_lat, ev_lon, base_lat, base_lon)

    assigned = []
    dists = []
    for i, e in enumerate(events):
        d0 = float(base_d[i])
        # All cities whose great-circle distance could tie within tolerance.
        chord = 2.0 * np.sin(min((d0 + tie_tolerance_km) / (2 * geometry.EARTH_RADIUS_KM), np.pi / 2))
        cand = tree.query_ball_point(ev_xyz[i], chord + 1e-15)
        scan = [(geometry.haversine_km(e.lat, e.lon, g.cities[ci].lat, g.cities[ci].lon),
                 int(ids[ci])) for ci in cand]
        dmin = min(d for d, _ in scan)
        best_id = min(cid for d, cid in scan if d <= dmin + tie_tolerance_km)
        best_d = next(d for d, cid in scan if cid == best_id)
        assigned.append(replace(e, assigned_city=best_id, assignment_distance_km=best_d))
        dists.append(best_d)
    summary = AssignmentSummary(
        n_events=len(assigned),
        mean_distance_km=float(np.mean(dists)),
        max_distance_km=float(np.max(dists)),
    )
    return assigned, summary


def attack_counts_by_city(events: Sequence[ConflictEvent]) -> dict:
    """Attack count and known-death tallies per assigned city id.

    Returns {city_id: (attacks, known_deaths, n_unknown_deaths)}. Attacks and
    deaths are independent tallies: unknown tolls count as attacks but add
    nothing to the death sum.
    """
    out: dict = {}
    for e in events:
        if e.assigned_city is None:
            raise ValidationError(f"event {e.event_id} is unassigned")
        a, d, u = out.get(e.assigned_city, (0, 0, 0))
        out[e.assigned_city] = (
            a + 1,
            d + (e.deaths or 0),
            u + (1 if e.deaths is None else 0),
        )
    return out
