"""Overlapping circular zones, conflict statistics, and the power-law risk fit.

A zone is centred on every city and collects all cities within the zone
radius (overlap is expected). Zone metrics are plain sums of the per-city
values; the risk fit regresses log10(attacks) on log10(strategic centrality)
by ordinary least squares.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import geometry
from .errors import InsufficientDataError, ValidationError
from .graph import SpatialGraph

DEFAULT_ZONE_RADIUS_KM = 500.0
DEFAULT_MAJOR_THRESHOLD = 100
DEFAULT_METRIC_THRESHOLDS = {"D_z": 1e4, "B_z": 1e7, "S_z": 1e4}
DEFAULT_VULN_RATIO = 10.0


@dataclass(frozen=True)
class Zone:
    center_city: int
    center_lat: float
    center_lon: float
    radius_km: float
    members: frozenset


@dataclass(frozen=True)
class ZoneMetrics:
    zone: Zone
    population: float
    D_z: int
    B_z: float
    S_z: float
    A_z: int
    deaths_z: int
    deaths_lower_bound: bool  # unknown tolls exist among member events
    mortality_rate: float
    major: bool
    dist_to_major_km: Optional[float] = None


@dataclass(frozen=True)
class RiskFit:
    a: float
    b: float
    r2_adjusted: float
    n: int
    selection: str


def make_zones(g: SpatialGraph, degree: dict, betweenness: dict,
               city_attacks: Optional[dict] = None,
               radius_km: float = DEFAULT_ZONE_RADIUS_KM,
               top_n_by_population: Optional[int] = None,
               major_threshold: int = DEFAULT_MAJOR_THRESHOLD) -> list:
    """One zone per city; returns ZoneMetrics ranked by zone population.

    city_attacks maps city id -> (attacks, known_deaths, n_unknown) as
    produced by ingest.attack_counts_by_city; omit it for purely structural
    zones. When top_n_by_population is given only the most populated zones
    are kept (ties broken by center city id). dist_to_major_km is filled
    relative to the major zones within the returned selection.
    """
    if radius_km <= 0:
        raise ValidationError("radius_km must be > 0")
    city_attacks = city_attacks or {}
    cities = g.cities
    n = len(cities)
    if n == 0:
        return []
    lats = np.array([c.lat for c in cities])
    lons = np.array([c.lon for c in cities])
    xyz = geometry.latlon_to_unit_xyz(lats, lons)
    tree = cKDTree(xyz)
    chord = 2.0 * math.sin(min(radius_km / (2.0 * geometry.EARTH_RADIUS_KM), math.pi / 2))
    # Inclusive membership: re-check against the great-circle radius.
    neighbor_lists = tree.query_ball_point(xyz, chord * (1 + 1e-12))

    metrics = []
    for i, c in enumerate(cities):
        member_idx = []
        for j in neighbor_lists[i]:
            d = geometry.haversine_km(c.lat, c.lon, cities[j].lat, cities[j].lon)
            if d <= radius_km:
                member_idx.append(j)
        members = frozenset(cities[j].id for j in member_idx)
        pop = float(sum(cities[j].population for j in member_idx))
        d_z = int(sum(degree.get(cities[j].id, 0) for j in member_idx))
        b_z = float(sum(betweenness.get(cities[j].id, 0.0) for j in member_idx))
        s_z = b_z / d_z if d_z > 0 else 0.0
        a_z = 0
        deaths = 0
        unknown = 0
        for j in member_idx:
            t = city_attacks.get(cities[j].id)
            if t:
                a_z += t[0]
                deaths += t[1]
                unknown += t[2]
        metrics.append(ZoneMetrics(
            zone=Zone(center_city=c.id, center_lat=c.lat, center_lon=c.lon,
                      radius_km=radius_km, members=members),
            population=pop, D_z=d_z, B_z=b_z, S_z=s_z, A_z=a_z,
            deaths_z=deaths, deaths_lower_bound=unknown > 0,
            mortality_rate=deaths / max(a_z, 1),
            major=a_z > major_threshold,
        ))

    metrics.sort(key=lambda z: (-z.population, z.zone.center_city))
    if top_n_by_population is not None:
        metrics = metrics[:top_n_by_population]
    metrics = _with_major_distances(metrics)
    return metrics


def _with_major_distances(metrics: Sequence[ZoneMetrics]) -> list:
    """Fill dist_to_major_km: min over major zone centers, self excluded."""
    majors = [z for z in metrics if z.major]
    out = []
    for z in metrics:
        best = None
        for m in majors:
            if m.zone.center_city == z.zone.center_city:
                continue
            d = geometry.haversine_km(z.zone.center_lat, z.zone.center_lon,
                                      m.zone.center_lat, m.zone.center_lon)
            if best is None or d < best:
                best = d
        out.append(replace(z, dist_to_major_km=best))
    return out


def fit_power_law(zones: Sequence[ZoneMetrics], zero_mode: str = "exclude",
                  selection: str = "all") -> RiskFit:
    """OLS of log10(A_z) on log10(S_z); returns slope a, intercept b, adj R^2.

    zero_mode "exclude" drops zones with A_z = 0 (log undefined); "log1p"
    regresses log10(A_z + 1) instead and keeps them. Zones with S_z <= 0 are
    always dropped.
    """
    if zero_mode not in ("exclude", "log1p"):
        raise ValidationError(f"unknown zero_mode {zero_mode!r}")
    xs, ys = [], []
    for z in zones:
        if z.S_z <= 0:
            continue
        if zero_mode == "exclude":
            if z.A_z < 1:
                continue
            ys.append(math.log10(z.A_z))
        else:
            ys.append(math.log10(z.A_z + 1))
        xs.append(math.log10(z.S_z))
    n = len(xs)
    if n < 3:
        raise InsufficientDataError(
            f"power-law fit needs >= 3 usable zones, got {n}")
    x = np.asarray(xs)
    y = np.asarray(ys)
    a, b = np.polyfit(x, y, 1)
    resid = y - (a * x + b)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    r2_adj = 1.0 - (1.0 - r2) * (n - 1) / (n - 2)
    return RiskFit(a=float(a), b=float(b), r2_adjusted=float(r2_adj),
                   n=n, selection=selection)


def predict_attacks(s_z: float, fit: RiskFit) -> Optional[float]:
    """A* = 10^(a log10 S + b); None when S_z <= 0 (prediction undefined)."""
    if s_z <= 0:
        return None
    return 10.0 ** (fit.a * math.log10(s_z) + fit.b)


def threshold_report(zones: Sequence[ZoneMetrics],
                     thresholds: Optional[dict] = None,
                     major_threshold: int = DEFAULT_MAJOR_THRESHOLD) -> dict:
    """Conditional major-conflict probabilities and distance panels.

    For every metric in thresholds (defaults: D_z 1e4, B_z 1e7, S_z 1e4) the
    report gives, conditioned on the zone sitting above / at-or-below the
    threshold: the zone count, P(A_z > major_threshold), and summary stats
    of the distance to the nearest major zone center. Zones with no defined
    distance (no other major zone) are excluded from the distance stats; if
    none remain the stats are null, never infinite.
    """
    thresholds = thresholds or dict(DEFAULT_METRIC_THRESHOLDS)
    report: dict = {"major_threshold": major_threshold,
                    "n_zones": len(zones),
                    "n_major": sum(1 for z in zones if z.A_z > major_threshold),
                    "metrics": {}}
    for metric, thr in thresholds.items():
        sides: dict = {}
        for side in ("above", "below"):
            if side == "above":
                sel = [z for z in zones if getattr(z, metric) > thr]
            else:
                sel = [z for z in zones if getattr(z, metric) <= thr]
            n_major = sum(1 for z in sel if z.A_z > major_threshold)
            dists = [z.dist_to_major_km for z in sel if z.dist_to_major_km is not None]
            sides[side] = {
                "n": len(sel),
                "p_major": n_major / len(sel) if sel else None,
                "dist_to_major_km": _dist_stats(dists),
            }
        report["metrics"][metric] = {"threshold": thr, **sides}
    return report


def _dist_stats(dists: list) -> Optional[dict]:
    if not dists:
        return None
    arr = np.asarray(dists, dtype=np.float64)
    return {
        "n": int(arr.size),
        "mean": float(arr.mean()),
        "median": float(np.median(arr)),
        "min": float(arr.min()),
        "max": float(arr.max()),
    }


def zone_center_id(z) -> int:
    """Center city id for either ZoneMetrics or a zone-report CSV row."""
    return z.zone.center_city if hasattr(z, "zone") else z.center_city_id


def vulnerability_outliers(zones: Sequence[ZoneMetrics], fit: RiskFit,
                           ratio_threshold: float = DEFAULT_VULN_RATIO,
                           s_threshold: float = DEFAULT_METRIC_THRESHOLDS["S_z"]) -> list:
    """Zones whose predicted attacks far exceed the observed count.

    Flags zones with S_z above s_threshold whose ratio A*(z) / max(A_z, 1)
    reaches ratio_threshold. Returns (zone, A_star, ratio) tuples sorted by
    ratio descending (ties by center id).
    """
    flagged = []
    for z in zones:
        if z.S_z <= s_threshold:
            continue
        a_star = predict_attacks(z.S_z, fit)
        if a_star is None:
            continue
        ratio = a_star / max(z.A_z, 1)
        if ratio >= ratio_threshold:
            flagged.append((z, a_star, ratio))
    flagged.sort(key=lambda t: (-t[2], zone_center_id(t[0])))
    return flagged


def holdout_proximity(events: Sequence, high_b_cities: Sequence,
                      radius_km: float = 50.0) -> Optional[float]:
    """Fraction of held-out events within radius_km of a high-betweenness city.

    events carry .lat/.lon; high_b_cities carry .lat/.lon as well. Returns
    None when either input is empty (undefined, not zero).
    """
    if not events or not high_b_cities:
        return None
    city_xyz = geometry.latlon_to_unit_xyz(
        np.array([c.lat for c in high_b_cities]),
        np.array([c.lon for c in high_b_cities]))
    tree = cKDTree(city_xyz)
    ev_xyz = geometry.latlon_to_unit_xyz(
        np.array([e.lat for e in events]), np.array([e.lon for e in events]))
    d_chord, idx = tree.query(ev_xyz, k=1)
    hits = 0
    for i, e in enumerate(events):
        c = high_b_cities[int(idx[i])]
        if geometry.haversine_km(e.lat, e.lon, c.lat, c.lon) <= radius_km:
            hits += 1
    return hits / len(events)
