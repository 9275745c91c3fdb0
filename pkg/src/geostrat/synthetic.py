"""Synthetic fixture generators: clustered city worlds and planted events.

No licensed conflict data ships with the package, so tests, examples, and
benchmarks run on worlds built here. Everything is seeded and deterministic.
"""
from __future__ import annotations

import datetime as dt
import math
from typing import Optional, Sequence

import numpy as np

from .graph import City
from .ingest import ConflictEvent, write_events_csv


def clustered_cities(n_cities: int = 200, n_clusters: int = 6, seed: int = 0,
                     cluster_span_deg: float = 3.0, world_lat=(-55.0, 65.0),
                     world_lon=(-170.0, 170.0), pop_log_range=(4.0, 7.0)) -> list:
    """Cities grouped into continent-like clusters with log-spread populations.

    Cluster centres are spread far enough apart that the default hard-disk
    radius yields several connected components, mimicking continents and
    islands.
    """
    rng = np.random.default_rng(seed)
    centers_lat = rng.uniform(world_lat[0], world_lat[1], size=n_clusters)
    centers_lon = rng.uniform(world_lon[0], world_lon[1], size=n_clusters)
    cities = []
    for i in range(n_cities):
        c = int(rng.integers(0, n_clusters))
        lat = float(np.clip(centers_lat[c] + rng.normal(0, cluster_span_deg), -89.9, 89.9))
        lon = float(centers_lon[c] + rng.normal(0, cluster_span_deg))
        lon = (lon + 180.0) % 360.0 - 180.0
        pop = float(10.0 ** rng.uniform(pop_log_range[0], pop_log_range[1]))
        cities.append(City(id=i + 1, name=f"city-{i + 1}", country=f"country-{c}",
                           province=None, lat=round(lat, 6), lon=round(lon, 6),
                           population=round(pop, 1)))
    return cities


def planted_events(cities: Sequence[City], hot_city_ids: Sequence[int],
                   events_per_hot: int = 150, background_events: int = 50,
                   spread_km: float = 30.0, seed: int = 0,
                   window=(dt.date(2002, 1, 1), dt.date(2014, 12, 31)),
                   kind: str = "terrorism",
                   unknown_death_fraction: float = 0.05) -> list:
    """Events concentrated around chosen cities plus a uniform background.

    Each hot city receives events_per_hot events scattered with the given
    great-circle spread; background events land near random cities. A small
    fraction carries an unknown death toll.
    """
    rng = np.random.default_rng(seed)
    by_id = {c.id: c for c in cities}
    start, end = window
    days = (end - start).days
    events = []
    counter = 0

    def emit(center: City, spread: float):
        nonlocal counter
        counter += 1
        # small-angle offset in km converted to degrees
        dlat = rng.normal(0.0, spread) / 111.32
        dlon = rng.normal(0.0, spread) / (111.32 * max(0.2, math.cos(math.radians(center.lat))))
        lat = float(np.clip(center.lat + dlat, -89.9, 89.9))
        lon = (center.lon + dlon + 180.0) % 360.0 - 180.0
        date = start + dt.timedelta(days=int(rng.integers(0, days + 1)))
        deaths: Optional[int]
        if rng.random() < unknown_death_fraction:
            deaths = None
        else:
            deaths = int(rng.poisson(3.0))
        events.append(ConflictEvent(event_id=f"ev-{counter:06d}", date=date,
                                    lat=lat, lon=float(lon), deaths=deaths, kind=kind))

    for hid in hot_city_ids:
        center = by_id[hid]
        for _ in range(events_per_hot):
            emit(center, spread_km)
    ids = sorted(by_id)
    for _ in range(background_events):
        center = by_id[ids[int(rng.integers(0, len(ids)))]]
        emit(center, spread_km * 3)
    return events


def write_fixture(dirpath: str, seed: int = 0, n_cities: int = 200,
                  hot_count: int = 3) -> dict:
    """Write a complete fixture (cities.csv, events.csv) into a directory.

    The hottest cities are the most populated ones, so zone statistics have
    planted major-conflict structure. Returns a manifest of what was built.
    """
    import os

    from .io import write_cities_csv

    os.makedirs(dirpath, exist_ok=True)
    cities = clustered_cities(n_cities=n_cities, seed=seed)
    by_pop = sorted(cities, key=lambda c: (-c.population, c.id))
    hot = [c.id for c in by_pop[:hot_count]]
    events = planted_events(cities, hot, seed=seed + 1)
    cities_path = os.path.join(dirpath, "cities.csv")
    events_path = os.path.join(dirpath, "events.csv")
    write_cities_csv(cities, cities_path)
    write_events_csv(events, events_path)
    return {
        "cities": cities_path,
        "events": events_path,
        "n_cities": len(cities),
        "n_events": len(events),
        "hot_city_ids": hot,
        "seed": seed,
    }


def synthetic_world(n_cities: int = 7322, seed: int = 0) -> list:
    """Benchmark-scale world: many clusters, Zipf-like populations.

    Emulates the density structure of a global city dataset so the
    performance harness exercises realistic component sizes.
    """
    rng = np.random.default_rng(seed)
    n_clusters = 40
    cities = clustered_cities(n_cities=n_cities, n_clusters=n_clusters, seed=seed,
                              cluster_span_deg=6.0, pop_log_range=(4.0, 7.3))
    # Replace populations with a Zipf-like tail over the whole world.
    ranks = rng.permutation(n_cities) + 1
    pops = 2.0e7 / ranks ** 0.9
    out = []
    for c, p in zip(cities, pops):
        out.append(City(id=c.id, name=c.name, country=c.country, province=c.province,
                        lat=c.lat, lon=c.lon, population=round(float(max(p, 1e4)), 1)))
    return out
