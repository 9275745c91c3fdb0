import datetime as dt

import numpy as np
import pytest

from geostrat import io
from geostrat.errors import MalformedInputError
from geostrat.graph import City, GraphConfig, SpatialGraph
from geostrat.ingest import (
    ConflictEvent,
    assign_nearest_city,
    attack_counts_by_city,
    parse_events,
    write_events_csv,
)
from oracles import brute_nearest_city

WINDOW = (dt.date(2002, 1, 1), dt.date(2014, 12, 31))


def write_rows(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("event_id,date,lat,lon,deaths,kind\n")
        for row in rows:
            fh.write(row + "\n")


def test_parse_accept_and_reject_reasons(tmp_path):
    p = str(tmp_path / "ev.csv")
    write_rows(p, [
        "e1,2005-03-04,10.5,20.25,3,terrorism",     # valid
        "e2,2005-03-04,,20.25,3,terrorism",          # missing lat
        "e3,1999-01-01,10.0,20.0,1,terrorism",       # outside window
        "e4,2005-03-04,95.0,20.0,1,terrorism",       # invalid lat
        "e5,2005-03-04,10.0,20.0,,terrorism",        # unknown deaths: accepted
        "e6,2005-03-04,10.0,20.0,-2,terrorism",      # negative deaths
    ])
    events, report = parse_events(p, window=WINDOW)
    assert [e.event_id for e in events] == ["e1", "e5"]
    assert events[1].deaths is None
    assert report.n_rows == 6 and report.n_accepted == 2
    assert report.missing_coordinate == 1
    assert report.outside_window == 1
    assert report.invalid_coordinate == 1
    assert report.invalid_deaths == 1
    d = report.to_dict()
    assert d["n_accepted"] + sum(d["rejections"].values()) == d["n_rows"]


def test_window_bounds_closed(tmp_path):
    p = str(tmp_path / "ev.csv")
    write_rows(p, [
        "a,2002-01-01,0,0,0,terrorism",
        "b,2014-12-31,0,0,0,terrorism",
        "c,2015-01-01,0,0,0,terrorism",
    ])
    events, report = parse_events(p, window=WINDOW)
    assert [e.event_id for e in events] == ["a", "b"]
    assert report.outside_window == 1


def test_malformed_rows_hard_error(tmp_path):
    p = str(tmp_path / "bad.csv")
    with open(p, "w") as fh:
        fh.write("event_id,date,lat,lon,deaths,nope\n")
    with pytest.raises(MalformedInputError, match="line 1"):
        parse_events(p)
    write_rows(p, ["e1,not-a-date,0,0,0,terrorism"])
    with pytest.raises(MalformedInputError, match="line 2"):
        parse_events(p)
    write_rows(p, ["e1,2005-01-01,0,0,0,alien"])
    with pytest.raises(MalformedInputError, match="line 2"):
        parse_events(p)


def city_grid(ids_latlon):
    cities = [City(id=i, name=f"c{i}", country="X", province=None,
                   lat=la, lon=lo, population=20_000.0)
              for i, la, lo in ids_latlon]
    return SpatialGraph.create(cities, [], GraphConfig())


def ev(eid, lat, lon, deaths=0):
    return ConflictEvent(event_id=eid, date=dt.date(2005, 1, 1), lat=lat, lon=lon,
                         deaths=deaths, kind="terrorism")


def test_assignment_exact_and_tiebreak():
    g = city_grid([(5, 10.0, 10.0), (9, 10.0, 12.0)])
    assigned, summary = assign_nearest_city([ev("x", 10.0, 10.0)], g)
    assert assigned[0].assigned_city == 5
    assert assigned[0].assignment_distance_km == 0.0
    # exactly halfway between the two cities: lower id wins
    assigned, _ = assign_nearest_city([ev("y", 10.0, 11.0)], g)
    assert assigned[0].assigned_city == 5
    g2 = city_grid([(9, 10.0, 10.0), (5, 10.0, 12.0)])
    assigned, _ = assign_nearest_city([ev("y", 10.0, 11.0)], g2)
    assert assigned[0].assigned_city == 5


def test_assignment_matches_exhaustive_scan():
    rng = np.random.default_rng(42)
    cities = [(i + 1, float(la), float(lo)) for i, (la, lo) in enumerate(
        zip(rng.uniform(-60, 60, 10), rng.uniform(-170, 170, 10)))]
    g = city_grid(cities)
    events = [ev(f"e{k}", float(la), float(lo)) for k, (la, lo) in enumerate(
        zip(rng.uniform(-60, 60, 100), rng.uniform(-170, 170, 100)))]
    assigned, summary = assign_nearest_city(events, g)
    for e in assigned:
        cid, d = brute_nearest_city(e.lat, e.lon, g.cities)
        assert e.assigned_city == cid
        assert e.assignment_distance_km == pytest.approx(d, rel=1e-12)
    assert summary.n_events == 100
    assert summary.mean_distance_km == pytest.approx(
        np.mean([e.assignment_distance_km for e in assigned]))


def test_conservation_and_tallies():
    g = city_grid([(1, 0.0, 0.0), (2, 0.0, 50.0)])
    events = [ev("a", 0.1, 0.1, deaths=5), ev("b", 0.2, 0.0, deaths=None),
              ev("c", 0.0, 49.0, deaths=2)]
    assigned, _ = assign_nearest_city(events, g)
    assert [e.deaths for e in assigned] == [5, None, 2]  # tolls never altered
    counts = attack_counts_by_city(assigned)
    assert counts[1] == (2, 5, 1)  # two attacks, five known deaths, one unknown
    assert counts[2] == (1, 2, 0)


def test_events_csv_round_trip(tmp_path):
    events = [ev("a", 1.25, -3.5, deaths=4), ev("b", 0.0, 0.0, deaths=None)]
    p = str(tmp_path / "round.csv")
    write_events_csv(events, p)
    parsed, report = parse_events(p, window=WINDOW)
    assert [e.event_id for e in parsed] == ["a", "b"]
    assert parsed[0].lat == 1.25 and parsed[0].lon == -3.5
    assert parsed[1].deaths is None
    g = city_grid([(1, 0.0, 0.0)])
    assigned, _ = assign_nearest_city(parsed, g)
    p2 = str(tmp_path / "assigned.csv")
    io.write_assigned_events_csv(assigned, p2)
    back = io.read_assigned_events_csv(p2)
    assert back == assigned
