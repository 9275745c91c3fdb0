"""HTTP scenario service: what-if interventions with recomputed metrics.

A scenario is an overlay on the base graph loaded at startup. Mutations
append to the scenario's log, mark its metrics stale, and trigger a
recompute (synchronous or on a background thread, per configuration).
Metric reads during a pending recompute return 409 with a retry hint, so
clients never observe partially recomputed values.
"""
from __future__ import annotations

import os
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import io, zones as zones_mod
from .centrality import CentralityConfig
from .errors import GeostratError, InsufficientDataError, ScenarioError
from .graph import SpatialGraph
from .ingest import attack_counts_by_city
from .scenario import (
    Scenario,
    ScenarioMetrics,
    diff_metrics,
    new_scenario_id,
    save_log,
    validate_mutation,
)


class CreateScenarioRequest(BaseModel):
    name: str = "scenario"
    mutations: Optional[List[dict]] = None


class MutationsRequest(BaseModel):
    mutations: List[dict]


class ScenarioStore:
    """In-memory scenario registry with per-scenario recompute serialization."""

    def __init__(self, base_graph: SpatialGraph, centrality_config: CentralityConfig,
                 recompute_mode: str = "async", scenario_dir: Optional[str] = None,
                 attacks: Optional[dict] = None, zone_radius_km: float = 500.0,
                 major_threshold: int = 100):
        self.base = base_graph
        self.centrality_config = centrality_config
        self.recompute_mode = recompute_mode
        self.scenario_dir = scenario_dir
        self.attacks = attacks or {}
        self.zone_radius_km = zone_radius_km
        self.major_threshold = major_threshold
        self.scenarios: dict = {}
        self.component_cache: dict = {}
        self._registry_lock = threading.Lock()
        self._executor = ThreadPoolExecutor(max_workers=2)

    def create(self, name: str, mutations: Optional[list] = None) -> Scenario:
        sc = Scenario(id=new_scenario_id(), name=name, base=self.base,
                      centrality_config=self.centrality_config)
        if mutations:
            sc.apply(mutations)
        with self._registry_lock:
            self.scenarios[sc.id] = sc
        self._kick_recompute(sc)
        self._persist(sc)
        return sc

    def get(self, scenario_id: str) -> Scenario:
        sc = self.scenarios.get(scenario_id)
        if sc is None:
            raise HTTPException(status_code=404, detail=f"unknown scenario {scenario_id}")
        return sc

    def mutate(self, scenario_id: str, mutations: list) -> Scenario:
        sc = self.get(scenario_id)
        with sc.lock:
            sc.apply(mutations)
        self._kick_recompute(sc)
        self._persist(sc)
        return sc

    def _persist(self, sc: Scenario) -> None:
        if self.scenario_dir:
            os.makedirs(self.scenario_dir, exist_ok=True)
            save_log(sc, os.path.join(self.scenario_dir, f"{sc.id}.json"))

    def _kick_recompute(self, sc: Scenario) -> None:
        if self.recompute_mode == "sync":
            with sc.lock:
                if sc.stale:
                    sc.recompute(self.component_cache)
        else:
            self._executor.submit(self._background_recompute, sc)

    def _background_recompute(self, sc: Scenario) -> None:
        with sc.lock:
            if sc.stale:
                sc.recompute(self.component_cache)

    def metrics_or_409(self, sc: Scenario) -> ScenarioMetrics:
        if sc.stale or sc.metrics is None:
            raise HTTPException(status_code=409,
                                detail="metrics recompute pending; retry shortly",
                                headers={"Retry-After": "1"})
        return sc.metrics


def create_app(base_graph: SpatialGraph,
               centrality_config: Optional[CentralityConfig] = None,
               recompute_mode: str = "async",
               scenario_dir: Optional[str] = None,
               attacks: Optional[dict] = None,
               zone_radius_km: float = 500.0,
               major_threshold: int = 100) -> FastAPI:
    """Build the FastAPI app around a loaded base graph."""
    cfg = centrality_config or CentralityConfig(theta=base_graph.config.theta)
    store = ScenarioStore(base_graph, cfg, recompute_mode=recompute_mode,
                          scenario_dir=scenario_dir, attacks=attacks,
                          zone_radius_km=zone_radius_km,
                          major_threshold=major_threshold)
    app = FastAPI(title="geostrat scenario service")
    app.state.store = store

    @app.exception_handler(ScenarioError)
    async def scenario_error_handler(_request, exc: ScenarioError):
        detail = [{"loc": ["body", exc.field or "mutations"], "msg": str(exc),
                   "type": "value_error"}]
        return JSONResponse(status_code=422, content={"detail": detail})

    @app.exception_handler(GeostratError)
    async def domain_error_handler(_request, exc: GeostratError):
        return JSONResponse(status_code=422, content={
            "detail": [{"loc": ["body"], "msg": str(exc), "type": type(exc).__name__}]})

    def scenario_summary(sc: Scenario) -> dict:
        return {"id": sc.id, "name": sc.name, "version": sc.version,
                "stale": sc.stale, "n_mutations": len(sc.log),
                "n_cities": len(sc.graph.cities), "n_edges": len(sc.graph.edges)}

    @app.post("/scenarios", status_code=201)
    def create_scenario(req: CreateScenarioRequest):
        if req.mutations is not None:
            for m in req.mutations:
                validate_mutation(m)
        sc = store.create(req.name, req.mutations)
        return scenario_summary(sc)

    @app.get("/scenarios")
    def list_scenarios():
        return [scenario_summary(sc) for sc in store.scenarios.values()]

    @app.get("/scenarios/{scenario_id}")
    def get_scenario(scenario_id: str):
        return scenario_summary(store.get(scenario_id))

    @app.get("/scenarios/{scenario_id}/log")
    def get_log(scenario_id: str):
        sc = store.get(scenario_id)
        return {"name": sc.name, "mutations": sc.log}

    @app.post("/scenarios/{scenario_id}/mutations")
    def post_mutations(scenario_id: str, req: MutationsRequest):
        for m in req.mutations:
            validate_mutation(m)
        sc = store.mutate(scenario_id, req.mutations)
        return scenario_summary(sc)

    @app.get("/scenarios/{scenario_id}/metrics")
    def get_metrics(scenario_id: str):
        sc = store.get(scenario_id)
        m = store.metrics_or_409(sc)
        cities = []
        for c in sc.graph.cities:
            row = {"city_id": c.id, "name": c.name, "population": c.population}
            row.update(m.for_city(c.id))
            cities.append(row)
        return {"scenario": scenario_summary(sc), "theta": m.theta,
                "version": m.version, "cities": cities}

    @app.get("/scenarios/{scenario_id}/risk")
    def get_risk(scenario_id: str):
        sc = store.get(scenario_id)
        m = store.metrics_or_409(sc)
        zm = zones_mod.make_zones(sc.graph, m.degree, m.betweenness, store.attacks,
                                  radius_km=store.zone_radius_km,
                                  major_threshold=store.major_threshold)
        fit_doc = None
        a_star = {}
        try:
            fit = zones_mod.fit_power_law(zm, selection="service")
            fit_doc = {"a": fit.a, "b": fit.b, "r2_adjusted": fit.r2_adjusted, "n": fit.n}
            for z in zm:
                a_star[z.zone.center_city] = zones_mod.predict_attacks(z.S_z, fit)
        except InsufficientDataError:
            pass
        return {
            "scenario": scenario_summary(sc),
            "fit": fit_doc,
            "zones": [
                {"center_city_id": z.zone.center_city, "population": z.population,
                 "D_z": z.D_z, "B_z": z.B_z, "S_z": z.S_z, "A_z": z.A_z,
                 "deaths_z": z.deaths_z, "major": z.major,
                 "dist_to_major_km": z.dist_to_major_km,
                 "A_star": a_star.get(z.zone.center_city)}
                for z in zm
            ],
        }

    @app.get("/scenarios/{scenario_id}/geojson")
    def get_geojson(scenario_id: str):
        sc = store.get(scenario_id)
        m = store.metrics_or_409(sc)
        zm = zones_mod.make_zones(sc.graph, m.degree, m.betweenness, store.attacks,
                                  radius_km=store.zone_radius_km,
                                  major_threshold=store.major_threshold)
        vulnerable: set = set()
        a_star_by_center = {}
        try:
            fit = zones_mod.fit_power_law(zm, selection="service")
            for z, _a, _r in zones_mod.vulnerability_outliers(zm, fit):
                vulnerable.add(z.zone.center_city)
            for z in zm:
                a_star_by_center[z.zone.center_city] = zones_mod.predict_attacks(z.S_z, fit)
        except InsufficientDataError:
            pass
        attacks_by_city = {cid: t[0] for cid, t in store.attacks.items()}
        features = []
        for c in sc.graph.cities:
            met = m.for_city(c.id)
            features.append({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [c.lon, c.lat]},
                "properties": {
                    "city_id": c.id, "name": c.name,
                    "population": c.population,
                    "D": met["degree"], "B": met["betweenness"], "S": met["strategic"],
                    "A": attacks_by_city.get(c.id, 0),
                    "A_star": a_star_by_center.get(c.id),
                    "vulnerable": c.id in vulnerable,
                },
            })
        return {"type": "FeatureCollection", "features": features,
                "properties": {"scenario_id": sc.id, "version": m.version}}

    def _zone_snapshot(sc: Scenario, m: ScenarioMetrics) -> dict:
        zm = zones_mod.make_zones(sc.graph, m.degree, m.betweenness, store.attacks,
                                  radius_km=store.zone_radius_km,
                                  major_threshold=store.major_threshold)
        a_star = {}
        try:
            fit = zones_mod.fit_power_law(zm, selection="service")
            for z in zm:
                a_star[z.zone.center_city] = zones_mod.predict_attacks(z.S_z, fit)
        except InsufficientDataError:
            pass
        return {z.zone.center_city:
                {"D_z": z.D_z, "B_z": z.B_z, "S_z": z.S_z, "A_z": z.A_z,
                 "A_star": a_star.get(z.zone.center_city)}
                for z in zm}

    @app.get("/scenarios/{scenario_id}/diff")
    def get_diff(scenario_id: str, against: str):
        sc_b = store.get(scenario_id)
        sc_a = store.get(against)
        m_b = store.metrics_or_409(sc_b)
        m_a = store.metrics_or_409(sc_a)
        ids_a = {c.id for c in sc_a.graph.cities}
        ids_b = {c.id for c in sc_b.graph.cities}
        per_city = diff_metrics(m_a, m_b, ids_a, ids_b)
        zones_a = _zone_snapshot(sc_a, m_a)
        zones_b = _zone_snapshot(sc_b, m_b)
        per_zone = []
        for cid in sorted(set(zones_a) | set(zones_b)):
            za, zb = zones_a.get(cid), zones_b.get(cid)
            row = {"center_city_id": cid, "before": za, "after": zb}
            if za is not None and zb is not None:
                row["delta"] = {
                    k: (zb[k] - za[k]) if za[k] is not None and zb[k] is not None
                    else None
                    for k in ("D_z", "B_z", "S_z", "A_z", "A_star")}
            else:
                row["delta"] = None
            per_zone.append(row)
        return {"against": against, "scenario": scenario_id,
                "per_city": per_city, "per_zone": per_zone}

    return app


def load_service_config(path: str) -> dict:
    """Parse a key=value config file ('#' comments, blank lines allowed)."""
    settings: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise GeostratError(f"bad config line: {raw.strip()!r}")
            key, value = line.split("=", 1)
            settings[key.strip()] = value.strip().strip('"').strip("'")
    return settings


def create_app_from_config(settings: dict) -> FastAPI:
    """Service wiring from a parsed config mapping (see README for keys)."""
    from .graph import GraphConfig, build_graph

    if "graph" in settings:
        base = io.read_graph(settings["graph"])
    elif "cities" in settings:
        cities = io.read_cities_csv(settings["cities"])
        base = build_graph(cities, GraphConfig(
            radius_km=float(settings.get("radius_km", 500.0)),
            min_population=float(settings.get("min_population", 10_000.0)),
            theta=float(settings.get("theta", 0.5)),
            colocated=settings.get("colocated", "reject"),
        ))
    else:
        raise GeostratError("config needs `graph` or `cities`")
    attacks = None
    if "events" in settings:
        events = io.read_assigned_events_csv(settings["events"])
        attacks = attack_counts_by_city(events)
    cfg = CentralityConfig(
        theta=float(settings["theta"]) if "theta" in settings else base.config.theta,
        tie_tolerance=float(settings.get("tie_tolerance", 1e-9)),
        count_mode=settings.get("count_mode", "fractional"),
    )
    return create_app(
        base, cfg,
        recompute_mode=settings.get("recompute_mode", "async"),
        scenario_dir=settings.get("scenario_dir"),
        attacks=attacks,
        zone_radius_km=float(settings.get("zone_radius_km", 500.0)),
        major_threshold=int(settings.get("major_threshold", 100)),
    )
