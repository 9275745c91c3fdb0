"""Batch command-line interface over the analysis pipeline.

Every subcommand is a thin wrapper over one library operation: it reads the
declared file formats, calls the operation, and writes canonical output.
Domain failures exit 1 with a machine-readable JSON object on stderr; usage
errors exit 2 (click's default).
"""
from __future__ import annotations

import datetime as dt
import functools
import hashlib
import json
import sys

import click
import numpy as np

from . import abm as abm_mod
from . import fragmentation, io, synthetic, zones as zones_mod
from .centrality import CentralityConfig, centrality_table
from .errors import GeostratError
from .graph import GraphConfig, build_graph_report
from .ingest import DEFAULT_WINDOW, assign_nearest_city, attack_counts_by_city, parse_events


def domain_errors(fn):
    """Convert domain exceptions to exit code 1 with JSON on stderr."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except GeostratError as exc:
            payload = {"error": type(exc).__name__, "message": str(exc)}
            line = getattr(exc, "line", None)
            if line is not None:
                payload["line"] = line
            click.echo(json.dumps(payload, sort_keys=True), err=True)
            sys.exit(1)

    return wrapper


@click.group()
def main():
    """City interaction networks, centrality, conflict-zone risk, and the ABM."""


@main.command("build-graph")
@click.option("--cities", "cities_path", required=True, type=click.Path(exists=True))
@click.option("--radius-km", default=500.0, show_default=True)
@click.option("--min-pop", default=10_000.0, show_default=True)
@click.option("--sea-filter", type=click.Choice(["none", "landmask"]), default="none",
              show_default=True)
@click.option("--landmask", "landmask_path", type=click.Path(exists=True), default=None)
@click.option("--colocated", type=click.Choice(["reject", "merge"]), default="reject",
              show_default=True)
@click.option("--theta", default=0.5, show_default=True,
              help="Default flow-weight exponent recorded on the graph.")
@click.option("--mutations", "mutations_path", default=None, type=click.Path(exists=True),
              help="Mutation-log JSON to replay onto the built graph "
                   "(same grammar as the scenario service).")
@click.option("--out", "out_path", required=True, type=click.Path())
@domain_errors
def cli_build_graph(cities_path, radius_km, min_pop, sea_filter, landmask_path,
                    colocated, theta, mutations_path, out_path):
    """Build the gravity interaction network from a city CSV."""
    from .scenario import load_log, replay

    cities = io.read_cities_csv(cities_path)
    config = GraphConfig(radius_km=radius_km, min_population=min_pop,
                         sea_filter=sea_filter, landmask_path=landmask_path,
                         colocated=colocated, theta=theta)
    g, report = build_graph_report(cities, config)
    n_mutations = 0
    if mutations_path:
        log = load_log(mutations_path)
        g = replay(g, log)
        n_mutations = len(log)
    io.write_graph(g, out_path, report=report.to_dict())
    click.echo(json.dumps({"n_cities": len(g.cities), "n_edges": len(g.edges),
                           "n_mutations": n_mutations}))


@main.command("centrality")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--theta", default=None, type=float,
              help="Flow-weight exponent; defaults to the graph's configured theta.")
@click.option("--tie-tolerance", default=1e-9, show_default=True)
@click.option("--count-mode", type=click.Choice(["fractional", "raw"]),
              default="fractional", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@domain_errors
def cli_centrality(graph_path, theta, tie_tolerance, count_mode, out_path):
    """Degree, betweenness, and strategic centrality for every city."""
    g = io.read_graph(graph_path)
    cfg = CentralityConfig(theta=g.config.theta if theta is None else theta,
                           tie_tolerance=tie_tolerance, count_mode=count_mode)
    rows = centrality_table(g, cfg)
    io.write_centrality_csv(rows, out_path, theta=cfg.theta,
                            tie_tolerance=cfg.tie_tolerance, count_mode=cfg.count_mode)
    click.echo(json.dumps({"n_cities": len(rows)}))


@main.command("ingest-events")
@click.option("--events", "events_path", required=True, type=click.Path(exists=True))
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--kind", type=click.Choice(["terrorism", "battle"]), default=None,
              help="Override the kind column for every row.")
@click.option("--window-start", default=DEFAULT_WINDOW[0].isoformat(), show_default=True)
@click.option("--window-end", default=DEFAULT_WINDOW[1].isoformat(), show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--report", "report_path", default=None, type=click.Path())
@domain_errors
def cli_ingest_events(events_path, graph_path, kind, window_start, window_end,
                      out_path, report_path):
    """Parse, validate, and assign events to their nearest city."""
    g = io.read_graph(graph_path)
    window = (dt.date.fromisoformat(window_start), dt.date.fromisoformat(window_end))
    events, rejections = parse_events(events_path, kind=kind, window=window)
    assigned, summary = assign_nearest_city(events, g)
    io.write_assigned_events_csv(assigned, out_path)
    doc = {"rejections": rejections.to_dict(), "assignment": summary.to_dict()}
    if report_path:
        io.write_json(doc, report_path)
    click.echo(json.dumps(doc, sort_keys=True))


@main.command("zones")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--centrality", "centrality_path", required=True, type=click.Path(exists=True))
@click.option("--events", "events_path", default=None, type=click.Path(exists=True),
              help="Assigned events CSV from ingest-events.")
@click.option("--radius-km", default=zones_mod.DEFAULT_ZONE_RADIUS_KM, show_default=True)
@click.option("--top-n", default=None, type=int)
@click.option("--major-threshold", default=zones_mod.DEFAULT_MAJOR_THRESHOLD, show_default=True)
@click.option("--fit", "fit_path", default=None, type=click.Path(exists=True),
              help="Fit JSON; fills the A_star and vuln_ratio columns.")
@click.option("--threshold-report", "threshold_report_path", default=None, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@domain_errors
def cli_zones(graph_path, centrality_path, events_path, radius_km, top_n,
              major_threshold, fit_path, threshold_report_path, out_path):
    """Aggregate cities and events into overlapping circular zones."""
    g = io.read_graph(graph_path)
    cent, _ = io.read_centrality_csv(centrality_path)
    degree = {cid: v[0] for cid, v in cent.items()}
    betweenness = {cid: v[1] for cid, v in cent.items()}
    attacks = None
    if events_path:
        events = io.read_assigned_events_csv(events_path)
        attacks = attack_counts_by_city(events)
    zm = zones_mod.make_zones(g, degree, betweenness, attacks,
                              radius_km=radius_km, top_n_by_population=top_n,
                              major_threshold=major_threshold)
    a_star = {}
    vuln = {}
    if fit_path:
        fit = io.read_fit_json(fit_path)
        for z in zm:
            cid = z.zone.center_city
            pred = zones_mod.predict_attacks(z.S_z, fit)
            a_star[cid] = pred
            vuln[cid] = None if pred is None else pred / max(z.A_z, 1)
    io.write_zones_csv(zm, out_path, a_star=a_star, vuln_ratio=vuln)
    if threshold_report_path:
        io.write_json(zones_mod.threshold_report(zm, major_threshold=major_threshold),
                      threshold_report_path)
    click.echo(json.dumps({"n_zones": len(zm),
                           "n_major": sum(1 for z in zm if z.major)}))


@main.command("fit")
@click.option("--zones", "zones_path", required=True, type=click.Path(exists=True))
@click.option("--zero-mode", type=click.Choice(["exclude", "log1p"]), default="exclude",
              show_default=True)
@click.option("--selection", default="all", show_default=True,
              help="Label recorded in the fit output (e.g. top-250).")
@click.option("--out", "out_path", required=True, type=click.Path())
@domain_errors
def cli_fit(zones_path, zero_mode, selection, out_path):
    """Power-law fit of attacks against strategic centrality."""
    rows = io.read_zones_csv(zones_path)
    fit = zones_mod.fit_power_law(rows, zero_mode=zero_mode, selection=selection)
    io.write_fit_json(fit, out_path, config={"zero_mode": zero_mode})
    click.echo(json.dumps({"a": fit.a, "b": fit.b, "r2_adjusted": fit.r2_adjusted,
                           "n": fit.n}))


@main.command("predict")
@click.option("--fit", "fit_path", required=True, type=click.Path(exists=True))
@click.option("--s", "s_values", multiple=True, type=float,
              help="Strategic centrality value(s); repeatable.")
@click.option("--zones", "zones_path", default=None, type=click.Path(exists=True),
              help="Predict for every zone in a zone report instead.")
@domain_errors
def cli_predict(fit_path, s_values, zones_path):
    """Predicted attack counts A* for given strategic centralities."""
    fit = io.read_fit_json(fit_path)
    out = []
    if zones_path:
        for row in io.read_zones_csv(zones_path):
            out.append({"center_city_id": row.center_city_id, "S_z": row.S_z,
                        "A_star": zones_mod.predict_attacks(row.S_z, fit)})
    for s in s_values:
        out.append({"S_z": s, "A_star": zones_mod.predict_attacks(s, fit)})
    click.echo(json.dumps(out))


@main.command("outliers")
@click.option("--zones", "zones_path", required=True, type=click.Path(exists=True))
@click.option("--fit", "fit_path", required=True, type=click.Path(exists=True))
@click.option("--ratio-threshold", default=zones_mod.DEFAULT_VULN_RATIO, show_default=True)
@click.option("--s-threshold", default=zones_mod.DEFAULT_METRIC_THRESHOLDS["S_z"],
              show_default=True)
@domain_errors
def cli_outliers(zones_path, fit_path, ratio_threshold, s_threshold):
    """Zones whose predicted attacks far exceed the observed count."""
    rows = io.read_zones_csv(zones_path)
    fit = io.read_fit_json(fit_path)
    flagged = zones_mod.vulnerability_outliers(rows, fit, ratio_threshold=ratio_threshold,
                                               s_threshold=s_threshold)
    click.echo(json.dumps([
        {"center_city_id": zones_mod.zone_center_id(z), "S_z": z.S_z, "A_z": z.A_z,
         "A_star": a_star, "ratio": ratio}
        for z, a_star, ratio in flagged
    ]))


@main.command("fragment-sweep")
@click.option("--m", "m_range", default="2..4", show_default=True)
@click.option("--n", "n_range", default="1..6", show_default=True)
@click.option("--k", "k_range", default="1..4", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@domain_errors
def cli_fragment_sweep(m_range, n_range, k_range, out_path):
    """Relay/core formula-vs-computed sweep over the (M, N, K) grid."""
    rows = fragmentation.sweep(_parse_range(m_range), _parse_range(n_range),
                               _parse_range(k_range))
    import csv as _csv

    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(io.SWEEP_HEADER)
        for r in rows:
            writer.writerow([r[0], r[1], r[2], r[3], repr(r[4]), repr(r[5]),
                             repr(r[6]), repr(r[7]), repr(r[8])])
    mismatches = sum(1 for r in rows if r[3] != r[4] or r[5] != r[6])
    click.echo(json.dumps({"rows": len(rows), "mismatches": mismatches}))


def _parse_range(spec: str) -> list:
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in spec.split(",")]


@main.command("abm-run")
@click.option("--graph", "graph_path", default=None, type=click.Path(exists=True))
@click.option("--toroidal-n", default=None, type=int,
              help="Generate a toroidal geometric graph instead of loading one.")
@click.option("--toroidal-radius", default=None, type=float)
@click.option("--pop-dist", type=click.Choice(["uniform", "log_uniform"]), default="uniform",
              show_default=True)
@click.option("--pop-min", default=1e4, show_default=True)
@click.option("--pop-max", default=1e6, show_default=True)
@click.option("--rationality", default=2.0, show_default=True)
@click.option("--retention", default=1.0, show_default=True)
@click.option("--update-mode", type=click.Choice(["synchronous", "asynchronous"]),
              default="synchronous", show_default=True)
@click.option("--burn-in", default=2000, show_default=True)
@click.option("--measure", "measure_window", default=2000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--theta", default=0.0, show_default=True,
              help="Flow-weight exponent for the betweenness column.")
@click.option("--out-prefix", required=True,
              help="Writes <prefix>.flips.csv, <prefix>.modularity.csv, <prefix>.run.json")
@domain_errors
def cli_abm_run(graph_path, toroidal_n, toroidal_radius, pop_dist, pop_min, pop_max,
                rationality, retention, update_mode, burn_in, measure_window, seed,
                theta, out_prefix):
    """Run the cultural-influence simulation and report flip statistics."""
    from .centrality import betweenness_all, degree_all

    if graph_path:
        g = io.read_graph(graph_path)
    elif toroidal_n and toroidal_radius:
        g = abm_mod.toroidal_geometric_graph(toroidal_n, toroidal_radius, seed=seed,
                                             pop_range=(pop_min, pop_max),
                                             pop_dist=pop_dist)
    else:
        raise click.UsageError("need --graph or --toroidal-n and --toroidal-radius")
    cfg = abm_mod.AbmConfig(rationality=rationality, retention=retention,
                            update_mode=update_mode, burn_in=burn_in,
                            measure_window=measure_window, seed=seed)
    result = abm_mod.run(g, cfg)
    deg = degree_all(g)
    bet = betweenness_all(g, CentralityConfig(theta=theta))
    config_doc = cfg.to_dict()
    config_doc["theta"] = theta
    config_hash = hashlib.sha256(
        json.dumps(config_doc, sort_keys=True).encode()).hexdigest()[:12]

    adj = g.adjacency()
    with open(out_prefix + ".flips.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# seed={seed} config_hash={config_hash}\n")
        fh.write("city_id,flip_rate,degree,betweenness\n")
        for i in range(adj.n):
            cid = int(adj.ids[i])
            fh.write(f"{cid},{result.flip_rate[i]!r},{deg[cid]},{bet[cid]!r}\n")
    with open(out_prefix + ".modularity.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# seed={seed} config_hash={config_hash}\n")
        fh.write("iteration,modularity\n")
        for t, q in enumerate(result.modularity_series, start=1):
            fh.write(f"{t},{q!r}\n")
    io.write_json({"config": config_doc, "config_hash": config_hash,
                   "n_cities": adj.n,
                   "mean_flip_rate": float(np.mean(result.flip_rate)),
                   "final_n_states": int(len(np.unique(result.final_states))),
                   "plateau_modularity": float(np.mean(result.modularity_series[burn_in:]))},
                  out_prefix + ".run.json")
    click.echo(json.dumps({"config_hash": config_hash,
                           "plateau_modularity": float(np.mean(result.modularity_series[burn_in:]))}))


@main.command("holdout")
@click.option("--events", "events_path", required=True, type=click.Path(exists=True),
              help="Held-out events CSV (raw schema).")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--centrality", "centrality_path", required=True, type=click.Path(exists=True))
@click.option("--b-threshold", required=True, type=float,
              help="Cities with betweenness above this are the high-B set.")
@click.option("--radius-km", default=50.0, show_default=True)
@click.option("--window-start", required=True)
@click.option("--window-end", required=True)
@domain_errors
def cli_holdout(events_path, graph_path, centrality_path, b_threshold, radius_km,
                window_start, window_end):
    """Fraction of held-out events near high-betweenness cities."""
    g = io.read_graph(graph_path)
    cent, _ = io.read_centrality_csv(centrality_path)
    high_b = [g.city(cid) for cid, v in cent.items() if v[1] > b_threshold and cid in g.cities_by_id]
    window = (dt.date.fromisoformat(window_start), dt.date.fromisoformat(window_end))
    events, _report = parse_events(events_path, window=window)
    fraction = zones_mod.holdout_proximity(events, high_b, radius_km=radius_km)
    click.echo(json.dumps({"fraction_within_radius": fraction,
                           "n_events": len(events), "n_high_b_cities": len(high_b),
                           "radius_km": radius_km, "b_threshold": b_threshold}))


@main.command("make-fixture")
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
@click.option("--n-cities", default=200, show_default=True)
@click.option("--hot", "hot_count", default=3, show_default=True)
@domain_errors
def cli_make_fixture(out_dir, seed, n_cities, hot_count):
    """Write a synthetic cities + events fixture for pipeline runs."""
    manifest = synthetic.write_fixture(out_dir, seed=seed, n_cities=n_cities,
                                       hot_count=hot_count)
    click.echo(json.dumps(manifest, sort_keys=True))


@main.command("serve")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="key=value file; see README for recognised keys.")
@domain_errors
def cli_serve(config_path):
    """Start the scenario HTTP service."""
    import uvicorn

    from .service import create_app_from_config, load_service_config

    settings = load_service_config(config_path)
    app = create_app_from_config(settings)
    uvicorn.run(app, host=settings.get("host", "127.0.0.1"),
                port=int(settings.get("port", 8000)))


if __name__ == "__main__":
    main()
