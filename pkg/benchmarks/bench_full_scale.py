"""Full-scale performance harness: 7322-city build + theta=0.5 betweenness.

The licensed global city dataset does not ship with the repo, so the harness
runs on a synthetic world with comparable size and clustering. Budget from
the performance contract: the whole thing in <= 10 minutes on a 4-core
laptop.

Usage: python benchmarks/bench_full_scale.py [n_cities]
"""
import sys
import time

from geostrat.centrality import CentralityConfig, betweenness_all
from geostrat.graph import GraphConfig, build_graph
from geostrat.synthetic import synthetic_world


def run(n_cities: int = 7322, theta: float = 0.5) -> float:
    t0 = time.time()
    cities = synthetic_world(n_cities=n_cities, seed=0)
    t_gen = time.time()
    g = build_graph(cities, GraphConfig(radius_km=500.0, min_population=10_000.0,
                                        colocated="merge"))
    t_build = time.time()
    bc = betweenness_all(g, CentralityConfig(theta=theta))
    t_bc = time.time()
    top = sorted(bc.items(), key=lambda kv: -kv[1])[:5]
    print(f"world: {len(cities)} cities generated in {t_gen - t0:.1f}s")
    print(f"graph: {len(g.cities)} cities, {len(g.edges)} edges "
          f"built in {t_build - t_gen:.1f}s")
    print(f"betweenness (theta={theta}): {t_bc - t_build:.1f}s")
    print(f"top-5 betweenness city ids: {[cid for cid, _ in top]}")
    elapsed = t_bc - t_gen
    print(f"TOTAL (build + betweenness): {elapsed:.1f}s "
          f"({'within' if elapsed <= 600 else 'OVER'} the 600s budget)")
    return elapsed


if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 7322
    run(n)
