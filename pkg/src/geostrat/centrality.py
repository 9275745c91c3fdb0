"""Degree, flow-weighted betweenness, and strategic centrality.

Betweenness is computed per source with Dijkstra + dependency accumulation
(Brandes), compiled with numba so the full network (thousands of cities)
finishes in minutes. Path costs are flow^(-theta) per link: theta=0 reduces
to hop counts, theta=1 to full flow weighting. Pairs are unordered, endpoints
are excluded, values are unnormalized, and pairs in different components
contribute nothing.

Two counting conventions are supported:
  fractional - each pair contributes sigma_mn(v) / sigma_mn (equal split
               across all minimum-cost paths);
  raw        - each pair contributes sigma_mn(v) (the plain number of
               minimum-cost paths through v).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .errors import ValidationError
from .graph import SpatialGraph

# Fixed chunk count keeps float accumulation order independent of the number
# of worker threads, so results are bit-identical across machines.
_N_CHUNKS = 32


@dataclass(frozen=True)
class CentralityConfig:
    theta: float = 0.5
    tie_tolerance: float = 1e-9
    count_mode: str = "fractional"  # fractional | raw

    def __post_init__(self):
        if not (0.0 <= self.theta <= 1.0):
            raise ValidationError("theta must lie in [0, 1]")
        if self.tie_tolerance < 0:
            raise ValidationError("tie_tolerance must be >= 0")
        if self.count_mode not in ("fractional", "raw"):
            raise ValidationError(f"unknown count_mode {self.count_mode!r}")


@dataclass(frozen=True)
class CityCentrality:
    city_id: int
    degree: int
    betweenness: float
    strategic: float


def edge_weight(flow: float, theta: float) -> float:
    """Path cost of a link: flow^(-theta). Requires flow > 0."""
    if not flow > 0:
        raise ValidationError(f"edge flow must be > 0, got {flow}")
    return flow ** (-theta)


@njit(cache=True, inline="always")
def _heap_push(hkey, hval, size, key, val):
    i = size
    hkey[i] = key
    hval[i] = val
    while i > 0:
        parent = (i - 1) >> 1
        if hkey[parent] <= hkey[i]:
            break
        hkey[parent], hkey[i] = hkey[i], hkey[parent]
        hval[parent], hval[i] = hval[i], hval[parent]
        i = parent
    return size + 1


@njit(cache=True, inline="always")
def _heap_pop(hkey, hval, size):
    key = hkey[0]
    val = hval[0]
    size -= 1
    hkey[0] = hkey[size]
    hval[0] = hval[size]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        right = left + 1
        small = left
        if right < size and hkey[right] < hkey[left]:
            small = right
        if hkey[i] <= hkey[small]:
            break
        hkey[i], hkey[small] = hkey[small], hkey[i]
        hval[i], hval[small] = hval[small], hval[i]
        i = small
    return key, val, size


@njit(cache=True)
def _accumulate_sources(indptr, indices, weights, n, src_lo, src_hi, tie_tol, fractional, bc):
    """Run Brandes accumulation for sources in [src_lo, src_hi) into bc."""
    cap = indices.shape[0] + 1
    dist = np.empty(n, dtype=np.float64)
    sigma = np.empty(n, dtype=np.float64)
    delta = np.empty(n, dtype=np.float64)
    order = np.empty(n, dtype=np.int64)
    done = np.empty(n, dtype=np.bool_)
    hkey = np.empty(cap, dtype=np.float64)
    hval = np.empty(cap, dtype=np.int64)

    for s in range(src_lo, src_hi):
        for v in range(n):
            dist[v] = np.inf
            sigma[v] = 0.0
            delta[v] = 0.0
            done[v] = False
        heap_size = 0
        n_order = 0
        dist[s] = 0.0
        heap_size = _heap_push(hkey, hval, heap_size, 0.0, s)
        # Dijkstra with lazy deletion; settle order is ascending by distance.
        while heap_size > 0:
            d, u, heap_size = _heap_pop(hkey, hval, heap_size)
            if done[u]:
                continue
            done[u] = True
            order[n_order] = u
            n_order += 1
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                nd = d + weights[k]
                if nd < dist[v]:
                    dist[v] = nd
                    heap_size = _heap_push(hkey, hval, heap_size, nd, v)
        # Shortest-path DAG membership: u -> v counts when dist[u] + w reaches
        # dist[v] within the relative tie tolerance. Settle order guarantees
        # sigma[u] is final before u is expanded (all weights are positive).
        sigma[s] = 1.0
        for oi in range(n_order):
            u = order[oi]
            du = dist[u]
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if v == s:
                    continue
                nd = du + weights[k]
                if nd <= dist[v] * (1.0 + tie_tol) and du < dist[v]:
                    sigma[v] += sigma[u]
        if fractional:
            # delta[u] accumulates sum over targets of sigma_su(v)/sigma_st.
            for oi in range(n_order - 1, 0, -1):
                w = order[oi]
                dw = dist[w]
                coeff = (1.0 + delta[w]) / sigma[w]
                for k in range(indptr[w], indptr[w + 1]):
                    u = indices[k]
                    if dist[u] + weights[k] <= dw * (1.0 + tie_tol) and dist[u] < dw:
                        delta[u] += sigma[u] * coeff
            for v in range(n):
                if v != s and delta[v] != 0.0:
                    bc[v] += delta[v]
        else:
            # delta[u] counts DAG paths from u to all downstream targets.
            for oi in range(n_order - 1, 0, -1):
                w = order[oi]
                dw = dist[w]
                for k in range(indptr[w], indptr[w + 1]):
                    u = indices[k]
                    if dist[u] + weights[k] <= dw * (1.0 + tie_tol) and dist[u] < dw:
                        delta[u] += 1.0 + delta[w]
            for v in range(n):
                if v != s and delta[v] != 0.0:
                    bc[v] += sigma[v] * delta[v]


@njit(cache=True, parallel=True)
def _betweenness_kernel(indptr, indices, weights, n, tie_tol, fractional, n_chunks):
    partial = np.zeros((n_chunks, n), dtype=np.float64)
    for c in prange(n_chunks):
        lo = n * c // n_chunks
        hi = n * (c + 1) // n_chunks
        _accumulate_sources(indptr, indices, weights, n, lo, hi, tie_tol, fractional, partial[c])
    bc = np.zeros(n, dtype=np.float64)
    for c in range(n_chunks):
        for v in range(n):
            bc[v] += partial[c, v]
    # Undirected graph: every unordered pair was visited from both endpoints.
    for v in range(n):
        bc[v] *= 0.5
    return bc


def betweenness_all(g: SpatialGraph, cfg: CentralityConfig | None = None) -> dict:
    """Betweenness for every city under flow^(-theta) path costs."""
    cfg = cfg or CentralityConfig(theta=g.config.theta)
    adj = g.adjacency()
    if adj.n == 0:
        return {}
    bad = adj.flows <= 0
    if bad.any():
        raise ValidationError("all edge flows must be > 0 for betweenness")
    if cfg.theta == 0.0:
        weights = np.ones_like(adj.flows)
    else:
        weights = adj.flows ** (-cfg.theta)
    n_chunks = min(_N_CHUNKS, adj.n)
    bc = _betweenness_kernel(
        adj.indptr, adj.indices, weights, adj.n,
        cfg.tie_tolerance, cfg.count_mode == "fractional", n_chunks,
    )
    return {int(adj.ids[i]): float(bc[i]) for i in range(adj.n)}


def degree_all(g: SpatialGraph) -> dict:
    """Unweighted incident-edge count per city."""
    adj = g.adjacency()
    return {int(adj.ids[i]): int(adj.indptr[i + 1] - adj.indptr[i]) for i in range(adj.n)}


def strategic_all(degree: dict, betweenness: dict) -> dict:
    """S(v) = B(v) / D(v), with S = 0 for isolated (degree-0) nodes."""
    out = {}
    for cid, d in degree.items():
        b = betweenness.get(cid, 0.0)
        out[cid] = b / d if d > 0 else 0.0
    return out


def centrality_table(g: SpatialGraph, cfg: CentralityConfig | None = None) -> list:
    """Degree, betweenness, and strategic centrality for every city, by id."""
    cfg = cfg or CentralityConfig(theta=g.config.theta)
    deg = degree_all(g)
    bet = betweenness_all(g, cfg)
    stra = strategic_all(deg, bet)
    return [
        CityCentrality(city_id=cid, degree=deg[cid], betweenness=bet[cid], strategic=stra[cid])
        for cid in sorted(deg)
    ]
