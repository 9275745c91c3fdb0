"""Cultural-influence agent dynamics on a spatial graph.

Each city holds one discrete state (its culture). Per iteration every city
with at least one dissimilar neighbour receives influence toward each
neighbouring culture: a neighbour j splits its capacity C_j (linear in
population) evenly across its n_j dissimilar neighbours, contributing
f_j = C_j / n_j to the field h^q for its own state q. The city then adopts
state q with probability proportional to (h^q)^r, where r is the
rationality (r=0 uniform over candidates, r=inf deterministic argmax).

A configurable self-retention weight rho * C_i / n_i backs the city's own
state; rho=0 recovers the strict dissimilar-only reading under which a
contested city almost surely abandons its state each step. The default
rho=1 lets cohesive cores stabilize while boundary cities keep flipping.

Randomness: every (seed, city, iteration) triple names its own counter-based
stream, so runs are reproducible bit-for-bit, parallelizable, and component
dynamics are independent of the rest of the graph in synchronous mode.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .errors import ValidationError
from .graph import City, Edge, GraphConfig, SpatialGraph
from . import geometry

_MASK = (1 << 64) - 1


def _mix64_py(z: int) -> int:
    """splitmix64 finalizer; the Python mirror of the kernel's generator."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def stream_uniform(seed: int, city: int, iteration: int, draw: int = 0) -> float:
    """Deterministic uniform in [0, 1) for the named (city, iteration) stream."""
    h = _mix64_py(seed & _MASK)
    h = _mix64_py(h ^ ((city + 1) & _MASK))
    h = _mix64_py(h ^ ((iteration + 1) & _MASK))
    h = _mix64_py(h ^ ((draw + 1) & _MASK))
    return (h >> 11) * (2.0 ** -53)


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z + np.uint64(0x9E3779B97F4A7C15))
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _uniform(seed, city, iteration, draw):
    h = _mix64(np.uint64(seed))
    h = _mix64(h ^ np.uint64(city + 1))
    h = _mix64(h ^ np.uint64(iteration + 1))
    h = _mix64(h ^ np.uint64(draw + 1))
    return (h >> np.uint64(11)) * (2.0 ** -53)


@dataclass(frozen=True)
class AbmConfig:
    """Simulation parameters. Capacity is population-linear (C_j = pop_j)."""

    rationality: float = 2.0
    retention: float = 1.0
    update_mode: str = "synchronous"  # synchronous | asynchronous
    burn_in: int = 2000
    measure_window: int = 2000
    seed: int = 0
    record_states_every: int = 0  # 0 = keep only initial and final states

    def __post_init__(self):
        if self.rationality < 0:
            raise ValidationError("rationality must be >= 0")
        if self.retention < 0:
            raise ValidationError("retention must be >= 0")
        if self.update_mode not in ("synchronous", "asynchronous"):
            raise ValidationError(f"unknown update_mode {self.update_mode!r}")
        if self.burn_in < 1 or self.measure_window < 1:
            raise ValidationError("burn_in and measure_window must be >= 1")

    def to_dict(self) -> dict:
        return {
            "rationality": None if math.isinf(self.rationality) else self.rationality,
            "argmax": math.isinf(self.rationality),
            "retention": self.retention,
            "update_mode": self.update_mode,
            "burn_in": self.burn_in,
            "measure_window": self.measure_window,
            "seed": self.seed,
            "record_states_every": self.record_states_every,
        }


@dataclass
class AbmRun:
    graph: SpatialGraph
    config: AbmConfig
    initial_states: np.ndarray
    final_states: np.ndarray
    flip_counts: np.ndarray
    flip_rate: np.ndarray
    modularity_series: np.ndarray  # Q after each iteration, burn_in + measure
    states_series: Optional[np.ndarray] = None


# ---------------------------------------------------------------------------
# Reference (pure Python) pieces; the kernel below must match these exactly.
# ---------------------------------------------------------------------------

def dissimilar_neighbors(i: int, states: dict, g: SpatialGraph) -> int:
    """Number of neighbours of city i currently holding a different state."""
    adj = g.adjacency()
    u = adj.index_of[i]
    return sum(
        1 for k in range(adj.indptr[u], adj.indptr[u + 1])
        if states[int(adj.ids[adj.indices[k]])] != states[i]
    )


def influence_share(j: int, states: dict, g: SpatialGraph) -> float:
    """f_j = C_j / n_j; zero when j has no dissimilar neighbours."""
    n_j = dissimilar_neighbors(j, states, g)
    if n_j == 0:
        return 0.0
    return g.city(j).population / n_j


def influence_field(i: int, states: dict, g: SpatialGraph,
                    retention: float = 1.0) -> dict:
    """Field {state q: h^q} acting on city i, insertion-ordered by neighbour.

    Dissimilar neighbours contribute f_j toward their own state; the city's
    current state receives retention * C_i / n_i when retention > 0. An
    empty dict means the city is uncontested and keeps its state.
    """
    adj = g.adjacency()
    u = adj.index_of[i]
    field: dict = {}
    n_i = 0
    for k in range(adj.indptr[u], adj.indptr[u + 1]):
        j = int(adj.ids[adj.indices[k]])
        q = states[j]
        if q == states[i]:
            continue
        n_i += 1
        field[q] = field.get(q, 0.0) + influence_share(j, states, g)
    if not field:
        return {}
    if retention > 0:
        field[states[i]] = retention * g.city(i).population / n_i
    return field


def adoption_probabilities(field: dict, rationality: float) -> dict:
    """P(adopt q) proportional to (h^q)^r over the candidate states.

    r=0 is uniform over candidates; r=inf puts all mass on the argmax
    (ties to the lowest state id). Weights are normalized by the max field
    value before exponentiation so large r cannot overflow.
    """
    if not field:
        return {}
    if math.isinf(rationality):
        best = min(q for q, h in field.items() if h == max(field.values()))
        return {q: (1.0 if q == best else 0.0) for q in field}
    hmax = max(field.values())
    weights = {q: (h / hmax) ** rationality for q, h in field.items()}
    total = sum(weights.values())
    return {q: w / total for q, w in weights.items()}


def adopt_state(current: int, field: dict, rationality: float, u: float) -> int:
    """Sample the next state from the field with one uniform draw u.

    Candidates are scanned in field insertion order; an empty field (or an
    all-zero one) keeps the current state.
    """
    if not field or all(h == 0.0 for h in field.values()):
        return current
    if math.isinf(rationality):
        best_q, best_h = None, -1.0
        for q, h in field.items():
            if h > best_h or (h == best_h and q < best_q):
                best_q, best_h = q, h
        return best_q
    hmax = max(field.values())
    weights = [(q, (h / hmax) ** rationality) for q, h in field.items()]
    total = sum(w for _, w in weights)
    threshold = u * total
    acc = 0.0
    for q, w in weights:
        acc += w
        if threshold < acc:
            return q
    return weights[-1][0]


def step(states: dict, g: SpatialGraph, cfg: AbmConfig, iteration: int = 0) -> dict:
    """One reference update; used for small cases and kernel verification."""
    adj = g.adjacency()
    ids = [int(v) for v in adj.ids]
    if cfg.update_mode == "synchronous":
        nxt = {}
        for i in ids:
            field = influence_field(i, states, g, retention=cfg.retention)
            u = stream_uniform(cfg.seed, i, iteration)
            nxt[i] = adopt_state(states[i], field, cfg.rationality, u)
        return nxt
    # asynchronous: seeded random order, in-place visibility
    cur = dict(states)
    order = _permutation(len(ids), cfg.seed, iteration)
    for idx in order:
        i = ids[idx]
        field = influence_field(i, cur, g, retention=cfg.retention)
        u = stream_uniform(cfg.seed, i, iteration)
        cur[i] = adopt_state(cur[i], field, cfg.rationality, u)
    return cur


def _permutation(n: int, seed: int, iteration: int) -> list:
    """Fisher-Yates order for asynchronous sweeps, from the iteration stream."""
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        u = stream_uniform(seed, -1 & 0xFFFFFFFF, iteration, draw=i)
        j = int(u * (i + 1))
        order[i], order[j] = order[j], order[i]
    return order


# ---------------------------------------------------------------------------
# Kernel
# ---------------------------------------------------------------------------

@njit(cache=True)
def _modularity_arrays(indptr, indices, states, n):
    m2 = indptr[n]
    if m2 == 0:
        return 0.0
    intra = np.zeros(n, dtype=np.float64)
    ends = np.zeros(n, dtype=np.float64)
    for u in range(n):
        su = states[u]
        ends[su] += indptr[u + 1] - indptr[u]
        for k in range(indptr[u], indptr[u + 1]):
            if states[indices[k]] == su:
                intra[su] += 1.0
    q = 0.0
    for c in range(n):
        if ends[c] > 0.0:
            q += intra[c] / m2 - (ends[c] / m2) ** 2
    return q


@njit(cache=True)
def _update_city(i, states, indptr, indices, caps, n_dis, retention, rationality,
                 argmax_mode, seed, iteration, cand_states, cand_h):
    """Next state for city i given current states; returns states[i] if uncontested."""
    si = states[i]
    if n_dis[i] == 0:
        return si
    n_cand = 0
    for k in range(indptr[i], indptr[i + 1]):
        j = indices[k]
        sj = states[j]
        if sj == si:
            continue
        fj = caps[j] / n_dis[j] if n_dis[j] > 0 else 0.0
        found = False
        for c in range(n_cand):
            if cand_states[c] == sj:
                cand_h[c] += fj
                found = True
                break
        if not found:
            cand_states[n_cand] = sj
            cand_h[n_cand] = fj
            n_cand += 1
    if retention > 0.0:
        cand_states[n_cand] = si
        cand_h[n_cand] = retention * caps[i] / n_dis[i]
        n_cand += 1
    hmax = 0.0
    for c in range(n_cand):
        if cand_h[c] > hmax:
            hmax = cand_h[c]
    if hmax == 0.0:
        return si
    if argmax_mode:
        best_q = -1
        best_h = -1.0
        for c in range(n_cand):
            if cand_h[c] > best_h or (cand_h[c] == best_h and cand_states[c] < best_q):
                best_q = cand_states[c]
                best_h = cand_h[c]
        return best_q
    total = 0.0
    for c in range(n_cand):
        cand_h[c] = (cand_h[c] / hmax) ** rationality
        total += cand_h[c]
    u = _uniform(seed, i, iteration, 0)
    threshold = u * total
    acc = 0.0
    for c in range(n_cand):
        acc += cand_h[c]
        if threshold < acc:
            return cand_states[c]
    return cand_states[n_cand - 1]


@njit(cache=True)
def _abm_kernel(indptr, indices, caps, n, rationality, argmax_mode, retention,
                synchronous, burn_in, measure_window, seed, record_every, states0):
    total_iters = burn_in + measure_window
    states = states0.copy()
    nxt = np.empty(n, dtype=np.int64)
    n_dis = np.empty(n, dtype=np.int64)
    max_deg = 0
    for u in range(n):
        d = indptr[u + 1] - indptr[u]
        if d > max_deg:
            max_deg = d
    cand_states = np.empty(max_deg + 1, dtype=np.int64)
    cand_h = np.empty(max_deg + 1, dtype=np.float64)
    flip_counts = np.zeros(n, dtype=np.int64)
    mod_series = np.empty(total_iters, dtype=np.float64)
    n_rec = 0 if record_every <= 0 else total_iters // record_every
    recorded = np.empty((n_rec, n), dtype=np.int64)
    rec_i = 0
    perm = np.empty(n, dtype=np.int64)

    for it in range(total_iters):
        if synchronous:
            for u in range(n):
                cnt = 0
                su = states[u]
                for k in range(indptr[u], indptr[u + 1]):
                    if states[indices[k]] != su:
                        cnt += 1
                n_dis[u] = cnt
            for i in range(n):
                nxt[i] = _update_city(i, states, indptr, indices, caps, n_dis,
                                      retention, rationality, argmax_mode,
                                      seed, it, cand_states, cand_h)
            if it >= burn_in:
                for i in range(n):
                    if nxt[i] != states[i]:
                        flip_counts[i] += 1
            for i in range(n):
                states[i] = nxt[i]
        else:
            for i in range(n):
                perm[i] = i
            for i in range(n - 1, 0, -1):
                u = _uniform(seed, 0xFFFFFFFF, it, i)
                j = np.int64(u * (i + 1))
                perm[i], perm[j] = perm[j], perm[i]
            for pi in range(n):
                i = perm[pi]
                si = states[i]
                # refresh dissimilar counts for i and its neighbourhood only
                for off in range(indptr[i + 1] - indptr[i] + 1):
                    u = i if off == 0 else indices[indptr[i] + off - 1]
                    cnt = 0
                    su = states[u]
                    for k2 in range(indptr[u], indptr[u + 1]):
                        if states[indices[k2]] != su:
                            cnt += 1
                    n_dis[u] = cnt
                s_new = _update_city(i, states, indptr, indices, caps, n_dis,
                                     retention, rationality, argmax_mode,
                                     seed, it, cand_states, cand_h)
                if s_new != si:
                    states[i] = s_new
                    if it >= burn_in:
                        flip_counts[i] += 1
        mod_series[it] = _modularity_arrays(indptr, indices, states, n)
        if record_every > 0 and (it + 1) % record_every == 0 and rec_i < n_rec:
            for i in range(n):
                recorded[rec_i, i] = states[i]
            rec_i += 1
    return states, flip_counts, mod_series, recorded


def run(g: SpatialGraph, cfg: AbmConfig) -> AbmRun:
    """Execute burn-in plus measure iterations; deterministic given the seed.

    Initial states are distinct per city (state id = city index). Flip
    counts and rates cover the measure window only; the modularity series
    covers every iteration of both phases.
    """
    adj = g.adjacency()
    n = adj.n
    states0 = np.arange(n, dtype=np.int64)
    final, flips, mods, recorded = _abm_kernel(
        adj.indptr, adj.indices, adj.populations, n,
        0.0 if math.isinf(cfg.rationality) else cfg.rationality,
        math.isinf(cfg.rationality), cfg.retention,
        cfg.update_mode == "synchronous",
        cfg.burn_in, cfg.measure_window, cfg.seed & _MASK,
        cfg.record_states_every, states0,
    )
    return AbmRun(
        graph=g, config=cfg,
        initial_states=states0, final_states=final,
        flip_counts=flips,
        flip_rate=flips / cfg.measure_window,
        modularity_series=mods,
        states_series=recorded if cfg.record_states_every > 0 else None,
    )


def modularity(states, g: SpatialGraph) -> float:
    """Newman modularity of the partition induced by equal states.

    Q = sum_c (e_cc - a_c^2) with e taken as edge fractions; an edgeless
    graph has Q = 0 by convention.
    """
    adj = g.adjacency()
    if isinstance(states, dict):
        arr = np.empty(adj.n, dtype=np.int64)
        for i in range(adj.n):
            arr[i] = states[int(adj.ids[i])]
    else:
        arr = np.asarray(states, dtype=np.int64)
    # Relabel to a dense [0, n) range for the kernel's per-state arrays.
    _, dense = np.unique(arr, return_inverse=True)
    return float(_modularity_arrays(adj.indptr, adj.indices,
                                    dense.astype(np.int64), adj.n))


def toroidal_geometric_graph(n: int, radius: float, box: float = 1.0,
                             seed: int = 0, pop_range=(1e4, 1e6),
                             pop_dist: str = "uniform") -> SpatialGraph:
    """Random geometric graph on a wrapped square with gravity flows.

    Points are uniform on [0, box)^2; edges join pairs at toroidal distance
    <= radius; populations are drawn on pop_range (pop_dist "uniform", or
    "log_uniform" for a heavy-tailed city-size spread); flows follow the
    gravity law with the toroidal distance. Stored lat/lon are scaled
    placeholders (the torus has no geographic meaning).
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if not (0 <= radius < box / 2):
        raise ValidationError("radius must lie in [0, box/2)")
    if pop_dist not in ("uniform", "log_uniform"):
        raise ValidationError(f"unknown pop_dist {pop_dist!r}")
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.0, box, size=n)
    ys = rng.uniform(0.0, box, size=n)
    if pop_dist == "uniform":
        pops = rng.uniform(pop_range[0], pop_range[1], size=n)
    else:
        pops = 10.0 ** rng.uniform(math.log10(pop_range[0]),
                                   math.log10(pop_range[1]), size=n)
    cities = [
        City(id=i, name=f"p{i}", country="torus", province=None,
             lat=float(ys[i] / box * 89.0), lon=float(xs[i] / box * 89.0),
             population=float(pops[i]))
        for i in range(n)
    ]
    ii, jj, dist = geometry.toroidal_pairs_within_radius(xs, ys, radius, box)
    edges = []
    for a, b, d in zip(ii, jj, dist):
        flow = float(pops[a]) * float(pops[b]) / float(d) ** 2
        edges.append(Edge(a=int(a), b=int(b), distance_km=float(d), flow=flow))
    cfg = GraphConfig(radius_km=radius, min_population=0.0, flow_rule="gravity",
                      metric="toroidal", box=box)
    return SpatialGraph.create(cities, edges, cfg)


@dataclass
class FlipReport:
    pairs: list  # (city_id, flip_rate, betweenness)
    spearman: Optional[float]
    decile_means: list  # mean flip rate per betweenness decile, ascending


def flip_betweenness_report(run_result: AbmRun, betweenness: dict) -> FlipReport:
    """Scatter pairs, Spearman rank correlation, and per-decile flip rates."""
    from scipy.stats import spearmanr

    adj = run_result.graph.adjacency()
    ids = [int(v) for v in adj.ids]
    rates = np.asarray(run_result.flip_rate, dtype=np.float64)
    bets = np.array([betweenness[i] for i in ids], dtype=np.float64)
    pairs = [(ids[i], float(rates[i]), float(bets[i])) for i in range(len(ids))]
    if np.ptp(rates) == 0 or np.ptp(bets) == 0:
        rho = None
    else:
        rho = float(spearmanr(rates, bets).statistic)
    order = np.argsort(bets, kind="stable")
    decile_means = [float(np.mean(rates[chunk])) for chunk in np.array_split(order, 10)]
    return FlipReport(pairs=pairs, spearman=rho, decile_means=decile_means)
