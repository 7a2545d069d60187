"""Coupled random walks, exact pair-chain transients, and annealed exploration.

Two walkers share the edge clocks of the graph: when an edge rings, each
walker sitting on one of its endpoints crosses independently with
probability 1/2.  Each walker is marginally a lazy random walk, and the
meeting probability from a common start ties the pair chain to the second
moment of the averaging process.

Simulation samples only the clocks of edges incident to the current pair
(rate = number of distinct non-loop incident edges, a shared edge counted
once), which is the full process thinned to the events that can matter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ._parallel import run_chunks
from .averaging import MassConfig
from .graphs import Graph, SizeCapError, explored_subgraph_is_tree
from .rng import as_seed, derive_seed, new_state, next_below, next_coin, next_unit

__all__ = [
    "PairState",
    "TreeWalker",
    "ExplorationState",
    "MeetEstimate",
    "crw_event",
    "simulate_crw",
    "estimate_meet_prob",
    "pair_chain_exact",
    "pair_chain_dist",
    "rw_marginal_exact",
    "simulate_crw_tree",
    "estimate_tree_meet_prob",
    "sample_tree_distances",
    "annealed_crw",
    "estimate_treelike_failure",
    "write_meet_csv",
]


@dataclass(frozen=True)
class PairState:
    x: int
    y: int


@dataclass(frozen=True)
class TreeWalker:
    """Vertex of the rooted d-regular tree as its label path from the root.

    The root has d outgoing labels 0..d-1; every other vertex has d-1
    onward labels 0..d-2 plus the edge back toward the root.  The empty
    path is the root.
    """

    d: int
    path: tuple[int, ...] = ()

    def depth(self) -> int:
        return len(self.path)

    def child(self, label: int) -> "TreeWalker":
        limit = self.d if not self.path else self.d - 1
        if not 0 <= label < limit:
            raise ValueError("child label out of range")
        return TreeWalker(self.d, self.path + (label,))

    def parent(self) -> "TreeWalker":
        if not self.path:
            raise ValueError("root has no parent")
        return TreeWalker(self.d, self.path[:-1])

    def dist_to(self, other: "TreeWalker") -> int:
        c = 0
        for a, b in zip(self.path, other.path):
            if a != b:
                break
            c += 1
        return len(self.path) + len(other.path) - 2 * c


def crw_event(state: PairState, g: Graph, ring_edge: tuple[int, int],
              coin_x: int, coin_y: int) -> PairState:
    """Apply one edge ring: each walker on an endpoint crosses iff its coin is 1."""
    u, v = int(ring_edge[0]), int(ring_edge[1])
    if not np.any(g.neighbors_of(u) == v):
        raise ValueError(f"({u}, {v}) is not an edge")
    x, y = state.x, state.y
    nx, ny = x, y
    if u != v:
        if x == u:
            nx = v if coin_x else u
        elif x == v:
            nx = u if coin_x else v
        if y == u:
            ny = v if coin_y else u
        elif y == v:
            ny = u if coin_y else v
    return PairState(nx, ny)


@njit(cache=True, nogil=True)
def _crw_advance(nb, d, x, y, state):
    """One incident-edge event; returns (new_x, new_y, waiting_time)."""
    base_x = x * d
    loops_x = 0
    shared = 0
    for i in range(d):
        w = nb[base_x + i]
        if w == x:
            loops_x += 1
        elif w == y:
            shared += 1
    if x == y:
        cnt = d - loops_x
        if cnt == 0:
            return x, y, np.inf
        dt = -np.log(1.0 - next_unit(state)) / cnt
        j = next_below(state, cnt)
        w = -1
        seen = -1
        for i in range(d):
            cand = nb[base_x + i]
            if cand != x:
                seen += 1
                if seen == j:
                    w = cand
                    break
        cx = next_coin(state)
        cy = next_coin(state)
        nx = w if cx == 1 else x
        ny = w if cy == 1 else y
        return nx, ny, dt
    base_y = y * d
    loops_y = 0
    for i in range(d):
        if nb[base_y + i] == y:
            loops_y += 1
    cnt_x = d - loops_x
    cnt_y = d - loops_y - shared
    total = cnt_x + cnt_y
    if total == 0:
        return x, y, np.inf
    dt = -np.log(1.0 - next_unit(state)) / total
    j = next_below(state, total)
    if j < cnt_x:
        seen = -1
        w = -1
        for i in range(d):
            cand = nb[base_x + i]
            if cand != x:
                seen += 1
                if seen == j:
                    w = cand
                    break
        cx = next_coin(state)
        nx = w if cx == 1 else x
        ny = y
        if w == y:
            cy = next_coin(state)
            ny = x if cy == 1 else y
        return nx, ny, dt
    jj = j - cnt_x
    seen = -1
    w = -1
    for i in range(d):
        cand = nb[base_y + i]
        if cand != y and cand != x:
            seen += 1
            if seen == jj:
                w = cand
                break
    cy = next_coin(state)
    ny = w if cy == 1 else y
    return x, ny, dt


@njit(cache=True, nogil=True)
def _crw_replica(nb, d, x0, y0, obs, state, out_xy):
    x = x0
    y = y0
    t = 0.0
    j = 0
    T = len(obs)
    while j < T:
        nx, ny, dt = _crw_advance(nb, d, x, y, state)
        tn = t + dt
        while j < T and obs[j] < tn:
            out_xy[j, 0] = x
            out_xy[j, 1] = y
            j += 1
        x, y, t = nx, ny, tn


@njit(cache=True, nogil=True)
def _crw_positions_chunk(nb, d, x0, y0, obs, seed, lo, hi, out):
    for r in range(lo, hi):
        state = new_state(derive_seed(seed, r))
        _crw_replica(nb, d, x0, y0, obs, state, out[r])


@njit(cache=True, nogil=True)
def _crw_meet_chunk(nb, d, x0, obs, seed, lo, hi, out):
    T = len(obs)
    xy = np.empty((T, 2), dtype=np.int64)
    for r in range(lo, hi):
        state = new_state(derive_seed(seed, r))
        _crw_replica(nb, d, x0, x0, obs, state, xy)
        for j in range(T):
            out[r, j] = 1 if xy[j, 0] == xy[j, 1] else 0


def simulate_crw(g: Graph, x0: int, y0: int, t_end: float, seed: int) -> PairState:
    """Exact pair trajectory endpoint at t_end."""
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    obs = np.array([t_end], dtype=float)
    out = np.empty((1, 2), dtype=np.int64)
    state = new_state(as_seed(seed))
    _crw_replica(g.neighbors, g.d, x0, y0, obs, state, out)
    return PairState(int(out[0, 0]), int(out[0, 1]))


@dataclass(frozen=True)
class MeetEstimate:
    """Meeting-probability estimate with exact binomial standard errors."""

    times: np.ndarray
    p_meet: np.ndarray
    stderr: np.ndarray
    replicas: int
    seed: int
    n: int

    @property
    def n_times_p_minus_1(self) -> np.ndarray:
        return self.n * self.p_meet - 1.0


def estimate_meet_prob(g: Graph, x0: int, times, replicas: int, seed: int,
                       threads: int | None = None) -> MeetEstimate:
    """P(X_t = Y_t) from a common start, one indicator per replica and time."""
    if replicas < 2:
        raise ValueError("need at least 2 replicas")
    times = np.asarray(times, dtype=float)
    if len(times) > 1 and np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    flags = np.empty((replicas, len(times)), dtype=np.uint8)
    seed = as_seed(seed)

    def work(lo, hi):
        _crw_meet_chunk(g.neighbors, g.d, x0, times, seed, lo, hi, flags)

    run_chunks(work, replicas, threads)
    hits = flags.sum(axis=0, dtype=np.int64)
    p = hits / replicas
    stderr = np.sqrt(p * (1.0 - p) / replicas)
    return MeetEstimate(times=times, p_meet=p, stderr=stderr,
                        replicas=replicas, seed=seed, n=g.n)


def sample_pair_positions(g: Graph, x0: int, y0: int, times, replicas: int,
                          seed: int, threads: int | None = None) -> np.ndarray:
    """Per-replica pair positions at the observation times, shape (R, T, 2)."""
    times = np.asarray(times, dtype=float)
    out = np.empty((replicas, len(times), 2), dtype=np.int64)
    seed = as_seed(seed)

    def work(lo, hi):
        _crw_positions_chunk(g.neighbors, g.d, x0, y0, times, seed, lo, hi, out)

    run_chunks(work, replicas, threads)
    return out


# ---------------------------------------------------------------------------
# Exact transients by uniformization
# ---------------------------------------------------------------------------

def _poisson_weights(lam: float, K: int) -> np.ndarray:
    k = np.arange(K + 1, dtype=float)
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, K + 1)))))
    if lam == 0.0:
        w = np.zeros(K + 1)
        w[0] = 1.0
        return w
    return np.exp(-lam + k * math.log(lam) - log_fact)


def _pair_step(pi: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """One application of the edge-averaged pair kernel.

    A ringing edge re-randomizes each endpoint walker uniformly over the
    two endpoints; the discrete kernel is the uniform mixture over edges.
    Loops act as the identity and contribute only to the mixture weight.
    """
    acc = np.zeros_like(pi)
    for x, y in edges:
        if x == y:
            continue
        r = 0.5 * (pi[x, :] + pi[y, :])
        c = 0.5 * (pi[:, x] + pi[:, y])
        v = 0.25 * (pi[x, x] + pi[x, y] + pi[y, x] + pi[y, y])
        acc[x, :] += r - pi[x, :]
        acc[y, :] += r - pi[y, :]
        acc[:, x] += c - pi[:, x]
        acc[:, y] += c - pi[:, y]
        for a in (x, y):
            for b in (x, y):
                acc[a, b] += v - r[b] - c[a] + pi[a, b]
    return pi + acc / len(edges)


def pair_chain_dist(g: Graph, x0: int, t: float) -> np.ndarray:
    """Exact law of the pair at time t from (x0, x0), as an (n, n) matrix.

    Poisson-series uniformization at rate |E| with truncation
    K = |E| t + 12 sqrt(|E| t) + 30; the discarded tail is below 1e-12.
    """
    if g.n > 100:
        raise SizeCapError("pair_chain_dist supports n <= 100")
    if t < 0:
        raise ValueError("t must be >= 0")
    edges = np.asarray(g.edges)
    lam = len(edges) * t
    K = int(math.ceil(lam + 12.0 * math.sqrt(lam) + 30.0))
    w = _poisson_weights(lam, K)
    pi = np.zeros((g.n, g.n))
    pi[x0, x0] = 1.0
    mix = w[0] * pi
    for k in range(1, K + 1):
        pi = _pair_step(pi, edges)
        if w[k] > 0.0:
            mix = mix + w[k] * pi
    return mix


def pair_chain_exact(g: Graph, x0: int, t: float) -> float:
    """Exact meeting probability P_{x0,x0}(X_t = Y_t) for small graphs."""
    return float(np.trace(pair_chain_dist(g, x0, t)))


def rw_marginal_exact(g: Graph, init: MassConfig, t: float) -> MassConfig:
    """Law of the lazy walk (rate 1/2 per incident edge) started from init.

    Uniformization at rate d/2; the embedded kernel is the simple random
    walk step A/d.
    """
    if g.n > 2000:
        raise SizeCapError("rw_marginal_exact supports n <= 2000")
    init.check()
    if init.n != g.n:
        raise ValueError("mass configuration does not match the graph")
    if t < 0:
        raise ValueError("t must be >= 0")
    lam = 0.5 * g.d * t
    K = int(math.ceil(lam + 12.0 * math.sqrt(lam) + 30.0))
    w = _poisson_weights(lam, K)
    pi = init.mass.astype(float).copy()
    mix = w[0] * pi
    starts = np.asarray(g.offsets[:-1])
    for k in range(1, K + 1):
        pi = np.add.reduceat(pi[g.neighbors], starts) / g.d
        if w[k] > 0.0:
            mix = mix + w[k] * pi
    return MassConfig(mix)


# ---------------------------------------------------------------------------
# Coupled walks on the infinite regular tree
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _tree_common_prefix(xb, lx, yb, ly):
    c = 0
    m = min(lx, ly)
    while c < m and xb[c] == yb[c]:
        c += 1
    return c


@njit(cache=True, nogil=True)
def _tree_move(buf, length, j, d):
    """Move along edge index j: 0 = parent (if any), others = child labels."""
    if length > 0:
        if j == 0:
            return length - 1
        buf[length] = j - 1
        return length + 1
    buf[length] = j
    return length + 1


@njit(cache=True, nogil=True)
def _tree_replica(d, obs, state, xb, yb, out_dist):
    lx = 0
    ly = 0
    t = 0.0
    j = 0
    T = len(obs)
    cap = len(xb) - 2
    while j < T:
        c = _tree_common_prefix(xb, lx, yb, ly)
        dist = lx + ly - 2 * c
        if dist == 0:
            rate = d
        elif dist == 1:
            rate = 2 * d - 1
        else:
            rate = 2 * d
        dt = -np.log(1.0 - next_unit(state)) / rate
        tn = t + dt
        while j < T and obs[j] < tn:
            out_dist[j] = dist
            j += 1
        if j >= T:
            break
        t = tn
        if lx >= cap or ly >= cap:
            raise RuntimeError("tree path buffer overflow")
        r = next_below(state, rate)
        if dist == 0:
            # same vertex (lx == ly, equal prefixes): the d edges are shared,
            # each walker crosses the ringing one independently
            cx = next_coin(state)
            cy = next_coin(state)
            if cx == 1:
                lx = _tree_move(xb, lx, r, d)
            if cy == 1:
                ly = _tree_move(yb, ly, r, d)
        elif dist == 1:
            x_deeper = lx > ly
            if r == 0:
                # the connecting edge: both walkers coin, x first
                cx = next_coin(state)
                cy = next_coin(state)
                if x_deeper:
                    lab = xb[lx - 1]
                    if cx == 1:
                        lx -= 1
                    if cy == 1:
                        yb[ly] = lab
                        ly += 1
                else:
                    lab = yb[ly - 1]
                    if cx == 1:
                        xb[lx] = lab
                        lx += 1
                    if cy == 1:
                        ly -= 1
            elif r < d:
                # one of the deeper walker's child edges (it cannot be root)
                lab = r - 1
                if x_deeper:
                    if next_coin(state) == 1:
                        xb[lx] = lab
                        lx += 1
                else:
                    if next_coin(state) == 1:
                        yb[ly] = lab
                        ly += 1
            else:
                # shallower walker's other edges, skipping the one toward
                # the deeper walker
                idx = r - d
                if x_deeper:
                    s_len = ly
                    s_buf = yb
                    skip = xb[ly] if lx > ly else 0
                else:
                    s_len = lx
                    s_buf = xb
                    skip = yb[lx] if ly > lx else 0
                if s_len > 0:
                    if idx == 0:
                        move_j = 0
                    else:
                        lab = idx - 1
                        if lab >= skip:
                            lab += 1
                        move_j = lab + 1
                else:
                    lab = idx
                    if lab >= skip:
                        lab += 1
                    move_j = lab
                if next_coin(state) == 1:
                    if x_deeper:
                        ly = _tree_move(yb, ly, move_j, d)
                    else:
                        lx = _tree_move(xb, lx, move_j, d)
        else:
            if r < d:
                if next_coin(state) == 1:
                    lx = _tree_move(xb, lx, r, d)
            else:
                if next_coin(state) == 1:
                    ly = _tree_move(yb, ly, r - d, d)
    return 0


@njit(cache=True, nogil=True)
def _tree_dist_chunk(d, obs, seed, lo, hi, cap, out):
    xb = np.empty(cap, dtype=np.int64)
    yb = np.empty(cap, dtype=np.int64)
    dist = np.empty(len(obs), dtype=np.int64)
    for r in range(lo, hi):
        state = new_state(derive_seed(seed, r))
        _tree_replica(d, obs, state, xb, yb, dist)
        for j in range(len(obs)):
            out[r, j] = dist[j]


def _tree_cap(d: int, t_end: float) -> int:
    return 256 + int(4.0 * d * t_end)


def simulate_crw_tree(d: int, t_end: float, seed: int) -> int:
    """Tree distance of the coupled pair at t_end, both started at the root."""
    if d < 3:
        raise ValueError("d must be >= 3")
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    obs = np.array([t_end], dtype=float)
    out = np.empty((1, 1), dtype=np.int16)
    _tree_dist_chunk(d, obs, as_seed(seed), 0, 1, _tree_cap(d, t_end), out)
    return int(out[0, 0])


def sample_tree_distances(d: int, times, replicas: int, seed: int,
                          threads: int | None = None) -> np.ndarray:
    """Per-replica tree distances at the observation times, shape (R, T)."""
    if d < 3:
        raise ValueError("d must be >= 3")
    times = np.asarray(times, dtype=float)
    out = np.empty((replicas, len(times)), dtype=np.int16)
    cap = _tree_cap(d, float(times.max()) if len(times) else 1.0)
    seed = as_seed(seed)

    def work(lo, hi):
        _tree_dist_chunk(d, times, seed, lo, hi, cap, out)

    run_chunks(work, replicas, threads)
    return out


def estimate_tree_meet_prob(d: int, times, replicas: int, seed: int,
                            threads: int | None = None) -> MeetEstimate:
    """Frequency of zero tree distance, with binomial standard errors."""
    dists = sample_tree_distances(d, times, replicas, seed, threads)
    hits = (dists == 0).sum(axis=0, dtype=np.int64)
    p = hits / replicas
    stderr = np.sqrt(p * (1.0 - p) / replicas)
    return MeetEstimate(times=np.asarray(times, dtype=float), p_meet=p,
                        stderr=stderr, replicas=replicas, seed=seed, n=0)


# ---------------------------------------------------------------------------
# Annealed exploration: walkers on a configuration model matched on the fly
# ---------------------------------------------------------------------------

@dataclass
class ExplorationState:
    """Outcome of one annealed run: matching table and collision accounting.

    ``explored`` holds the vertices visited by the walkers; ``edges`` lists
    every matching made, so the edge multigraph is a tree iff no matching
    collided with an already-touched vertex.
    """

    n: int
    d: int
    matched: dict = field(default_factory=dict)
    explored: set = field(default_factory=set)
    edges: list = field(default_factory=list)
    collisions: int = 0
    events: int = 0

    def is_tree(self) -> bool:
        return explored_subgraph_is_tree(self.edges)


def annealed_crw(n: int, d: int, t_end: float, seed: int,
                 start: int = 0) -> tuple[ExplorationState, PairState]:
    """Coupled walks on the partially matched configuration model.

    Whenever a walker occupies a vertex with unmatched stubs, those stubs
    are matched sequentially, uniformly among all unmatched stubs.  A
    matching that lands on an already-touched vertex (including the vertex
    being matched itself) is counted as a collision; the explored edge
    multigraph is a tree iff no collision occurred.
    """
    if d < 3 or n < d + 1:
        raise ValueError("need d >= 3 and n >= d + 1")
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    state = new_state(as_seed(seed))
    st = ExplorationState(n=n, d=d)
    matched = st.matched
    nd = n * d

    def vertex_touched(v: int) -> bool:
        base = v * d
        return any((base + k) in matched for k in range(d))

    def match_vertex(v: int) -> None:
        base = v * d
        for i in range(d):
            s = base + i
            if s in matched:
                continue
            while True:
                u = next_below(state, nd)
                if u != s and u not in matched:
                    break
            v2 = u // d
            if v2 == v or vertex_touched(v2):
                st.collisions += 1
            matched[s] = u
            matched[u] = s
            st.edges.append((v, v2))

    match_vertex(start)
    x = y = start
    st.explored.add(start)
    t = 0.0
    nb = np.empty(2 * d, dtype=np.int64)
    while True:
        for i in range(d):
            nb[i] = matched[x * d + i] // d
        for i in range(d):
            nb[d + i] = matched[y * d + i] // d
        nx, ny, dt = _pair_move_from_tables(nb, d, x, y, state)
        t += dt
        if t > t_end:
            break
        st.events += 1
        x, y = nx, ny
        st.explored.add(x)
        st.explored.add(y)
        match_vertex(x)
        match_vertex(y)
    return st, PairState(x, y)


@njit(cache=True, nogil=True)
def _pair_move_from_tables(nb, d, x, y, state):
    """Same event rule as _crw_advance, neighbors given as two length-d rows."""
    loops_x = 0
    shared = 0
    for i in range(d):
        w = nb[i]
        if w == x:
            loops_x += 1
        elif w == y:
            shared += 1
    if x == y:
        cnt = d - loops_x
        if cnt == 0:
            return x, y, np.inf
        dt = -np.log(1.0 - next_unit(state)) / cnt
        j = next_below(state, cnt)
        seen = -1
        w = -1
        for i in range(d):
            cand = nb[i]
            if cand != x:
                seen += 1
                if seen == j:
                    w = cand
                    break
        cx = next_coin(state)
        cy = next_coin(state)
        nx = w if cx == 1 else x
        ny = w if cy == 1 else y
        return nx, ny, dt
    loops_y = 0
    for i in range(d):
        if nb[d + i] == y:
            loops_y += 1
    cnt_x = d - loops_x
    cnt_y = d - loops_y - shared
    total = cnt_x + cnt_y
    if total == 0:
        return x, y, np.inf
    dt = -np.log(1.0 - next_unit(state)) / total
    j = next_below(state, total)
    if j < cnt_x:
        seen = -1
        w = -1
        for i in range(d):
            cand = nb[i]
            if cand != x:
                seen += 1
                if seen == j:
                    w = cand
                    break
        cx = next_coin(state)
        nx = w if cx == 1 else x
        ny = y
        if w == y:
            cy = next_coin(state)
            ny = x if cy == 1 else y
        return nx, ny, dt
    jj = j - cnt_x
    seen = -1
    w = -1
    for i in range(d):
        cand = nb[d + i]
        if cand != y and cand != x:
            seen += 1
            if seen == jj:
                w = cand
                break
    cy = next_coin(state)
    ny = w if cy == 1 else y
    return x, ny, dt


@njit(cache=True, nogil=True)
def _ht_lookup(keys, vals, key, mask):
    idx = (_hash_u64(key)) & mask
    while True:
        k = keys[idx]
        if k == key:
            return vals[idx]
        if k == -1:
            return np.int64(-1)
        idx = (idx + 1) & mask


@njit(cache=True, nogil=True)
def _hash_u64(key):
    z = np.uint64(key) * np.uint64(0x9E3779B97F4A7C15)
    z ^= z >> np.uint64(29)
    return np.int64(z & np.uint64(0x7FFFFFFFFFFFFFFF))


@njit(cache=True, nogil=True)
def _ht_insert(keys, vals, key, val, mask):
    idx = (_hash_u64(key)) & mask
    while True:
        k = keys[idx]
        if k == -1:
            keys[idx] = key
            vals[idx] = val
            return
        if k == key:
            vals[idx] = val
            return
        idx = (idx + 1) & mask


@njit(cache=True, nogil=True)
def _annealed_replica(n, d, t_end, state, keys, vals, mask, nb):
    """Collision/event counts of one annealed run; mirrors annealed_crw."""
    keys[:] = -1
    collisions = 0
    events = 0
    used = 0
    cap = len(keys)
    x = 0
    y = 0
    collisions, used = _match_vertex(n, d, x, state, keys, vals, mask,
                                     collisions, used)
    t = 0.0
    while True:
        if 2 * used > cap:
            raise RuntimeError("annealed stub table overflow")
        for i in range(d):
            nb[i] = _ht_lookup(keys, vals, x * d + i, mask) // d
        for i in range(d):
            nb[d + i] = _ht_lookup(keys, vals, y * d + i, mask) // d
        nx, ny, dt = _pair_move_from_tables(nb, d, x, y, state)
        t += dt
        if t > t_end:
            break
        events += 1
        x, y = nx, ny
        collisions, used = _match_vertex(n, d, x, state, keys, vals, mask,
                                         collisions, used)
        collisions, used = _match_vertex(n, d, y, state, keys, vals, mask,
                                         collisions, used)
    return collisions, events


@njit(cache=True, nogil=True)
def _match_vertex(n, d, v, state, keys, vals, mask, collisions, used):
    nd = n * d
    base = v * d
    for i in range(d):
        s = base + i
        if _ht_lookup(keys, vals, s, mask) != -1:
            continue
        while True:
            u = np.int64(next_below(state, nd))
            if u != s and _ht_lookup(keys, vals, u, mask) == -1:
                break
        v2 = u // d
        touched = v2 == v
        if not touched:
            b2 = v2 * d
            for k in range(d):
                if _ht_lookup(keys, vals, b2 + k, mask) != -1:
                    touched = True
                    break
        if touched:
            collisions += 1
        _ht_insert(keys, vals, np.int64(s), u, mask)
        _ht_insert(keys, vals, u, np.int64(s), mask)
        used += 2
    return collisions, used


@njit(cache=True, nogil=True)
def _annealed_chunk(n, d, t_end, seed, lo, hi, cap, out_coll, out_events):
    keys = np.empty(cap, dtype=np.int64)
    vals = np.empty(cap, dtype=np.int64)
    nb = np.empty(2 * d, dtype=np.int64)
    mask = cap - 1
    for r in range(lo, hi):
        state = new_state(derive_seed(seed, r))
        coll, ev = _annealed_replica(n, d, t_end, state, keys, vals, mask, nb)
        out_coll[r] = coll
        out_events[r] = ev


def _annealed_capacity(d: int, t_end: float) -> int:
    # stubs touched ~ d * (2 + jumps); keep the table under ~1/8 load
    expect = 8 * d * (4 + int(2.0 * d * t_end + 12.0 * math.sqrt(2.0 * d * t_end + 1.0)))
    cap = 1
    while cap < expect:
        cap *= 2
    return cap


def estimate_treelike_failure(n: int, d: int, t_end: float, replicas: int,
                              seed: int, threads: int | None = None
                              ) -> tuple[np.ndarray, np.ndarray]:
    """Per-replica collision and event counts of the annealed process."""
    if d < 3 or n < d + 1:
        raise ValueError("need d >= 3 and n >= d + 1")
    coll = np.empty(replicas, dtype=np.int64)
    events = np.empty(replicas, dtype=np.int64)
    cap = _annealed_capacity(d, t_end)
    seed = as_seed(seed)

    def work(lo, hi):
        _annealed_chunk(n, d, t_end, seed, lo, hi, cap, coll, events)

    run_chunks(work, replicas, threads)
    return coll, events


def write_meet_csv(est: MeetEstimate, path) -> None:
    from .io_utils import write_csv
    rows = [{"t": float(t), "p_meet": float(p), "stderr": float(s),
             "n_times_p_minus_1": float(est.n * p - 1.0),
             "replicas": est.replicas, "seed": est.seed}
            for t, p, s in zip(est.times, est.p_meet, est.stderr)]
    write_csv(path, ["t", "p_meet", "stderr", "n_times_p_minus_1",
                     "replicas", "seed"], rows)
