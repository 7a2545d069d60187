"""Event-driven simulation of the mass-averaging process.

Each edge carries an independent rate-1 clock; when an edge rings, the two
endpoint masses are replaced by their average.  Simulation draws global
exponential waits at rate |E| and picks the ringing edge uniformly, which
is the same process with O(1) clock state.  Distance to the flat profile is
measured as (1/n) sum_x |n m(x) - 1|^p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._parallel import run_chunks
from .graphs import Graph
from .rng import Rng, as_seed, derive_seed, new_state, next_below, next_unit

__all__ = [
    "MassConfig",
    "AvgTrajectoryRecord",
    "ProfileEstimate",
    "avg_update",
    "simulate_avg",
    "lp_distance",
    "estimate_lp_profile",
    "sample_mass_snapshots",
    "write_profile_csv",
]


@dataclass(frozen=True)
class MassConfig:
    """Nonnegative vertex masses summing to 1."""

    mass: np.ndarray

    @classmethod
    def point_mass(cls, n: int, x: int) -> "MassConfig":
        m = np.zeros(n)
        m[x] = 1.0
        return cls(m)

    @classmethod
    def flat(cls, n: int) -> "MassConfig":
        return cls(np.full(n, 1.0 / n))

    @property
    def n(self) -> int:
        return len(self.mass)

    def check(self) -> None:
        if np.any(self.mass < 0):
            raise ValueError("negative mass entry")
        if abs(self.mass.sum() - 1.0) > 1e-12:
            raise ValueError(f"total mass {self.mass.sum()} is not 1")


@dataclass(frozen=True)
class AvgTrajectoryRecord:
    """Observations along one trajectory: snapshots or L^p distances."""

    times: np.ndarray
    values: np.ndarray
    mode: str                 # "snapshot" (T, n) or "lp" (T,)
    renormalized: int = 0     # times the 1e-9 drift guard fired (expected 0)

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise ValueError("times/values length mismatch")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("observation times must be strictly increasing")


def avg_update(m: MassConfig, x: int, y: int) -> MassConfig:
    """Replace the masses at x and y by their mean; everything else fixed."""
    if x == y:
        raise ValueError("averaging needs two distinct vertices")
    out = m.mass.copy()
    mean = 0.5 * (out[x] + out[y])
    out[x] = mean
    out[y] = mean
    return MassConfig(out)


def lp_distance(m: MassConfig, p: float) -> float:
    """(1/n) sum_x |n m(x) - 1|^p; for p = 2 this equals n sum m^2 - 1."""
    if p < 1:
        raise ValueError("p must be >= 1")
    arr = m.mass
    n = len(arr)
    return float(np.mean(np.abs(n * arr - 1.0) ** p))


def simulate_avg(g: Graph, init: MassConfig, t_end: float, seed: int,
                 obs, mode: str = "snapshot", p: float = 2.0,
                 debug: bool = False) -> AvgTrajectoryRecord:
    """Exact event-driven run with observations at the given times.

    Observation values are piecewise constant: the state at time t is the
    state after the last event <= t.  With ``debug=True`` conservation and
    nonnegativity are asserted after every event instead of only at
    observation times.
    """
    if g.n < 2:
        raise ValueError("averaging needs at least 2 vertices")
    init.check()
    if init.n != g.n:
        raise ValueError("mass configuration does not match the graph")
    obs = np.asarray(obs, dtype=float)
    if obs.size and (obs.min() < 0 or obs.max() > t_end):
        raise ValueError("observation times must lie in [0, t_end]")
    if np.any(np.diff(obs) <= 0):
        raise ValueError("observation times must be strictly increasing")

    edges = g.edges
    mass = init.mass.copy()
    rng = Rng(seed)
    n_edges = len(edges)
    snaps = np.empty((len(obs), g.n))
    t = 0.0
    j = 0
    renorm = 0
    while j < len(obs):
        dt = rng.exponential(float(n_edges))
        t_next = t + dt
        while j < len(obs) and obs[j] < t_next:
            drift = abs(mass.sum() - 1.0)
            if drift > 1e-9:
                mass /= mass.sum()
                renorm += 1
            snaps[j] = mass
            j += 1
        if j >= len(obs):
            break
        e = rng.below(n_edges)
        x, y = int(edges[e, 0]), int(edges[e, 1])
        if x != y:
            mean = 0.5 * (mass[x] + mass[y])
            mass[x] = mean
            mass[y] = mean
        if debug:
            if abs(mass.sum() - 1.0) > 1e-12 or np.any(mass < 0):
                raise AssertionError("mass invariant violated mid-run")
        t = t_next
    if mode == "snapshot":
        return AvgTrajectoryRecord(times=obs, values=snaps, mode="snapshot",
                                   renormalized=renorm)
    if mode == "lp":
        vals = np.array([lp_distance(MassConfig(s), p) for s in snaps])
        return AvgTrajectoryRecord(times=obs, values=vals, mode="lp",
                                   renormalized=renorm)
    raise ValueError(f"unknown mode {mode!r}")


@njit(cache=True, nogil=True)
def _avg_replica(eu, ev, n, obs, state, snap):
    """One trajectory from a point mass at vertex 0; snapshots into (T, n)."""
    mass = np.zeros(n)
    mass[0] = 1.0
    n_edges = len(eu)
    t = 0.0
    j = 0
    T = len(obs)
    while j < T:
        dt = -np.log(1.0 - next_unit(state)) / n_edges
        t_next = t + dt
        while j < T and obs[j] < t_next:
            for v in range(n):
                snap[j, v] = mass[v]
            j += 1
        if j >= T:
            break
        e = next_below(state, n_edges)
        x = eu[e]
        y = ev[e]
        if x != y:
            mean = 0.5 * (mass[x] + mass[y])
            mass[x] = mean
            mass[y] = mean
        t = t_next


@njit(cache=True, nogil=True)
def _profile_chunk(eu, ev, n, obs, p, seed, lo, hi, out):
    snap = np.empty((len(obs), n))
    for r in range(lo, hi):
        state = new_state(derive_seed(seed, r))
        _avg_replica(eu, ev, n, obs, state, snap)
        for j in range(len(obs)):
            acc = 0.0
            for v in range(n):
                acc += abs(n * snap[j, v] - 1.0) ** p
            out[r, j] = acc / n


@njit(cache=True, nogil=True)
def _snapshot_chunk(eu, ev, n, obs, seed, lo, hi, out):
    for r in range(lo, hi):
        state = new_state(derive_seed(seed, r))
        _avg_replica(eu, ev, n, obs, state, out[r])


@dataclass(frozen=True)
class ProfileEstimate:
    """Monte Carlo L^p profile: per-time sample mean and standard error."""

    times: np.ndarray
    p: float
    mean: np.ndarray
    stderr: np.ndarray
    replicas: int
    seed: int


def _edge_arrays(g: Graph):
    edges = g.edges
    return (np.ascontiguousarray(edges[:, 0]),
            np.ascontiguousarray(edges[:, 1]))


def estimate_lp_profile(g: Graph, start_vertex: int, p: float, times,
                        replicas: int, seed: int,
                        threads: int | None = None) -> ProfileEstimate:
    """Replica-averaged L^p distance profile from a point mass.

    Replica r uses the derived stream (seed, r); the reduction is a fixed
    ordered sum over the per-replica value array, so the result does not
    depend on the thread count.
    """
    if replicas < 2:
        raise ValueError("need at least 2 replicas")
    if p < 1:
        raise ValueError("p must be >= 1")
    times = np.asarray(times, dtype=float)
    if len(times) > 1 and np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    if start_vertex != 0:
        g = _relabel_to_zero(g, start_vertex)
    eu, ev = _edge_arrays(g)
    values = np.empty((replicas, len(times)))
    seed = as_seed(seed)

    def work(lo, hi):
        _profile_chunk(eu, ev, g.n, times, p, seed, lo, hi, values)

    run_chunks(work, replicas, threads)
    mean = values.sum(axis=0) / replicas
    var = ((values - mean) ** 2).sum(axis=0) / (replicas - 1)
    stderr = np.sqrt(var / replicas)
    return ProfileEstimate(times=times, p=p, mean=mean, stderr=stderr,
                           replicas=replicas, seed=seed)


def sample_mass_snapshots(g: Graph, start_vertex: int, times, replicas: int,
                          seed: int, threads: int | None = None) -> np.ndarray:
    """Full per-replica snapshots, shape (replicas, T, n).  Small graphs only."""
    times = np.asarray(times, dtype=float)
    if replicas * len(times) * g.n > 2e8:
        raise ValueError("snapshot array would be too large; use the profile")
    if start_vertex != 0:
        g = _relabel_to_zero(g, start_vertex)
    eu, ev = _edge_arrays(g)
    out = np.empty((replicas, len(times), g.n))
    seed = as_seed(seed)

    def work(lo, hi):
        _snapshot_chunk(eu, ev, g.n, times, seed, lo, hi, out)

    run_chunks(work, replicas, threads)
    return out


def _relabel_to_zero(g: Graph, v: int) -> Graph:
    """Swap labels 0 and v (mass starts at vertex 0 inside the kernels)."""
    from .graphs import _graph_from_edges
    swap = {0: v, v: 0}
    edges = [(swap.get(int(a), int(a)), swap.get(int(b), int(b)))
             for a, b in g.edges]
    return _graph_from_edges(g.n, g.d, edges, simple=g.simple, seed=g.seed)


def write_profile_csv(est: ProfileEstimate, path) -> None:
    from .io_utils import write_csv
    rows = [{"t": float(t), "p": est.p, "mean": float(m), "stderr": float(s),
             "replicas": est.replicas, "seed": est.seed}
            for t, m, s in zip(est.times, est.mean, est.stderr)]
    write_csv(path, ["t", "p", "mean", "stderr", "replicas", "seed"], rows)
