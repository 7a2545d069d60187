"""Regular graphs: configuration-model sampling, named fixtures, spectra.

A ``Graph`` is an immutable compressed adjacency of a finite d-regular
multigraph.  Random graphs come from the configuration model (uniform
perfect matching of the n*d half-edge stubs), optionally conditioned on
simplicity by rejection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from io import StringIO

import numpy as np

from .rng import Rng

__all__ = [
    "Graph",
    "Pairing",
    "DisconnectedGraphError",
    "SimplicityRetryError",
    "SizeCapError",
    "sample_pairing",
    "pairing_to_graph",
    "sample_regular_graph",
    "named_graph",
    "explored_subgraph_is_tree",
    "spectral_gap",
    "write_edge_list",
    "read_edge_list",
]


class SimplicityRetryError(RuntimeError):
    """No simple pairing found within the retry budget."""


class DisconnectedGraphError(ValueError):
    """Operation requires a connected graph."""


class SizeCapError(ValueError):
    """Dense computation requested above its size cap."""


@dataclass(frozen=True)
class Pairing:
    """Perfect matching of the n*d stubs; stub s belongs to vertex s // d."""

    n: int
    d: int
    match: np.ndarray

    def check(self) -> None:
        m = self.match
        if len(m) != self.n * self.d:
            raise ValueError("pairing has wrong length")
        s = np.arange(len(m))
        if np.any(m[m] != s) or np.any(m == s):
            raise ValueError("pairing is not a fixed-point-free involution")


@dataclass(frozen=True)
class Graph:
    """Immutable d-regular multigraph in compressed adjacency form.

    ``neighbors[offsets[v]:offsets[v+1]]`` lists the d neighbors of v
    (sorted; a self-loop at v contributes two entries equal to v).
    """

    n: int
    d: int
    offsets: np.ndarray
    neighbors: np.ndarray
    simple: bool
    seed: int | None = None
    retries: int = 0

    def __post_init__(self):
        self.offsets.setflags(write=False)
        self.neighbors.setflags(write=False)

    @cached_property
    def edges(self) -> np.ndarray:
        """Canonical (m, 2) edge array, u <= v, lexicographically sorted."""
        out = []
        for u in range(self.n):
            nb = self.neighbors[self.offsets[u]:self.offsets[u + 1]]
            loops = int(np.count_nonzero(nb == u)) // 2
            out.extend((u, u) for _ in range(loops))
            out.extend((u, int(w)) for w in nb if w > u)
        arr = np.array(sorted(out), dtype=np.int64).reshape(-1, 2)
        arr.setflags(write=False)
        return arr

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return int(self.offsets[v + 1] - self.offsets[v])

    def neighbors_of(self, v: int) -> np.ndarray:
        return self.neighbors[self.offsets[v]:self.offsets[v + 1]]

    def check(self) -> None:
        """Assert the structural invariants (regularity, symmetry, simplicity)."""
        if np.any(np.diff(self.offsets) != self.d):
            raise ValueError("graph is not regular")
        counts: dict[tuple[int, int], int] = {}
        for u in range(self.n):
            for w in self.neighbors_of(u):
                counts[(u, int(w))] = counts.get((u, int(w)), 0) + 1
        for (u, w), c in counts.items():
            if counts.get((w, u), 0) != c:
                raise ValueError("adjacency is not symmetric")
        if self.simple:
            for u in range(self.n):
                nb = self.neighbors_of(u)
                if np.any(nb == u) or len(np.unique(nb)) != len(nb):
                    raise ValueError("graph flagged simple has loops or multi-edges")

    def is_connected(self) -> bool:
        seen = np.zeros(self.n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            u = stack.pop()
            for w in self.neighbors_of(u):
                if not seen[w]:
                    seen[w] = True
                    stack.append(int(w))
        return bool(seen.all())


def _graph_from_edges(n: int, d: int, edges, simple: bool,
                      seed: int | None = None, retries: int = 0) -> Graph:
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        if u == v:
            adj[u].extend((u, u))
        else:
            adj[u].append(v)
            adj[v].append(u)
    offsets = np.zeros(n + 1, dtype=np.int64)
    neighbors = np.empty(n * d, dtype=np.int64)
    pos = 0
    for v in range(n):
        row = sorted(adj[v])
        if len(row) != d:
            raise ValueError(f"vertex {v} has degree {len(row)}, expected {d}")
        neighbors[pos:pos + d] = row
        pos += d
        offsets[v + 1] = pos
    return Graph(n=n, d=d, offsets=offsets, neighbors=neighbors,
                 simple=simple, seed=seed, retries=retries)


def sample_pairing(n: int, d: int, seed: int) -> Pairing:
    """Uniform perfect matching of the n*d stubs (Fisher-Yates shuffle)."""
    if n < 2 or d < 3:
        raise ValueError("need n >= 2 and d >= 3")
    if (n * d) % 2 != 0:
        raise ValueError("n*d must be even")
    rng = Rng(seed)
    return _pairing_from_rng(n, d, rng)


def _pairing_from_rng(n: int, d: int, rng: Rng) -> Pairing:
    m = n * d
    perm = np.arange(m, dtype=np.int64)
    rng.shuffle(perm)
    match = np.empty(m, dtype=np.int64)
    match[perm[0::2]] = perm[1::2]
    match[perm[1::2]] = perm[0::2]
    match.setflags(write=False)
    return Pairing(n=n, d=d, match=match)


def pairing_to_graph(pairing: Pairing, seed: int | None = None,
                     retries: int = 0) -> Graph:
    """Multigraph induced by a pairing (stub s sits on vertex s // d)."""
    m = pairing.match
    s = np.arange(len(m))
    mask = s < m
    edges = list(zip((s[mask] // pairing.d).tolist(), (m[mask] // pairing.d).tolist()))
    simple = _edges_are_simple(edges)
    return _graph_from_edges(pairing.n, pairing.d, edges, simple=simple,
                             seed=seed, retries=retries)


def _edges_are_simple(edges) -> bool:
    seen = set()
    for u, v in edges:
        if u == v:
            return False
        key = (u, v) if u < v else (v, u)
        if key in seen:
            return False
        seen.add(key)
    return True


def sample_regular_graph(n: int, d: int, seed: int,
                         max_retries: int = 100_000) -> Graph:
    """Uniform simple d-regular graph: pairings rejected until simple.

    The retry count is recorded on the returned graph.  All attempts consume
    one continuous random stream, so the result is a pure function of
    (n, d, seed).
    """
    if n < 2 or d < 3:
        raise ValueError("need n >= 2 and d >= 3")
    if (n * d) % 2 != 0:
        raise ValueError("n*d must be even")
    rng = Rng(seed)
    for attempt in range(max_retries + 1):
        pairing = _pairing_from_rng(n, d, rng)
        g = pairing_to_graph(pairing, seed=seed, retries=attempt)
        if g.simple:
            return g
    raise SimplicityRetryError(
        f"no simple pairing in {max_retries} retries for n={n}, d={d}")


def named_graph(name: str) -> Graph:
    """Canonical test graphs: complete_<n>, cycle_<n>, petersen, k33.

    ``k4`` is accepted as an alias for ``complete_4``.  Cycles are 2-regular
    and exist only for identity tests that do not need d >= 3.
    """
    name = name.strip().lower()
    if name == "k4":
        name = "complete_4"
    if name == "petersen":
        outer = [(i, (i + 1) % 5) for i in range(5)]
        spokes = [(i, i + 5) for i in range(5)]
        inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
        return _graph_from_edges(10, 3, outer + spokes + inner, simple=True)
    if name == "k33":
        edges = [(i, 3 + j) for i in range(3) for j in range(3)]
        return _graph_from_edges(6, 3, edges, simple=True)
    if name.startswith("complete_"):
        n = int(name.split("_", 1)[1])
        if n < 2:
            raise ValueError("complete graph needs n >= 2")
        edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
        return _graph_from_edges(n, n - 1, edges, simple=True)
    if name.startswith("cycle_"):
        n = int(name.split("_", 1)[1])
        if n < 3:
            raise ValueError("cycle needs n >= 3")
        edges = [(i, (i + 1) % n) for i in range(n)]
        return _graph_from_edges(n, 2, edges, simple=True)
    raise ValueError(f"unknown graph name: {name!r}")


def explored_subgraph_is_tree(edges) -> bool:
    """True iff the multigraph spanned by the edge list is acyclic.

    Repeated edges and self-loops count as cycles.
    """
    parent: dict[int, int] = {}

    def find(x: int) -> int:
        root = x
        while parent.get(root, root) != root:
            root = parent[root]
        while parent.get(x, x) != x:
            parent[x], x = root, parent[x]
        return root

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru == rv:
            return False
        parent[ru] = rv
    return True


def spectral_gap(g: Graph) -> float:
    """Smallest nonzero eigenvalue of the negated walk generator.

    The walk jumps across each incident edge at rate 1/2, so the generator
    is (A - D)/2; the gap is the second-smallest eigenvalue of (D - A)/2.
    Dense solve, capped at n = 512.
    """
    if g.n > 512:
        raise SizeCapError("spectral_gap supports n <= 512")
    if not g.is_connected():
        raise DisconnectedGraphError("spectral gap of a disconnected graph is 0")
    half = 0.5
    mat = np.zeros((g.n, g.n))
    for v in range(g.n):
        for w in g.neighbors_of(v):
            mat[v, w] -= half
            mat[v, v] += half
    eig = np.linalg.eigvalsh(mat)
    return float(eig[1])


def write_edge_list(g: Graph, path) -> None:
    """Text export: header line then one "u v" pair per canonical edge."""
    buf = StringIO()
    seed = g.seed if g.seed is not None else 0
    buf.write(f"# n={g.n} d={g.d} seed={seed}\n")
    for u, v in g.edges:
        buf.write(f"{u} {v}\n")
    with open(path, "w", newline="\n") as fh:
        fh.write(buf.getvalue())


def read_edge_list(path) -> Graph:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ValueError("missing edge-list header")
        fields = dict(tok.split("=") for tok in header[1:].split())
        n, d, seed = int(fields["n"]), int(fields["d"]), int(fields["seed"])
        edges = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            u, v = map(int, line.split())
            edges.append((u, v))
    simple = _edges_are_simple(edges)
    return _graph_from_edges(n, d, edges, simple=simple, seed=seed)
