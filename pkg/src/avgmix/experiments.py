"""Experiment orchestration: specs, seeded runners, CSV/JSON emission.

Every runner is a pure function of its spec: the graph (when one is
sampled) uses the derived stream (seed, 1), Monte Carlo replicas use
streams derived from (seed, 2), so reruns and thread-count changes yield
byte-identical output files.  Wall-clock time is kept on the in-memory
result only and never written to files.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import analytics, averaging, bd_chain, walks
from .graphs import named_graph, sample_regular_graph
from .io_utils import csv_text, json_text
from .rng import child_seed

__all__ = [
    "ExperimentSpec",
    "ExperimentResult",
    "run_cutoff_profile",
    "run_identity_suite",
    "run_annealed_tail",
    "run_constants_table",
    "run_bd_dump",
    "run_gfun",
    "run_experiment",
    "emit",
    "parse_result_json",
]

VERSION = "avgmix-0.1.0"

KINDS = ("profile_avg", "profile_crw", "identity_suite", "constants_table",
         "annealed_tail", "bd_dump", "gfun")

_GRAPH_STREAM = 1
_MC_STREAM = 2


@dataclass
class ExperimentSpec:
    kind: str
    d: int = 3
    n: int = 1000
    seed: int = 0
    replicas: int = 10_000
    times: list = field(default_factory=list)
    a_grid: list = field(default_factory=list)
    p: float = 2.0
    fixtures: list = field(default_factory=lambda: ["k4", "petersen", "k33"])
    d_range: list = field(default_factory=lambda: list(range(3, 13)))
    K: int = 200
    out: str | None = None
    fmt: str = "csv"
    threads: int | None = None

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.fmt not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if self.times and np.any(np.diff(np.asarray(self.times)) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.kind == "profile_avg" and self.n > 10_000:
            raise ValueError("profile_avg is advisory-capped at n <= 10^4")
        if self.kind == "profile_crw" and self.n > 1_000_000:
            raise ValueError("profile_crw is capped at n <= 10^6")
        if self.kind == "constants_table":
            if any(d < 3 or d > 500 for d in self.d_range):
                raise ValueError("constants table supports d in {3..500}")


@dataclass
class ExperimentResult:
    spec: dict
    columns: list
    rows: list
    wall_clock: float
    version: str = VERSION

    def persistent(self) -> dict:
        """The emitted payload; excludes volatile fields like wall-clock."""
        return {"spec": self.spec, "rows": self.rows,
                "meta": {"version": self.version, "columns": self.columns}}


def _spec_echo(spec: ExperimentSpec) -> dict:
    echo = asdict(spec)
    echo.pop("out")
    echo.pop("threads")
    return echo


def run_cutoff_profile(spec: ExperimentSpec) -> ExperimentResult:
    """Distance-to-flat profile at times T(a) over the a-grid.

    ``profile_crw`` estimates n * P(meet) - 1 through the coupled walks;
    ``profile_avg`` measures the L^p distance of the averaging process
    directly.  The deterministic infinite-tree proxy n * R_t(0,0) - 1 is
    emitted alongside either estimator.
    """
    spec.validate()
    t0 = time.perf_counter()
    if not spec.a_grid:
        raise ValueError("profile runs need an a-grid")
    a_grid = sorted(spec.a_grid)
    times = np.array([analytics.cutoff_time(spec.d, spec.n, a) for a in a_grid])
    if np.any(np.diff(times) <= 0) or times[0] <= 0:
        raise ValueError("a-grid maps to a degenerate time grid")
    g = sample_regular_graph(spec.n, spec.d, child_seed(spec.seed, _GRAPH_STREAM))
    mc_seed = child_seed(spec.seed, _MC_STREAM)
    rows = []
    if spec.kind == "profile_crw":
        est = walks.estimate_meet_prob(g, 0, times, spec.replicas, mc_seed,
                                       spec.threads)
        values = est.n_times_p_minus_1
        errs = spec.n * est.stderr
    else:
        prof = averaging.estimate_lp_profile(g, 0, spec.p, times,
                                             spec.replicas, mc_seed,
                                             spec.threads)
        values = prof.mean
        errs = prof.stderr
    for a, t, v, e in zip(a_grid, times, values, errs):
        rows.append({
            "a": float(a),
            "t": float(t),
            "value": float(v),
            "stderr": float(e),
            "tree_proxy": spec.n * bd_chain.rt00(spec.d, float(t)) - 1.0,
        })
    cols = ["a", "t", "value", "stderr", "tree_proxy"]
    return ExperimentResult(_spec_echo(spec), cols, rows,
                            time.perf_counter() - t0)


def run_identity_suite(spec: ExperimentSpec) -> ExperimentResult:
    """Cross-checks between the averaging process, walks, and the chain.

    Rows carry both sides of each identity and a pass flag at 4 standard
    errors (deterministic rows use a hard tolerance).
    """
    spec.validate()
    t0 = time.perf_counter()
    times = np.asarray(spec.times or [0.5, 1.0, 2.0], dtype=float)
    rows = []
    for name in spec.fixtures:
        g = named_graph(name)
        n = g.n
        mc_seed = child_seed(spec.seed, _MC_STREAM)
        snaps = averaging.sample_mass_snapshots(g, 0, times, spec.replicas,
                                                mc_seed, spec.threads)
        crw = walks.estimate_meet_prob(g, 0, times, spec.replicas,
                                       child_seed(mc_seed, 1), spec.threads)
        gap = None
        if g.is_connected():
            from .graphs import spectral_gap
            gap = spectral_gap(g)
        R = spec.replicas
        for j, t in enumerate(times):
            pair = walks.pair_chain_dist(g, 0, float(t))
            exact_l2 = n * float(np.trace(pair)) - 1.0

            # squared-distance identity: E || m/pi - 1 ||_2^2 = n P(meet) - 1
            d2 = n * (snaps[:, j, :] ** 2).sum(axis=1) - 1.0
            mean = d2.sum() / R
            se = math.sqrt(((d2 - mean) ** 2).sum() / (R - 1) / R)
            rows.append(_identity_row("l2_norm", name, t, mean, exact_l2, se))

            # mean-mass identity: E[m_t(x)] equals the lazy-walk law
            marg = walks.rw_marginal_exact(
                g, averaging.MassConfig.point_mass(n, 0), float(t)).mass
            mass0 = snaps[:, j, 0]
            m0 = mass0.sum() / R
            se0 = math.sqrt(((mass0 - m0) ** 2).sum() / (R - 1) / R)
            rows.append(_identity_row("avg_rw", name, t, m0, float(marg[0]), se0))

            # two-point product identity against the exact pair law
            y0 = int(g.neighbors_of(0)[0])
            prod = snaps[:, j, 0] * snaps[:, j, y0]
            mp = prod.sum() / R
            sep = math.sqrt(((prod - mp) ** 2).sum() / (R - 1) / R)
            rows.append(_identity_row("two_walk", name, t, mp,
                                      float(pair[0, y0]), sep))

            # meeting probability: exact pair chain vs its Monte Carlo
            rows.append(_identity_row("crw_mc", name, t,
                                      float(crw.p_meet[j]),
                                      float(np.trace(pair)),
                                      float(crw.stderr[j])))

            # tree lower bound (deterministic, degree-3 fixtures)
            if g.d >= 3:
                lb = bd_chain.rt00(g.d, float(t))
                ok = float(np.trace(pair)) >= lb - 1e-10
                rows.append({"identity": "tree_lower_bound", "fixture": name,
                             "t": float(t), "lhs": float(np.trace(pair)),
                             "rhs": lb, "stderr": 0.0, "passed": bool(ok)})

            # spectral-gap contraction bound on the squared distance
            if gap is not None:
                bound = math.exp(-gap * float(t)) * (n - 1)
                ok = mean <= bound + 4.0 * se
                rows.append({"identity": "gap_contraction", "fixture": name,
                             "t": float(t), "lhs": mean, "rhs": bound,
                             "stderr": se, "passed": bool(ok)})
    cols = ["identity", "fixture", "t", "lhs", "rhs", "stderr", "passed"]
    return ExperimentResult(_spec_echo(spec), cols, rows,
                            time.perf_counter() - t0)


def _identity_row(identity, fixture, t, lhs, rhs, se) -> dict:
    return {"identity": identity, "fixture": fixture, "t": float(t),
            "lhs": float(lhs), "rhs": float(rhs), "stderr": float(se),
            "passed": bool(abs(lhs - rhs) <= 4.0 * se)}


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (95% by default)."""
    if n == 0:
        return 0.0, 1.0
    phat = k / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def run_annealed_tail(spec: ExperimentSpec) -> ExperimentResult:
    """Probability that the explored pair orbit is not tree-embeddable."""
    spec.validate()
    t0 = time.perf_counter()
    n, d = spec.n, spec.d
    regime_cap = math.log(n) ** 2 / (2 * d)
    times = list(spec.times) if spec.times else [regime_cap]
    mc_seed = child_seed(spec.seed, _MC_STREAM)
    bound = 50.0 * math.log(n) ** 4 / n
    rows = []
    for idx, t in enumerate(times):
        if t > regime_cap * (1 + 1e-9):
            import warnings
            warnings.warn(f"t={t} exceeds the short-time regime bound "
                          f"{regime_cap:.4g}", stacklevel=2)
        coll, _events = walks.estimate_treelike_failure(
            n, d, float(t), spec.replicas, child_seed(mc_seed, idx),
            spec.threads)
        k = int((coll > 0).sum())
        lo, hi = wilson_interval(k, spec.replicas)
        rows.append({"t": float(t), "failures": k, "replicas": spec.replicas,
                     "p_hat": k / spec.replicas, "wilson_low": lo,
                     "wilson_high": hi, "bound": bound})
    cols = ["t", "failures", "replicas", "p_hat", "wilson_low", "wilson_high",
            "bound"]
    return ExperimentResult(_spec_echo(spec), cols, rows,
                            time.perf_counter() - t0)


def run_constants_table(spec: ExperimentSpec) -> ExperimentResult:
    spec.validate()
    t0 = time.perf_counter()
    rows = analytics.constants_rows(spec.d_range)
    cols = ["d", "rho", "sigma", "gamma", "beta", "z1_re", "z1_im",
            "z2_re", "z2_im", "regime"]
    return ExperimentResult(_spec_echo(spec), cols, rows,
                            time.perf_counter() - t0)


def run_bd_dump(spec: ExperimentSpec) -> ExperimentResult:
    spec.validate()
    t0 = time.perf_counter()
    series = bd_chain.exact_ck(spec.d, spec.K)
    rows = [{"k": k, "scaled_ck": float(series.scaled[k]),
             "log_ck": series.log_ck(k)} for k in range(series.size)]
    return ExperimentResult(_spec_echo(spec), ["k", "scaled_ck", "log_ck"],
                            rows, time.perf_counter() - t0)


def run_gfun(spec: ExperimentSpec) -> ExperimentResult:
    """Cross-evaluate the two generating-function routes on a sampled disk."""
    spec.validate()
    t0 = time.perf_counter()
    from .rng import Rng
    rng = Rng(child_seed(spec.seed, _MC_STREAM))
    rows = []
    for _ in range(spec.replicas if spec.replicas < 10_000 else 100):
        radius = 0.9 * math.sqrt(rng.unit())
        angle = 2.0 * math.pi * rng.unit()
        z = radius * complex(math.cos(angle), math.sin(angle))
        gc = analytics.g_closed(spec.d, z)
        gv = analytics.g_via_chain(spec.d, z)
        rows.append({"z_re": z.real, "z_im": z.imag,
                     "g_closed_re": gc.real, "g_closed_im": gc.imag,
                     "g_chain_re": gv.real, "g_chain_im": gv.imag,
                     "abs_diff": abs(gc - gv)})
    cols = ["z_re", "z_im", "g_closed_re", "g_closed_im", "g_chain_re",
            "g_chain_im", "abs_diff"]
    return ExperimentResult(_spec_echo(spec), cols, rows,
                            time.perf_counter() - t0)


_RUNNERS = {
    "profile_avg": run_cutoff_profile,
    "profile_crw": run_cutoff_profile,
    "identity_suite": run_identity_suite,
    "constants_table": run_constants_table,
    "annealed_tail": run_annealed_tail,
    "bd_dump": run_bd_dump,
    "gfun": run_gfun,
}


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    spec.validate()
    return _RUNNERS[spec.kind](spec)


def emit(result: ExperimentResult, fmt: str) -> str:
    if fmt == "csv":
        return csv_text(result.columns, result.rows)
    if fmt == "json":
        return json_text(result.persistent())
    raise ValueError(f"unknown format {fmt!r}")


def parse_result_json(text: str) -> dict:
    import json
    return json.loads(text)
