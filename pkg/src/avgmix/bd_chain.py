"""Slow-bond birth-and-death chain: exact transients and path sampling.

The continuous-time chain on {0, 1, 2, ...} moves up at rate d/2 from 0 and
d-1 elsewhere, and down at rate 1/2 from 1 and 1 from states >= 2 (the 0-1
bond is "slow").  Embedding it in a rate-d Poisson process gives a discrete
chain H with H(0,0) = 1/2, H(1,1) = 1/(2d), H(i,i) = 0 for i >= 2, up/down
probabilities p = (d-1)/d and q = 1/d in the interior.

``exact_ck`` computes the discrete return probabilities c_k = H^k(0,0) by
dynamic programming.  The coefficients decay like gamma^k, far below the
float64 range for the k used here, so the DP runs on the rescaled array
w_k(i) = v_k(i) * gamma^(-k) * (q/p)^(i/2).  The gamma^(-k) factor keeps the
returned entries scaled[k] = c_k * gamma^(-k) of polynomial size; the extra
position tilt (q/p)^(i/2) keeps the bulk of the rescaled vector bounded
(without it, entries near the drift front grow like (x/gamma)^k for some
x > gamma and overflow near k ~ 700/log(1/gamma)).  At i = 0 the tilt is 1,
so the output is exactly the contracted quantity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from ._constants import check_degree, gamma_of
from .rng import as_seed, derive_seed, new_state, next_unit
from ._parallel import run_chunks

__all__ = [
    "BDParams",
    "CoeffSeries",
    "bd_step",
    "exact_ck",
    "rt00",
    "rt00_log",
    "rti0",
    "rti0_log",
    "bd_distribution",
    "sample_bd_path",
    "sample_bd_endpoints",
    "write_coeff_csv",
]


@dataclass(frozen=True)
class BDParams:
    """Rates and step probabilities of the slow-bond chain for one degree."""

    d: int

    @property
    def p(self) -> float:
        return (self.d - 1) / self.d

    @property
    def q(self) -> float:
        return 1.0 / self.d

    @property
    def p0(self) -> float:
        return 0.5

    @property
    def q1(self) -> float:
        return self.q / 2.0

    def up_rate(self, i: int) -> float:
        return self.d / 2.0 if i == 0 else float(self.d - 1)

    def down_rate(self, i: int) -> float:
        if i == 0:
            return 0.0
        return 0.5 if i == 1 else 1.0


@dataclass(frozen=True)
class CoeffSeries:
    """Return coefficients c_k stored as scaled[k] = c_k * gamma^(-k)."""

    d: int
    gamma: float
    scaled: np.ndarray

    @property
    def size(self) -> int:
        return len(self.scaled)

    def ck(self, k: int) -> float:
        """Raw coefficient; underflows to 0.0 once k*log(1/gamma) > ~708."""
        return float(self.scaled[k]) * self.gamma**k

    def log_ck(self, k: int) -> float:
        return math.log(self.scaled[k]) + k * math.log(self.gamma)


def bd_step(dist: np.ndarray, params: BDParams) -> np.ndarray:
    """One exact step of the embedded discrete chain, support {0..m} -> {0..m+1}."""
    dist = np.asarray(dist, dtype=float)
    total = dist.sum()
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"input distribution sums to {total}, not 1")
    d = params.d
    p, q, q1 = params.p, params.q, params.q1
    h11 = 1.0 / (2.0 * d)
    m = len(dist)
    out = np.zeros(m + 1)
    out[0] += 0.5 * dist[0]
    out[1] += 0.5 * dist[0]
    if m > 1:
        out[0] += q1 * dist[1]
        out[1] += h11 * dist[1]
        out[2] += p * dist[1]
    if m > 2:
        out[1:m - 1] += q * dist[2:]
        out[3:m + 1] += p * dist[2:]
    if abs(out.sum() - 1.0) > 1e-12:
        raise AssertionError("probability not conserved by bd_step")
    return out


@lru_cache(maxsize=128)
def _scaled_front(d: int, start: int, size: int) -> np.ndarray:
    """scaled0[k] = H^k(start, 0) * gamma^(-k) for k < size, via the tilted DP."""
    gamma = gamma_of(d)
    p = (d - 1) / d
    q = 1.0 / d
    q1 = q / 2.0
    h11 = 1.0 / (2.0 * d)
    theta = math.sqrt(q / p)
    half_rho = math.sqrt(p * q)

    cap = size + start + 2
    w = np.zeros(cap)
    w[start] = theta**start
    out = np.empty(size)
    out[0] = w[0]
    new = np.zeros(cap)
    for k in range(1, size):
        top = min(start + k + 1, cap - 1)
        new[:top + 1] = 0.0
        new[0] = (0.5 * w[0] + q1 / theta * w[1]) / gamma
        new[1] = (0.5 * theta * w[0] + h11 * w[1] + half_rho * w[2]) / gamma
        new[2:top + 1] = half_rho * (w[1:top] + w[3:top + 2]) / gamma
        w, new = new, w
        out[k] = w[0]
    out.setflags(write=False)
    return out


def exact_ck(d: int, K: int) -> CoeffSeries:
    """Return coefficients c_0..c_K by dynamic programming."""
    check_degree(d)
    if K < 0:
        raise ValueError("K must be >= 0")
    scaled = _scaled_front(d, 0, K + 1)
    return CoeffSeries(d=d, gamma=gamma_of(d), scaled=scaled)


def _log_poisson_mixture(d: int, start: int, t: float) -> float:
    lam = d * t
    K = int(math.ceil(lam + 12.0 * math.sqrt(lam) + 50.0))
    size = 256 * (K // 256 + 1)
    scaled = _scaled_front(d, start, size)
    lgam = math.log(gamma_of(d))
    k = np.arange(K + 1, dtype=float)
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, K + 1)))))
    with np.errstate(divide="ignore"):
        log_c = np.log(scaled[:K + 1]) + k * lgam
    log_terms = -lam + k * math.log(lam) - log_fact + log_c
    top = np.max(log_terms)
    if not np.isfinite(top):
        return -math.inf
    return float(top + math.log(np.exp(log_terms - top).sum()))


def rt00_log(d: int, t: float) -> float:
    """log of the continuous-time return probability at time t."""
    check_degree(d)
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return 0.0
    return _log_poisson_mixture(d, 0, t)


def rt00(d: int, t: float) -> float:
    """Continuous-time probability of being back at 0 at time t, from 0."""
    return math.exp(rt00_log(d, t))


def rti0_log(d: int, i: int, t: float) -> float:
    check_degree(d)
    if i < 0 or t < 0:
        raise ValueError("need i >= 0 and t >= 0")
    if t == 0.0:
        return 0.0 if i == 0 else -math.inf
    return _log_poisson_mixture(d, i, t)


def rti0(d: int, i: int, t: float) -> float:
    """Probability of sitting at 0 at time t when started from state i."""
    return math.exp(rti0_log(d, i, t))


def bd_distribution(d: int, start: int, t: float, support: int | None = None) -> np.ndarray:
    """Full law of the chain at time t from ``start`` (truncated, sums to ~1).

    Computed as the Poisson(d*t) mixture of the discrete k-step laws; the
    discarded Poisson tail is below 1e-12.
    """
    check_degree(d)
    lam = d * t
    K = int(math.ceil(lam + 12.0 * math.sqrt(lam) + 50.0))
    if support is None:
        support = start + K + 1
    params = BDParams(d)
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, K + 1)))))
    k = np.arange(K + 1, dtype=float)
    if lam > 0:
        log_w = -lam + k * math.log(lam) - log_fact
    else:
        log_w = np.full(K + 1, -math.inf)
        log_w[0] = 0.0
    weights = np.exp(log_w)
    dist = np.zeros(start + 1)
    dist[start] = 1.0
    mix = np.zeros(support)
    mix[:len(dist)] += weights[0] * dist
    for step in range(1, K + 1):
        dist = bd_step(dist, params)
        top = min(len(dist), support)
        mix[:top] += weights[step] * dist[:top]
    return mix


@njit(cache=True, nogil=True)
def _bd_path_kernel(d, i0, t_end, seed):
    state = new_state(seed)
    i = i0
    t = 0.0
    while True:
        if i == 0:
            up = d / 2.0
            down = 0.0
        elif i == 1:
            up = d - 1.0
            down = 0.5
        else:
            up = d - 1.0
            down = 1.0
        rate = up + down
        t += -np.log(1.0 - next_unit(state)) / rate
        if t > t_end:
            return i
        if next_unit(state) * rate < up:
            i += 1
        else:
            i -= 1


def sample_bd_path(d: int, i0: int, t_end: float, seed: int) -> int:
    """Exact continuous-time simulation; returns the state at t_end."""
    check_degree(d)
    if i0 < 0 or t_end < 0:
        raise ValueError("need i0 >= 0 and t_end >= 0")
    if t_end == 0.0:
        return i0
    return int(_bd_path_kernel(d, i0, t_end, as_seed(seed)))


@njit(cache=True, nogil=True)
def _bd_endpoints_kernel(d, i0, t_end, seed, lo, hi, out):
    for r in range(lo, hi):
        out[r] = _bd_path_kernel(d, i0, t_end, derive_seed(seed, r))


def sample_bd_endpoints(d: int, i0: int, t_end: float, replicas: int,
                        seed: int, threads: int | None = None) -> np.ndarray:
    """Endpoint states of independent replicas (replica r uses stream r)."""
    check_degree(d)
    out = np.empty(replicas, dtype=np.int64)
    seed = as_seed(seed)

    def work(lo, hi):
        _bd_endpoints_kernel(d, i0, t_end, seed, lo, hi, out)

    run_chunks(work, replicas, threads)
    return out


def write_coeff_csv(series: CoeffSeries, path) -> None:
    """Dump columns k, scaled_ck, log_ck with a d/gamma header comment."""
    lines = [f"# d={series.d} gamma={series.gamma!r}", "k,scaled_ck,log_ck"]
    for k in range(series.size):
        lines.append(f"{k},{series.scaled[k]:.17g},{series.log_ck(k):.17g}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\r\n".join(lines) + "\r\n")
