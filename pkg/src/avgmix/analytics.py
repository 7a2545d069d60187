"""Closed-form constants, generating functions, and coefficient asymptotics.

The return-probability generating function g(z) = sum_k c_k z^k has the
closed form

    g(z) = [4 - 3(2p+1) z + 4 p z^2 + z sqrt(1 - 4 p q z^2)]
           / [2 p (1-z) (z1-z) (z2-z)],        p = (d-1)/d, q = 1/d,

with z1, z2 = 3/2 -/+ sqrt((9p-8)/(4p)).  Coefficients decay like
gamma_d^k with a polynomial factor k^beta whose exponent switches at the
critical degree 10: a square-root branch point dominates for d <= 9, the
branch point and a pole merge at d = 10, and a simple pole at z2 = 1/sigma
dominates for d >= 11.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _constants as _c
from .bd_chain import CoeffSeries

__all__ = [
    "SpectralConstants",
    "constants",
    "cutoff_time",
    "g_closed",
    "g_via_chain",
    "series_coeffs",
    "asym_ck",
    "asym_ck_log",
    "fplus_fminus",
    "residue_h",
    "asym_rt_ratio",
    "write_constants_csv",
]


@dataclass(frozen=True)
class SpectralConstants:
    """Per-degree record of all closed-form constants and the regime tag."""

    d: int
    p: float
    q: float
    rho: float
    sigma: float
    gamma: float
    beta: float
    z1: complex
    z2: complex
    regime: str


def constants(d: int) -> SpectralConstants:
    d = _c.check_degree(d)
    z1, z2 = _c.z_pair(d)
    return SpectralConstants(
        d=d,
        p=_c.p_of(d),
        q=1.0 / d,
        rho=_c.rho_of(d),
        sigma=_c.sigma_of(d),
        gamma=_c.gamma_of(d),
        beta=_c.beta_of(d),
        z1=z1,
        z2=z2,
        regime=_c.regime_of(d),
    )


def cutoff_time(d: int, n: int, a: float = 0.0) -> float:
    """T(a) = log(n) / (d (1 - gamma)) + a log log n (natural logs)."""
    _c.check_degree(d)
    if n < 3:
        raise ValueError("n must be >= 3")
    gamma = _c.gamma_of(d)
    return math.log(n) / (d * (1.0 - gamma)) + a * math.log(math.log(n))


def _numerator(d: int, z: complex) -> complex:
    p = _c.p_of(d)
    q = 1.0 - p
    return 4.0 - 3.0 * (2.0 * p + 1.0) * z + 4.0 * p * z * z \
        + z * cmath.sqrt(1.0 - 4.0 * p * q * z * z)


def g_closed(d: int, z: complex) -> complex:
    """Closed-form value of the generating function (principal square root).

    z = 1 is a removable point and is evaluated by its limit.  Evaluation at
    a genuine singularity raises ValueError.
    """
    _c.check_degree(d)
    z = complex(z)
    p = _c.p_of(d)
    q = 1.0 - p
    z1, z2 = _c.z_pair(d)
    if abs(z - 1.0) < 1e-10:
        # (z1-1)(z2-1) = 1, and the residual factor S(z)/(1-z) -> -S'(1)
        s_prime = 8.0 * p - 4.0 * p * q / (p - q)
        numer = 3.0 * (2.0 * p + 1.0) - (p - q) - s_prime
        return complex(numer / (2.0 * p))
    den = 2.0 * p * (1.0 - z) * (z1 - z) * (z2 - z)
    num = _numerator(d, z)
    if abs(den) < 1e-13 * max(1.0, abs(num)):
        if abs(num) < 1e-9:
            raise ValueError(f"removable point z={z} too close to resolve; "
                             "evaluate at a nearby point")
        raise ValueError(f"z={z} is a singularity of g for d={d}")
    return num / den


def g_via_chain(d: int, z: complex) -> complex:
    """Generating function composed from first-passage generating functions.

    Independent route: G = 1/(1-U) with U = z(1-p0) + z p0 F(1,0|z),
    F(1,0|z) = q1 z / (1 - (1-p-q1) z - p z F(2,1|z)) and
    F(2,1|z) = (1 - sqrt(1 - 4 p q z^2)) / (2 p z).
    """
    _c.check_degree(d)
    z = complex(z)
    p = _c.p_of(d)
    q = 1.0 - p
    p0 = 0.5
    q1 = q / 2.0
    if abs(z) < 1e-9:
        f21 = q * z
    else:
        f21 = (1.0 - cmath.sqrt(1.0 - 4.0 * p * q * z * z)) / (2.0 * p * z)
    f10 = q1 * z / (1.0 - (1.0 - p - q1) * z - p * z * f21)
    u = z * (1.0 - p0) + z * p0 * f10
    if abs(1.0 - u) < 1e-14:
        raise ValueError(f"z={z} is a singularity of g for d={d}")
    return 1.0 / (1.0 - u)


@lru_cache(maxsize=64)
def _series_scaled(d: int, K: int) -> np.ndarray:
    """u_k = c_k gamma^(-k) for k <= K by stable linear-recurrence extraction.

    The cubic denominator D(z) = 2p (1-z)(z1-z)(z2-z) of g drives the naive
    three-term recurrence for c_k, but its roots 1 and (for d >= 9) z1 are
    removable points of g, so the recurrence carries spurious solution modes
    1^k and z1^(-k) that dwarf the true c_k ~ gamma^k and amplify roundoff
    catastrophically.  The removable factors are divided out of numerator
    and denominator first: the (1-z) division is a tail sum (N(1) = 0) and
    each (z1-z) division is a geometric tail convolution, both computed by
    backward recurrences whose errors decay.  The remaining forward
    recurrence has no modes above gamma and is stable.
    """
    p = _c.p_of(d)
    gamma = _c.gamma_of(d)
    rho = _c.rho_of(d)
    z1c, z2c = _c.z_pair(d)

    buf1 = int(math.ceil(64.0 / math.log(1.0 / gamma))) + 8
    if d >= 9:
        z1 = z1c.real
        buf2 = int(math.ceil(64.0 / math.log(1.0 / (z1 * gamma)))) + 8
    else:
        buf2 = 0
    khi = K + buf1 + 2 * buf2

    # scaled numerator coefficients n_j = N_j gamma^(-j); N has the three
    # polynomial entries plus the odd-index binomial series of z sqrt(1-rho^2 z^2)
    n = np.zeros(khi + 2)
    n[0] = 4.0
    n[1] = -(6.0 * p + 2.0) / gamma
    n[2] = 4.0 * p / gamma**2
    ratio2 = (rho / gamma) ** 2
    b = -0.5            # coefficient of x^m in sqrt(1-x), m = 1
    pw = ratio2 / gamma
    m = 1
    while 2 * m + 1 <= khi + 1:
        n[2 * m + 1] += b * pw
        m += 1
        b *= (m - 1.5) / m
        pw *= ratio2
    # divide out (1-z): Ntil_k = -sum_{j>k} N_j, backward and contracting
    ntil = np.zeros(khi + 1)
    acc = 0.0
    for k in range(khi - 1, -1, -1):
        acc = gamma * (acc - n[k + 1])
        ntil[k] = acc

    u = np.zeros(K + 1)
    if d <= 8:
        # remaining quadratic: 4 c_k - 6p c_{k-1} + 2p c_{k-2} = Ntil_k;
        # its modes 1/z1, 1/z2 have modulus sqrt(p/2) <= gamma
        um1 = um2 = 0.0
        for k in range(K + 1):
            uk = (ntil[k] + 6.0 * p / gamma * um1 - 2.0 * p / gamma**2 * um2) / 4.0
            u[k] = uk
            um2, um1 = um1, uk
        return u

    z1 = z1c.real
    z2 = z2c.real
    # divide out (z1-z): eps_k = z1 gamma eps_{k+1} - gamma Ntil~_{k+1}
    eps = np.zeros(khi + 1)
    acc = 0.0
    for k in range(khi - 1, -1, -1):
        acc = z1 * gamma * acc - gamma * ntil[k + 1]
        eps[k] = acc
    if d == 9:
        # double root z1 = z2 = 3/2: divide by (z1-z) once more, then D = 2p
        acc = 0.0
        tmp = np.zeros(khi + 1)
        for k in range(khi - 1, -1, -1):
            acc = z1 * gamma * acc - gamma * eps[k + 1]
            tmp[k] = acc
        return tmp[:K + 1] / (2.0 * p)
    # remaining linear factor: 2p z2 c_k - 2p c_{k-1} = eps_k; mode 1/(z2 gamma) = 1
    um1 = 0.0
    for k in range(K + 1):
        uk = (eps[k] + 2.0 * p / gamma * um1) / (2.0 * p * z2)
        u[k] = uk
        um1 = uk
    return u


def series_coeffs(d: int, K: int) -> CoeffSeries:
    """Coefficients c_0..c_K extracted from the closed form of g."""
    _c.check_degree(d)
    if not 0 <= K <= 5000:
        raise ValueError("K must be in [0, 5000]")
    scaled = _series_scaled(d, K).copy()
    scaled.setflags(write=False)
    return CoeffSeries(d=d, gamma=_c.gamma_of(d), scaled=scaled)


def fplus_fminus(d: int) -> tuple[float, float]:
    """Branch-point amplitudes of g at +1/rho and -1/rho (3 <= d <= 9).

    g(z) = a - f * sqrt(1 -/+ rho z) + O(1 -/+ rho z) near the two dominant
    square-root singularities; both amplitudes are positive and f+ > f-.
    """
    _c.check_degree(d)
    if d > 9:
        raise ValueError("branch-point amplitudes exist only for d <= 9")
    p = _c.p_of(d)
    z1, z2 = _c.z_pair(d)
    r = 1.0 / _c.rho_of(d)
    fplus = -r / (math.sqrt(2.0) * p * (1.0 - r) * abs((z1 - r) * (z2 - r)))
    fminus = r / (math.sqrt(2.0) * p * (1.0 + r) * abs((z1 + r) * (z2 + r)))
    return fplus, fminus


def residue_h(d: int) -> float:
    """Pole strength of g at z2 for d >= 11: g(z) = h/(z2 - z) + O(1).

    The coefficient limit is c_k z2^(k+1) -> h, and h lies in (0.7, 2).
    """
    _c.check_degree(d)
    if d < 11:
        raise ValueError("the dominant simple pole exists only for d >= 11")
    p = _c.p_of(d)
    z1, z2 = _c.z_pair(d)
    z1, z2 = z1.real, z2.real
    num = _numerator(d, complex(z2)).real
    h = num / (2.0 * p * (1.0 - z2) * (z1 - z2))
    assert h > 0.0
    return h


def asym_ck_log(d: int, k: int) -> float:
    """log of the leading asymptotic form of c_k (safe for large k)."""
    _c.check_degree(d)
    if k < 1:
        raise ValueError("k must be >= 1")
    rho = _c.rho_of(d)
    if d <= 9:
        fp, fm = fplus_fminus(d)
        amp = (fp + fm) if k % 2 == 0 else (fp - fm)
        return math.log(amp / (2.0 * math.sqrt(math.pi))) \
            - 1.5 * math.log(k) + k * math.log(rho)
    if d == 10:
        p = _c.p_of(d)
        z1, z2 = _c.z_pair(d)
        z1, z2 = z1.real, z2.real
        amp = z2 * math.sqrt(2.0) * rho / (2.0 * p * (1.0 - z2) * (z1 - z2))
        return math.log(amp / math.sqrt(math.pi)) \
            - 0.5 * math.log(k) + k * math.log(rho)
    z2 = _c.z_pair(d)[1].real
    return math.log(residue_h(d)) - (k + 1) * math.log(z2)


def asym_ck(d: int, k: int) -> float:
    """Leading asymptotic value of c_k; underflows to 0.0 for very large k."""
    return math.exp(asym_ck_log(d, k))


def asym_rt_ratio(d: int, t: float) -> float:
    """Compensated return probability R_t(0,0) e^(d(1-gamma)t) t^(-beta).

    Converges to a positive constant as t grows; computed from the
    log-value to avoid underflow of R_t itself.
    """
    from .bd_chain import rt00_log
    _c.check_degree(d)
    if t <= 0:
        raise ValueError("t must be > 0")
    gamma = _c.gamma_of(d)
    beta = _c.beta_of(d)
    return math.exp(rt00_log(d, t) + d * (1.0 - gamma) * t - beta * math.log(t))


def constants_rows(d_values) -> list[dict]:
    rows = []
    for d in d_values:
        c = constants(d)
        sigma = None if math.isnan(c.sigma) else c.sigma
        rows.append({
            "d": c.d, "rho": c.rho, "sigma": sigma, "gamma": c.gamma,
            "beta": c.beta, "z1_re": c.z1.real, "z1_im": c.z1.imag,
            "z2_re": c.z2.real, "z2_im": c.z2.imag, "regime": c.regime,
        })
    return rows


def write_constants_csv(d_values, path) -> None:
    from .io_utils import write_csv
    write_csv(path, ["d", "rho", "sigma", "gamma", "beta",
                     "z1_re", "z1_im", "z2_re", "z2_im", "regime"],
              constants_rows(d_values))
