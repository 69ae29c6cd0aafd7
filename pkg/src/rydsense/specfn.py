"""Numerically robust special functions, distributions, and samplers.

Everything here works in the log domain where overflow is a risk: the
likelihood-ratio kernels evaluate ln I0 at arguments in the thousands, and
the Marcum-Q machinery has to stay accurate out to hundreds of degrees of
freedom.  All functions are pure; the only state is inside ``RngStream``,
which wraps a counter-based (Philox) generator so that Monte Carlo trials
can be distributed over workers without losing reproducibility.

Convention: ``sigma2`` always denotes the *complex* (total) noise variance,
so each quadrature carries ``sigma2 / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

__all__ = [
    "RngStream",
    "log_bessel_i0",
    "log_bessel_i1",
    "rician_log_pdf",
    "laguerre_half",
    "rician_mean",
    "marcum_q",
    "inverse_marcum_q_b",
    "sample_complex_gaussian",
    "sample_rician",
]


def _as_nonneg_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if np.any(arr < 0.0):
        raise ValueError(f"{name} must be nonnegative")
    return arr


def log_bessel_i0(x):
    """ln I0(x) for x >= 0, scalar or array, safe up to x ~ 1e8.

    Small arguments use the ascending power series through log1p (the
    exponentially-scaled route loses relative accuracy when ln I0 ~ x^2/4
    is itself tiny); larger arguments use the scaled Bessel i0e.
    """
    arr = _as_nonneg_array(x, "x")
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)

    small = arr < 1.0
    if np.any(small):
        xs = arr[small]
        q = 0.25 * xs * xs
        term = np.ones_like(xs)
        s = np.zeros_like(xs)
        for k in range(1, 12):
            term = term * q / (k * k)
            s += term
        out[small] = np.log1p(s)
    big = ~small
    if np.any(big):
        xb = arr[big]
        out[big] = np.log(special.i0e(xb)) + xb
    return float(out[0]) if scalar else out


def log_bessel_i1(x):
    """ln I1(x) for x >= 0; returns -inf at x = 0 (log of zero)."""
    arr = _as_nonneg_array(x, "x")
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.full_like(arr, -np.inf)

    small = (arr > 0.0) & (arr < 1.0)
    if np.any(small):
        xs = arr[small]
        q = 0.25 * xs * xs
        # I1(x) = (x/2) * sum_k q^k / (k! (k+1)!)
        term = np.ones_like(xs)
        s = np.zeros_like(xs)
        for k in range(1, 12):
            term = term * q / (k * (k + 1))
            s += term
        out[small] = np.log(0.5 * xs) + np.log1p(s)
    big = arr >= 1.0
    if np.any(big):
        xb = arr[big]
        out[big] = np.log(special.i1e(xb)) + xb
    return float(out[0]) if scalar else out


def rician_log_pdf(y, nu, sigma2):
    """Log density of |nu + w| with w ~ CN(0, sigma2).

    p(y) = (2 y / sigma2) * I0(2 y nu / sigma2) * exp(-(y^2 + nu^2) / sigma2)
    for y >= 0; returns -inf at y = 0.  sigma2 is the total complex-noise
    variance (each quadrature carries sigma2 / 2).
    """
    y_arr = _as_nonneg_array(y, "y")
    nu_arr = _as_nonneg_array(nu, "nu")
    s2 = np.asarray(sigma2, dtype=float)
    if not np.all(np.isfinite(s2)) or np.any(s2 <= 0.0):
        raise ValueError("sigma2 must be finite and positive")
    scalar = y_arr.ndim == 0 and nu_arr.ndim == 0 and s2.ndim == 0

    y_b, nu_b, s2_b = np.broadcast_arrays(
        np.atleast_1d(y_arr), np.atleast_1d(nu_arr), np.atleast_1d(s2)
    )
    with np.errstate(divide="ignore"):
        out = (
            np.log(2.0 * y_b)
            - np.log(s2_b)
            + log_bessel_i0(2.0 * y_b * nu_b / s2_b)
            - (y_b * y_b + nu_b * nu_b) / s2_b
        )
    return float(out.reshape(-1)[0]) if scalar else out.reshape(np.broadcast_shapes(
        np.shape(y), np.shape(nu), np.shape(sigma2)))


def laguerre_half(x):
    """Laguerre function L_{1/2}(x) for x <= 0, finite down to x = -1e6.

    Uses L_{1/2}(x) = e^{x/2} [(1 - x) I0(-x/2) - x I1(-x/2)], which with
    u = -x collapses to scaled Bessels: (1 + u) i0e(u/2) + u i1e(u/2).
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("x must be finite")
    if np.any(arr > 0.0):
        raise ValueError("laguerre_half supports only x <= 0")
    scalar = arr.ndim == 0
    u = -np.atleast_1d(arr)
    out = (1.0 + u) * special.i0e(0.5 * u) + u * special.i1e(0.5 * u)
    return float(out[0]) if scalar else out


def rician_mean(nu, sigma2):
    """E|nu + w| for w ~ CN(0, sigma2): sqrt(pi sigma2 / 4) L_{1/2}(-nu^2/sigma2)."""
    nu_arr = _as_nonneg_array(nu, "nu")
    s2 = np.asarray(sigma2, dtype=float)
    if not np.all(np.isfinite(s2)) or np.any(s2 <= 0.0):
        raise ValueError("sigma2 must be finite and positive")
    return np.sqrt(0.25 * math.pi * s2) * laguerre_half(-(nu_arr * nu_arr) / s2)


# Poisson-mixture truncation: weights below ~1e-18 of the mode are dropped;
# a 40-sigma + 40 window bounds the discarded mass far under the 1e-10 target.
_POISSON_WINDOW_SIGMAS = 40.0
_POISSON_WINDOW_PAD = 40


def marcum_q(order: int, a: float, b: float) -> float:
    """Generalized Marcum-Q: Q_L(a, b) = Pr(chi2_{2L}(a^2) > b^2).

    Poisson-weighted sum of regularized upper incomplete gamma tails,
    two-sided truncated around the Poisson mode.  Absolute error stays
    below 1e-10 for L <= 200 and a, b <= 100.
    """
    L = order
    if not isinstance(L, (int, np.integer)) or L < 1:
        raise ValueError("order must be a positive integer")
    if not (np.isfinite(a) and a >= 0.0):
        raise ValueError("a must be finite and nonnegative")
    if not (np.isfinite(b) and b >= 0.0):
        raise ValueError("b must be finite and nonnegative")
    if b == 0.0:
        return 1.0
    y = 0.5 * b * b
    lam = 0.5 * a * a
    if lam == 0.0:
        return float(special.gammaincc(L, y))
    sd = math.sqrt(lam)
    k_lo = max(0, int(math.floor(lam - _POISSON_WINDOW_SIGMAS * sd)) - _POISSON_WINDOW_PAD)
    k_hi = int(math.ceil(lam + _POISSON_WINDOW_SIGMAS * sd)) + _POISSON_WINDOW_PAD
    k = np.arange(k_lo, k_hi + 1)
    log_w = k * math.log(lam) - lam - special.gammaln(k + 1.0)
    w = np.exp(log_w)
    tails = special.gammaincc(L + k.astype(float), y)
    val = float(np.sum(w * tails))
    # Poisson mass below k_lo multiplies tails that are all >= tails[0]; add
    # it at the lower-edge tail value so truncation can only help accuracy.
    missing_low = float(special.gammainc(k_lo, lam)) if k_lo > 0 else 0.0
    val += missing_low * float(tails[0])
    return min(max(val, 0.0), 1.0)


def marcum_q_batch(order: int, a, b) -> np.ndarray:
    """Vectorized Q_L(a, b) via the noncentral chi-square survival function.

    Library-backed fast path for harness-scale workloads; the scalar
    ``marcum_q`` is the accuracy-contracted reference route.
    """
    a_arr = _as_nonneg_array(a, "a")
    b_arr = _as_nonneg_array(b, "b")
    return 1.0 - special.chndtr(b_arr * b_arr, 2.0 * order, a_arr * a_arr)


def inverse_marcum_q_b(order: int, a: float, p: float) -> float:
    """Solve Q_L(a, b) = p for b; Q_L(a, .) is strictly decreasing in b."""
    if not (0.0 < p < 1.0):
        raise ValueError("p must lie strictly inside (0, 1)")
    if order == 1 and a == 0.0:
        return math.sqrt(-2.0 * math.log(p))
    if a == 0.0:
        return math.sqrt(2.0 * float(special.gammainccinv(order, p)))

    def f(b: float) -> float:
        return marcum_q(order, a, b) - p

    hi = a + 50.0 * math.sqrt(2.0 * order)
    for _ in range(8):
        if f(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise ArithmeticError("failed to bracket inverse Marcum-Q")
    b = optimize.brentq(f, 0.0, hi, xtol=1e-12, rtol=1e-14)
    return float(b)


@dataclass
class RngStream:
    """Deterministic, independently-seeded random stream.

    Identical (master_seed, stream_index) pairs reproduce the same sample
    sequence; distinct stream_index values give statistically independent
    streams (Philox counter-based keying).
    """

    master_seed: int
    stream_index: int
    _gen: np.random.Generator | None = field(
        default=None, init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        for name in ("master_seed", "stream_index"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) < 2**64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer")

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            key = np.array([self.master_seed, self.stream_index], dtype=np.uint64)
            self._gen = np.random.Generator(np.random.Philox(key=key))
        return self._gen


def sample_complex_gaussian(stream: RngStream, mean, variance, size=None):
    """Circular complex Gaussian draws: CN(mean, variance).

    Real and imaginary parts are independent N(., variance / 2).  Returns a
    scalar when mean is scalar and size is None.
    """
    if not (np.all(np.isfinite(variance)) and np.all(np.asarray(variance) > 0.0)):
        raise ValueError("variance must be finite and positive")
    mean_arr = np.asarray(mean, dtype=complex)
    shape = np.shape(mean_arr) if size is None else size
    g = stream.generator
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    re = g.standard_normal(shape)
    im = g.standard_normal(shape)
    out = mean_arr + scale * (re + 1j * im)
    if size is None and mean_arr.ndim == 0:
        return complex(out)
    return out


def sample_rician(stream: RngStream, nu, sigma2, size=None):
    """Magnitude draws |nu + w| with w ~ CN(0, sigma2)."""
    nu_arr = np.asarray(nu, dtype=complex)
    shape = np.shape(nu_arr) if size is None else size
    noise = sample_complex_gaussian(stream, np.zeros(shape, dtype=complex), sigma2)
    out = np.abs(nu_arr + noise)
    if size is None and nu_arr.ndim == 0:
        return float(out)
    return out
