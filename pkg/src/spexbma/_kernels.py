"""Hot likelihood kernels: numba-compiled with a pure-numpy fallback.

The pairwise composite log likelihood over (year x site-pair) terms is the
inner loop of every fit, bootstrap replicate and information-matrix
evaluation, so it is implemented twice with identical formulas:

* scalar loops compiled by numba ``@njit`` (default when numba imports), and
* a vectorized numpy path.

Set the environment variable ``SPEXBMA_NO_NUMBA`` to any non-empty value
before import to force the numpy path; the active lane is reported in
``BACKEND``. ``benchmarks/bench_kernels.py`` times both.

Each kernel fuses the marginal transform to unit-Frechet scale (with its
log-Jacobian) and the bivariate exponent-function terms, and returns the
log likelihood per year plus a status triple:

``(0, -1, -1)``            success
``(1, year, site)``        support violation 1 + xi*(x-mu)/sigma <= 0
``(2, year, pair_index)``  non-finite likelihood term (overflow/zero density)

Summation order is fixed (years outer, pairs inner), so results are
bit-reproducible regardless of any caller-level parallelism.
"""

from __future__ import annotations

import math
import os

import numpy as np

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)
_XI_EPS = 1e-8  # Gumbel threshold, matches spexbma.gev

KIND_SCHLATHER = 0
KIND_BROWN_RESNICK = 1

_env_disable = bool(os.environ.get("SPEXBMA_NO_NUMBA"))
if not _env_disable:
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        numba = None
else:
    numba = None

HAS_NUMBA = numba is not None
BACKEND = "numba" if HAS_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# scalar pieces (compiled when numba is active)

def _log_ndtr_scalar(x):
    # standard normal log CDF; asymptotic expansion far in the lower tail
    if x > 6.0:
        return math.log1p(-0.5 * math.erfc(x / _SQRT2))
    if x > -26.0:
        return math.log(0.5 * math.erfc(-x / _SQRT2))
    z = -x
    zz = z * z
    return -0.5 * zz - math.log(z) - _LOG_SQRT_2PI + math.log1p(-1.0 / zz + 3.0 / (zz * zz))


def _logaddexp_scalar(a, b):
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    if a >= b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


def _margins_scalar(x, mu, sigma, xi, logz, year):
    """Fill one year-row of log unit-Frechet values; returns (jac_sum, bad_site)."""
    jac = 0.0
    for i in range(x.shape[0]):
        s = (x[i] - mu[i]) / sigma[i]
        if xi[i] > _XI_EPS or xi[i] < -_XI_EPS:
            u = 1.0 + xi[i] * s
            if u <= 0.0:
                return 0.0, i
            lz = math.log1p(xi[i] * s) / xi[i]
        else:
            lz = s
        logz[i] = lz
        jac += (1.0 - xi[i]) * lz - math.log(sigma[i])
    return jac, -1


def _schlather_year_scalar(logz, pair_i, pair_j, rho):
    """Sum of bivariate log-density terms (without Jacobians) for one year."""
    s = 0.0
    for t in range(pair_i.shape[0]):
        lz1 = logz[pair_i[t]]
        lz2 = logz[pair_j[t]]
        r = rho[t]
        lm = lz1 if lz1 >= lz2 else lz2
        u1 = math.exp(lz1 - lm)
        u2 = math.exp(lz2 - lm)
        ru = math.sqrt(u1 * u1 - 2.0 * r * u1 * u2 + u2 * u2)
        l2ru = math.log(2.0 * ru)
        lv1 = math.log(u2 + ru - r * u1) - l2ru - 2.0 * lz1
        lv2 = math.log(u1 + ru - r * u2) - l2ru - 2.0 * lz2
        lv12 = math.log1p(-r * r) - math.log(2.0) - 3.0 * (lm + math.log(ru))
        larg = _logaddexp_scalar(lv1 + lv2, lv12)
        v = (u1 + u2 + ru) / (2.0 * u1 * u2) * math.exp(-lm)
        term = larg - v
        if not math.isfinite(term):
            return s, t
        s += term
    return s, -1


def _brown_resnick_year_scalar(logz, pair_i, pair_j, a):
    s = 0.0
    for t in range(pair_i.shape[0]):
        lz1 = logz[pair_i[t]]
        lz2 = logz[pair_j[t]]
        at = a[t]
        q1 = 0.5 * at + (lz2 - lz1) / at
        q2 = at - q1
        lp1 = _log_ndtr_scalar(q1)
        lp2 = _log_ndtr_scalar(q2)
        v = math.exp(lp1 - lz1) + math.exp(lp2 - lz2)
        la = lp1 + lp2 - 2.0 * (lz1 + lz2)
        lb = -0.5 * q1 * q1 - _LOG_SQRT_2PI - math.log(at) - 2.0 * lz1 - lz2
        term = _logaddexp_scalar(la, lb) - v
        if not math.isfinite(term):
            return s, t
        s += term
    return s, -1


def _nll_loop(x, mu, sigma, xi, pair_i, pair_j, dep, kind, out):
    n_years, n_sites = x.shape
    logz = np.empty(n_sites)
    npair_per_site = n_sites - 1.0
    for y in range(n_years):
        jac, bad = _margins_scalar(x[y], mu, sigma, xi, logz, y)
        if bad >= 0:
            return 1, y, bad
        if kind == KIND_SCHLATHER:
            s, badt = _schlather_year_scalar(logz, pair_i, pair_j, dep)
        else:
            s, badt = _brown_resnick_year_scalar(logz, pair_i, pair_j, dep)
        if badt >= 0:
            return 2, y, badt
        out[y] = s + npair_per_site * jac
    return 0, -1, -1


if HAS_NUMBA:
    _log_ndtr_scalar = numba.njit(cache=True)(_log_ndtr_scalar)
    _logaddexp_scalar = numba.njit(cache=True)(_logaddexp_scalar)
    _margins_scalar = numba.njit(cache=True)(_margins_scalar)
    _schlather_year_scalar = numba.njit(cache=True)(_schlather_year_scalar)
    _brown_resnick_year_scalar = numba.njit(cache=True)(_brown_resnick_year_scalar)
    _nll_loop = numba.njit(cache=True)(_nll_loop)


def pair_loglik_by_year_numba(x, mu, sigma, xi, pair_i, pair_j, dep, kind):
    out = np.empty(x.shape[0])
    status = _nll_loop(x, mu, sigma, xi, pair_i, pair_j, dep, kind, out)
    return out, status


# ---------------------------------------------------------------------------
# numpy lane: same formulas, vectorized over (years x pairs)

def _log_ndtr_np(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    hi = x > 6.0
    lo = x <= -26.0
    mid = ~hi & ~lo
    from scipy.special import erfc

    out[hi] = np.log1p(-0.5 * erfc(x[hi] / _SQRT2))
    out[mid] = np.log(0.5 * erfc(-x[mid] / _SQRT2))
    z = -x[lo]
    zz = z * z
    out[lo] = -0.5 * zz - np.log(z) - _LOG_SQRT_2PI + np.log1p(-1.0 / zz + 3.0 / (zz * zz))
    return out


def _margins_np(x, mu, sigma, xi):
    """(logz, jac_by_year, (year, site) of first support violation or None)."""
    s = (x - mu) / sigma
    gum = np.abs(xi) < _XI_EPS
    u = 1.0 + np.where(gum, 0.0, xi) * s
    bad = u <= 0.0
    if np.any(bad):
        y, i = np.argwhere(bad)[0]
        return None, None, (int(y), int(i))
    with np.errstate(divide="ignore"):
        logz = np.where(gum, s, np.log1p(np.where(gum, 0.0, xi) * s) / np.where(gum, 1.0, xi))
    jac = ((1.0 - xi) * logz - np.log(sigma)).sum(axis=1)
    return logz, jac, None


def _first_nonfinite(term):
    bad = ~np.isfinite(term)
    if np.any(bad):
        y, t = np.argwhere(bad)[0]
        return (int(y), int(t))
    return None


def pair_loglik_by_year_numpy(x, mu, sigma, xi, pair_i, pair_j, dep, kind):
    n_years, n_sites = x.shape
    logz, jac, viol = _margins_np(x, mu, sigma, xi)
    if viol is not None:
        return np.empty(0), (1, viol[0], viol[1])
    lz1 = logz[:, pair_i]
    lz2 = logz[:, pair_j]
    with np.errstate(over="ignore", divide="ignore", invalid="ignore", under="ignore"):
        if kind == KIND_SCHLATHER:
            r = dep[np.newaxis, :]
            lm = np.maximum(lz1, lz2)
            u1 = np.exp(lz1 - lm)
            u2 = np.exp(lz2 - lm)
            ru = np.sqrt(u1 * u1 - 2.0 * r * u1 * u2 + u2 * u2)
            l2ru = np.log(2.0 * ru)
            lv1 = np.log(u2 + ru - r * u1) - l2ru - 2.0 * lz1
            lv2 = np.log(u1 + ru - r * u2) - l2ru - 2.0 * lz2
            lv12 = np.log1p(-r * r) - np.log(2.0) - 3.0 * (lm + np.log(ru))
            larg = np.logaddexp(lv1 + lv2, lv12)
            v = (u1 + u2 + ru) / (2.0 * u1 * u2) * np.exp(-lm)
        else:
            a = dep[np.newaxis, :]
            q1 = 0.5 * a + (lz2 - lz1) / a
            q2 = a - q1
            lp1 = _log_ndtr_np(q1)
            lp2 = _log_ndtr_np(q2)
            v = np.exp(lp1 - lz1) + np.exp(lp2 - lz2)
            la = lp1 + lp2 - 2.0 * (lz1 + lz2)
            lb = -0.5 * q1 * q1 - _LOG_SQRT_2PI - np.log(a) - 2.0 * lz1 - lz2
            larg = np.logaddexp(la, lb)
        term = larg - v
    where_bad = _first_nonfinite(term)
    if where_bad is not None:
        return np.empty(0), (2, where_bad[0], where_bad[1])
    out = term.sum(axis=1) + (n_sites - 1.0) * jac
    return out, (0, -1, -1)


pair_loglik_by_year = pair_loglik_by_year_numba if HAS_NUMBA else pair_loglik_by_year_numpy
