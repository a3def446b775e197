"""Univariate generalized extreme value distribution.

Density, CDF, quantiles/return levels, sample L-moments and the L-moments
parameter estimator. All distribution functions accept scalars or numpy
arrays in ``x`` and broadcast elementwise; parameters are carried in a
:class:`GevParams` triple.

Shape convention: ``xi > 0`` is the heavy (Frechet) tail, ``xi < 0`` the
bounded (Weibull) tail, so the support is ``x > mu - sigma/xi`` for
``xi > 0`` and ``x < mu - sigma/xi`` for ``xi < 0``. The L-moment estimator
internally uses the opposite-signed shape ``kappa = -xi`` (the convention
of the classical rational-approximation formulas) and negates it on return;
see :func:`fit_lmoments`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import (
    DegenerateSampleError,
    DomainError,
    FitFailureError,
    InsufficientDataError,
    InvalidParameterError,
)

# |xi| below this is treated as the Gumbel case to avoid catastrophic
# cancellation in (1 - y^-xi)/xi.
GUMBEL_XI_EPS = 1e-8

_EULER_GAMMA = 0.5772156649015329


@dataclass(frozen=True)
class GevParams:
    """Location/scale/shape triple of a GEV distribution."""

    mu: float
    sigma: float
    xi: float

    def __post_init__(self):
        for name in ("mu", "sigma", "xi"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise InvalidParameterError(f"GEV parameter {name} must be finite, got {v}")
        if self.sigma <= 0:
            raise InvalidParameterError(f"GEV sigma must be > 0, got {self.sigma}")

    @property
    def is_gumbel(self) -> bool:
        return abs(self.xi) < GUMBEL_XI_EPS


@dataclass(frozen=True)
class LMoments:
    """First three sample L-moments (l1 location, l2 scale, l3 asymmetry)."""

    l1: float
    l2: float
    l3: float

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.l1, self.l2, self.l3)):
            raise InvalidParameterError("L-moments must be finite")
        if self.l2 < 0:
            raise InvalidParameterError(f"second L-moment must be >= 0, got {self.l2}")
        if self.l2 > 0 and abs(self.l3) > self.l2 * (1 + 1e-12):
            raise InvalidParameterError("L-skewness l3/l2 must lie in [-1, 1]")

    @property
    def t3(self) -> float:
        """L-skewness ratio l3/l2."""
        return self.l3 / self.l2


def _check_x(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidParameterError("x must be finite")
    return x


def gev_cdf(x, p: GevParams):
    """GEV cumulative distribution function.

    Returns 0 below the lower support endpoint (xi > 0) and 1 above the
    upper endpoint (xi < 0). Scalar in, scalar out.
    """
    x = _check_x(x)
    s = (x - p.mu) / p.sigma
    if p.is_gumbel:
        out = np.exp(-np.exp(-s))
    else:
        inside = 1.0 + p.xi * s > 0
        # log1p keeps (1 + xi*s)^(-1/xi) accurate near the Gumbel threshold
        t = np.exp(-np.log1p(np.where(inside, p.xi * s, 0.0)) / p.xi)
        # outside-support points: CDF saturates at 0 (xi>0) or 1 (xi<0)
        out = np.where(inside, np.exp(-t), 0.0 if p.xi > 0 else 1.0)
    return out if out.ndim else float(out)


def gev_pdf(x, p: GevParams):
    """GEV probability density; zero outside the support.

    Evaluated through the log density so deep-tail points underflow to 0
    instead of producing inf*0.
    """
    x = _check_x(x)
    s = (x - p.mu) / p.sigma
    if p.is_gumbel:
        # exp(-s) may overflow deep in the lower tail; the density is 0 there
        with np.errstate(over="ignore"):
            logpdf = -s - np.exp(-s) - np.log(p.sigma)
        out = np.exp(logpdf)
    else:
        inside = 1.0 + p.xi * s > 0
        logu = np.log1p(np.where(inside, p.xi * s, 0.0))
        t = np.exp(-logu / p.xi)
        logpdf = -(1.0 + 1.0 / p.xi) * logu - t - np.log(p.sigma)
        out = np.where(inside, np.exp(logpdf), 0.0)
    return out if out.ndim else float(out)


def gev_quantile(q, p: GevParams):
    """Inverse CDF: the value x with gev_cdf(x, p) = q, for q in (0, 1)."""
    q = np.asarray(q, dtype=float)
    if np.any((q <= 0) | (q >= 1)):
        raise DomainError("quantile level must lie strictly in (0, 1)")
    logy = np.log(-np.log(q))  # y = -log G
    if p.is_gumbel:
        out = p.mu - p.sigma * logy
    else:
        # (1 - y^-xi)/xi via expm1 stays accurate as xi -> 0
        out = p.mu + (p.sigma / p.xi) * np.expm1(-p.xi * logy)
    return out if out.ndim else float(out)


def return_level(T, p: GevParams):
    """Level exceeded on average once every T years (T > 1).

    Inverts the CDF at the non-exceedance probability 1 - 1/T, so
    ``gev_cdf(return_level(T, p), p) == 1 - 1/T``.
    """
    T = np.asarray(T, dtype=float)
    if np.any(T <= 1):
        raise DomainError(f"return period must be > 1, got {T}")
    out = gev_quantile(1.0 - 1.0 / T, p)
    return out


def sample_lmoments(x) -> LMoments:
    """First three sample L-moments of a data vector.

    Uses the unbiased probability-weighted moments
    ``b_r = n^-1 sum_i [prod_{k=1..r} (i-k)/(n-k)] x_(i)`` on the
    ascending-sorted sample, then ``l1 = b0``, ``l2 = 2 b1 - b0``,
    ``l3 = 6 b2 - 6 b1 + b0``.

    Raises
    ------
    InsufficientDataError
        If fewer than 3 observations are supplied.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InvalidParameterError("expected a 1-D sample")
    n = x.size
    if n < 3:
        raise InsufficientDataError(f"need at least 3 observations, got {n}")
    if not np.all(np.isfinite(x)):
        raise InvalidParameterError("sample contains non-finite values")
    xs = np.sort(x)
    i = np.arange(1, n + 1, dtype=float)
    b0 = xs.mean()
    b1 = np.sum((i - 1) / (n - 1) * xs) / n
    b2 = np.sum((i - 1) * (i - 2) / ((n - 1) * (n - 2)) * xs) / n
    l2 = 2 * b1 - b0
    # guard tiny negative round-off on near-constant samples
    if l2 < 0 and l2 > -1e-12 * max(1.0, abs(b0)):
        l2 = 0.0
    l3 = 6 * b2 - 6 * b1 + b0
    if l2 == 0.0:
        l3 = 0.0
    return LMoments(l1=b0, l2=l2, l3=l3)


def _fit_from_lmoments(lm: LMoments) -> GevParams:
    """Rational-approximation GEV estimator from L-moments.

    The classical formulas produce the opposite-signed shape
    ``kappa``; the returned parameters use ``xi = -kappa`` so that the
    heavy tail is positive, which is fixed by the fit-then-quantile
    round-trip check in the test suite.
    """
    if lm.l2 <= 0:
        raise DegenerateSampleError("second L-moment is zero; sample has no dispersion")
    c = 2.0 * lm.l2 / (lm.l3 + 3.0 * lm.l2) - np.log(2.0) / np.log(3.0)
    kappa = 7.8590 * c + 2.9554 * c * c
    if abs(kappa) < GUMBEL_XI_EPS:
        sigma = lm.l2 / np.log(2.0)
        mu = lm.l1 - sigma * _EULER_GAMMA
        return GevParams(mu=mu, sigma=sigma, xi=0.0)
    if kappa <= -1.0:
        raise FitFailureError(
            f"gamma argument 1 + kappa = {1 + kappa:.4f} <= 0; shape estimate out of range")
    if -kappa <= -1.0:
        raise FitFailureError(f"shape estimate xi = {-kappa:.4f} <= -1; fit rejected")
    g = gamma_fn(1.0 + kappa)
    sigma = kappa * lm.l2 / (g * (1.0 - 2.0 ** (-kappa)))
    mu = lm.l1 + sigma * (g - 1.0) / kappa
    if not (np.isfinite(sigma) and sigma > 0 and np.isfinite(mu)):
        raise FitFailureError(f"invalid scale estimate sigma = {sigma}")
    return GevParams(mu=mu, sigma=sigma, xi=-kappa)


def fit_lmoments(x) -> GevParams:
    """Fit GEV parameters to a sample by the method of L-moments.

    Parameters
    ----------
    x : array_like
        Sample of block maxima, length >= 3 with positive dispersion.

    Returns
    -------
    GevParams

    Raises
    ------
    DegenerateSampleError
        If the sample is constant (l2 = 0).
    FitFailureError
        If the shape estimate is out of range (xi <= -1 or xi >= 1); the
        estimate is never clamped, callers decide how to handle failures.
    """
    return _fit_from_lmoments(sample_lmoments(x))


def gev_sample(p: GevParams, n: int, seed) -> np.ndarray:
    """Draw n values by inverse-CDF sampling; deterministic given seed.

    ``seed`` may be an int or a numpy Generator/SeedSequence.
    """
    if n < 1:
        raise InvalidParameterError(f"sample size must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    u = rng.uniform(size=n)
    return np.asarray(gev_quantile(u, p), dtype=float)
