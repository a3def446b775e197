"""Max-stable process models over a site set.

Dependence structures (powered-exponential correlation for the extremal
Gaussian construction, power variogram for the log-Gaussian one), bivariate
exponent functions and their closed-form derivatives, polynomial trend
surfaces for the GEV parameters, the pairwise composite likelihood, extremal
coefficients, a sandwich information criterion for model selection and
spatial return levels.

Fitting-speed note: repeated likelihood evaluation goes through
:class:`PairwiseWorkspace`, which precomputes design matrices and pair
geometry once and dispatches to the compiled kernels in ``_kernels``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import ndtr

from . import _kernels
from .data import Dataset, NormalizedSites, Site, normalize_coords, site_distances
from .errors import (
    DomainError,
    InsufficientDataError,
    InvalidParameterError,
    NumericFailureError,
    SingularInformationError,
)
from .gev import GevParams, return_level
from .numdiff import numerical_hessian

__all__ = [
    "SCHLATHER",
    "BROWN_RESNICK",
    "DependenceModel",
    "TrendSurface",
    "MspModel",
    "Site",
    "NormalizedSites",
    "normalize_coords",
    "powered_exp_corr",
    "br_variogram",
    "schlather_V",
    "schlather_V_derivs",
    "br_V",
    "br_V_derivs",
    "frechet_transform",
    "frechet_log_jacobian",
    "pairwise_bivariate_logdensity",
    "pairwise_nll",
    "pairwise_nll_by_year",
    "extremal_coefficient_model",
    "extremal_coefficient_empirical",
    "evaluate_trend",
    "msp_return_level",
    "tic",
    "tic_value",
    "information_matrices",
    "PairwiseWorkspace",
    "TERM_CATALOG",
]

SCHLATHER = "schlather"
BROWN_RESNICK = "brown_resnick"

# polynomial basis in normalized coordinates
_BASIS_NAMES = ("1", "lat", "lon", "lat2", "latlon", "lon2", "alt")

# catalog of trend term sets searched during fitting; "selected" is the
# default production form, kept fixed across datasets unless catalog search
# is requested
MU_TERMS_SELECTED = ("1", "lat", "lon", "lat2", "latlon")
SIGMA_TERMS_SELECTED = ("1", "lon", "latlon")
TERM_CATALOG = {
    "selected": (MU_TERMS_SELECTED, SIGMA_TERMS_SELECTED),
    "intercept_only": (("1",), ("1",)),
    "full_quadratic": (
        ("1", "lat", "lon", "lat2", "latlon", "lon2"),
        ("1", "lat", "lon", "lat2", "latlon", "lon2"),
    ),
}


def _basis_column(name: str, nlat, nlon, nalt):
    if name == "1":
        return np.ones_like(nlat)
    if name == "lat":
        return nlat
    if name == "lon":
        return nlon
    if name == "lat2":
        return nlat * nlat
    if name == "latlon":
        return nlat * nlon
    if name == "lon2":
        return nlon * nlon
    if name == "alt":
        return nalt
    raise InvalidParameterError(f"unknown trend basis term '{name}'")


def trend_design_matrix(sites: Sequence[Site], names: Sequence[str]) -> np.ndarray:
    """Design matrix (n_sites x n_terms) of basis values at each site."""
    for s in sites:
        if not s.is_normalized:
            raise InvalidParameterError(f"site {s.id} has no normalized coordinates")
    nlat = np.array([s.norm_lat for s in sites])
    nlon = np.array([s.norm_lon for s in sites])
    nalt = np.array([s.norm_alt if s.norm_alt is not None else 0.0 for s in sites])
    return np.column_stack([_basis_column(n, nlat, nlon, nalt) for n in names])


@dataclass(frozen=True)
class DependenceModel:
    """Spatial dependence family with range tau and smoothness eta."""

    kind: str
    tau: float
    eta: float

    def __post_init__(self):
        if self.kind not in (SCHLATHER, BROWN_RESNICK):
            raise InvalidParameterError(f"unknown characterization '{self.kind}'")
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise InvalidParameterError(f"tau must be > 0, got {self.tau}")
        if not (np.isfinite(self.eta) and 0 < self.eta <= 2):
            raise InvalidParameterError(f"eta must lie in (0, 2], got {self.eta}")


@dataclass(frozen=True)
class TrendSurface:
    """Polynomial surfaces for mu and sigma plus a constant shape.

    ``mu_terms`` and ``sigma_terms`` are tuples of (basis-name, coefficient)
    pairs over the basis {1, lat, lon, lat2, latlon, lon2, alt} evaluated in
    normalized coordinates; the shape parameter is constant over space.
    """

    mu_terms: tuple[tuple[str, float], ...]
    sigma_terms: tuple[tuple[str, float], ...]
    xi_const: float

    def __post_init__(self):
        for name, _ in (*self.mu_terms, *self.sigma_terms):
            if name not in _BASIS_NAMES:
                raise InvalidParameterError(f"unknown trend basis term '{name}'")
        if not np.isfinite(self.xi_const):
            raise InvalidParameterError("xi must be finite")

    @classmethod
    def constant(cls, mu: float, sigma: float, xi: float) -> "TrendSurface":
        return cls(mu_terms=(("1", mu),), sigma_terms=(("1", sigma),), xi_const=xi)

    @classmethod
    def from_coefs(cls, mu_names, mu_coefs, sigma_names, sigma_coefs, xi) -> "TrendSurface":
        return cls(
            mu_terms=tuple(zip(mu_names, (float(c) for c in mu_coefs))),
            sigma_terms=tuple(zip(sigma_names, (float(c) for c in sigma_coefs))),
            xi_const=float(xi),
        )

    @property
    def mu_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.mu_terms)

    @property
    def sigma_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.sigma_terms)

    @property
    def mu_coefs(self) -> np.ndarray:
        return np.array([c for _, c in self.mu_terms])

    @property
    def sigma_coefs(self) -> np.ndarray:
        return np.array([c for _, c in self.sigma_terms])


@dataclass(frozen=True)
class MspModel:
    """Trend surface plus dependence model; determines all return levels."""

    trend: TrendSurface
    dep: DependenceModel


def evaluate_trend(site: Site, trend: TrendSurface) -> GevParams:
    """GEV parameters implied by the trend surface at one site."""
    X_mu = trend_design_matrix([site], trend.mu_names)
    X_sigma = trend_design_matrix([site], trend.sigma_names)
    mu = float(X_mu @ trend.mu_coefs)
    sigma = float(X_sigma @ trend.sigma_coefs)
    if sigma <= 0 or not np.isfinite(sigma):
        raise InvalidParameterError(
            f"trend surface gives sigma = {sigma:.6g} <= 0 at site {site.id}")
    return GevParams(mu=mu, sigma=sigma, xi=trend.xi_const)


def msp_return_level(T: float, site: Site, model: MspModel) -> float:
    """Return level at a site from the spatially varying GEV parameters."""
    return float(return_level(T, evaluate_trend(site, model.trend)))


# ---------------------------------------------------------------------------
# dependence structure

def powered_exp_corr(h, tau: float, eta: float):
    """Powered-exponential correlation exp{-(h/tau)^eta}."""
    _check_dep_box(tau, eta)
    h = _check_distance(h)
    out = np.exp(-((h / tau) ** eta))
    return out if out.ndim else float(out)


def br_variogram(h, tau: float, eta: float):
    """Power variogram 2*(h/tau)^eta of the log-Gaussian construction."""
    _check_dep_box(tau, eta)
    h = _check_distance(h)
    out = 2.0 * (h / tau) ** eta
    return out if out.ndim else float(out)


def _check_dep_box(tau, eta):
    if not (np.isfinite(tau) and tau > 0):
        raise InvalidParameterError(f"tau must be > 0, got {tau}")
    if not (np.isfinite(eta) and 0 < eta <= 2):
        raise InvalidParameterError(f"eta must lie in (0, 2], got {eta}")


def _check_distance(h):
    h = np.asarray(h, dtype=float)
    if np.any(h < 0) or not np.all(np.isfinite(h)):
        raise InvalidParameterError("distance must be finite and >= 0")
    return h


def dependence_pair_values(dep: DependenceModel, h) -> np.ndarray:
    """Per-pair dependence input for the exponent function: the correlation
    rho(h) for the extremal-Gaussian family, or the variogram root
    a(h) = sqrt(2)*(h/tau)^(eta/2) for the log-Gaussian one."""
    if dep.kind == SCHLATHER:
        return np.asarray(powered_exp_corr(h, dep.tau, dep.eta))
    return np.sqrt(np.asarray(br_variogram(h, dep.tau, dep.eta)))


# ---------------------------------------------------------------------------
# bivariate exponent functions on unit-Frechet scale

def _check_z(z1, z2):
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    if np.any(z1 <= 0) or np.any(z2 <= 0):
        raise DomainError("unit-Frechet arguments must be > 0")
    return z1, z2


def schlather_V(z1, z2, rho):
    """Exponent function of the extremal-Gaussian (correlation) family.

    ``Pr{Z1 <= z1, Z2 <= z2} = exp(-V)``; rho in [0, 1], where 0 is
    independence of extremes and 1 complete dependence.
    """
    z1, z2 = _check_z(z1, z2)
    rho = np.asarray(rho, dtype=float)
    if np.any((rho < 0) | (rho > 1)):
        raise InvalidParameterError("rho must lie in [0, 1]")
    r = np.sqrt(z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2)
    out = (z1 + z2 + r) / (2.0 * z1 * z2)
    return out if out.ndim else float(out)


def schlather_V_derivs(z1, z2, rho):
    """(V, V1, V2, V12) with Vi the partials of :func:`schlather_V`.

    Only defined for rho < 1 (at rho = 1 the pair is degenerate).
    """
    z1, z2 = _check_z(z1, z2)
    rho = np.asarray(rho, dtype=float)
    if np.any((rho < 0) | (rho >= 1)):
        raise InvalidParameterError("derivatives require rho in [0, 1)")
    r = np.sqrt(z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2)
    v = (z1 + z2 + r) / (2.0 * z1 * z2)
    v1 = (rho * z1 - z2 - r) / (2.0 * z1 * z1 * r)
    v2 = (rho * z2 - z1 - r) / (2.0 * z2 * z2 * r)
    v12 = (rho * rho - 1.0) / (2.0 * r ** 3)
    return v, v1, v2, v12


def br_V(z1, z2, a):
    """Exponent function of the log-Gaussian (variogram) family with
    dependence input a = sqrt of the variogram; a = 0 is the
    complete-dependence limit and a -> inf independence."""
    z1, z2 = _check_z(z1, z2)
    a = np.asarray(a, dtype=float)
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise InvalidParameterError("a must be finite and >= 0")
    if np.all(a == 0):
        out = 1.0 / np.minimum(z1, z2) * np.ones_like(a)
        return out if out.ndim else float(out)
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.log(z2 / z1)
        q1 = 0.5 * a + lr / a
        q2 = a - q1
        out = np.where(a == 0, 1.0 / np.minimum(z1, z2), ndtr(q1) / z1 + ndtr(q2) / z2)
    return out if out.ndim else float(out)


def br_V_derivs(z1, z2, a):
    """(V, V1, V2, V12) for the log-Gaussian family; requires a > 0."""
    z1, z2 = _check_z(z1, z2)
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise InvalidParameterError("derivatives require a > 0")
    lr = np.log(z2 / z1)
    q1 = 0.5 * a + lr / a
    q2 = a - q1
    phi1 = np.exp(-0.5 * q1 * q1) / math.sqrt(2.0 * math.pi)
    v = ndtr(q1) / z1 + ndtr(q2) / z2
    v1 = -ndtr(q1) / (z1 * z1)
    v2 = -ndtr(q2) / (z2 * z2)
    v12 = -phi1 / (a * z1 * z1 * z2)
    return v, v1, v2, v12


def extremal_coefficient_model(h, dep: DependenceModel):
    """Model extremal coefficient theta(h) = z * V(z, z), in [1, 2]."""
    h = _check_distance(h)
    if dep.kind == SCHLATHER:
        rho = powered_exp_corr(h, dep.tau, dep.eta)
        out = 1.0 + np.sqrt((1.0 - np.asarray(rho)) / 2.0)
    else:
        a = np.sqrt(np.asarray(br_variogram(h, dep.tau, dep.eta)))
        out = 2.0 * ndtr(a / 2.0)
    out = np.asarray(out)
    return out if out.ndim else float(out)


class EmpiricalExtremalCoefficient(NamedTuple):
    theta: float
    clipped: bool


def extremal_coefficient_empirical(data: Dataset, pair) -> EmpiricalExtremalCoefficient:
    """Madogram estimate of the pairwise extremal coefficient.

    Uses the first-order variation of the empirical-CDF-transformed series:
    ``nu = mean |F1(x1) - F2(x2)| / 2`` and
    ``theta = (1 + 2 nu) / (1 - 2 nu)``, clipped to [1, 2] with the clip
    reported. ``pair`` is a pair of site ids or column indices.

    Raises
    ------
    InsufficientDataError
        With fewer than 5 years of paired data.
    """
    i, j = (_site_index(data, s) for s in pair)
    n = data.n_years
    if n < 5:
        raise InsufficientDataError(f"need >= 5 years for the madogram, got {n}")
    f1 = _ecdf_ranks(data.values[:, i])
    f2 = _ecdf_ranks(data.values[:, j])
    nu = 0.5 * np.mean(np.abs(f1 - f2))
    if nu >= 0.5:
        return EmpiricalExtremalCoefficient(theta=2.0, clipped=True)
    theta = (1.0 + 2.0 * nu) / (1.0 - 2.0 * nu)
    clipped = theta < 1.0 or theta > 2.0
    return EmpiricalExtremalCoefficient(theta=float(np.clip(theta, 1.0, 2.0)), clipped=clipped)


def _site_index(data: Dataset, site) -> int:
    if isinstance(site, int):
        return site
    if isinstance(site, Site):
        site = site.id
    try:
        return data.site_ids.index(site)
    except ValueError:
        raise DomainError(f"site '{site}' not in dataset") from None


def _ecdf_ranks(x: np.ndarray) -> np.ndarray:
    n = x.size
    r = np.empty(n)
    r[np.argsort(x, kind="stable")] = np.arange(1, n + 1)
    return r / (n + 1.0)


# ---------------------------------------------------------------------------
# marginal transform

def frechet_transform(x, p: GevParams):
    """Map data-scale x to unit-Frechet scale: the CDF identity is
    ``gev_cdf(x, p) = exp(-1/z)``. Raises outside the support."""
    x = np.asarray(x, dtype=float)
    s = (x - p.mu) / p.sigma
    if p.is_gumbel:
        out = np.exp(s)
    else:
        u = 1.0 + p.xi * s
        if np.any(u <= 0):
            raise DomainError("x outside the GEV support")
        out = np.exp(np.log1p(p.xi * s) / p.xi)
    return out if out.ndim else float(out)


def frechet_log_jacobian(x, p: GevParams):
    """log dz/dx of :func:`frechet_transform` (z^(1-xi) / sigma)."""
    x = np.asarray(x, dtype=float)
    s = (x - p.mu) / p.sigma
    if p.is_gumbel:
        logz = s
    else:
        u = 1.0 + p.xi * s
        if np.any(u <= 0):
            raise DomainError("x outside the GEV support")
        logz = np.log1p(p.xi * s) / p.xi
    out = (1.0 - p.xi) * logz - np.log(p.sigma)
    return out if out.ndim else float(out)


def pairwise_bivariate_logdensity(x1: float, x2: float, p1: GevParams, p2: GevParams,
                                  dep: DependenceModel, h: float) -> float:
    """Log of the bivariate density of one site pair at one year.

    Composes the marginal transforms with the exponent-function derivatives:
    ``log f = log(V1*V2 - V12) - V + log J1 + log J2``.

    Raises
    ------
    DomainError
        If an observation lies outside its marginal support.
    NumericFailureError
        If the density argument V1*V2 - V12 is not strictly positive; the
        value is never clamped.
    """
    z1 = frechet_transform(x1, p1)
    z2 = frechet_transform(x2, p2)
    d = float(dependence_pair_values(dep, h))
    if dep.kind == SCHLATHER:
        v, v1, v2, v12 = schlather_V_derivs(z1, z2, d)
    else:
        v, v1, v2, v12 = br_V_derivs(z1, z2, d)
    arg = v1 * v2 - v12
    if not np.isfinite(arg) or arg <= 0:
        raise NumericFailureError(
            f"nonpositive bivariate density argument {arg:.3g} at z=({z1:.4g}, {z2:.4g})")
    return float(np.log(arg) - v
                 + frechet_log_jacobian(x1, p1) + frechet_log_jacobian(x2, p2))


# ---------------------------------------------------------------------------
# pairwise composite likelihood

class PairwiseWorkspace:
    """Precomputed geometry and design matrices for repeated likelihood
    evaluation on one dataset with one trend term set and characterization.

    ``loglik_by_year(mu_coefs, sigma_coefs, xi, tau, eta)`` evaluates the
    composite log likelihood per year without any parameter-box validation,
    which lets numerical differentiation probe slightly outside the box;
    it returns ``(values, status)`` where status is the kernel status
    triple. All summation orders are fixed, so results are reproducible
    to the bit across runs and caller-level thread counts.
    """

    def __init__(self, data: Dataset, mu_names: Sequence[str],
                 sigma_names: Sequence[str], kind: str):
        if data.n_sites < 2:
            raise InsufficientDataError("pairwise likelihood needs >= 2 sites")
        if data.n_years < 1:
            raise InsufficientDataError("pairwise likelihood needs >= 1 year")
        if kind not in (SCHLATHER, BROWN_RESNICK):
            raise InvalidParameterError(f"unknown characterization '{kind}'")
        self.data = data
        self.kind = kind
        self.kind_code = (_kernels.KIND_SCHLATHER if kind == SCHLATHER
                          else _kernels.KIND_BROWN_RESNICK)
        self.values = np.ascontiguousarray(data.values, dtype=float)
        self.X_mu = trend_design_matrix(data.sites, mu_names)
        self.X_sigma = trend_design_matrix(data.sites, sigma_names)
        self.pair_i, self.pair_j, self.pair_h = site_distances(data.sites)
        if np.any(self.pair_h == 0):
            raise InvalidParameterError("dataset contains coincident sites")
        self.mu_names = tuple(mu_names)
        self.sigma_names = tuple(sigma_names)

    @property
    def n_params(self) -> int:
        return self.X_mu.shape[1] + self.X_sigma.shape[1] + 3

    def split_vector(self, psi: np.ndarray):
        pm = self.X_mu.shape[1]
        ps = self.X_sigma.shape[1]
        return psi[:pm], psi[pm:pm + ps], psi[pm + ps], psi[pm + ps + 1], psi[pm + ps + 2]

    def param_names(self) -> tuple[str, ...]:
        return (*(f"mu:{n}" for n in self.mu_names),
                *(f"sigma:{n}" for n in self.sigma_names), "xi", "tau", "eta")

    def model_to_vector(self, model: MspModel) -> np.ndarray:
        if (model.trend.mu_names != self.mu_names
                or model.trend.sigma_names != self.sigma_names):
            raise InvalidParameterError("model term set does not match workspace")
        return np.concatenate([
            model.trend.mu_coefs, model.trend.sigma_coefs,
            [model.trend.xi_const, model.dep.tau, model.dep.eta]])

    def vector_to_model(self, psi: np.ndarray) -> MspModel:
        mu_c, sigma_c, xi, tau, eta = self.split_vector(psi)
        trend = TrendSurface.from_coefs(self.mu_names, mu_c, self.sigma_names, sigma_c, xi)
        return MspModel(trend=trend, dep=DependenceModel(self.kind, float(tau), float(eta)))

    def loglik_by_year(self, mu_coefs, sigma_coefs, xi, tau, eta):
        mu_site = self.X_mu @ np.asarray(mu_coefs, dtype=float)
        sigma_site = self.X_sigma @ np.asarray(sigma_coefs, dtype=float)
        if np.any(sigma_site <= 0) or not np.all(np.isfinite(sigma_site)):
            bad = int(np.argmin(sigma_site))
            return None, (3, -1, bad)  # status 3: nonpositive sigma surface
        if not (tau > 0 and eta > 0 and np.isfinite(tau) and np.isfinite(eta)):
            return None, (4, -1, -1)  # status 4: dependence box violation
        if self.kind == SCHLATHER:
            dep = np.exp(-((self.pair_h / tau) ** eta))
        else:
            dep = np.sqrt(2.0 * (self.pair_h / tau) ** eta)
        xi_site = np.full(self.values.shape[1], float(xi))
        out, status = _kernels.pair_loglik_by_year(
            self.values, mu_site, sigma_site, xi_site,
            self.pair_i, self.pair_j, dep, self.kind_code)
        if status[0] != 0:
            return None, status
        return out, status

    def loglik_by_year_vec(self, psi: np.ndarray):
        mu_c, sigma_c, xi, tau, eta = self.split_vector(np.asarray(psi, dtype=float))
        return self.loglik_by_year(mu_c, sigma_c, xi, tau, eta)

    def nll_vec_or_inf(self, psi: np.ndarray) -> float:
        """Total negative log likelihood, +inf when the point is infeasible
        (support violation, bad surface, or numeric failure)."""
        out, _ = self.loglik_by_year_vec(psi)
        if out is None:
            return math.inf
        return float(-np.sum(out))

    def raise_for_status(self, status) -> None:
        code, a, b = status
        if code == 0:
            return
        if code == 1:
            year = self.data.years[a] if 0 <= a < self.data.n_years else a
            site = self.data.site_ids[b] if 0 <= b < self.data.n_sites else b
            raise DomainError(
                f"observation outside model-implied support at year {year}, site {site}")
        if code == 2:
            year = self.data.years[a] if 0 <= a < self.data.n_years else a
            pair = (self.data.site_ids[self.pair_i[b]], self.data.site_ids[self.pair_j[b]])
            raise NumericFailureError(
                f"non-finite pairwise likelihood term at year {year}, pair {pair}",
                year=year, pair=pair)
        if code == 3:
            site = self.data.site_ids[b] if 0 <= b < self.data.n_sites else b
            raise InvalidParameterError(
                f"trend surface gives sigma <= 0 at site {site}")
        raise InvalidParameterError("dependence parameters outside their box")


def _workspace_for_model(data: Dataset, model: MspModel) -> PairwiseWorkspace:
    return PairwiseWorkspace(data, model.trend.mu_names, model.trend.sigma_names,
                             model.dep.kind)


def pairwise_nll_by_year(data: Dataset, model: MspModel) -> np.ndarray:
    """Per-year negative log pairwise likelihood (sums to pairwise_nll)."""
    ws = _workspace_for_model(data, model)
    out, status = ws.loglik_by_year_vec(ws.model_to_vector(model))
    ws.raise_for_status(status)
    return -out


def pairwise_nll(data: Dataset, model: MspModel) -> float:
    """Negative log pairwise likelihood over all years and site pairs.

    Deterministic and finite; domain or numeric failures are raised with
    the offending (year, pair) attached rather than clamped.
    """
    return float(np.sum(pairwise_nll_by_year(data, model)))


# ---------------------------------------------------------------------------
# information criterion

def tic_value(nll: float, J: np.ndarray, H: np.ndarray) -> float:
    """2*nll + 2*tr(J H^-1); lower is better."""
    try:
        trace = float(np.trace(np.linalg.solve(H, J)))
    except np.linalg.LinAlgError as e:
        raise SingularInformationError(
            f"singular Hessian in information criterion: {e}",
            condition_number=math.inf) from e
    if not np.isfinite(trace):
        raise SingularInformationError(
            "non-finite penalty trace in information criterion",
            condition_number=float(np.linalg.cond(H)))
    return 2.0 * float(nll) + 2.0 * trace


def information_matrices(data: Dataset, model: MspModel, step_scale: float = 1e-4):
    """Sandwich components at the fitted parameters.

    J is the variability of the total composite score, estimated as the
    sample covariance of per-year score vectors times the number of years
    (central differences, per-coordinate step ``step_scale*max(1,|psi_k|)``);
    H is the numerical Hessian of the total negative log likelihood. Also
    returns the condition number of H.
    """
    ws = _workspace_for_model(data, model)
    psi = ws.model_to_vector(model)
    n = data.n_years
    p = psi.size

    def per_year(v):
        out, status = ws.loglik_by_year_vec(v)
        if out is None:
            ws.raise_for_status(status)
        return out

    scores = np.empty((n, p))
    for k in range(p):
        h = step_scale * max(1.0, abs(psi[k]))
        vp = psi.copy()
        vp[k] += h
        vm = psi.copy()
        vm[k] -= h
        scores[:, k] = (per_year(vp) - per_year(vm)) / (2.0 * h)
    J = np.cov(scores, rowvar=False, ddof=1) * n
    J = np.atleast_2d(J)

    def total_nll(v):
        return float(-np.sum(per_year(v)))

    H, cond = numerical_hessian(total_nll, psi, step_scale=step_scale)
    return J, H, cond


def tic(data: Dataset, model: MspModel, fitted_nll: float | None = None) -> float:
    """Composite-likelihood information criterion at a fitted model.

    The caller is responsible for ``model`` being at a local optimum of
    :func:`pairwise_nll`; the score covariance is otherwise meaningless.
    """
    if fitted_nll is None:
        fitted_nll = pairwise_nll(data, model)
    J, H, _ = information_matrices(data, model)
    return tic_value(fitted_nll, J, H)
