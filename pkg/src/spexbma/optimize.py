"""Derivative-free fitting of max-stable models.

A restarted Nelder-Mead drives the pairwise likelihood; box constraints are
removed by reparametrization (log for the dependence range and the sigma
intercept, scaled logit for the smoothness in (0, 2]); candidate term sets
for the trend surfaces are compared by the sandwich information criterion.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from .data import Dataset
from .errors import (
    FitFailureError,
    InitializationError,
    InvalidParameterError,
    NumericFailureError,
    SingularInformationError,
)
from .gev import fit_lmoments
from .msp import MspModel, PairwiseWorkspace, information_matrices, tic_value
from .numdiff import numerical_gradient, numerical_hessian  # noqa: F401  (re-export)

__all__ = [
    "OptimizerConfig",
    "SimplexResult",
    "FitReport",
    "TermSetFit",
    "simplex_minimize",
    "numerical_gradient",
    "numerical_hessian",
    "fit_msp",
]


@dataclass(frozen=True)
class OptimizerConfig:
    """Budget and tolerances for one simplex run."""

    max_evals: int = 4000
    x_tol: float = 1e-6
    f_tol: float = 1e-8
    restarts: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.x_tol <= 0 or self.f_tol <= 0:
            raise InvalidParameterError("tolerances must be > 0")
        if self.restarts < 1:
            raise InvalidParameterError("need at least 1 restart (the unjittered start)")


@dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    fun: float
    evals: int
    converged: bool


def _jitter_start(x0: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # +-10% multiplicative jitter; additive for entries at exactly zero
    u = rng.uniform(-0.1, 0.1, size=x0.shape)
    return np.where(x0 != 0.0, x0 * (1.0 + u), u)


def simplex_minimize(f, x0, cfg: OptimizerConfig) -> SimplexResult:
    """Nelder-Mead descent with restarts; deterministic given cfg.seed.

    Non-finite objective values are treated as +inf so the simplex backs
    away from infeasible regions. The best point over all restarts is
    returned and is never worse than f(x0).

    Raises
    ------
    InitializationError
        If the objective is non-finite at x0 and at every jittered start.
    """
    x0 = np.asarray(x0, dtype=float)
    if cfg.max_evals < x0.size + 2:
        raise InvalidParameterError(
            f"max_evals={cfg.max_evals} below simplex size {x0.size + 2}")
    evals = 0

    def guarded(x):
        nonlocal evals
        evals += 1
        v = f(x)
        return float(v) if np.isfinite(v) else math.inf

    rng = np.random.default_rng(cfg.seed)
    starts = [x0]
    for _ in range(cfg.restarts - 1):
        starts.append(_jitter_start(x0, rng))
    f_start = guarded(starts[0])
    if not np.isfinite(f_start):
        # recover a usable start when x0 itself is infeasible
        for _ in range(20):
            cand = _jitter_start(x0, rng)
            f_cand = guarded(cand)
            if np.isfinite(f_cand):
                starts[0], f_start = cand, f_cand
                break
        else:
            raise InitializationError("objective not finite at x0 or any jittered start")

    best_x, best_f, best_conv = starts[0], f_start, False
    budget = max(cfg.max_evals // cfg.restarts, x0.size + 2)
    for start in starts:
        res = minimize(guarded, start, method="Nelder-Mead",
                       options={"maxfev": budget, "xatol": cfg.x_tol,
                                "fatol": cfg.f_tol, "adaptive": x0.size > 4})
        spread = float(np.max(res.final_simplex[1]) - np.min(res.final_simplex[1]))
        converged = bool(res.success) and spread < max(cfg.f_tol, 1e-12)
        if res.fun <= best_f:
            best_x, best_f, best_conv = np.asarray(res.x), float(res.fun), converged
    return SimplexResult(x=best_x, fun=best_f, evals=evals, converged=best_conv)


# ---------------------------------------------------------------------------
# parameter transforms for the max-stable fit

class FitTransform:
    """Bijection between model parameters and the unconstrained scale.

    tau and the sigma intercept go through log, eta through a logit scaled
    to (0, 2); everything else is identity. Positivity of the whole sigma
    surface is enforced by the objective (+inf), not the transform.
    """

    def __init__(self, ws: PairwiseWorkspace):
        self.ws = ws
        n_mu = ws.X_mu.shape[1]
        n_sigma = ws.X_sigma.shape[1]
        self.n = n_mu + n_sigma + 3
        self.idx_tau = self.n - 2
        self.idx_eta = self.n - 1
        self.idx_sigma0 = (n_mu + ws.sigma_names.index("1")
                           if "1" in ws.sigma_names else None)

    def to_unconstrained(self, psi: np.ndarray) -> np.ndarray:
        y = np.array(psi, dtype=float)
        if self.idx_sigma0 is not None:
            if y[self.idx_sigma0] <= 0:
                raise InvalidParameterError("sigma intercept must be > 0")
            y[self.idx_sigma0] = np.log(y[self.idx_sigma0])
        y[self.idx_tau] = np.log(y[self.idx_tau])
        y[self.idx_eta] = logit(y[self.idx_eta] / 2.0)
        return y

    def to_params(self, y: np.ndarray) -> np.ndarray:
        psi = np.array(y, dtype=float)
        if self.idx_sigma0 is not None:
            psi[self.idx_sigma0] = np.exp(psi[self.idx_sigma0])
        psi[self.idx_tau] = np.exp(psi[self.idx_tau])
        psi[self.idx_eta] = 2.0 * expit(psi[self.idx_eta])
        return psi

    def objective(self, y: np.ndarray) -> float:
        return self.ws.nll_vec_or_inf(self.to_params(y))


# ---------------------------------------------------------------------------
# initialization from per-site marginal fits

def _initial_vector(ws: PairwiseWorkspace) -> np.ndarray:
    data = ws.data
    mus, sigmas, xis, rows = [], [], [], []
    for j in range(data.n_sites):
        try:
            p = fit_lmoments(data.values[:, j])
        except Exception:
            continue
        mus.append(p.mu)
        sigmas.append(p.sigma)
        xis.append(p.xi)
        rows.append(j)
    if len(rows) < 2:
        raise FitFailureError("per-site initialization failed at all but one site")
    Xm = ws.X_mu[rows]
    Xs = ws.X_sigma[rows]
    mu_c = np.linalg.lstsq(Xm, np.array(mus), rcond=None)[0]
    sigma_c = np.linalg.lstsq(Xs, np.array(sigmas), rcond=None)[0]
    # keep the implied sigma surface positive at every site: shrink the
    # non-intercept terms toward the mean-sigma intercept until it is
    if "1" in ws.sigma_names:
        k0 = ws.sigma_names.index("1")
        if sigma_c[k0] <= 0:
            sigma_c[k0] = max(float(np.mean(sigmas)), 1e-3)
        for _ in range(40):
            if np.all(ws.X_sigma @ sigma_c > 0):
                break
            for k in range(sigma_c.size):
                if k != k0:
                    sigma_c[k] *= 0.5
        else:
            sigma_c = np.zeros_like(sigma_c)
            sigma_c[k0] = max(float(np.mean(sigmas)), 1e-3)
    xi0 = float(np.clip(np.median(xis), -0.45, 0.45))
    tau0 = float(np.median(ws.pair_h))
    return np.concatenate([mu_c, sigma_c, [xi0, tau0, 1.0]])


@dataclass(frozen=True)
class TermSetFit:
    """One row of the term-set comparison table."""

    mu_names: tuple[str, ...]
    sigma_names: tuple[str, ...]
    nll: float
    tic: float
    evals: int
    converged: bool
    error: str | None = None


@dataclass(frozen=True)
class FitReport:
    """Best-by-TIC fit plus the full per-term-set comparison."""

    model: MspModel
    nll: float
    tic: float
    evals: int
    converged: bool
    condition_number: float
    tic_table: tuple[TermSetFit, ...] = field(default_factory=tuple)


def _fit_one(ws: PairwiseWorkspace, cfg: OptimizerConfig, start: np.ndarray | None,
             compute_tic: bool):
    tr = FitTransform(ws)
    psi0 = _initial_vector(ws) if start is None else np.asarray(start, dtype=float)
    y0 = tr.to_unconstrained(psi0)
    res = simplex_minimize(tr.objective, y0, cfg)
    psi_hat = tr.to_params(res.x)
    model = ws.vector_to_model(psi_hat)
    nll = float(res.fun)
    # convergence declaration: simplex tolerance met AND small gradient on
    # the transformed scale
    converged = res.converged
    if converged:
        try:
            g = numerical_gradient(tr.objective, res.x, step_scale=1e-5)
            converged = bool(np.linalg.norm(g) < 1e-3 * max(1.0, abs(nll)))
        except NumericFailureError:
            converged = False
    tic_val = math.nan
    cond = math.nan
    if compute_tic:
        J, H, cond = information_matrices(ws.data, model)
        tic_val = tic_value(nll, J, H)
    return model, nll, tic_val, cond, res.evals, converged


def _term_set_names(term_set) -> tuple[tuple[str, ...], tuple[str, ...]]:
    mu_names, sigma_names = term_set
    return tuple(mu_names), tuple(sigma_names)


def fit_msp(data: Dataset, characterization: str, term_sets, cfg: OptimizerConfig,
            start: np.ndarray | None = None, compute_tic: bool = True) -> FitReport:
    """Fit a max-stable model, selecting among trend term sets by TIC.

    Parameters
    ----------
    data : Dataset
        Annual maxima with normalized site coordinates.
    characterization : str
        ``"schlather"`` or ``"brown_resnick"``.
    term_sets : sequence
        Each entry is a (mu_term_names, sigma_term_names) pair, e.g. the
        values of ``msp.TERM_CATALOG``.
    cfg : OptimizerConfig
    start : array, optional
        Warm-start parameter vector (original scale) matching the single
        term set; only valid when one term set is given.
    compute_tic : bool
        Skip the sandwich matrices (bootstrap replicates do) when False;
        requires a single term set.

    Returns
    -------
    FitReport
        Minimum-TIC fit plus the per-term-set table.
    """
    term_sets = list(term_sets)
    if not term_sets:
        raise InvalidParameterError("need at least one term set")
    if (start is not None or not compute_tic) and len(term_sets) > 1:
        raise InvalidParameterError(
            "warm starts / tic-free fitting require a single term set")
    if data.n_sites < 3:
        warnings.warn(f"only {data.n_sites} sites; trend surfaces are weakly identified",
                      stacklevel=2)
    if data.n_years < 10:
        warnings.warn(f"only {data.n_years} years; fits may be unstable", stacklevel=2)

    rows: list[TermSetFit] = []
    fits = []
    for ts in term_sets:
        mu_names, sigma_names = _term_set_names(ts)
        try:
            ws = PairwiseWorkspace(data, mu_names, sigma_names, characterization)
            model, nll, tic_val, cond, evals, converged = _fit_one(
                ws, cfg, start, compute_tic)
        except (FitFailureError, InitializationError, SingularInformationError,
                NumericFailureError, np.linalg.LinAlgError) as e:
            rows.append(TermSetFit(mu_names, sigma_names, math.nan, math.nan, 0,
                                   False, error=f"{type(e).__name__}: {e}"))
            fits.append(None)
            continue
        rows.append(TermSetFit(mu_names, sigma_names, nll, tic_val, evals, converged))
        fits.append((model, nll, tic_val, cond, evals, converged))
    ok = [i for i, f in enumerate(fits) if f is not None]
    if not ok:
        causes = "; ".join(r.error or "?" for r in rows)
        raise FitFailureError(f"all term sets failed: {causes}")
    if compute_tic:
        best_i = min(ok, key=lambda i: (fits[i][2], i))  # ties by catalog order
    else:
        best_i = min(ok, key=lambda i: (fits[i][1], i))
    model, nll, tic_val, cond, evals, converged = fits[best_i]
    return FitReport(model=model, nll=nll, tic=tic_val,
                     evals=sum(r.evals for r in rows), converged=converged,
                     condition_number=cond, tic_table=tuple(rows))
