"""Central-difference gradients and Hessians with relative step sizing."""

from __future__ import annotations

import numpy as np

from .errors import NumericFailureError


def _steps(x: np.ndarray, step_scale: float) -> np.ndarray:
    return step_scale * np.maximum(1.0, np.abs(x))


def numerical_gradient(f, x, step_scale: float = 1e-4) -> np.ndarray:
    """Central-difference gradient, per-coordinate step
    ``step_scale * max(1, |x_k|)``.

    Raises NumericFailureError naming the coordinate if an evaluation is
    not finite.
    """
    x = np.asarray(x, dtype=float)
    h = _steps(x, step_scale)
    g = np.empty_like(x)
    for k in range(x.size):
        xp = x.copy()
        xp[k] += h[k]
        xm = x.copy()
        xm[k] -= h[k]
        fp, fm = f(xp), f(xm)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NumericFailureError(
                f"non-finite objective while differentiating coordinate {k}")
        g[k] = (fp - fm) / (2.0 * h[k])
    return g


def numerical_hessian(f, x, step_scale: float = 1e-4):
    """Nested central-difference Hessian, symmetrized by averaging.

    Returns (H, condition_number).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    h = _steps(x, step_scale)
    H = np.empty((n, n))
    f0 = f(x)
    if not np.isfinite(f0):
        raise NumericFailureError("objective not finite at the expansion point")

    def feval(v, k):
        out = f(v)
        if not np.isfinite(out):
            raise NumericFailureError(
                f"non-finite objective while differentiating coordinate {k}")
        return out

    for i in range(n):
        xp = x.copy()
        xp[i] += h[i]
        xm = x.copy()
        xm[i] -= h[i]
        H[i, i] = (feval(xp, i) - 2.0 * f0 + feval(xm, i)) / (h[i] * h[i])
        for j in range(i + 1, n):
            xpp = x.copy()
            xpp[[i, j]] += [h[i], h[j]]
            xpm = x.copy()
            xpm[i] += h[i]
            xpm[j] -= h[j]
            xmp = x.copy()
            xmp[i] -= h[i]
            xmp[j] += h[j]
            xmm = x.copy()
            xmm[[i, j]] -= [h[i], h[j]]
            H[i, j] = H[j, i] = (
                feval(xpp, j) - feval(xpm, j) - feval(xmp, j) + feval(xmm, j)
            ) / (4.0 * h[i] * h[j])
    H = 0.5 * (H + H.T)
    cond = float(np.linalg.cond(H))
    return H, cond
