"""Levenberg-Marquardt fit of ``f(delta) = 1 - a sin^2(b delta/2 - c)``.

The model is invariant under ``(b, c) -> (-b, -c)`` and ``c -> c + pi``;
fitted parameters are reported with ``b >= 0`` and ``c`` in ``(-pi/2, pi/2]``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

MAX_ITER = 500
LAMBDA0 = 1e-3
GRAD_TOL = 1e-10
REL_TOL = 1e-12
# Extra starting frequencies tried after the default (1 - min p, 1, 0).
_B_STARTS = (0.5, 0.75, 1.5, 2.0)


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class FitParams:
    a: float
    b: float
    c: float
    stderr_a: float = math.nan
    stderr_b: float = math.nan
    stderr_c: float = math.nan
    residual_norm: float = math.nan
    gradient_norm: float = math.nan
    converged: bool = True
    iterations: int = 0
    identifiable: bool = True
    message: str = ""
    history: tuple = field(default=(), repr=False, compare=False)

    @property
    def values(self) -> tuple[float, float, float]:
        return self.a, self.b, self.c

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("history")
        return d


def model_eval(params, delta):
    """``1 - a sin^2(b delta/2 - c)``; ``params`` is a :class:`FitParams` or ``(a, b, c)``."""
    a, b, c = params.values if isinstance(params, FitParams) else params
    return 1.0 - a * np.sin(0.5 * b * np.asarray(delta, dtype=float) - c) ** 2


def model_jacobian(params, delta) -> np.ndarray:
    """Columns ``df/da, df/db, df/dc``."""
    a, b, c = params.values if isinstance(params, FitParams) else params
    d = np.asarray(delta, dtype=float)
    theta = 0.5 * b * d - c
    s2 = np.sin(2 * theta)
    return np.column_stack([-np.sin(theta) ** 2, -0.5 * a * s2 * d, a * s2])


def weights_from_std(std) -> Optional[np.ndarray]:
    """``1/sigma^2`` weights; zero deviations are floored at the smallest positive one.

    Returns ``None`` (uniform weighting) when every deviation is zero.
    """
    s = np.asarray(std, dtype=float)
    pos = s[s > 0]
    if pos.size == 0:
        return None
    return 1.0 / np.maximum(s, pos.min()) ** 2


def canonicalize(a: float, b: float, c: float) -> tuple[float, float, float]:
    if b < 0:
        b, c = -b, -c
    c = c - math.pi * math.ceil(c / math.pi - 0.5)
    if c <= -math.pi / 2:
        c += math.pi
    return a, b, c


def _lm(delta, p, w, x0, max_iter=MAX_ITER):
    x = np.array(x0, dtype=float)
    lam = LAMBDA0
    r = p - model_eval(x, delta)
    sse = float(np.sum(w * r * r))
    history = [sse]
    converged = False
    grad_norm = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        J = model_jacobian(x, delta)
        A = J.T @ (w[:, None] * J)
        g = J.T @ (w * r)
        grad_norm = float(np.linalg.norm(g))
        if grad_norm <= GRAD_TOL:
            converged = True
            break
        diag = np.maximum(np.diag(A), 1e-12 * max(np.max(np.diag(A)), 1e-300))
        accepted = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), g)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(A + lam * np.diag(diag), g, rcond=None)[0]
            x_new = x + step
            r_new = p - model_eval(x_new, delta)
            sse_new = float(np.sum(w * r_new * r_new))
            if sse_new <= sse:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            # no descent direction at any damping: stationary to working precision
            converged = grad_norm <= GRAD_TOL
            break
        rel = (sse - sse_new) / sse if sse > 0 else 0.0
        x, r, sse = x_new, r_new, sse_new
        history.append(sse)
        lam = max(lam / 10.0, 1e-12)
        if rel < REL_TOL:
            converged = True
            J = model_jacobian(x, delta)
            grad_norm = float(np.linalg.norm(J.T @ (w * r)))
            break
    return x, sse, grad_norm, converged, it, tuple(history)


def _stderrs(x, delta, p, w, n_points):
    a = x[0]
    r = p - model_eval(x, delta)
    dof = max(n_points - 3, 1)
    s2 = float(np.sum(w * r * r)) / dof
    J = model_jacobian(x, delta)
    if abs(a) < 1e-9:
        ja = J[:, 0]
        denom = float(np.sum(w * ja * ja))
        se_a = math.sqrt(s2 / denom) if denom > 0 else math.inf
        return (se_a, math.inf, math.inf), False
    A = J.T @ (w[:, None] * J)
    if np.linalg.cond(A) > 1e14:
        return (math.inf, math.inf, math.inf), False
    cov = np.linalg.inv(A) * s2
    return tuple(float(math.sqrt(max(v, 0.0))) for v in np.diag(cov)), True


def fit_success_curve(deltas: Sequence[float], probabilities: Sequence[float],
                      weights: Optional[Sequence[float]] = None) -> FitParams:
    """Weighted least-squares fit of the success-probability model.

    ``weights`` are per-point ``w_i`` in ``sum w_i (p_i - f_i)^2``; they are
    rescaled to unit mean, which leaves the optimum unchanged.
    """
    d = np.asarray(deltas, dtype=float).reshape(-1)
    p = np.asarray(probabilities, dtype=float).reshape(-1)
    if d.shape != p.shape:
        raise FitError("deltas and probabilities differ in length")
    if d.size < 4:
        raise FitError(f"need at least 4 points, got {d.size}")
    if d.max() - d.min() < 1.0:
        raise FitError("delta range must span at least 1 radian")
    if weights is None:
        w = np.ones_like(d)
    else:
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.shape != d.shape or np.any(w < 0) or not np.all(np.isfinite(w)) or w.sum() == 0:
            raise FitError("weights must be finite, non-negative, and not all zero")
        w = w / w.mean()

    a0 = 1.0 - float(p.min())
    starts = [(a0, 1.0, 0.0)] + [(a0, b0, 0.0) for b0 in _B_STARTS]
    best = None
    for x0 in starts:
        res = _lm(d, p, w, x0)
        if best is None or res[1] < best[1] * (1 - 1e-12):
            best = res
        if best[3] and best[1] <= 1e-20 * max(1.0, float(np.sum(w * p * p))):
            break  # exact fit found; later starts cannot improve
    x, sse, grad_norm, converged, iters, history = best
    a, b, c = canonicalize(*x)
    (se_a, se_b, se_c), identifiable = _stderrs(np.array([a, b, c]), d, p, w, d.size)
    msg = "" if converged else f"no convergence after {MAX_ITER} iterations (gradient {grad_norm:.3e})"
    if not identifiable:
        msg = (msg + "; " if msg else "") + "parameters not identifiable from data"
    return FitParams(
        a=float(a), b=float(b), c=float(c),
        stderr_a=se_a, stderr_b=se_b, stderr_c=se_c,
        residual_norm=math.sqrt(sse), gradient_norm=grad_norm,
        converged=bool(converged), iterations=int(iters),
        identifiable=identifiable, message=msg, history=history,
    )
