"""Least-squares fits of the two empirical laws used for disorder data.

``quartic_even``: ``a + b x^2 + c x^4``, solved exactly by linear least squares.
``shifted_exponential``: ``b + c exp(-d (x - x0))`` with ``x0 = 0.01``; seeded
from a log-linear fit and refined by Levenberg-Marquardt.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import SingularJacobian

EXP_SHIFT = 0.01
MIN_POINTS = 5


@dataclass(frozen=True)
class FitResult:
    model: str
    params: dict
    residual: float
    param_rel_err: dict

    def __call__(self, x):
        return evaluate(self.model, self.params, x)


def evaluate(model: str, params: dict, x):
    x = np.asarray(x, dtype=float)
    if model == "quartic_even":
        return params["a"] + params["b"] * x**2 + params["c"] * x**4
    if model == "shifted_exponential":
        return params["b"] + params["c"] * np.exp(-params["d"] * (x - EXP_SHIFT))
    raise ValueError(f"unknown model {model!r}")


def _rel_err(jac, resid, p):
    dof = max(resid.size - p.size, 1)
    s2 = float(resid @ resid) / dof
    jtj = jac.T @ jac
    if np.linalg.matrix_rank(jtj) < p.size:
        raise SingularJacobian("Jacobian is rank deficient at the fitted parameters")
    cov = s2 * np.linalg.inv(jtj)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.sqrt(np.abs(np.diag(cov))) / np.abs(p)


def _fit_quartic(x, y):
    a = np.stack([np.ones_like(x), x**2, x**4], axis=1)
    if np.linalg.matrix_rank(a) < 3:
        raise SingularJacobian("need at least three distinct |x| values for the quartic")
    p, *_ = np.linalg.lstsq(a, y, rcond=None)
    r = a @ p - y
    return p, r, _rel_err(a, r, p)


def _exp_seed(x, y):
    span = max(np.ptp(y), 1e-12)
    b0 = y.min() - 0.05 * span
    slope, icpt = np.polyfit(x - EXP_SHIFT, np.log(y - b0), 1)
    return np.array([b0, np.exp(icpt), max(-slope, 1e-6)])


def _fit_exponential(x, y):
    def resid(p):
        return p[0] + p[1] * np.exp(-p[2] * (x - EXP_SHIFT)) - y

    sol = least_squares(resid, _exp_seed(x, y), method="lm", xtol=1e-14, ftol=1e-14, gtol=1e-14)
    return sol.x, sol.fun, _rel_err(sol.jac, sol.fun, sol.x)


_MODELS = {
    "quartic_even": (_fit_quartic, ("a", "b", "c")),
    "shifted_exponential": (_fit_exponential, ("b", "c", "d")),
}


def fit_curve(model: str, x, y) -> FitResult:
    """Deterministic fit of ``model`` to ``(x, y)`` (at least five points)."""
    if model not in _MODELS:
        raise ValueError(f"unknown model {model!r}; choose from {sorted(_MODELS)}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D arrays of equal length")
    if x.size < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} points, got {x.size}")
    if np.ptp(x) == 0:
        raise SingularJacobian("all abscissae coincide")
    func, names = _MODELS[model]
    p, r, rel = func(x, y)
    return FitResult(
        model,
        {k: float(v) for k, v in zip(names, p)},
        float(r @ r),
        {k: float(v) for k, v in zip(names, rel)},
    )


def quartic_crossing(fit: FitResult, level: float = 2.0, bracket=(0.0, 3.0)) -> float:
    """Smallest ``x`` in ``bracket`` where the fitted quartic equals ``level``.

    Solved as a quadratic in ``x^2``; ``nan`` when there is no crossing.
    """
    a, b, c = (fit.params[k] for k in ("a", "b", "c"))
    roots = np.roots([c, b, a - level]) if c != 0 else np.roots([b, a - level])
    xs = [np.sqrt(r.real) for r in np.atleast_1d(roots) if abs(r.imag) < 1e-12 and r.real >= 0]
    xs = sorted(x for x in xs if bracket[0] <= x <= bracket[1])
    return float(xs[0]) if xs else float("nan")
