"""Weighted log-linear fits of failure probabilities against system size."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sampler import EstimateReport

MODELS = {"linear": 1, "quadratic": 2}


def log_variance(r: EstimateReport) -> float:
    """Delta-method variance of ``log(point)``."""
    return (1.0 - r.point) / (r.point * r.trials)


def usable(r: EstimateReport, exact: bool = False) -> bool:
    if exact:
        return 0.0 < r.point < 1.0
    return r.resolvable() and r.successes > 0


def _wls(x: np.ndarray, y: np.ndarray, w: np.ndarray):
    X = np.column_stack([np.ones_like(x), x])
    sw = np.sqrt(w)
    beta, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    resid = y - X @ beta
    chi2 = float((w * resid ** 2).sum())
    ybar = float((w * y).sum() / w.sum())
    ss_tot = float((w * (y - ybar) ** 2).sum())
    r2 = 1.0 - chi2 / ss_tot if ss_tot > 0 else math.nan
    return float(beta[0]), float(beta[1]), chi2, r2, resid


def information_criterion(chi2: float, m: int, k: int = 2) -> float:
    """Small-sample corrected AIC; plain AIC when the correction is undefined."""
    aic = chi2 + 2 * k
    if m - k - 1 > 0:
        return aic + 2 * k * (k + 1) / (m - k - 1)
    return aic


@dataclass
class RateFit:
    """``log P = intercept - slope * n^power`` over the usable points."""

    model: str
    status: str
    slope: float = math.nan
    intercept: float = math.nan
    r2: float = math.nan
    ic: float = math.nan
    chi2: float = math.nan
    used: list = field(default_factory=list)
    points: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"model": self.model, "status": self.status, "slope": self.slope,
                "intercept": self.intercept, "r2": self.r2, "ic": self.ic, "chi2": self.chi2,
                "used_n": list(self.used)}


def fit_rate(ns, reports, model: str, exact: bool = False) -> RateFit:
    power = MODELS[model]
    pts = list(zip(ns, reports))
    good = [(n, r) for n, r in pts if usable(r, exact)]
    if len(good) < 3:
        return RateFit(model, "insufficient", used=[n for n, _ in good], points=pts)
    x = np.array([float(n) ** power for n, _ in good])
    y = np.array([math.log(r.point) for _, r in good])
    if exact:
        w = np.ones_like(x)
    else:
        w = np.array([1.0 / log_variance(r) for _, r in good])
    a, b, chi2, r2, _ = _wls(x, y, w)
    return RateFit(model, "ok", -b, a, r2, information_criterion(chi2, len(good)), chi2,
                   [n for n, _ in good], pts)


@dataclass
class RateComparison:
    linear: RateFit
    quadratic: RateFit

    @property
    def winner(self) -> str | None:
        if self.linear.status != "ok" or self.quadratic.status != "ok":
            return None
        return "linear" if self.linear.ic < self.quadratic.ic else "quadratic"

    def as_dict(self) -> dict:
        return {"linear": self.linear.as_dict(), "quadratic": self.quadratic.as_dict(),
                "winner": self.winner}


def compare_scalings(ns, reports, exact: bool = False) -> RateComparison:
    """Fit both scalings on the same usable points and pick the lower information criterion."""
    return RateComparison(fit_rate(ns, reports, "linear", exact), fit_rate(ns, reports, "quadratic", exact))


@dataclass
class DecayFit:
    """``P[x <-> y] ~ lam * exp(-c |x - y|)``."""

    status: str
    c: float = math.nan
    lam: float = math.nan
    r2: float = math.nan
    residuals: list = field(default_factory=list)
    used: list = field(default_factory=list)

    @property
    def decay_confirmed(self) -> bool:
        return self.status == "ok" and self.c > 0

    def as_dict(self) -> dict:
        return {"status": self.status, "c": self.c, "lambda": self.lam, "r2": self.r2,
                "residuals": list(self.residuals), "used_distances": list(self.used),
                "decay_confirmed": self.decay_confirmed}


def fit_decay(distances, reports, exact: bool = False) -> DecayFit:
    pts = list(zip(distances, reports))
    if all(r.point == 1.0 for _, r in pts):
        return DecayFit("no decay")
    good = [(d, r) for d, r in pts if usable(r, exact)]
    if not good:
        return DecayFit("unresolvable at this sample size")
    if len(good) < 2:
        return DecayFit("insufficient", used=[d for d, _ in good])
    x = np.array([float(d) for d, _ in good])
    y = np.array([math.log(r.point) for _, r in good])
    w = np.ones_like(x) if exact else np.array([1.0 / log_variance(r) for _, r in good])
    a, b, _, r2, resid = _wls(x, y, w)
    return DecayFit("ok", -b, math.exp(a), r2, [float(v) for v in resid], [d for d, _ in good])


@dataclass
class LineFit:
    slope: float
    intercept: float
    r2: float


def fit_line(x, y) -> LineFit:
    """Unweighted least squares."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a, b, _, r2, _ = _wls(x, y, np.ones_like(x))
    return LineFit(b, a, r2)
