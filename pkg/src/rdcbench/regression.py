"""
Ordinary least squares for the two-characteristic performance model

    P = a0 + a1 log(IpU) + a2 log(IpI) + a3 log(IpU) log(IpI)

plus the sensitivities dP/dIpU, dP/dIpI and the square-matrix curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import betainc

LogBase = Literal["natural", "base10"]
LOG_BASES = ("natural", "base10")
N_COEF = 4
COEF_NAMES = ("a0", "a1", "a2", "a3")


class RankDeficientError(ValueError):
    def __init__(self, condition: float):
        self.condition = condition
        super().__init__(f"design matrix is rank deficient (condition estimate {condition:.3g})")


def log_fn(base: LogBase):
    if base == "natural":
        return np.log
    if base == "base10":
        return np.log10
    raise ValueError(f"log base must be one of {LOG_BASES}, got {base!r}")


def _ln_base(base: LogBase) -> float:
    return 1.0 if base == "natural" else math.log(10.0)


@dataclass(frozen=True)
class DesignPoint:
    log_ipu: float
    log_ipi: float
    interaction: float
    response: float


def build_design(records: Iterable, log_base: LogBase = "natural") -> list[DesignPoint]:
    """
    ``records`` holds ``(profile, performance)`` pairs; a profile is anything
    with ``ipu`` and ``ipi`` attributes.
    """
    log = log_fn(log_base)
    points = []
    for profile, perf in records:
        ipu, ipi = float(profile.ipu), float(profile.ipi)
        if not (ipu > 0 and ipi > 0):
            raise ValueError(f"IpU and IpI must be positive, got {ipu}, {ipi}")
        if not isinstance(perf, (int, float)) or not math.isfinite(perf):
            raise ValueError(f"performance must be finite, got {perf!r}")
        x1, x2 = float(log(ipu)), float(log(ipi))
        points.append(DesignPoint(x1, x2, x1 * x2, float(perf)))
    if not points:
        raise ValueError("no records to build a design from")
    return points


def t_two_sided_p(t: float, df: float) -> float:
    """Two-sided Student-t tail probability, via the regularized incomplete beta function."""
    if math.isnan(t):
        return float("nan")
    if math.isinf(t):
        return 0.0
    return float(betainc(df / 2.0, 0.5, df / (df + t * t)))


@dataclass(frozen=True)
class RegressionFit:
    a0: float
    a1: float
    a2: float
    a3: float
    std_errors: tuple[float, float, float, float]
    t_stats: tuple[float, float, float, float]
    p_values: tuple[float, float, float, float]
    r2: float
    adjusted_r2: float
    n_points: int
    log_base: LogBase
    rss: float
    tss: float
    condition: float

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        return (self.a0, self.a1, self.a2, self.a3)

    def evaluate_logs(self, log_ipu, log_ipi, interaction=None):
        if interaction is None:
            interaction = np.multiply(log_ipu, log_ipi)
        return self.a0 + self.a1 * np.asarray(log_ipu) + self.a2 * np.asarray(log_ipi) + self.a3 * np.asarray(interaction)

    def predict(self, ipu, ipi):
        log = log_fn(self.log_base)
        return self.evaluate_logs(log(ipu), log(ipi))

    def fitted(self, points: list[DesignPoint]) -> np.ndarray:
        x1, x2, x12, _ = _columns(points)
        return self.evaluate_logs(x1, x2, x12)

    def all_significant(self, alpha: float = 0.01) -> bool:
        return all(p < alpha for p in self.p_values)

    def as_dict(self) -> dict:
        return {
            "a0": self.a0,
            "a1": self.a1,
            "a2": self.a2,
            "a3": self.a3,
            "std_errors": list(self.std_errors),
            "t_stats": list(self.t_stats),
            "p_values": list(self.p_values),
            "r2": self.r2,
            "adjusted_r2": self.adjusted_r2,
            "n_points": self.n_points,
            "log_base": self.log_base,
            "rss": self.rss,
            "tss": self.tss,
            "condition": self.condition,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionFit":
        d = dict(d)
        for k in ("std_errors", "t_stats", "p_values"):
            d[k] = tuple(d[k])
        return cls(**d)


def _columns(points):
    x1 = np.array([p.log_ipu for p in points])
    x2 = np.array([p.log_ipi for p in points])
    x12 = np.array([p.interaction for p in points])
    y = np.array([p.response for p in points])
    return x1, x2, x12, y


def ols_fit(points: list[DesignPoint], log_base: LogBase = "natural") -> RegressionFit:
    """
    Least-squares fit through a QR decomposition of the design matrix.

    Conventions: when the response has zero spread, r2 is 1 if the residuals
    vanish too and 0 otherwise.  Adjusted R^2 uses p = 3 predictors and can be
    negative.
    """
    n = len(points)
    if n < N_COEF + 1:
        raise ValueError(f"need at least {N_COEF + 1} points for {N_COEF} coefficients, got {n}")
    x1, x2, x12, y = _columns(points)
    X = np.column_stack([np.ones(n), x1, x2, x12])

    Q, R = np.linalg.qr(X, mode="reduced")
    diag = np.abs(np.diag(R))
    condition = float(np.linalg.cond(R)) if diag.min() > 0 else float("inf")
    if not math.isfinite(condition) or diag.min() <= 1e-12 * diag.max() or condition > 1e12:
        raise RankDeficientError(condition)
    beta = solve_triangular(R, Q.T @ y)

    fit0 = RegressionFit(*beta, (0.0,) * 4, (0.0,) * 4, (1.0,) * 4, 0.0, 0.0, n, log_base, 0.0, 0.0, condition)
    resid = y - fit0.evaluate_logs(x1, x2, x12)
    rss = math.fsum((resid**2).tolist())
    ybar = math.fsum(y.tolist()) / n
    tss = math.fsum(((y - ybar) ** 2).tolist())

    scale_sq = max(1.0, float(np.max(np.abs(y)))) ** 2
    tiny = n * scale_sq * 1e-24
    if tss <= tiny:
        r2 = 1.0 if rss <= tiny else 0.0
    else:
        r2 = 1.0 - rss / tss
    df = n - N_COEF
    adjusted = 1.0 - (1.0 - r2) * (n - 1) / df

    s2 = rss / df
    Rinv = solve_triangular(R, np.eye(N_COEF))
    cov_diag = s2 * np.sum(Rinv**2, axis=1)
    se = np.sqrt(cov_diag)
    t_stats, p_values = [], []
    for b, s in zip(beta, se):
        if s > 0:
            t = b / s
        else:
            t = 0.0 if b == 0 else math.copysign(math.inf, b)
        t_stats.append(float(t))
        p_values.append(t_two_sided_p(t, df))

    return RegressionFit(
        a0=float(beta[0]),
        a1=float(beta[1]),
        a2=float(beta[2]),
        a3=float(beta[3]),
        std_errors=tuple(float(s) for s in se),
        t_stats=tuple(t_stats),
        p_values=tuple(p_values),
        r2=float(r2),
        adjusted_r2=float(adjusted),
        n_points=n,
        log_base=log_base,
        rss=rss,
        tss=tss,
        condition=condition,
    )


@dataclass(frozen=True)
class Sensitivity:
    dP_dIpU: float
    dP_dIpI: float
    c1: float
    c2: float


def sensitivity(fit: RegressionFit, ipu: float, ipi: float) -> Sensitivity:
    """
    Partial derivatives of the fitted model at (ipu, ipi).

    ``c1 = a1 + a3 log(ipi)`` and ``c2 = a2 + a3 log(ipu)`` in the fit's log base;
    with base-10 logs each derivative carries an extra factor ``1 / ln 10``.
    """
    if not (ipu > 0 and ipi > 0):
        raise ValueError("ipu and ipi must be positive")
    log = log_fn(fit.log_base)
    k = _ln_base(fit.log_base)
    c1 = fit.a1 + fit.a3 * float(log(ipi))
    c2 = fit.a2 + fit.a3 * float(log(ipu))
    return Sensitivity(c1 / (ipu * k), c2 / (ipi * k), c1, c2)


def square_urm_curve(fit: RegressionFit, ip):
    """Performance of a square matrix (IpU = IpI = ip): quadratic in log(ip)."""
    ip_arr = np.asarray(ip, dtype=float)
    if np.any(ip_arr <= 0):
        raise ValueError("ip must be positive")
    L = log_fn(fit.log_base)(ip_arr)
    out = fit.a0 + (fit.a1 + fit.a2) * L + fit.a3 * L**2
    return float(out) if np.ndim(out) == 0 else out


def square_urm_vertex(fit: RegressionFit) -> float | None:
    """log(ip) at the extremum of the square-matrix curve, or None when a3 = 0."""
    if fit.a3 == 0:
        return None
    return -(fit.a1 + fit.a2) / (2.0 * fit.a3)
