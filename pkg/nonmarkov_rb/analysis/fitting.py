"""Exponential decay fits A·p^m + B to ASF curves."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import least_squares

from nonmarkov_rb.config import Config
from nonmarkov_rb.engine.curve import ASFCurve
from nonmarkov_rb.exceptions import NumericalError

logger = logging.getLogger(__name__)


class DegenerateWindowError(NumericalError, ValueError):
    """Too few points to identify three parameters."""


@dataclass(frozen=True)
class ExpFit:
    A: float
    p: float
    B: float
    rms_residual: float
    max_residual: float
    converged: bool
    m_window: tuple[int, int]
    message: str = ""

    def predict(self, m) -> np.ndarray:
        return exp_model(np.asarray(m, dtype=float), self.A, self.p, self.B)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["m_window"] = list(self.m_window)
        return data


def exp_model(m: np.ndarray, A: float, p: float, B: float) -> np.ndarray:
    return A * np.power(p, m) + B


def _initial_guess(m: np.ndarray, y: np.ndarray, config: Config = Config) -> np.ndarray:
    """B₀ just outside the data range on the asymptote side, then log-linear regression."""
    span = float(np.ptp(y))
    margin = max(config.FIT_B_MARGIN * span, 1e-12)
    decreasing = y[0] >= y[-1]
    b0 = y.min() - margin if decreasing else y.max() + margin
    shifted = np.abs(y - b0)
    slope, intercept = np.polyfit(m, np.log(shifted), 1)
    a0 = np.exp(intercept) * (1.0 if decreasing else -1.0)
    return np.array([a0, np.exp(slope), b0])


def fit_exponential(
    curve: ASFCurve,
    m_window: tuple[int, int] | None = None,
    max_iter: int | None = None,
    config: Config = Config,
) -> ExpFit:
    """Least-squares fit of A·p^m + B over ``m_window`` (inclusive).

    Starts from a log-linear guess and refines all three parameters with
    Levenberg–Marquardt (damped Gauss–Newton), weighting by 1/stderr² when the
    curve carries standard errors. A curve with no variation returns A = 0,
    B = its value, and ``converged=False``. ``max_iter`` defaults to
    ``config.FIT_MAX_ITER``.
    """
    sub = curve.window(*m_window) if m_window else curve
    if len(sub) < config.FIT_MIN_POINTS:
        raise DegenerateWindowError(
            f"Need at least {config.FIT_MIN_POINTS} points to fit, window {m_window} has {len(sub)}"
        )
    m = sub.m_values.astype(float)
    y = sub.values
    window = (int(m[0]), int(m[-1]))

    if np.ptp(y) <= 1e-14 * max(1.0, np.abs(y).max()):
        logger.warning(f"Curve {curve.model_id} is constant on {window}; decay rate is unidentifiable")
        return ExpFit(0.0, 1.0, float(y.mean()), 0.0, 0.0, False, window, "constant curve: p unidentifiable")

    sigma = sub.stderrs
    if sub.has_stderr and np.all(np.isfinite(sigma)) and np.all(sigma > 0):
        weights = 1.0 / sigma
    else:
        weights = np.ones_like(y)

    def residuals(theta: np.ndarray) -> np.ndarray:
        return (exp_model(m, *theta) - y) * weights

    def jacobian(theta: np.ndarray) -> np.ndarray:
        A, p, _ = theta
        pm = np.power(p, m)
        return np.column_stack([pm, A * m * np.power(p, m - 1), np.ones_like(m)]) * weights[:, None]

    x0 = _initial_guess(m, y, config)
    result = least_squares(
        residuals, x0, jac=jacobian, method="lm",
        xtol=config.FIT_STEP_TOL, ftol=config.FIT_STEP_TOL, gtol=config.FIT_STEP_TOL,
        max_nfev=config.FIT_MAX_ITER if max_iter is None else max_iter,
    )
    A, p, B = (float(v) for v in result.x)
    raw = exp_model(m, A, p, B) - y
    converged = bool(result.success) and np.all(np.isfinite(result.x))
    if not converged:
        logger.warning(f"Exponential fit of {curve.model_id} on {window} did not converge: {result.message}")
    return ExpFit(
        A=A, p=p, B=B,
        rms_residual=float(np.sqrt(np.mean(raw**2))),
        max_residual=float(np.max(np.abs(raw))),
        converged=converged,
        m_window=window,
        message=str(result.message),
    )


def log_linear_r2(curve: ASFCurve, asymptote: float) -> float:
    """R² of the straight-line fit of log(value − asymptote) against m."""
    shifted = curve.values - asymptote
    if np.any(shifted <= 0):
        shifted = -shifted
        if np.any(shifted <= 0):
            return -np.inf
    m = curve.m_values.astype(float)
    logs = np.log(shifted)
    slope, intercept = np.polyfit(m, logs, 1)
    ss_res = float(np.sum((logs - (slope * m + intercept)) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    return 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot


def auto_reference_window(
    curve: ASFCurve,
    r2: float | None = None,
    min_points: int | None = None,
    config: Config = Config,
) -> tuple[int, int]:
    """Longest suffix of ``curve`` that is manifestly exponential.

    For each candidate start the suffix is fitted, and it qualifies when
    log(value − B̂) is linear in m with R² ≥ ``r2`` (default ``config.WINDOW_R2``).
    """
    r2 = config.WINDOW_R2 if r2 is None else r2
    min_points = config.FIT_MIN_POINTS if min_points is None else min_points
    ms = curve.m_values
    if len(ms) < min_points:
        raise DegenerateWindowError(f"Curve has {len(ms)} points, need {min_points}")
    for start in range(len(ms) - min_points + 1):
        suffix = curve.window(int(ms[start]), int(ms[-1]))
        try:
            fit = fit_exponential(suffix, config=config)
        except DegenerateWindowError:
            break
        if fit.converged and log_linear_r2(suffix, fit.B) >= r2:
            logger.debug(f"Auto window for {curve.model_id}: m ∈ [{ms[start]}, {ms[-1]}]")
            return int(ms[start]), int(ms[-1])
    return int(ms[-min_points]), int(ms[-1])
