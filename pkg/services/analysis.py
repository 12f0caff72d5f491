import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Iterable, Mapping, NamedTuple

import numpy as np
from scipy import optimize, stats

from config import COLLAPSE_GRID_POINTS, FIT_MAX_ITER, FIT_STEP_TOL, POLE_TOL
from errors import DomainError, FitError, PoleError

logger = logging.getLogger(__name__)

MI_MAX_RATIO = 0.2


class FitModel(StrEnum):
    LOG_LAW = "log_law"
    POWER_LAW = "power_law"
    CHORD_LOG = "chord_log"
    CHORD_POWER_LAW = "chord_power_law"
    MI_POWER = "mi_power"


class Scaling(StrEnum):
    LOG_L = "log_L"
    POWER_L = "power_L"


@dataclass(frozen=True)
class SeriesPoint:
    x: float
    y: float
    tag: str | None = None

    def __post_init__(self):
        if not self.x > 0:
            raise DomainError(f"series abscissa must be > 0, got {self.x}")


@dataclass(frozen=True, eq=False)
class FitResult:
    model: FitModel
    params: dict[str, float]
    r_squared: float
    residuals: np.ndarray = field(repr=False)

    def __getitem__(self, name: str) -> float:
        return self.params[name]

    @property
    def one_minus_r2(self) -> float:
        return 1.0 - self.r_squared


def as_series(data, tag: str | None = None) -> list[SeriesPoint]:
    """SeriesPoints from SeriesPoints or (x, y) pairs."""
    return [p if isinstance(p, SeriesPoint) else SeriesPoint(float(p[0]), float(p[1]), tag)
            for p in data]


def _arrays(data) -> tuple[np.ndarray, np.ndarray]:
    points = sorted(as_series(data), key=lambda p: (p.x, p.y))
    x = np.array([p.x for p in points], dtype=float)
    y = np.array([p.y for p in points], dtype=float)
    return x, y


def _require(x: np.ndarray, n_points: int, n_distinct: int, what: str) -> None:
    if x.size < n_points:
        raise FitError(f"{what} needs at least {n_points} points, got {x.size}")
    if np.unique(x).size < n_distinct:
        raise FitError(f"{what} is rank deficient: {np.unique(x).size} distinct abscissae")


def _r_squared(y: np.ndarray, residuals: np.ndarray) -> float:
    ss_res = float(np.sum(residuals ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res <= 1e-30 else 0.0
    return 1.0 - ss_res / ss_tot


def _linear_fit(u: np.ndarray, y: np.ndarray):
    fit = stats.linregress(u, y)
    residuals = y - (fit.intercept + fit.slope * u)
    return float(fit.intercept), float(fit.slope), residuals, _r_squared(y, residuals)


def fit_log_law(data, min_size: float | None = None) -> FitResult:
    """S = a + b ln L, c_eff = 3b; points below ``min_size`` are dropped."""
    x, y = _arrays(data)
    if min_size is not None:
        keep = x >= min_size
        x, y = x[keep], y[keep]
    _require(x, 3, 2, "log-law fit")
    a, b, residuals, r2 = _linear_fit(np.log(x), y)
    return FitResult(FitModel.LOG_LAW, {"a": a, "b": b, "c_eff": 3.0 * b}, r2, residuals)


def _power_law_start(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """(a, b, c) from a log-log regression of successive differences."""
    ux = np.unique(x)
    uy = np.array([y[x == v].mean() for v in ux])
    slope = np.diff(uy) / np.diff(ux)
    mid = 0.5 * (ux[1:] + ux[:-1])
    usable = np.abs(slope) > 0
    c = 0.5
    if usable.sum() >= 2:
        fit = stats.linregress(np.log(mid[usable]), np.log(np.abs(slope[usable])))
        c = -fit.slope - 1.0
    if not np.isfinite(c) or c <= 0:
        c = 0.5
    design = np.column_stack([np.ones_like(x), x ** -c])
    (a, b), *_ = np.linalg.lstsq(design, y, rcond=None)
    return np.array([a, b, c])


def _power_law_core(model: FitModel, x: np.ndarray, y: np.ndarray) -> FitResult:
    _require(x, 4, 3, "power-law fit")

    def residual(p):
        return p[0] + p[1] * x ** -p[2] - y

    def jacobian(p):
        xc = x ** -p[2]
        return np.column_stack([np.ones_like(x), xc, -p[1] * xc * np.log(x)])

    start = _power_law_start(x, y)
    result = optimize.least_squares(
        residual, start, jac=jacobian, method="lm",
        xtol=FIT_STEP_TOL, ftol=1e-15, gtol=1e-15, max_nfev=FIT_MAX_ITER)
    logger.debug("power-law fit start=%s end=%s nfev=%d status=%d",
                 start, result.x, result.nfev, result.status)
    if result.status <= 0 or not np.all(np.isfinite(result.x)):
        raise FitError(f"power-law fit did not converge: {result.message}",
                       dict(zip("abc", map(float, result.x))))
    a, b, c = (float(v) for v in result.x)
    residuals = residual(result.x)
    return FitResult(model, {"a": a, "b": b, "c": c}, _r_squared(y, residuals), residuals)


def fit_power_law(data) -> FitResult:
    """S = a + b L^-c by Levenberg-Marquardt."""
    x, y = _arrays(data)
    return _power_law_core(FitModel.POWER_LAW, x, y)


def chord_length(size, total_length: int):
    """(2 L_tot / pi) sin(pi L / L_tot)."""
    return 2.0 * total_length / np.pi * np.sin(np.pi * np.asarray(size, dtype=float) / total_length)


def chord_distance(size, total_length: int):
    """Distance of the cut to the nearer chain end."""
    size = np.asarray(size, dtype=float)
    return total_length / 2.0 - np.abs(size - total_length / 2.0)


def _check_inside(x: np.ndarray, total_length: int) -> None:
    if np.any(x <= 0) or np.any(x >= total_length):
        raise DomainError(f"subsystem sizes must lie in (0, {total_length})")


def fit_chord_log(data, total_length: int) -> FitResult:
    """S = (c_eff / 6) ln[(2 L_tot / pi) sin(pi L / L_tot)] + c2."""
    x, y = _arrays(data)
    _check_inside(x, total_length)
    u = np.log(chord_length(x, total_length))
    _require(np.round(u, 12), 3, 2, "chord log fit")
    c2, slope, residuals, r2 = _linear_fit(u, y)
    return FitResult(FitModel.CHORD_LOG, {"c_eff": 6.0 * slope, "c2": c2}, r2, residuals)


def fit_chord_power_law(data, total_length: int) -> FitResult:
    """S = a + b d^-c with d the chord distance of the cut."""
    x, y = _arrays(data)
    _check_inside(x, total_length)
    d = chord_distance(x, total_length)
    order = np.argsort(d, kind="stable")
    return _power_law_core(FitModel.CHORD_POWER_LAW, d[order], y[order])


def odd_sizes_only(data) -> list[SeriesPoint]:
    """Drops even subsystem sizes (parity oscillations of open chains)."""
    return [p for p in as_series(data) if float(p.x).is_integer() and int(p.x) % 2 == 1]


# --- mutual information ---

def mi_small_argument_coefficient(c_eff: float) -> float:
    """-(c/3) ln cos^2(pi x) = (c pi^2 / 3) x^2 + O(x^4)."""
    return c_eff * math.pi ** 2 / 3.0


def theory_mutual_information(c_eff: float, ratio: float) -> float:
    if abs(ratio - 0.5) < POLE_TOL:
        raise PoleError(f"mutual information diverges at ratio 1/2 (got {ratio})")
    if not 0.0 <= ratio < 0.5:
        raise DomainError(f"ratio must lie in [0, 1/2), got {ratio}")
    return -(c_eff / 3.0) * math.log(math.cos(math.pi * ratio) ** 2)


def fit_mutual_information(data) -> FitResult:
    """Free exponent eta from a log-log regression; c_eff from the full theory curve.

    eta and the log-log intercept are correlated, so c_eff is the one-parameter
    least-squares scale of I against -(1/3) ln cos^2(pi x) over the same window,
    and ``prefactor`` is its x^2 coefficient c_eff pi^2 / 3.
    """
    x, y = _arrays(data)
    if np.any(x > MI_MAX_RATIO):
        raise DomainError(f"mutual-information fit needs ratios <= {MI_MAX_RATIO}, got {x.max()}")
    if np.any(y <= 0):
        raise FitError("mutual information must be positive for a log-log fit")
    _require(x, 3, 2, "mutual-information fit")
    _, eta, residuals, r2 = _linear_fit(np.log(x), np.log(y))
    unit = np.array([theory_mutual_information(1.0, r) for r in x])
    c_eff = float(np.dot(y, unit) / np.dot(unit, unit))
    params = {"eta": eta, "prefactor": mi_small_argument_coefficient(c_eff), "c_eff": c_eff}
    return FitResult(FitModel.MI_POWER, params, r2, residuals)


def theory_chord_entropy(c_eff: float, size: float, total_length: int,
                         additive_const: float = 0.0) -> float:
    if not 0 < size < total_length:
        raise DomainError(f"subsystem size must lie in (0, {total_length}), got {size}")
    return c_eff / 6.0 * math.log(float(chord_length(size, total_length))) + additive_const


def discrete_log_slopes(sizes, entropies) -> np.ndarray:
    """dS / d ln L between successive sizes."""
    sizes = np.asarray(sizes, dtype=float)
    entropies = np.asarray(entropies, dtype=float)
    order = np.argsort(sizes)
    return np.diff(entropies[order]) / np.diff(np.log(sizes[order]))


# --- data collapse ---

class CollapseResult(NamedTuple):
    residual: float
    scaling: Scaling
    overlap: tuple[float, float]

    @property
    def label(self) -> str:
        return f"collapse residual ({self.scaling}, proxy for visual collapse quality)"


def scaled_abscissa(delta, delta_c: float, size: int, scaling: Scaling, nu: float = 1.0):
    delta = np.asarray(delta, dtype=float)
    if scaling == Scaling.LOG_L:
        return (delta - delta_c) * math.log(size)
    return (delta - delta_c) * size ** (1.0 / nu)


def data_collapse(curves: Mapping[int, Iterable], delta_c: float,
                  scaling: Scaling = Scaling.LOG_L, nu: float = 1.0,
                  subtract_critical: bool = False) -> CollapseResult:
    """Mean variance across sizes of the rescaled curves on a shared grid.

    ``curves`` maps the system size to (delta, S_half) pairs. With
    ``subtract_critical`` every curve is shifted by its own S(delta_c).
    """
    scaling = Scaling(scaling)
    if len(curves) < 3:
        raise FitError(f"collapse needs at least 3 system sizes, got {len(curves)}")
    scaled = []
    for size in sorted(curves):
        pts = np.array(sorted((float(d), float(s)) for d, s in curves[size]))
        if len(pts) < 2:
            raise FitError(f"curve for L={size} needs at least 2 points")
        delta, entropy = pts[:, 0], pts[:, 1]
        if subtract_critical:
            if not delta[0] <= delta_c <= delta[-1]:
                raise FitError(f"curve for L={size} does not bracket delta_c={delta_c}")
            entropy = entropy - np.interp(delta_c, delta, entropy)
        scaled.append((scaled_abscissa(delta, delta_c, size, scaling, nu), entropy))

    lo = max(x[0] for x, _ in scaled)
    hi = min(x[-1] for x, _ in scaled)
    if not hi > lo:
        raise FitError(f"scaled curves do not overlap ([{lo:.4g}, {hi:.4g}])")
    grid = np.linspace(lo, hi, COLLAPSE_GRID_POINTS)
    stacked = np.vstack([np.interp(grid, x, y) for x, y in scaled])
    residual = float(np.mean(np.var(stacked, axis=0)))
    logger.debug("collapse scaling=%s nu=%s overlap=[%.4g, %.4g] residual=%.3e",
                 scaling, nu, lo, hi, residual)
    return CollapseResult(residual, scaling, (float(lo), float(hi)))
