#
# Copyright (c) 2023 Gearscope Developers. All rights reserved.
#
"""ARIMA(p, d, q) on a p2p series: conditional-sum-of-squares fit, order selection and forecasting."""
import json
import logging
import math
from multiprocessing.pool import ThreadPool
from pathlib import Path
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import optimize, signal
from statsmodels.tsa.stattools import adfuller

from gearscope.core.exceptions import (AllFitsFailed, DidNotConverge, HorizonZero, InvalidOrder, NonFinite,
                                       TooShort)
from gearscope.core.utils import is_finite, parse_triple
from gearscope.core.utils.constants import (FORECAST_COLUMNS, MAX_AR_ORDER, MAX_DIFFERENCING, MAX_MA_ORDER,
                                            MIN_SELECTION_LENGTH, SELECTION_MAX_AR_ORDER, SELECTION_MAX_MA_ORDER,
                                            SIGMA2_FLOOR, SIMPLEX_MAX_EVALS, SIMPLEX_XATOL, UNIT_ROOT_ALPHA)
from gearscope.core.utils.error_handling import ignore_numpy_errors, with_error_context

__all__ = [
    "ArimaOrder", "ArimaModel", "Forecast", "difference", "integrate", "css_residuals", "fit", "select_order",
    "auto_fit", "forecast", "unit_root_differencing", "model_to_dict", "write_model_json", "write_forecast_csv"
]

_logger = logging.getLogger(__name__)


class ArimaOrder(NamedTuple):
    p: int
    d: int
    q: int

    @classmethod
    def parse(cls, text: str) -> 'ArimaOrder':
        try:
            return cls(*parse_triple(text)).validate()
        except ValueError as e:
            raise InvalidOrder(f'cannot parse order {text!r}: {e}') from e

    def validate(self) -> 'ArimaOrder':
        if min(self) < 0:
            raise InvalidOrder(f'order components must be >= 0, got {tuple(self)}')
        if self.p > MAX_AR_ORDER or self.q > MAX_MA_ORDER or self.d > MAX_DIFFERENCING:
            raise InvalidOrder(f'order {tuple(self)} outside p,q <= {MAX_AR_ORDER}, d <= {MAX_DIFFERENCING}')
        if self.p + self.q == 0 and self.d == 0:
            raise InvalidOrder('order (0,0,0) has nothing to fit')
        return self

    def __str__(self):
        return f'({self.p},{self.d},{self.q})'


class ArimaModel(NamedTuple):
    order: ArimaOrder
    ar_coeffs: Tuple[float, ...]
    ma_coeffs: Tuple[float, ...]
    intercept: float
    sigma2: float
    n_obs: int
    aic: float
    css: float
    converged: bool = True

    @property
    def n_eff(self) -> int:
        return self.n_obs - self.order.d - self.order.p

    @property
    def ar_root_moduli(self) -> List[float]:
        """Moduli of the roots of z^p - phi_1 z^(p-1) - ... - phi_p; all < 1 means stationary."""
        if not self.ar_coeffs:
            return []
        return sorted(float(v) for v in np.abs(np.roots(np.r_[1.0, -np.asarray(self.ar_coeffs)])))

    @property
    def ma_root_moduli(self) -> List[float]:
        """Moduli of the roots of z^q + theta_1 z^(q-1) + ... + theta_q; all < 1 means invertible."""
        if not self.ma_coeffs:
            return []
        return sorted(float(v) for v in np.abs(np.roots(np.r_[1.0, np.asarray(self.ma_coeffs)])))

    @property
    def stationary(self) -> bool:
        return all(m < 1 for m in self.ar_root_moduli)

    @property
    def invertible(self) -> bool:
        return all(m < 1 for m in self.ma_root_moduli)


class Forecast(NamedTuple):
    horizon: int
    values: np.ndarray


@with_error_context('difference')
def difference(series: Sequence[float], d: int) -> np.ndarray:
    """Apply the first difference ``d`` times.

    Examples:
        >>> difference([1, 3, 6, 10], 2)
        array([1., 1.])
    """
    x = np.asarray(series, dtype=np.float64)
    if d < 0:
        raise InvalidOrder(f'differencing order must be >= 0, got {d}')
    if len(x) <= d:
        raise TooShort(f'series has {len(x)} values, differencing {d} times needs more than {d}')
    return np.diff(x, n=d) if d else x.copy()


@with_error_context('integrate')
def integrate(diffs: Sequence[float], initial: Sequence[float], d: int) -> np.ndarray:
    """Undo ``difference(x, d)`` given the first ``d`` values of ``x``; returns ``x[d:]``."""
    w = np.asarray(diffs, dtype=np.float64)
    initial = np.asarray(initial, dtype=np.float64)
    if len(initial) != d:
        raise TooShort(f'integrating {d} times needs {d} initial values, got {len(initial)}')
    for k in reversed(range(d)):
        start = difference(initial, k)[0]
        w = np.r_[start, start + np.cumsum(w)]
    return w[d:]


@with_error_context('css_residuals')
def css_residuals(series: Sequence[float], ar_coeffs: Sequence[float] = (), ma_coeffs: Sequence[float] = (),
                  intercept: float = 0.0) -> np.ndarray:
    """Conditional residuals e_p..e_(n-1) of an ARMA model on an already differenced series.

    ``e_t = y_t - c - sum_i phi_i y_(t-i) - sum_j theta_j e_(t-j)`` with pre-sample residuals set to zero.
    """
    y = np.asarray(series, dtype=np.float64)
    phi = np.asarray(ar_coeffs, dtype=np.float64)
    theta = np.asarray(ma_coeffs, dtype=np.float64)
    p, n = len(phi), len(y)
    if n <= p:
        raise TooShort(f'series has {n} values, AR order {p} needs more')
    u = y[p:] - intercept
    for i in range(1, p + 1):
        u = u - phi[i - 1] * y[p - i:n - i]
    if len(theta) == 0:
        return u
    return signal.lfilter([1.0], np.r_[1.0, theta], u)


def _split(params: np.ndarray, order: ArimaOrder, with_intercept: bool):
    offset = 1 if with_intercept else 0
    intercept = float(params[0]) if with_intercept else 0.0
    return params[offset:offset + order.p], params[offset + order.p:], intercept


def _build_model(order: ArimaOrder, n_obs: int, phi, theta, intercept: float, css: float,
                 converged: bool) -> ArimaModel:
    n_eff = n_obs - order.d - order.p
    sigma2 = max(css / n_eff, SIGMA2_FLOOR) if math.isfinite(css) else math.inf
    aic = n_eff * math.log(sigma2) + 2 * (order.p + order.q + 1)
    return ArimaModel(order=order, ar_coeffs=tuple(float(v) for v in phi), ma_coeffs=tuple(float(v) for v in theta),
                      intercept=float(intercept), sigma2=float(sigma2), n_obs=n_obs, aic=float(aic), css=float(css),
                      converged=converged)


@with_error_context('fit')
@ignore_numpy_errors
def fit(series: Sequence[float], order: ArimaOrder) -> ArimaModel:
    """Fit ARIMA(p, d, q) by minimizing the conditional sum of squares with a Nelder-Mead simplex.

    The intercept is estimated only when ``d == 0`` and fixed at zero otherwise. The simplex starts at zero
    coefficients and the mean of the differenced series, and stops once its diameter is below 1e-8; running out
    of the 2000 evaluation budget raises DidNotConverge carrying the best model found.
    """
    order = ArimaOrder(*order).validate()
    x = np.asarray(series, dtype=np.float64)
    if not is_finite(x):
        raise NonFinite('series contains NaN or infinite values')
    needed = order.d + max(order.p, order.q) + 8
    if len(x) < needed:
        raise TooShort(f'series has {len(x)} values, order {order} needs at least {needed}')

    w = difference(x, order.d)
    with_intercept = order.d == 0

    def objective(params: np.ndarray) -> float:
        phi, theta, intercept = _split(params, order, with_intercept)
        residuals = css_residuals(w, phi, theta, intercept)
        css = float(np.dot(residuals, residuals))
        return css if math.isfinite(css) else math.inf

    x0 = np.zeros(order.p + order.q + (1 if with_intercept else 0))
    if with_intercept:
        x0[0] = float(np.mean(w))

    if len(x0) == 0:
        return _build_model(order, len(x), (), (), 0.0, objective(x0), True)

    result = optimize.minimize(objective, x0, method='Nelder-Mead',
                               options={'xatol': SIMPLEX_XATOL, 'fatol': math.inf, 'maxfev': SIMPLEX_MAX_EVALS,
                                        'maxiter': SIMPLEX_MAX_EVALS})
    phi, theta, intercept = _split(result.x, order, with_intercept)
    model = _build_model(order, len(x), phi, theta, intercept, float(result.fun), bool(result.success))
    if not result.success or not math.isfinite(model.css):
        raise DidNotConverge(f'order {order}: {result.message} after {result.nfev} evaluations', best_model=model)
    _logger.debug(f'Fitted {order}: css={model.css:.6g} aic={model.aic:.6g} in {result.nfev} evaluations')
    return model


@with_error_context('unit_root_differencing')
def unit_root_differencing(series: Sequence[float], alpha: float = UNIT_ROOT_ALPHA,
                           max_d: int = MAX_DIFFERENCING) -> int:
    """Smallest number of differences after which an augmented Dickey-Fuller test rejects a unit root."""
    x = np.asarray(series, dtype=np.float64)
    for d in range(max_d):
        w = difference(x, d)
        if np.ptp(w) == 0:
            return d
        try:
            p_value = adfuller(w, autolag='AIC')[1]
        except (ValueError, np.linalg.LinAlgError) as e:
            _logger.debug(f'Unit root test failed at d={d}: {e}')
            return d
        if p_value < alpha:
            return d
    return max_d


def _candidate(args) -> Tuple[ArimaOrder, Optional[ArimaModel]]:
    series, order = args
    try:
        return order, fit(series, order)
    except DidNotConverge as e:
        _logger.debug(f'Skipping {order}: {e}')
    except (TooShort, NonFinite) as e:
        _logger.debug(f'Skipping {order}: {e}')
    return order, None


def _ranking_key(model: ArimaModel):
    order = model.order
    return model.aic, order.p + order.d + order.q, order.d, order.p


@with_error_context('select_order')
def auto_fit(series: Sequence[float], max_p: int = SELECTION_MAX_AR_ORDER, max_q: int = SELECTION_MAX_MA_ORDER,
             max_d: int = MAX_DIFFERENCING, unit_root_alpha: Optional[float] = UNIT_ROOT_ALPHA,
             jobs: int = 1) -> ArimaModel:
    """Fit every candidate order and return the best model.

    With ``unit_root_alpha`` set, d is fixed at the number of differences the unit root test needs and only p and
    q are searched; with None the full (p, d, q) grid competes. Candidates are ranked by AIC, then smaller
    p+d+q, then smaller d, then smaller p; candidates that do not converge are skipped.
    """
    x = np.asarray(series, dtype=np.float64)
    if not is_finite(x):
        raise NonFinite('series contains NaN or infinite values')
    if len(x) < MIN_SELECTION_LENGTH:
        raise TooShort(f'series has {len(x)} values, order selection needs at least {MIN_SELECTION_LENGTH}')

    if unit_root_alpha is None:
        d_values = range(max_d + 1)
    else:
        d_values = [unit_root_differencing(x, unit_root_alpha, max_d)]
        _logger.info(f'Unit root screen selected d={d_values[0]}')
    orders = [ArimaOrder(p, d, q) for d in d_values for p in range(max_p + 1) for q in range(max_q + 1)
              if p + q > 0 or d > 0]

    if jobs > 1:
        with ThreadPool(jobs) as pool:
            outcomes = pool.map(_candidate, [(x, order) for order in orders])
    else:
        outcomes = [_candidate((x, order)) for order in orders]

    models = [model for _, model in outcomes if model is not None]
    if not models:
        raise AllFitsFailed(f'none of {len(orders)} candidate orders converged')
    best = min(models, key=_ranking_key)
    _logger.info(f'Selected order {best.order} (aic={best.aic:.6g}) from {len(models)}/{len(orders)} fits')
    return best


def select_order(series: Sequence[float], **kwargs) -> ArimaOrder:
    """Order of the minimum-AIC candidate; see auto_fit for the search."""
    return auto_fit(series, **kwargs).order


@with_error_context('forecast')
def forecast(model: ArimaModel, series: Sequence[float], horizon: int) -> Forecast:
    """Forecast ``horizon`` values on the original scale with future innovations set to zero."""
    if horizon < 1:
        raise HorizonZero(f'horizon must be >= 1, got {horizon}')
    x = np.asarray(series, dtype=np.float64)
    order = model.order
    w = difference(x, order.d)
    p, q = order.p, order.q
    residuals = css_residuals(w, model.ar_coeffs, model.ma_coeffs, model.intercept)

    y = list(w)
    e = [0.0] * p + list(residuals)
    for _ in range(horizon):
        t = len(y)
        value = model.intercept
        value += sum(model.ar_coeffs[i - 1] * y[t - i] for i in range(1, p + 1))
        value += sum(model.ma_coeffs[j - 1] * e[t - j] for j in range(1, q + 1) if t - j >= 0)
        y.append(value)
        e.append(0.0)

    future = np.asarray(y[len(w):], dtype=np.float64)
    for k in reversed(range(order.d)):
        future = difference(x, k)[-1] + np.cumsum(future)
    return Forecast(horizon=horizon, values=future)


def model_to_dict(model: ArimaModel) -> dict:
    return {
        'order': list(model.order),
        'phi': list(model.ar_coeffs),
        'theta': list(model.ma_coeffs),
        'intercept': model.intercept,
        'sigma2': model.sigma2,
        'aic': model.aic,
        'converged': model.converged,
        'css': model.css,
        'n_obs': model.n_obs,
        'diagnostics': {
            'ar_root_moduli': model.ar_root_moduli,
            'ma_root_moduli': model.ma_root_moduli,
            'stationary': model.stationary,
            'invertible': model.invertible,
        },
    }


def write_model_json(model: ArimaModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(json.dumps(model_to_dict(model), indent=2) + '\n', encoding='utf-8')
    return path


def write_forecast_csv(series: Iterable[float], fc: Forecast, path: Union[str, Path]) -> Path:
    """Given values followed by the forecast, one row per ordinal."""
    path = Path(path)
    given = [float(v) for v in series]
    df = pd.DataFrame({
        'ordinal': range(len(given) + fc.horizon),
        'p2p': given + [float(v) for v in fc.values],
        'kind': ['given'] * len(given) + ['forecast'] * fc.horizon,
    }, columns=list(FORECAST_COLUMNS))
    df.to_csv(path, index=False, lineterminator='\n')
    return path
