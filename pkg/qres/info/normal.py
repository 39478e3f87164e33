"""Standard Gaussian CDF and quantile."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc

from qres.errors import InvalidParameterError

# Rational approximation coefficients for the central and tail regions
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def gaussian_cdf(x: np.ndarray | float) -> np.ndarray | float:
    """Phi(x) through the complementary error function."""
    value = 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(value) if np.ndim(value) == 0 else value


def _tail(q: np.ndarray) -> np.ndarray:
    num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
    den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
    return num / den


def _initial_guess(p: np.ndarray) -> np.ndarray:
    z = np.empty_like(p)
    low = p < _P_LOW
    high = p > 1.0 - _P_LOW
    mid = ~(low | high)
    if np.any(low):
        z[low] = _tail(np.sqrt(-2.0 * np.log(p[low])))
    if np.any(high):
        z[high] = -_tail(np.sqrt(-2.0 * np.log1p(-p[high])))
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        z[mid] = num / den
    return z


def gaussian_quantile(eps: np.ndarray | float) -> np.ndarray | float:
    """
    Phi^{-1}(eps) for eps in (0, 1).

    Rational initial guess refined by one Halley step against the
    erfc-based CDF; absolute error stays below 1e-9.
    """
    p = np.asarray(eps, dtype=float)
    if np.any(np.isnan(p)) or np.any((p <= 0.0) | (p >= 1.0)):
        raise InvalidParameterError(f"Gaussian quantile needs eps in (0, 1), got {eps}")
    flat = np.atleast_1d(p).ravel()
    z = _initial_guess(flat)
    # Halley refinement; upper half uses the complement to keep precision
    upper = flat > 0.5
    err = np.where(
        upper,
        -(0.5 * erfc(z / math.sqrt(2.0)) - (1.0 - flat)),
        0.5 * erfc(-z / math.sqrt(2.0)) - flat,
    )
    u = err * _SQRT_2PI * np.exp(0.5 * z * z)
    z = z - u / (1.0 + 0.5 * z * u)
    z = z.reshape(p.shape)
    return float(z) if z.ndim == 0 else z
