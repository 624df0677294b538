"""Generalized Laguerre polynomials and the orthonormal Laguerre functions.

The function system is

    phi_k(x) = sqrt(k! / Gamma(k + a + 1)) * exp(-x/2) * x**(a/2) * L_k^(a)(x),

orthonormal on ``(0, inf)`` for every ``a >= 0``. Polynomials are always
evaluated with the three-term recurrence; the normalization is applied in log
space so large orders do not overflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .quadrature import integrate, panel_integrals

# log-weights below this underflow to zero in exp()
_LOG_TINY = -740.0
# basis functions are treated as zero once below this magnitude
_CUTOFF_TOL = 1e-22


@dataclass(frozen=True)
class BasisSpec:
    """Laguerre parameter ``a`` and number of basis functions ``M``.

    The basis is ``phi_0, ..., phi_{M-1}``.
    """

    a: float
    M: int

    def __post_init__(self):
        if not (np.isfinite(self.a) and self.a >= 0):
            raise ValueError(f"Laguerre parameter must be >= 0, got {self.a}")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"truncation level must be a positive integer, got {self.M}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "M", int(self.M))


def _check_a(a):
    if not (np.isfinite(a) and a >= 0):
        raise ValueError(f"Laguerre parameter must be >= 0, got {a}")


def _check_k(k):
    if int(k) != k or k < 0:
        raise ValueError(f"order must be a nonnegative integer, got {k}")


def laguerre_polys(M, a, x):
    """All polynomials ``L_0^(a), ..., L_{M-1}^(a)`` at ``x``.

    Returns an array of shape ``(M,) + x.shape``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((M,) + x.shape)
    if M == 0:
        return out
    out[0] = 1.0
    if M > 1:
        out[1] = 1.0 + a - x
    for k in range(1, M - 1):
        out[k + 1] = ((2 * k + 1 + a - x) * out[k] - (k + a) * out[k - 1]) / (k + 1)
    return out


def laguerre_poly(k, a, x):
    """Generalized Laguerre polynomial ``L_k^(a)(x)``.

    Uses ``(k+1) L_{k+1} = (2k+1+a-x) L_k - (k+a) L_{k-1}`` seeded with
    ``L_0 = 1`` and ``L_1 = 1 + a - x``.
    """
    _check_k(k)
    _check_a(a)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("x must be finite and nonnegative")
    val = laguerre_polys(k + 1, a, x)[k]
    return float(val) if val.ndim == 0 else val


def log_norms(M, a):
    """``0.5 * log(k! / Gamma(k + a + 1))`` for ``k < M``."""
    k = np.arange(M, dtype=float)
    return 0.5 * (gammaln(k + 1) - gammaln(k + a + 1))


def _log_weight(a, x):
    # log(exp(-x/2) x^(a/2)); -inf at x = 0 when a > 0
    if a == 0:
        return -0.5 * x
    with np.errstate(divide="ignore"):
        return -0.5 * x + 0.5 * a * np.log(x)


def _scale(lognorm, logw):
    s = lognorm.reshape((-1,) + (1,) * logw.ndim) + logw
    return np.where(s < _LOG_TINY, 0.0, np.exp(np.maximum(s, _LOG_TINY)))


def laguerre_fns(M, a, x):
    """Orthonormal functions ``phi_0, ..., phi_{M-1}`` at ``x >= 0``.

    Shape ``(M,) + x.shape``. At ``x = 0`` with ``a > 0`` the analytic limit
    0 is returned.
    """
    x = np.asarray(x, dtype=float)
    scale = _scale(log_norms(M, a), _log_weight(a, x))
    with np.errstate(over="ignore", invalid="ignore"):
        vals = laguerre_polys(M, a, x) * scale
    return np.where(scale == 0.0, 0.0, vals)


def laguerre_fn_derivs(M, a, x):
    """Derivatives ``phi_k'(x)`` for ``k < M`` at ``x > 0``.

    Uses ``d/dx L_k^(a) = -L_{k-1}^(a+1)`` together with
    ``d/dx [exp(-x/2) x^(a/2)] = exp(-x/2) x^(a/2) (a/(2x) - 1/2)``.
    """
    x = np.asarray(x, dtype=float)
    scale = _scale(log_norms(M, a), _log_weight(a, x))
    poly = laguerre_polys(M, a, x)
    dpoly = np.zeros_like(poly)
    if M > 1:
        dpoly[1:] = -laguerre_polys(M - 1, a + 1, x)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        vals = scale * ((0.5 * a / x - 0.5) * poly + dpoly)
    return np.where(scale == 0.0, 0.0, vals)


def laguerre_fn(k, a, x, *, strict=False):
    """Orthonormal Laguerre function ``phi_k^(a)(x)``.

    Parameters
    ----------
    k : int
        Order, ``k >= 0``.
    a : float
        Laguerre parameter, ``a >= 0``.
    x : float or ndarray
        Evaluation points, ``x >= 0``.
    strict : bool
        If true, ``x = 0`` with ``a > 0`` raises instead of returning 0.
    """
    _check_k(k)
    _check_a(a)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("x must be nonnegative")
    if strict and a > 0 and np.any(x == 0):
        raise ValueError("phi_k^(a) at x = 0 requested with a > 0")
    val = laguerre_fns(k + 1, a, x)[k]
    return float(val) if val.ndim == 0 else val


def laguerre_fn_deriv(k, a, x):
    """Derivative of ``phi_k^(a)`` at ``x > 0``."""
    _check_k(k)
    _check_a(a)
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("derivative requires x > 0")
    val = laguerre_fn_derivs(k + 1, a, x)[k]
    return float(val) if val.ndim == 0 else val


def basis_cutoff(M, a, tol=_CUTOFF_TOL):
    """Point beyond which every ``|phi_k|``, ``k < M``, stays below ``tol``.

    Past the largest polynomial zero (below ``4M + 2a + 2``) each function
    decays monotonically, so scanning outward from there is enough.
    """
    x = 4.0 * M + 2.0 * a + 10.0
    while True:
        window = x + np.linspace(0.0, 10.0, 11)
        vals = np.abs(laguerre_fns(M, a, window))
        if vals.max() < tol:
            return float(x)
        x += 10.0


def cumulative_integral(k, a, x):
    """``int_0^x phi_k^(a)(z) dz`` by adaptive quadrature (abs. tol 1e-10).

    Raises :class:`~lagueb.quadrature.QuadratureError` on failure.
    """
    _check_k(k)
    _check_a(a)
    if not x >= 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return 0.0
    return float(integrate(lambda z: laguerre_fns(k + 1, a, z)[k], 0.0, float(x)))


def tail_weighted_integral(k, a, alpha, x, *, scaled=False):
    """``int_x^inf z^(-alpha-1) phi_k^(a)(z) dz`` for ``x > 0``, ``alpha > 2``.

    The integral is computed as ``x^(-alpha-1) W(x)`` with

        W(x) = int_0^inf (x / (x + t))^(alpha+1) phi_k(x + t) dt,

    an integrand that decays like ``exp(-t/2)``. With ``scaled=True``
    ``W(x)`` itself is returned, which stays O(1) for small ``x``.
    """
    _check_k(k)
    _check_a(a)
    if not alpha > 2:
        raise ValueError(f"tail integral requires alpha > 2, got {alpha}")
    if not x > 0:
        raise ValueError("x must be positive")
    x = float(x)
    upper = max(basis_cutoff(k + 1, a) - x, 0.0)
    if upper == 0.0:
        return 0.0

    def integrand(t):
        z = x + t
        return (x / z) ** (alpha + 1) * laguerre_fns(k + 1, a, z)[k]

    # resolve the x/(x+t) decay near t = 0 when x is small
    pts = [p for p in (x, 10 * x, 100 * x) if p < upper]
    w = float(integrate(integrand, 0.0, upper, points=pts))
    return w if scaled else w * x ** (-alpha - 1)


def cumulative_integrals(M, a, x):
    """``int_0^x phi_k(z) dz`` for every ``k < M`` and every entry of ``x``.

    One Gauss-Legendre sweep over the sorted sample; shape ``(M, x.size)``.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        return np.zeros((M, 0))
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    grid, inverse = np.unique(x, return_inverse=True)
    edges = np.concatenate([[0.0], grid])
    pieces = panel_integrals(lambda z: laguerre_fns(M, a, z), edges,
                             max_width=_panel_width(M))
    return np.cumsum(pieces, axis=1)[:, inverse]


def tail_weighted_integrals(M, a, alpha, x, *, scaled=True):
    """Batch version of :func:`tail_weighted_integral` for all ``k < M``.

    Returns ``x^(alpha+1) * int_x^inf z^(-alpha-1) phi_k(z) dz`` when
    ``scaled`` (the default), shape ``(M, x.size)``.
    """
    if not alpha > 2:
        raise ValueError(f"tail integral requires alpha > 2, got {alpha}")
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        return np.zeros((M, 0))
    if np.any(~(x > 0)):
        raise ValueError("x must be positive")
    cutoff = basis_cutoff(M, a)
    grid, inverse = np.unique(x, return_inverse=True)
    inside = grid < cutoff
    edges = np.concatenate([grid[inside], [cutoff]])
    pieces = panel_integrals(
        lambda z: laguerre_fns(M, a, z) * z ** (-alpha - 1.0), edges,
        max_width=_panel_width(M), max_ratio=1.25)
    tails = np.zeros((M, grid.size))
    # suffix sums: integral from each grid point up to the cutoff
    tails[:, inside] = np.cumsum(pieces[:, ::-1], axis=1)[:, ::-1]
    if scaled:
        tails = tails * grid ** (alpha + 1.0)
    return tails[:, inverse]


def _panel_width(M):
    return min(0.5, 4.0 / (M + 1))


def eval_series(coeffs, spec, y):
    """Evaluate ``sum_l coeffs[l] * phi_l^(a)(y)`` in one recurrence sweep.

    ``y`` may be a scalar or an array.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 1 or coeffs.size != spec.M:
        raise ValueError(f"expected {spec.M} coefficients, got shape {coeffs.shape}")
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or np.any(np.isnan(y)):
        raise ValueError("y must be nonnegative")
    a = spec.a
    lognorm = log_norms(spec.M, a)
    logw = _log_weight(a, y)
    scale0 = np.where(logw + lognorm[0] < _LOG_TINY, 0.0,
                      np.exp(np.maximum(logw + lognorm[0], _LOG_TINY)))
    rel = np.exp(lognorm - lognorm[0])  # n_k / n_0
    prev2 = np.zeros_like(y)
    prev = np.ones_like(y)  # L_0
    total = coeffs[0] * prev
    for k in range(1, spec.M):
        if k == 1:
            cur = 1.0 + a - y
        else:
            j = k - 1
            cur = ((2 * j + 1 + a - y) * prev - (j + a) * prev2) / (j + 1)
        total = total + coeffs[k] * rel[k] * cur
        prev2, prev = prev, cur
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.where(scale0 == 0.0, 0.0, total * scale0)
    return float(out) if out.ndim == 0 else out
