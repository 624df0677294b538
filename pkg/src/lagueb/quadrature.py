"""Numerical integration helpers.

Two routes are provided:

* :func:`integrate` wraps the adaptive Gauss-Kronrod driver
  :func:`scipy.integrate.quad_vec`, which handles vector-valued integrands
  and so lets a whole block of basis integrals share one set of panels.
* :func:`panel_integrals` integrates a vector-valued integrand between many
  consecutive breakpoints with fixed-order Gauss-Legendre rules. Sorting the
  breakpoints and taking cumulative sums gives running integrals at every data
  point in one sweep, which is how the estimator evaluates integral-type
  ``U_k`` functions on a sample.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad_vec

DEFAULT_EPSABS = 1e-10
DEFAULT_EPSREL = 1e-10
DEFAULT_LIMIT = 20000

_GL_ORDER = 20
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


def integrate(f, lo, hi, *, epsabs=DEFAULT_EPSABS, epsrel=DEFAULT_EPSREL,
              limit=DEFAULT_LIMIT, points=None):
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[lo, hi]``.

    ``f`` may return a scalar or an array; the error criterion is applied to
    the largest component. ``hi`` may be ``np.inf``.

    Raises
    ------
    QuadratureError
        If the subdivision limit is reached before the tolerance is met.
    """
    if hi == lo:
        return np.zeros_like(np.asarray(f(lo), dtype=float))
    pts = sorted(p for p in (points or ()) if lo < p < hi)
    if pts and not np.isfinite(hi):
        # quad_vec ignores breakpoints on infinite ranges; split by hand
        edges = [lo, *pts, hi]
        return sum(integrate(f, a, b, epsabs=epsabs, epsrel=epsrel,
                             limit=limit)
                   for a, b in zip(edges[:-1], edges[1:]))
    # an identically zero integrand never meets quad_vec's strict test with
    # epsabs = 0, so floor it at the smallest positive double
    epsabs = max(epsabs, np.finfo(float).tiny)
    kwargs = dict(epsabs=epsabs, epsrel=epsrel, norm="max", limit=limit,
                  full_output=True)
    if pts:
        kwargs["points"] = pts
    res, err, info = quad_vec(f, lo, hi, **kwargs)
    if not info.success:
        raise QuadratureError(
            f"quadrature on [{lo}, {hi}] stopped at error {err:.3g} "
            f"after {info.intervals.shape[0]} panels")
    return res


def split_panels(edges, *, max_width, max_ratio=None):
    """Refine consecutive breakpoints into Gauss-Legendre panels.

    Returns ``(left, right, owner)`` where panel ``i`` spans
    ``[left[i], right[i]]`` and belongs to the original interval
    ``[edges[owner[i]], edges[owner[i] + 1]]``.

    With ``max_ratio`` set, intervals with a positive left end are first cut
    geometrically so that ``right / left <= max_ratio``; this keeps integrands
    with a power singularity at the origin well resolved.
    """
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    keep = b > a
    idx = np.flatnonzero(keep)
    a, b = a[keep], b[keep]
    if max_ratio is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(a > 0, b / np.where(a > 0, a, 1.0), 1.0)
        n_geo = np.where(ratio > max_ratio,
                         np.ceil(np.log(ratio) / math.log(max_ratio)), 1)
    else:
        ratio = np.ones_like(a)
        n_geo = np.ones_like(a)
    n_geo = n_geo.astype(int)
    a, b, ratio, owner = _subdivide(a, b, n_geo, idx,
                                    lambda a, b, r, t: a * r ** t, ratio)
    n_lin = np.maximum(1, np.ceil((b - a) / max_width)).astype(int)
    a, b, _, owner = _subdivide(a, b, n_lin, owner,
                                lambda a, b, r, t: a + (b - a) * t, ratio)
    return a, b, owner


def _subdivide(a, b, counts, owner, cut, ratio):
    rep = np.repeat(np.arange(a.size), counts)
    first = np.repeat(np.cumsum(counts) - counts, counts)
    i = np.arange(rep.size) - first
    n = counts[rep]
    aa, bb, rr = a[rep], b[rep], ratio[rep]
    left = np.where(i == 0, aa, cut(aa, bb, rr, i / n))
    right = np.where(i + 1 == n, bb, cut(aa, bb, rr, (i + 1) / n))
    return left, right, rr, owner[rep]


def panel_integrals(f, edges, *, max_width=0.25, max_ratio=None,
                    chunk=4096):
    """Integrals of ``f`` over each interval between consecutive ``edges``.

    ``f`` maps an array of nodes ``z`` (1-D) to an array of shape
    ``(m, z.size)``. The result has shape ``(m, len(edges) - 1)``.
    """
    edges = np.asarray(edges, dtype=float)
    left, right, owner = split_panels(edges, max_width=max_width,
                                      max_ratio=max_ratio)
    n_out = edges.size - 1
    result = None
    for start in range(0, left.size, chunk):
        lo = left[start:start + chunk]
        hi = right[start:start + chunk]
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
        vals = np.asarray(f(nodes), dtype=float)
        vals = vals.reshape(vals.shape[0], lo.size, _GL_ORDER)
        pieces = (vals @ _GL_WEIGHTS) * half[None, :]
        if result is None:
            result = np.zeros((vals.shape[0], n_out))
        np.add.at(result.T, owner[start:start + chunk], pieces.T)
    if result is None:
        probe = np.asarray(f(np.array([edges[0] if edges.size else 0.0])))
        result = np.zeros((probe.shape[0], n_out))
    return result

