"""Mixing (conditional) distributions q(x | theta) and their U_k functions.

For each family, ``U_k`` is the function satisfying

    int q(x|theta) U_k(x) dx = theta * int q(x|theta) phi_k(x) dx   for all theta,

so that ``E_p[U_k(X)] = int phi_k(x) Psi(x) dx`` can be estimated by a sample
mean. The Laguerre parameter ``a`` is fixed per family; it is what keeps
``U_k`` square integrable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import basis
from .priors import PriorModel
from .quadrature import integrate

MIXING_KINDS = ("uniform", "pareto", "beta", "exponential", "rayleigh", "weibull")

# (recommended a, norm-growth exponent beta); weibull's a is 2 * alpha
_TABLE = {
    "uniform": (0.0, 0.0),
    "pareto": (0.0, 7.0 / 3.0),
    "beta": (2.0, 1.0),
    "exponential": (2.0, 1.0),
    "rayleigh": (4.0, 1.0),
    "weibull": (None, 1.0),
}


@dataclass(frozen=True)
class MixingModel:
    """One of the six supported families.

    Build instances with the classmethods (:meth:`uniform`, :meth:`pareto`,
    ...). ``alpha`` is the known shape parameter (Pareto, Beta, Weibull);
    ``lo``/``hi`` bound theta for the uniform family; ``theta_max`` is the
    Pareto upper bound on theta.
    """

    kind: str
    alpha: float | None = None
    lo: float | None = None
    hi: float | None = None
    theta_max: float | None = None

    def __post_init__(self):
        if self.kind not in MIXING_KINDS:
            raise ValueError(f"unknown mixing kind {self.kind!r}")
        needs_alpha = self.kind in ("pareto", "beta", "weibull")
        if needs_alpha != (self.alpha is not None):
            raise ValueError(f"{self.kind} mixing {'needs' if needs_alpha else 'takes no'} alpha")
        if self.kind == "pareto":
            if not self.alpha > 2:
                raise ValueError(f"pareto mixing needs alpha > 2, got {self.alpha}")
            if self.theta_max is None or not self.theta_max > 1:
                raise ValueError("pareto mixing needs theta_max > 1")
        elif self.theta_max is not None:
            raise ValueError(f"{self.kind} mixing takes no theta_max")
        if needs_alpha and not self.alpha > 0:
            raise ValueError(f"{self.kind} mixing needs alpha > 0")
        if self.kind == "uniform":
            if self.lo is None or self.hi is None or not 0 < self.lo <= self.hi < np.inf:
                raise ValueError("uniform mixing needs 0 < lo <= hi")
        elif self.lo is not None or self.hi is not None:
            raise ValueError(f"{self.kind} mixing takes no lo/hi")

    # construction ----------------------------------------------------------

    @classmethod
    def uniform(cls, lo=0.5, hi=3.0):
        return cls("uniform", lo=float(lo), hi=float(hi))

    @classmethod
    def pareto(cls, alpha=3.0, theta_max=3.0):
        return cls("pareto", alpha=float(alpha), theta_max=float(theta_max))

    @classmethod
    def beta(cls, alpha=2.0):
        return cls("beta", alpha=float(alpha))

    @classmethod
    def exponential(cls):
        return cls("exponential")

    @classmethod
    def rayleigh(cls):
        return cls("rayleigh")

    @classmethod
    def weibull(cls, alpha=1.5):
        return cls("weibull", alpha=float(alpha))

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind")
        if kind not in MIXING_KINDS:
            raise ValueError(f"unknown mixing kind {kind!r}")
        return getattr(cls, kind)(**d)

    def to_dict(self):
        keys = {"uniform": ("lo", "hi"), "pareto": ("alpha", "theta_max"),
                "beta": ("alpha",), "weibull": ("alpha",)}.get(self.kind, ())
        return {"kind": self.kind, **{k: getattr(self, k) for k in keys}}

    # fixed characteristics -------------------------------------------------

    @property
    def recommended_a(self):
        a, _ = _TABLE[self.kind]
        return 2.0 * self.alpha if a is None else a

    @property
    def beta_exponent(self):
        return _TABLE[self.kind][1]

    @property
    def theta_domain(self):
        """``(lo, hi)`` of admissible theta; open at 0, closed at finite ends."""
        if self.kind == "uniform":
            return (self.lo, self.hi)
        if self.kind == "pareto":
            return (0.0, self.theta_max)
        return (0.0, np.inf)

    @property
    def x_support(self):
        if self.kind == "uniform":
            return (0.0, self.hi)
        if self.kind == "beta":
            return (0.0, 1.0)
        return (0.0, np.inf)

    @property
    def norm_domain(self):
        """Range over which the growth of ``int U_k^2`` is measured.

        Uniform data concentrate on ``[lo, hi]`` and Pareto tails on
        ``[theta_max, inf)``; these are the ranges the square-norm bounds
        for those two families are stated on.
        """
        if self.kind == "uniform":
            return (self.lo, self.hi)
        if self.kind == "pareto":
            return (self.theta_max, np.inf)
        return self.x_support

    def default_prior(self):
        if self.kind == "uniform":
            return PriorModel.uniform(self.lo, self.hi)
        if self.kind == "pareto":
            return PriorModel.uniform(0.5, self.theta_max)
        if self.kind == "beta":
            return PriorModel.uniform(1.0, 4.0)
        return PriorModel.gamma(2.0, 1.0)

    def theta_grid(self, n=5):
        """``n`` theta values spread over the (effective) theta domain."""
        if self.kind == "uniform":
            return np.linspace(self.lo, self.hi, n)
        if self.kind == "pareto":
            return np.linspace(self.theta_max / n, self.theta_max, n)
        if self.kind == "beta":
            return np.geomspace(0.5, 8.0, n)
        return np.geomspace(0.25, 4.0, n)

    def check_theta(self, theta):
        theta = np.asarray(theta, dtype=float)
        lo, hi = self.theta_domain
        ok = (theta >= lo) & (theta <= hi) if self.kind == "uniform" else (theta > lo) & (theta <= hi)
        if not np.all(ok):
            raise ValueError(f"theta outside the {self.kind} domain {self.theta_domain}")
        return theta

    # densities and sampling ------------------------------------------------

    def conditional_density(self, x, theta):
        """``q(x | theta)``; zero outside the conditional support."""
        theta = self.check_theta(theta)
        x = np.asarray(x, dtype=float)
        k = self.kind
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if k == "uniform":
                out = np.where((x > 0) & (x < theta), 1.0 / theta, 0.0)
            elif k == "pareto":
                al = self.alpha
                out = np.where(x >= theta, al * theta ** al / x ** (al + 1), 0.0)
            elif k == "beta":
                al = self.alpha
                inside = (x > 0) & (x < 1)
                xs = np.where(inside, x, 0.5)
                logq = (gammaln(theta + al) - gammaln(theta) - gammaln(al)
                        + (al - 1) * np.log(xs) + (theta - 1) * np.log1p(-xs))
                out = np.where(inside, np.exp(logq), 0.0)
            elif k == "exponential":
                out = np.where(x >= 0, theta * np.exp(-x * theta), 0.0)
            elif k == "rayleigh":
                out = np.where(x >= 0, theta * x * np.exp(-0.5 * x * x * theta), 0.0)
            else:
                al = self.alpha
                xs = np.maximum(x, 0.0)
                out = np.where(x >= 0, al * theta * xs ** (al - 1) * np.exp(-xs ** al * theta), 0.0)
        return float(out) if out.ndim == 0 else out

    def sample(self, theta, rng):
        """One draw from ``q(. | theta)`` per entry of ``theta``.

        Inverse-CDF transforms throughout, except the beta family which uses
        the generator's beta sampler (its CDF has no closed-form inverse for
        general alpha).
        """
        theta = self.check_theta(theta)
        k = self.kind
        if k == "beta":
            out = rng.beta(self.alpha, theta)
        else:
            # u in (0, 1]
            u = 1.0 - rng.random(theta.shape)
            if k == "uniform":
                out = theta * u
            elif k == "pareto":
                out = theta * u ** (-1.0 / self.alpha)
            elif k == "exponential":
                out = -np.log(u) / theta
            elif k == "rayleigh":
                out = np.sqrt(-2.0 * np.log(u) / theta)
            else:
                out = (-np.log(u) / theta) ** (1.0 / self.alpha)
        return float(out) if np.ndim(out) == 0 else out

    def expectation(self, f, theta, *, breaks=(), epsabs=1e-12, epsrel=1e-10):
        """``int q(x|theta) f(x) dx`` by adaptive quadrature.

        ``f`` maps a scalar to a scalar or array. ``breaks`` are extra
        breakpoints (e.g. where ``f`` stops mattering).
        """
        theta = float(self.check_theta(theta))
        if self.kind == "beta":
            # x = sin^2(pi s / 2) softens the algebraic endpoint singularities
            def g(s):
                x = np.sin(0.5 * np.pi * s) ** 2
                if x <= 0.0 or x >= 1.0:
                    return 0.0 * np.asarray(f(0.5))
                jac = 0.5 * np.pi * np.sin(np.pi * s)
                return self.conditional_density(x, theta) * jac * np.asarray(f(x))
            return integrate(g, 0.0, 1.0, epsabs=epsabs, epsrel=epsrel)
        if self.kind == "uniform":
            lo, hi = 0.0, theta
        elif self.kind == "pareto":
            lo, hi = theta, np.inf
        else:
            lo, hi = 0.0, np.inf
        return integrate(lambda x: self.conditional_density(x, theta) * np.asarray(f(x)),
                         lo, hi, points=breaks, epsabs=epsabs, epsrel=epsrel)

    # U_k -------------------------------------------------------------------

    def check_x(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.x_support
        bad = ~(x > lo) | (x > hi)
        if np.any(bad):
            raise ValueError(f"x outside the {self.kind} support {self.x_support}")
        return x

    def u_table(self, M, x):
        """``U_k(x)`` for all ``k < M``; shape ``(M, x.size)``.

        The uniform and Pareto families need one integral per point; these are
        done in a single sorted sweep over ``x``.
        """
        x = self.check_x(x).ravel()
        a = self.recommended_a
        k = self.kind
        if k == "uniform":
            return basis.cumulative_integrals(M, a, x) + x * basis.laguerre_fns(M, a, x)
        if k == "pareto":
            tail = basis.tail_weighted_integrals(M, a, self.alpha, x, scaled=True)
            return x * basis.laguerre_fns(M, a, x) - tail
        if k == "beta":
            one_minus = 1.0 - x
            return ((self.alpha - 1.0) * one_minus / x * basis.laguerre_fns(M, a, x)
                    + one_minus * basis.laguerre_fn_derivs(M, a, x))
        d = basis.laguerre_fn_derivs(M, a, x)
        if k == "exponential":
            return d
        if k == "rayleigh":
            return d / x
        return d / (self.alpha * x ** (self.alpha - 1.0))

    def u_fn(self, k, x):
        """``U_k(x)`` at a single point.

        The integral terms of the uniform and Pareto families go through the
        adaptive routines rather than the batch sweep used by :meth:`u_table`.
        """
        x = float(self.check_x(x))
        a = self.recommended_a
        if self.kind == "uniform":
            return basis.cumulative_integral(k, a, x) + x * basis.laguerre_fn(k, a, x)
        if self.kind == "pareto":
            return (x * basis.laguerre_fn(k, a, x)
                    - basis.tail_weighted_integral(k, a, self.alpha, x, scaled=True))
        return float(self.u_table(k + 1, np.array([x]))[k, 0])


def _single(model, M, u_table=None):
    table = model.u_table if u_table is None else u_table

    def u(x):
        return table(M, np.array([x]))[:, 0]
    return u


def u_identity_residuals(model, k_max, theta, *, u_table=None):
    """Residuals of the U-identity for ``k = 0..k_max`` at one theta.

    Both sides, ``int q U_k`` and ``theta int q phi_k``, are computed by
    adaptive quadrature. ``u_table`` substitutes the ``U`` evaluator (used to
    check that the checker catches a wrong derivation).
    """
    M = k_max + 1
    a = model.recommended_a
    breaks = () if model.kind in ("uniform", "beta") else (basis.basis_cutoff(M, a),)
    lhs = model.expectation(_single(model, M, u_table), theta, breaks=breaks)
    rhs = theta * model.expectation(lambda x: basis.laguerre_fns(M, a, x), theta,
                                    breaks=breaks)
    return np.abs(np.asarray(lhs) - np.asarray(rhs))


def verify_u_identity(model, k, theta):
    """Absolute difference between the two sides of the U-identity."""
    return float(u_identity_residuals(model, k, theta)[k])


def u_norms(model, k_max):
    """``int U_k^2`` over :attr:`MixingModel.norm_domain` for ``k <= k_max``."""
    M = k_max + 1
    lo, hi = model.norm_domain
    u = _single(model, M)
    if np.isfinite(hi):
        return integrate(lambda x: u(x) ** 2, lo, hi)
    # every U_k here is built from phi_k and vanishes past the basis cutoff
    cut = basis.basis_cutoff(M, model.recommended_a)
    return integrate(lambda x: u(x) ** 2, lo, max(cut, lo))


def u_norm(model, k):
    """``int U_k^2`` over the model's norm domain."""
    return float(u_norms(model, k)[k])
