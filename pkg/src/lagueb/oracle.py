"""Classical Bayes rule ``t(y) = Psi(y) / p(y)`` for a known prior."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import integrate

MIN_MARGINAL = 1e-12


class NearZeroMarginalError(ValueError):
    """The marginal density is too small for the posterior mean to be reliable."""


@dataclass(frozen=True)
class BayesOracle:
    """Posterior-mean oracle for a (prior, mixing) pair.

    ``p(y)`` and ``Psi(y)`` are integrated over theta together, as the two
    components of one vector integrand, so both use the same panels.
    """

    prior: object
    mixing: object
    quad_tol: float = 1e-10

    def __post_init__(self):
        plo, phi = self.prior.support
        mlo, mhi = self.mixing.theta_domain
        if plo < mlo or phi > mhi:
            raise ValueError(f"prior support {self.prior.support} not inside the "
                             f"{self.mixing.kind} theta domain {self.mixing.theta_domain}")

    def _theta_range(self, y):
        lo, hi = self.prior.support
        kind = self.mixing.kind
        # q(y | theta) vanishes unless y < theta (uniform) or theta <= y (pareto)
        if kind == "uniform":
            lo = max(lo, y)
        elif kind == "pareto":
            hi = min(hi, y)
        return lo, hi

    def _moments(self, y):
        y = float(y)
        lo, hi = self._theta_range(y)
        if not hi > lo:
            return np.zeros(2)
        mlo = self.mixing.theta_domain[0]

        def f(theta):
            if theta <= mlo:
                return np.zeros(2)
            w = self.mixing.conditional_density(y, theta) * self.prior.density(theta)
            return np.array([w, theta * w])

        points = None
        if not np.isfinite(hi):
            # keep the bulk of a gamma-like prior away from the infinite-range map
            points = [max(lo, 1.0), max(lo, 10.0)]
        return integrate(f, lo, hi, epsabs=0.0, epsrel=self.quad_tol, points=points)

    def marginal_density(self, y):
        """``p(y) = int q(y|theta) g(theta) dtheta``."""
        return float(self._moments(y)[0])

    def psi(self, y):
        """``Psi(y) = int theta q(y|theta) g(theta) dtheta``."""
        return float(self._moments(y)[1])

    def bayes_rule(self, y):
        """Posterior mean of theta given ``y``."""
        p, psi = self._moments(y)
        if p < MIN_MARGINAL:
            raise NearZeroMarginalError(f"marginal density {p:.3g} at y={y} is below {MIN_MARGINAL}")
        return float(psi / p)

    def closed_form(self, y):
        """Conjugate exponential/gamma posterior mean ``(s + 1) / (r + y)``.

        Returns ``None`` for every other pair.
        """
        if self.mixing.kind == "exponential" and self.prior.kind == "gamma":
            return (self.prior.shape + 1.0) / (self.prior.rate + float(y))
        return None

    def marginal_quantiles(self, probs, rng, n_pilot=100_000):
        """Quantiles of the marginal from a pilot sample."""
        theta = self.prior.sample(rng, n_pilot)
        x = self.mixing.sample(theta, rng)
        return np.quantile(x, probs)


def marginal_density(oracle, y):
    return oracle.marginal_density(y)


def psi(oracle, y):
    return oracle.psi(y)


def bayes_rule(oracle, y):
    return oracle.bayes_rule(y)
