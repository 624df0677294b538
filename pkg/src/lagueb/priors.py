"""Priors on the mixing parameter, used to synthesize data and by the oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

PRIOR_KINDS = ("gamma", "uniform", "truncated_gamma")


@dataclass(frozen=True)
class PriorModel:
    """A prior density ``g(theta)``.

    ``kind`` is one of ``"gamma"`` (shape/rate), ``"uniform"`` (lo/hi) or
    ``"truncated_gamma"`` (shape/rate restricted to ``[lo, hi]``).
    """

    kind: str
    shape: float | None = None
    rate: float | None = None
    lo: float | None = None
    hi: float | None = None

    def __post_init__(self):
        if self.kind not in PRIOR_KINDS:
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.kind in ("gamma", "truncated_gamma"):
            if not (self.shape and self.shape > 0 and self.rate and self.rate > 0):
                raise ValueError("gamma prior needs shape > 0 and rate > 0")
        if self.kind in ("uniform", "truncated_gamma"):
            if self.lo is None or self.hi is None or not (0 <= self.lo < self.hi < np.inf):
                raise ValueError("interval prior needs 0 <= lo < hi < inf")

    @classmethod
    def gamma(cls, shape, rate):
        return cls("gamma", shape=float(shape), rate=float(rate))

    @classmethod
    def uniform(cls, lo, hi):
        return cls("uniform", lo=float(lo), hi=float(hi))

    @classmethod
    def truncated_gamma(cls, shape, rate, lo, hi):
        return cls("truncated_gamma", shape=float(shape), rate=float(rate),
                   lo=float(lo), hi=float(hi))

    @property
    def support(self):
        if self.kind == "gamma":
            return (0.0, np.inf)
        return (self.lo, self.hi)

    def _mass(self):
        # gamma mass on [lo, hi]; used to renormalize the truncated prior
        return (special.gammainc(self.shape, self.rate * self.hi)
                - special.gammainc(self.shape, self.rate * self.lo))

    def _gamma_pdf(self, theta):
        t = np.maximum(theta, 1e-300)
        logg = (self.shape * np.log(self.rate) - special.gammaln(self.shape)
                + (self.shape - 1.0) * np.log(t) - self.rate * t)
        return np.exp(logg)

    def density(self, theta):
        """``g(theta)``; zero off the support."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == "uniform":
            inside = (theta >= self.lo) & (theta <= self.hi)
            out = np.where(inside, 1.0 / (self.hi - self.lo), 0.0)
        elif self.kind == "gamma":
            out = np.where(theta > 0, self._gamma_pdf(theta), 0.0)
        else:
            inside = (theta >= self.lo) & (theta <= self.hi)
            out = np.where(inside, self._gamma_pdf(theta) / self._mass(), 0.0)
        return float(out) if out.ndim == 0 else out

    def cdf(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.kind == "uniform":
            out = np.clip((theta - self.lo) / (self.hi - self.lo), 0.0, 1.0)
        elif self.kind == "gamma":
            out = special.gammainc(self.shape, self.rate * np.maximum(theta, 0.0))
        else:
            lo = special.gammainc(self.shape, self.rate * self.lo)
            cur = special.gammainc(self.shape, self.rate * np.clip(theta, self.lo, self.hi))
            out = np.clip((cur - lo) / self._mass(), 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def mean(self):
        if self.kind == "uniform":
            return 0.5 * (self.lo + self.hi)
        if self.kind == "gamma":
            return self.shape / self.rate
        upper = (special.gammainc(self.shape + 1.0, self.rate * self.hi)
                 - special.gammainc(self.shape + 1.0, self.rate * self.lo))
        return float(self.shape / self.rate * upper / self._mass())

    def sample(self, rng, size=None):
        """Draw from the prior with an externally owned generator."""
        if self.kind == "uniform":
            return self.lo + (self.hi - self.lo) * rng.random(size)
        if self.kind == "gamma":
            return rng.gamma(self.shape, 1.0 / self.rate, size)
        n = 1 if size is None else int(np.prod(size))
        out = np.empty(0)
        while out.size < n:
            draw = rng.gamma(self.shape, 1.0 / self.rate, 2 * (n - out.size) + 16)
            out = np.concatenate([out, draw[(draw >= self.lo) & (draw <= self.hi)]])
        out = out[:n]
        return float(out[0]) if size is None else out.reshape(size)

    def to_dict(self):
        keys = {"gamma": ("shape", "rate"), "uniform": ("lo", "hi"),
                "truncated_gamma": ("shape", "rate", "lo", "hi")}[self.kind]
        return {"kind": self.kind, **{k: getattr(self, k) for k in keys}}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def sample_theta(prior, rng, size=None):
    return prior.sample(rng, size)


def prior_density(prior, theta):
    return prior.density(theta)
