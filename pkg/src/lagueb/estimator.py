"""The Laguerre-series empirical Bayes estimator.

The Bayes rule is approximated by ``t_M(y) = sum_l theta_l phi_l(y)`` whose
coefficients solve ``A theta = C`` with

    A_lk = E[phi_l(X) phi_k(X)],    c_k = E[U_k(X)],

both replaced by sample means and stabilized by a ridge term ``delta * I``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .basis import BasisSpec, eval_series, laguerre_fns

SCHEMA_VERSION = 1
CHUNK = 4096


class NumericalError(RuntimeError):
    """A numerical step produced a result outside its guaranteed accuracy."""


@dataclass(frozen=True)
class EstimatorConfig:
    """Basis, ridge size and the smoothness inputs of the M schedule."""

    basis: BasisSpec
    delta: float
    r_star: float = 1.0
    rate_constant: float = 1.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not self.r_star > 0:
            raise ValueError(f"r_star must be positive, got {self.r_star}")
        if not self.rate_constant > 0:
            raise ValueError("rate_constant must be positive")

    @classmethod
    def scheduled(cls, n_obs, model, r_star=1.0, rate_constant=1.0):
        """Config with ``M`` from :func:`choose_m` and ``delta`` from :func:`delta_of`."""
        M = choose_m(n_obs, r_star, model.beta_exponent, rate_constant)
        return cls(BasisSpec(model.recommended_a, M), delta_of(n_obs, M),
                   r_star, rate_constant)


@dataclass(frozen=True)
class MomentMatrices:
    a_hat: np.ndarray
    c_hat: np.ndarray
    n_obs: int


@dataclass(frozen=True, eq=False)
class FittedEstimator:
    coeffs: np.ndarray
    basis: BasisSpec
    delta_used: float
    n_obs: int

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.shape != (self.basis.M,):
            raise ValueError("coefficient count must equal M")
        if not np.all(np.isfinite(coeffs)):
            raise NumericalError("non-finite coefficients")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    def __eq__(self, other):
        if not isinstance(other, FittedEstimator):
            return NotImplemented
        return (self.basis == other.basis and self.delta_used == other.delta_used
                and self.n_obs == other.n_obs
                and np.array_equal(self.coeffs, other.coeffs))

    def predict(self, y):
        return predict(self, y)

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "a": self.basis.a,
            "M": self.basis.M,
            "delta": self.delta_used,
            "n_obs": self.n_obs,
            "coeffs": [float(c) for c in self.coeffs],
        }

    def to_json(self):
        # json writes floats with repr, which round-trips exactly
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d):
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported estimator schema {d.get('schema_version')!r}")
        extra = set(d) - {"schema_version", "a", "M", "delta", "n_obs", "coeffs"}
        if extra:
            raise ValueError(f"unknown estimator fields: {sorted(extra)}")
        return cls(np.asarray(d["coeffs"], dtype=float), BasisSpec(d["a"], d["M"]),
                   float(d["delta"]), int(d["n_obs"]))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _prepare(data):
    data = np.asarray(data, dtype=float).ravel()
    if data.size == 0:
        raise ValueError("data must be nonempty")
    if not np.all(np.isfinite(data)):
        raise ValueError("data must be finite")
    # the averages are symmetric in the sample; a canonical order makes them
    # bitwise independent of the input order
    return np.sort(data)


def _chunked_mean(data, block):
    """Mean of ``block(chunk)`` over fixed-size chunks of ``data``.

    Per-chunk sums are combined with Kahan compensation, so the reduction
    order is fixed by ``CHUNK`` alone.
    """
    total = comp = None
    for start in range(0, data.size, CHUNK):
        part = block(data[start:start + CHUNK])
        if total is None:
            total = np.zeros_like(part)
            comp = np.zeros_like(part)
        y = part - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total / data.size


def build_a_hat(data, spec):
    """Sample Gram matrix ``N^-1 G^T G`` with ``G_il = phi_l(X_i)``."""
    data = _prepare(data)
    if np.any(data < 0):
        raise ValueError("data must be nonnegative")

    def block(x):
        g = laguerre_fns(spec.M, spec.a, x)
        if not np.all(np.isfinite(g)):
            raise NumericalError("non-finite basis value")
        return g @ g.T

    a_hat = _chunked_mean(data, block)
    return 0.5 * (a_hat + a_hat.T)


def build_c_hat(data, model, M):
    """Sample means ``N^-1 sum_i U_k(X_i)`` for ``k < M``."""
    data = _prepare(data)
    # averaging deviations from the first (smallest) point keeps a constant
    # sample exact and trims cancellation
    ref = model.u_table(M, data[:1])[:, 0]

    def block(x):
        u = model.u_table(M, x)
        if not np.all(np.isfinite(u)):
            raise NumericalError("non-finite U_k value")
        return (u - ref[:, None]).sum(axis=1)

    return ref + _chunked_mean(data, block)


def build_moments(data, model, spec):
    if spec.a != model.recommended_a:
        raise ValueError(f"basis parameter a={spec.a} does not match the "
                         f"{model.kind} choice a={model.recommended_a}")
    n = np.asarray(data).size
    return MomentMatrices(build_a_hat(data, spec), build_c_hat(data, model, spec.M), n)


def solve_coeffs(mm, delta):
    """Solve ``(A_hat + delta I) theta = C_hat`` by Cholesky.

    ``A_hat`` is a Gram matrix, so the shifted matrix is positive definite for
    any ``delta > 0``. One step of iterative refinement is applied; a residual
    above ``1e-10 * ||C_hat||`` raises :class:`NumericalError`.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    a_hat = np.asarray(mm.a_hat, dtype=float)
    c_hat = np.asarray(mm.c_hat, dtype=float)
    shifted = a_hat + delta * np.eye(a_hat.shape[0])
    try:
        factor = cho_factor(shifted, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("ridge-shifted moment matrix is not positive definite") from exc
    theta = cho_solve(factor, c_hat)
    theta = theta + cho_solve(factor, c_hat - shifted @ theta)
    resid = np.linalg.norm(shifted @ theta - c_hat)
    if resid > 1e-10 * np.linalg.norm(c_hat):
        raise NumericalError(f"solve residual {resid:.3g} exceeds tolerance")
    return theta


def choose_m(n_obs, r_star, beta_exponent, rate_constant=1.0):
    """Truncation level ``round(c * N^(1 / ((beta v 1) + 2 r* + 1)))``.

    Capped at ``sqrt(N / 4)`` so that ``M^2 / N`` stays small, and at least 1.
    """
    if n_obs < 2:
        raise ValueError("n_obs must be at least 2")
    exponent = 1.0 / (max(beta_exponent, 1.0) + 2.0 * r_star + 1.0)
    m = math.floor(rate_constant * n_obs ** exponent + 0.5)
    cap = math.floor(math.sqrt(n_obs / 4.0))
    return max(1, min(m, cap))


def delta_of(n_obs, M):
    """Ridge size ``delta = M / sqrt(N)``."""
    return M / math.sqrt(n_obs)


def fit(data, model, config):
    """Fit the estimator on ``data`` drawn from the marginal of ``model``."""
    mm = build_moments(data, model, config.basis)
    coeffs = solve_coeffs(mm, config.delta)
    return FittedEstimator(coeffs, config.basis, float(config.delta), mm.n_obs)


def predict(fitted, y):
    """``t_hat_M(y)``."""
    return eval_series(fitted.coeffs, fitted.basis, y)
