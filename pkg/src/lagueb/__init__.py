"""Laguerre-basis estimators of posterior means for scale mixtures."""

__version__ = "0.1.0"

from .basis import (  # noqa: E402
    BasisSpec,
    cumulative_integral,
    eval_series,
    laguerre_fn,
    laguerre_fn_deriv,
    laguerre_poly,
    tail_weighted_integral,
)
from .estimator import (  # noqa: E402
    EstimatorConfig,
    FittedEstimator,
    MomentMatrices,
    build_a_hat,
    build_c_hat,
    choose_m,
    delta_of,
    fit,
    predict,
    solve_coeffs,
)
from .mixing import MixingModel, u_norm, verify_u_identity  # noqa: E402
from .oracle import BayesOracle  # noqa: E402
from .priors import PriorModel  # noqa: E402

__all__ = [
    "BasisSpec", "BayesOracle", "EstimatorConfig", "FittedEstimator",
    "MixingModel", "MomentMatrices", "PriorModel", "build_a_hat", "build_c_hat",
    "choose_m", "cumulative_integral", "delta_of", "eval_series", "fit",
    "laguerre_fn", "laguerre_fn_deriv", "laguerre_poly", "predict",
    "solve_coeffs", "tail_weighted_integral", "u_norm", "verify_u_identity",
]
