"""Monte Carlo risk studies.

For each sample size ``N`` and replication, a fresh sample is drawn from the
(prior, mixing) pair, the estimator is fitted with the scheduled ``M`` and
``delta``, and the squared error ``(t_hat(y) - t(y))^2`` against the oracle is
recorded at every evaluation point. Averaging over replications estimates the
pointwise risk; a log-log regression over ``N`` estimates its decay rate.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .estimator import EstimatorConfig, fit
from .mixing import MixingModel
from .oracle import BayesOracle
from .priors import PriorModel
from .streams import pilot_stream, stream

log = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
MAX_FAILURE_FRACTION = 0.10
DEFAULT_QUANTILES = (0.25, 0.5, 0.75)
MIN_EVAL_DENSITY = 1e-6


class StudyError(RuntimeError):
    """Too many replications failed for the study to be meaningful."""


@dataclass(frozen=True)
class StudyConfig:
    mixing: MixingModel
    prior: PriorModel
    sample_sizes: tuple
    replications: int
    eval_points: tuple | None = None
    r_star: float = 1.0
    rate_constant: float = 1.0
    master_seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sample_sizes)
        if not sizes or any(n < 2 for n in sizes):
            raise ValueError("sample sizes must be integers >= 2")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError("sample sizes must be strictly increasing")
        object.__setattr__(self, "sample_sizes", sizes)
        if int(self.replications) != self.replications or self.replications < 2:
            raise ValueError("replications must be an integer >= 2")
        object.__setattr__(self, "replications", int(self.replications))
        if self.eval_points is not None:
            pts = tuple(float(y) for y in self.eval_points)
            self.mixing.check_x(np.asarray(pts))
            object.__setattr__(self, "eval_points", pts)
        if not self.r_star > 0 or not self.rate_constant > 0:
            raise ValueError("r_star and rate_constant must be positive")
        # constructing the oracle validates prior support against the domain
        BayesOracle(self.prior, self.mixing)

    @property
    def oracle(self):
        return BayesOracle(self.prior, self.mixing)

    def estimator_config(self, n):
        return EstimatorConfig.scheduled(n, self.mixing, self.r_star, self.rate_constant)

    def to_dict(self):
        return {
            "mixing": self.mixing.to_dict(),
            "prior": self.prior.to_dict(),
            "estimator": {"r_star": self.r_star, "rate_constant": self.rate_constant},
            "study": {
                "sample_sizes": list(self.sample_sizes),
                "replications": self.replications,
                "eval_points": None if self.eval_points is None else list(self.eval_points),
                "master_seed": self.master_seed,
            },
        }


@dataclass
class ExperimentReport:
    config: dict
    rows: list
    slopes: dict | None = None
    schedule: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    schema_version: int = REPORT_SCHEMA_VERSION
    software_version: str = __version__

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "software_version": self.software_version,
            "config": self.config,
            "schedule": self.schedule,
            "rows": self.rows,
            "slopes": self.slopes,
            "failures": self.failures,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(config=d["config"], rows=d["rows"], slopes=d.get("slopes"),
                   schedule=d.get("schedule", []), failures=d.get("failures", []),
                   schema_version=d["schema_version"],
                   software_version=d.get("software_version", __version__))

    def mse_table(self):
        """``(sizes, ys, mse, se)`` with ``mse[i, j]`` at ``(sizes[i], ys[j])``."""
        sizes = sorted({r["n"] for r in self.rows})
        ys = sorted({r["y"] for r in self.rows})
        mse = np.full((len(sizes), len(ys)), np.nan)
        se = np.full_like(mse, np.nan)
        for r in self.rows:
            i, j = sizes.index(r["n"]), ys.index(r["y"])
            mse[i, j] = r["mse"]
            se[i, j] = r["se"]
        return np.array(sizes), np.array(ys), mse, se


def theoretical_exponent(r_star, beta_exponent):
    """Risk exponent ``-2 r* / ((beta v 1) + 2 r* + 1)``."""
    return -2.0 * r_star / (max(beta_exponent, 1.0) + 2.0 * r_star + 1.0)


def resolve_eval_points(config, probs=DEFAULT_QUANTILES, n_pilot=100_000):
    """Configured evaluation points, or marginal quantiles from a pilot sample."""
    if config.eval_points is not None:
        pts = config.eval_points
    else:
        pts = tuple(float(q) for q in config.oracle.marginal_quantiles(
            probs, pilot_stream(config.master_seed), n_pilot))
    oracle = config.oracle
    for y in pts:
        if oracle.marginal_density(y) < MIN_EVAL_DENSITY:
            raise ValueError(f"marginal density at y={y} is too small to evaluate risk")
    return pts


def draw_sample(config, n, rng):
    theta = config.prior.sample(rng, n)
    return config.mixing.sample(theta, rng)


def fitted_predictor(config, data):
    est = fit(data, config.mixing, config.estimator_config(data.size))
    return est.predict


def run_replication(config, n, rep, *, eval_points=None, truth=None,
                    predictor=fitted_predictor):
    """Squared errors at the evaluation points for one replication.

    ``predictor(config, data)`` must return a callable ``y -> t_hat(y)``;
    the default fits the Laguerre estimator.
    """
    if n not in config.sample_sizes:
        raise ValueError(f"sample size {n} is not part of the study")
    if eval_points is None:
        eval_points = resolve_eval_points(config)
    ys = np.asarray(eval_points, dtype=float)
    if truth is None:
        truth = [config.oracle.bayes_rule(y) for y in ys]
    data = draw_sample(config, n, stream(config.master_seed, n, rep))
    t_hat = np.asarray(predictor(config, data)(ys), dtype=float)
    return (t_hat - np.asarray(truth)) ** 2


def run_study(config, *, threads=1, predictor=fitted_predictor):
    """Run every (N, replication) pair and aggregate the risks.

    Replications may run on several threads; each uses its own stream and the
    results are combined in a fixed order, so the report does not depend on
    scheduling.
    """
    ys = resolve_eval_points(config)
    truth = [config.oracle.bayes_rule(y) for y in ys]
    tasks = [(n, rep) for n in config.sample_sizes for rep in range(config.replications)]

    def one(task):
        n, rep = task
        try:
            return run_replication(config, n, rep, eval_points=ys, truth=truth,
                                   predictor=predictor), None
        except Exception as exc:  # recorded per replication, see below
            return None, f"{type(exc).__name__}: {exc}"

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(one, tasks))
    else:
        outcomes = [one(t) for t in tasks]

    failures = [{"n": n, "rep": rep, "error": err}
                for (n, rep), (_, err) in zip(tasks, outcomes) if err is not None]
    if len(failures) > MAX_FAILURE_FRACTION * len(tasks):
        raise StudyError(f"{len(failures)} of {len(tasks)} replications failed; "
                         f"first: {failures[0]['error']}")
    for f in failures:
        log.warning("replication n=%d rep=%d failed: %s", f["n"], f["rep"], f["error"])

    rows = []
    schedule = []
    for n in config.sample_sizes:
        errs = np.array([res for (m, _), (res, _) in zip(tasks, outcomes)
                         if m == n and res is not None])
        est = config.estimator_config(n)
        schedule.append({"n": n, "M": est.basis.M, "delta": est.delta})
        reps = errs.shape[0]
        for j, y in enumerate(ys):
            col = errs[:, j] if reps else np.array([])
            se = float(col.std(ddof=1) / np.sqrt(reps)) if reps > 1 else None
            rows.append({"n": n, "y": float(y),
                         "mse": float(col.mean()) if reps else None,
                         "se": se, "reps": int(reps)})

    report = ExperimentReport(config=config.to_dict(), rows=rows,
                              schedule=schedule, failures=failures)
    if len(config.sample_sizes) >= 3:
        rate = estimate_rate(report)
        report.slopes = {
            "per_y": rate.per_y,
            "pooled": {"slope": rate.slope, "se": rate.se},
            "theoretical": theoretical_exponent(config.r_star,
                                                config.mixing.beta_exponent),
        }
    return report


@dataclass(frozen=True)
class RateEstimate:
    slope: float
    se: float | None
    per_y: list


def _ols(design, target):
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    dof = design.shape[0] - design.shape[1]
    if dof <= 0:
        return coef, None
    resid = target - design @ coef
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(design.T @ design)
    return coef, float(np.sqrt(cov[0, 0]))


def estimate_rate(report):
    """Log-log slope of mean risk against ``N``.

    Per-point slopes are ordinary least squares fits; the pooled slope shares
    one slope across points with a separate intercept per point. Rows with
    zero (or missing) risk are dropped with a warning.
    """
    sizes, ys, mse, _ = report.mse_table()
    if sizes.size < 3:
        raise ValueError("rate estimation needs at least 3 sample sizes")
    ok = np.isfinite(mse) & (mse > 0)
    if not ok.all():
        warnings.warn(f"dropping {int((~ok).sum())} degenerate risk rows from the rate fit",
                      RuntimeWarning, stacklevel=2)
    logn = np.log(sizes.astype(float))
    per_y = []
    cols, targets, groups = [], [], []
    for j, y in enumerate(ys):
        keep = ok[:, j]
        if keep.sum() >= 2:
            design = np.column_stack([logn[keep], np.ones(keep.sum())])
            coef, se = _ols(design, np.log(mse[keep, j]))
            per_y.append({"y": float(y), "slope": float(coef[0]), "se": se})
            cols.append(logn[keep])
            targets.append(np.log(mse[keep, j]))
            groups.append(np.full(keep.sum(), len(groups)))
    if not per_y:
        raise ValueError("no evaluation point has enough nondegenerate rows")
    x = np.concatenate(cols)
    g = np.concatenate(groups)
    design = np.column_stack([x, (g[:, None] == np.arange(len(cols))[None, :]).astype(float)])
    coef, se = _ols(design, np.concatenate(targets))
    return RateEstimate(float(coef[0]), se, per_y)


def report_json(report):
    return json.dumps(report.to_dict(), indent=2) + "\n"


def report_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "y", "mse", "se", "reps"])
    for r in report.rows:
        w.writerow([r["n"], _fmt(r["y"]), _fmt(r["mse"]), _fmt(r["se"]), r["reps"]])
    if report.slopes is not None:
        s = report.slopes
        per_y = ";".join(f"{_fmt(p['y'])}:{_fmt(p['slope'])}" for p in s["per_y"])
        buf.write(f"# pooled_slope={_fmt(s['pooled']['slope'])} "
                  f"pooled_se={_fmt(s['pooled']['se'])} "
                  f"theoretical={_fmt(s['theoretical'])} per_y={per_y}\n")
    return buf.getvalue()


def _fmt(v):
    return "" if v is None else repr(float(v))


def emit_report(report, fmt, path):
    """Write the report as ``json`` or ``csv``."""
    if fmt == "json":
        text = report_json(report)
    elif fmt == "csv":
        text = report_csv(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def load_report(path):
    with open(path, encoding="utf-8") as fh:
        return ExperimentReport.from_dict(json.load(fh))


def read_report_csv(path):
    """Rows of a CSV report as dicts with numeric values."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    out = []
    for r in csv.DictReader(lines):
        out.append({"n": int(r["n"]), "y": float(r["y"]),
                    "mse": float(r["mse"]) if r["mse"] else None,
                    "se": float(r["se"]) if r["se"] else None,
                    "reps": int(r["reps"])})
    return out
