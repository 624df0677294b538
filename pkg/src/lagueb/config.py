"""Experiment config files (TOML or JSON) and their validation.

Every section and key is listed in :data:`SCHEMA`; anything else is rejected
before any computation starts.
"""

from __future__ import annotations

import json
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .mixing import MixingModel
from .priors import PriorModel


class ConfigError(ValueError):
    pass


def _num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _num_list(v):
    return isinstance(v, list) and all(_num(x) for x in v)


def _int_list(v):
    return isinstance(v, list) and all(_int(x) for x in v)


# section -> key -> (type check, type name, description)
SCHEMA = {
    "mixing": {
        "kind": (lambda v: isinstance(v, str), "string",
                 "uniform | pareto | beta | exponential | rayleigh | weibull"),
        "alpha": (_num, "number", "known shape: pareto (> 2), beta (> 0), weibull (> 0)"),
        "lo": (_num, "number", "uniform: lower end of the theta range"),
        "hi": (_num, "number", "uniform: upper end of the theta range"),
        "theta_max": (_num, "number", "pareto: upper bound on theta (> 1)"),
    },
    "prior": {
        "kind": (lambda v: isinstance(v, str), "string", "gamma | uniform | truncated_gamma"),
        "shape": (_num, "number", "gamma shape"),
        "rate": (_num, "number", "gamma rate"),
        "lo": (_num, "number", "lower end of the support (uniform, truncated_gamma)"),
        "hi": (_num, "number", "upper end of the support (uniform, truncated_gamma)"),
    },
    "estimator": {
        "r_star": (_num, "number", "smoothness r* used by the M schedule (default 1)"),
        "rate_constant": (_num, "number", "multiplier in the M schedule (default 1)"),
        "M": (_int, "integer", "fixed truncation level; overrides the schedule (fit only)"),
        "delta": (_num, "number", "fixed ridge size; overrides M/sqrt(N) (fit only)"),
    },
    "study": {
        "sample_sizes": (_int_list, "integer list", "strictly increasing sample sizes"),
        "replications": (_int, "integer", "replications per sample size (>= 2)"),
        "eval_points": (lambda v: v is None or _num_list(v), "number list",
                        "evaluation points; default: marginal quartiles from a pilot sample"),
        "master_seed": (_int, "integer", "seed of every random stream (default 0)"),
    },
}


def schema_help():
    lines = ["config keys (TOML or JSON):"]
    for section, keys in SCHEMA.items():
        lines.append(f"  [{section}]")
        for key, (_, tname, desc) in keys.items():
            lines.append(f"    {key:<14} {tname:<13} {desc}")
    return "\n".join(lines)


def validate(cfg):
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a table of sections")
    for section, body in cfg.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key, value in body.items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            check, tname, _ = SCHEMA[section][key]
            if not check(value):
                raise ConfigError(f"[{section}] {key} must be a {tname}, got {value!r}")
    return cfg


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".json":
            cfg = json.loads(text)
        else:
            cfg = tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return validate(cfg)


def mixing_from(cfg):
    if "mixing" not in cfg or "kind" not in cfg["mixing"]:
        raise ConfigError("config needs [mixing] kind")
    try:
        return MixingModel.from_dict(cfg["mixing"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [mixing]: {exc}") from exc


def prior_from(cfg, mixing):
    if "prior" not in cfg:
        return mixing.default_prior()
    try:
        return PriorModel.from_dict(cfg["prior"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [prior]: {exc}") from exc


def study_from(cfg, seed=None):
    from .harness import StudyConfig

    mixing = mixing_from(cfg)
    prior = prior_from(cfg, mixing)
    study = cfg.get("study", {})
    for key in ("sample_sizes", "replications"):
        if key not in study:
            raise ConfigError(f"[study] needs {key}")
    est = cfg.get("estimator", {})
    try:
        return StudyConfig(
            mixing=mixing, prior=prior,
            sample_sizes=tuple(study["sample_sizes"]),
            replications=study["replications"],
            eval_points=study.get("eval_points"),
            r_star=float(est.get("r_star", 1.0)),
            rate_constant=float(est.get("rate_constant", 1.0)),
            master_seed=int(study.get("master_seed", 0) if seed is None else seed),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid study config: {exc}") from exc
