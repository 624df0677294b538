import json

import pytest

from lagueb.config import (
    SCHEMA, ConfigError, load_config, mixing_from, prior_from, schema_help, study_from,
)
from lagueb.mixing import MixingModel
from lagueb.priors import PriorModel

TOML = """
[mixing]
kind = "weibull"
alpha = 2.0

[prior]
kind = "truncated_gamma"
shape = 2.0
rate = 1.0
lo = 0.5
hi = 3.0

[estimator]
r_star = 1.5
rate_constant = 0.8

[study]
sample_sizes = [100, 400, 1600]
replications = 5
eval_points = [0.5, 1.0]
master_seed = 42
"""


def write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoad:
    def test_toml(self, tmp_path):
        cfg = load_config(write(tmp_path, TOML))
        assert mixing_from(cfg) == MixingModel.weibull(2.0)
        assert prior_from(cfg, mixing_from(cfg)) == PriorModel.truncated_gamma(2, 1, 0.5, 3)
        study = study_from(cfg)
        assert study.sample_sizes == (100, 400, 1600)
        assert study.eval_points == (0.5, 1.0)
        assert study.r_star == 1.5 and study.rate_constant == 0.8
        assert study.master_seed == 42

    def test_json_equivalent(self, tmp_path):
        cfg = load_config(write(tmp_path, TOML))
        again = load_config(write(tmp_path, json.dumps(cfg), "c.json"))
        assert again == cfg

    def test_seed_override(self, tmp_path):
        assert study_from(load_config(write(tmp_path, TOML)), seed=9).master_seed == 9

    def test_default_prior(self, tmp_path):
        cfg = load_config(write(tmp_path, '[mixing]\nkind = "beta"\nalpha = 2.0\n'))
        assert prior_from(cfg, mixing_from(cfg)) == MixingModel.beta(2.0).default_prior()

    def test_echo_matches_sections(self, tmp_path):
        cfg = load_config(write(tmp_path, TOML))
        echo = study_from(cfg).to_dict()
        for section in cfg:
            for key, value in cfg[section].items():
                assert echo[section][key] == value


class TestRejects:
    @pytest.mark.parametrize("text", [
        '[mixing]\nkind = "exponential"\n[extra]\nx = 1\n',
        '[mixing]\nkind = "exponential"\nshape = 2\n',
        '[mixing]\nkind = 3\n',
        '[study]\nreplications = "many"\n',
        '[study]\nsample_sizes = [1.5, 2]\n',
        '[mixing]\nkind = "exponential"\n[estimator]\nM = 2.5\n',
        'mixing = 3\n',
        '[mixing\n',
    ])
    def test_schema(self, tmp_path, text):
        with pytest.raises(ConfigError):
            load_config(write(tmp_path, text))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.toml")

    def test_missing_mixing(self, tmp_path):
        with pytest.raises(ConfigError):
            mixing_from(load_config(write(tmp_path, "[study]\nreplications = 2\n")))

    def test_invalid_model(self, tmp_path):
        cfg = load_config(write(tmp_path, '[mixing]\nkind = "pareto"\nalpha = 2.0\ntheta_max = 3.0\n'))
        with pytest.raises(ConfigError):
            mixing_from(cfg)

    def test_study_needs_sizes(self, tmp_path):
        cfg = load_config(write(tmp_path, '[mixing]\nkind = "exponential"\n[study]\nreplications = 3\n'))
        with pytest.raises(ConfigError):
            study_from(cfg)

    def test_bad_study_values(self, tmp_path):
        cfg = load_config(write(tmp_path, '[mixing]\nkind = "exponential"\n'
                                          '[study]\nreplications = 3\nsample_sizes = [10, 5]\n'))
        with pytest.raises(ConfigError):
            study_from(cfg)


def test_help_lists_every_key():
    text = schema_help()
    for section, keys in SCHEMA.items():
        assert f"[{section}]" in text
        for key in keys:
            assert f"    {key} " in text
