import pytest
from hypothesis import given
from hypothesis import strategies as st

from chebaps.config import (ConfigError, ExperimentConfig, FddConfig, dump_config, load_config,
                            parse_config)


def test_empty_file_gives_defaults():
    assert parse_config("") == ExperimentConfig()
    assert load_config(None) == ExperimentConfig()
    assert ExperimentConfig().nodes == 63


def test_sections_and_types():
    cfg = parse_config("""
[geometry]
M = 6
[model]
p = 9
N = auto
[run]
estimators = PLV, nnls
[fdd]
use_sample_cov = no
f_dl = 3.4
""")
    assert cfg.M == 6 and cfg.p == 9 and cfg.N is None
    assert cfg.estimators == ("plv", "nnls")
    assert cfg.fdd == FddConfig(use_sample_cov=False, f_dl=3.4)
    assert cfg.fdd.gamma_dl == pytest.approx(2.0)


@given(M=st.integers(1, 16), p=st.integers(0, 20).map(lambda k: 2 * k + 1),
       lam=st.floats(0, 1, allow_nan=False), trials=st.integers(0, 10**6),
       ests=st.lists(st.sampled_from(["p2", "p1", "plv", "eapm", "nnls"]), min_size=1,
                     unique=True), cone=st.booleans())
def test_round_trip(M, p, lam, trials, ests, cone):
    cfg = ExperimentConfig(M=M, p=p, lambda_rel=lam, trials=trials, estimators=tuple(ests),
                           fdd=FddConfig(truth="cone" if cone else "clustered")).validate()
    assert parse_config(dump_config(cfg)) == cfg


@pytest.mark.parametrize("text", [
    "[nope]\nx = 1",
    "[geometry]\nwidth = 3",
    "[geometry]\nM = three",
    "[model]\np = 4",
    "[model]\np = 7\nN = 5",
    "[run]\nestimators = p2, magic",
    "[run]\nestimators = ",
    "[scene]\nmodel = cauchy",
    "[fdd]\nuse_sample_cov = maybe",
    "[fdd]\ntruth = square",
    "[regularizer]\nlambda_rel = -1",
    "not an ini file",
])
def test_bad_configs_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


def test_overrides_validate():
    cfg = ExperimentConfig().with_overrides(trials=3, seed=None)
    assert cfg.trials == 3 and cfg.seed == 0
    with pytest.raises(ConfigError):
        ExperimentConfig().with_overrides(p=2)
