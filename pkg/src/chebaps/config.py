"""Experiment configuration read from an INI file.

Every key has a default, so an empty file (or no file) gives the standard
desk-scale setup. Example::

    [geometry]
    M = 8
    gamma = 1.0

    [run]
    trials = 200
    estimators = p2, p1, plv, eapm, nnls
"""

from __future__ import annotations

import configparser
import io
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .scenes import KINDS

ESTIMATORS = ("p2", "p1", "plv", "eapm", "nnls")
METRICS = ("l1", "kl")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FddConfig:
    gamma_ul: float = 1.0
    f_ul: float = 1.7
    f_dl: float = 2.5
    n_snap: int = 128
    n_rays: int = 100
    use_sample_cov: bool = True
    truth: str = "clustered"  # or "cone": random nonnegative polynomial of degree p

    @property
    def gamma_dl(self) -> float:
        return self.gamma_ul * self.f_dl / self.f_ul


@dataclass(frozen=True)
class ExperimentConfig:
    M: int = 8
    gamma: float = 1.0
    p: int = 31
    N: int | None = None
    K: int = 181
    n0: int = 2
    eta_ratio: float = 0.2
    lambda_rel: float = 1e-9
    model: str = "gaussian"
    q_min: int = 1
    q_max: int = 5
    perturb_sigma: float = 0.0
    perturb_window: int = 6
    trials: int = 200
    seed: int = 0
    estimators: tuple = ESTIMATORS
    metrics: tuple = METRICS
    out: str = "results"
    max_iter: int = 5000
    eps: float = 1e-6
    rho: float = 1e-3
    eapm_iter: int = 500
    workers: int = 1
    fdd: FddConfig = field(default_factory=FddConfig)

    @property
    def nodes(self) -> int:
        return 2 * self.p + 1 if self.N is None else self.N

    def validate(self) -> "ExperimentConfig":
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.M >= 1 and self.gamma > 0, "need M >= 1 and gamma > 0")
        need(self.p >= 1 and self.p % 2 == 1, "p must be odd and positive")
        need(self.nodes >= self.p, "N must be >= p")
        need(self.K >= 2 and self.n0 >= 0 and self.eta_ratio > 0, "bad regularizer settings")
        need(self.lambda_rel >= 0, "lambda_rel must be >= 0")
        need(self.model in KINDS, f"model must be one of {KINDS}")
        need(1 <= self.q_min <= self.q_max, "need 1 <= q_min <= q_max")
        need(self.perturb_sigma >= 0 and self.perturb_window >= 1, "bad perturbation")
        need(self.trials >= 0, "trials must be >= 0")
        need(self.seed >= 0, "seed must be >= 0")
        need(len(self.estimators) > 0 and set(self.estimators) <= set(ESTIMATORS),
             f"estimators must be a non-empty subset of {ESTIMATORS}")
        need(set(self.metrics) <= set(METRICS), f"metrics must be a subset of {METRICS}")
        need(self.max_iter >= 1 and self.eps > 0 and self.rho > 0, "bad solver settings")
        need(self.eapm_iter >= 1 and self.workers >= 1, "bad eapm_iter or workers")
        f = self.fdd
        need(f.gamma_ul > 0 and f.f_ul > 0 and f.f_dl > 0, "FDD frequencies must be positive")
        need(f.n_snap >= 1 and f.n_rays >= 1, "need n_snap, n_rays >= 1")
        need(f.truth in ("clustered", "cone"), "fdd truth must be clustered or cone")
        return self

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw).validate()

    def as_dict(self) -> dict:
        return asdict(self)


# section -> keys living there; keys are unique across sections
_LAYOUT = {
    "geometry": ("M", "gamma"),
    "model": ("p", "N"),
    "regularizer": ("K", "n0", "eta_ratio", "lambda_rel"),
    "scene": ("model", "q_min", "q_max", "perturb_sigma", "perturb_window"),
    "run": ("trials", "seed", "estimators", "metrics", "out", "workers"),
    "solver": ("max_iter", "eps", "rho", "eapm_iter"),
}


def _split(text: str) -> tuple:
    return tuple(t.strip().lower() for t in text.split(",") if t.strip())


def _coerce(kind, raw: str, key: str):
    try:
        if kind in (bool, "bool"):
            low = raw.strip().lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(raw)
            return low in ("1", "true", "yes", "on")
        if kind in (int, "int"):
            return int(raw)
        if kind in (float, "float"):
            return float(raw)
        if kind in ("int | None",):
            return None if raw.strip().lower() in ("", "none", "auto") else int(raw)
        if kind in (tuple, "tuple"):
            return _split(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    ftypes = {f.name: f.type for f in fields(FddConfig)}
    known = set(_LAYOUT) | {"fdd"}
    for sec in cp.sections():
        if sec not in known:
            raise ConfigError(f"unknown section [{sec}]")
    kw, fkw = {}, {}
    for sec, keys in _LAYOUT.items():
        if not cp.has_section(sec):
            continue
        for key, raw in cp.items(sec):
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            kw[key] = _coerce(types[key], raw, key)
    if cp.has_section("fdd"):
        for key, raw in cp.items("fdd"):
            if key not in ftypes:
                raise ConfigError(f"unknown key {key!r} in [fdd]")
            fkw[key] = _coerce(ftypes[key], raw, key)
    return ExperimentConfig(fdd=FddConfig(**fkw), **kw).validate()


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig().validate()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text)


def dump_config(cfg: ExperimentConfig) -> str:
    """INI text that :func:`parse_config` maps back to ``cfg``."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    d = cfg.as_dict()

    def fmt(v):
        if isinstance(v, tuple):
            return ", ".join(v)
        return "auto" if v is None else str(v)

    for sec, keys in _LAYOUT.items():
        cp[sec] = {k: fmt(d[k]) for k in keys}
    cp["fdd"] = {k: fmt(v) for k, v in d["fdd"].items()}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
