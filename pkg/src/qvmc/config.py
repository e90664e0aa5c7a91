"""Experiment configuration: flat ``key = value`` files with ``[section]`` headers.

Every key has a documented default except ``experiment.kind``.  Unknown
sections or keys are rejected, and each validation error names its key as
``section.key``.
"""

from __future__ import annotations

import configparser
import os
import typing
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError

EXPERIMENT_KINDS = ("gap-scan", "gap-beta", "vmc", "ieta", "otoc-check")
SAMPLER_KINDS = (
    "local_flip",
    "uniform",
    "haar",
    "quantum_averaged",
    "time_homogeneous",
    "trotterized",
)


@dataclass(frozen=True)
class ExperimentSection:
    kind: str = ""
    seed: int = 0
    workers: int = 0  # 0: available parallelism
    output: str = ""  # empty: $QVMC_OUT, else ./qvmc_out


@dataclass(frozen=True)
class ModelSection:
    type: str = "tfim"
    n: int = 6
    p: int = 0  # 0: same as n
    B: float = 1.0
    J0: float = 1.0
    periodic: bool = False
    path: str = ""


@dataclass(frozen=True)
class SamplerSection:
    kind: str = "time_homogeneous"
    tau: float = 1.0
    gamma: float = 0.5
    tau_grid: tuple[float, ...] = (0.5, 1.0, 1.5, 2.0)
    steps: int = 4
    scheme: str = "first_order"
    haar_seed: int = 0


@dataclass(frozen=True)
class VmcSection:
    samples: int = 1024
    iterations: int = 500
    lr: float = 0.02
    reg: float = 0.01
    reg_decay: float = 0.9
    reg_decay_every: int = 50
    reg_min: float = 1e-4
    refresh: int = 10
    chains: int = 64
    thin: int = 0  # 0: n steps for local_flip, 1 otherwise
    burn_in: int = 100
    force_real: bool = False
    zve_tail: int = 0  # 0: last 20% of iterations
    init_std: float = 0.01


@dataclass(frozen=True)
class SweepSection:
    kinds: tuple[str, ...] = ("local_flip", "time_homogeneous", "trotterized")
    n_min: int = 4
    n_max: int = 8
    instances: int = 20
    target: str = "born"
    bias_scale: float = 0.5
    weight_scale: float = 0.0  # 0: 1/sqrt(n p)
    hidden_ratio: float = 1.0
    betas: tuple[float, ...] = (0.0, 1.0, 2.0, 5.0, 10.0, 20.0)
    field_scale: float = 0.1


@dataclass(frozen=True)
class IetaSection:
    source: str = "train"
    params_path: str = ""
    samples: int = 100_000


@dataclass(frozen=True)
class OtocSection:
    source: str = "random"
    params_path: str = ""
    k: int = 0
    m: int = 0
    alpha: str = "x"
    beta: str = "x"
    t_max: float = 2.0
    t_points: int = 20
    bias_scale: float = 0.5
    weight_scale: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    model: ModelSection = field(default_factory=ModelSection)
    sampler: SamplerSection = field(default_factory=SamplerSection)
    vmc: VmcSection = field(default_factory=VmcSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    ieta: IetaSection = field(default_factory=IetaSection)
    otoc: OtocSection = field(default_factory=OtocSection)

    @property
    def hidden(self) -> int:
        return self.model.p or self.model.n

    def with_overrides(self, seed=None, output=None, workers=None) -> "ExperimentConfig":
        exp = self.experiment
        if seed is not None:
            exp = replace(exp, seed=int(seed))
        if output is not None:
            exp = replace(exp, output=str(output))
        if workers is not None:
            exp = replace(exp, workers=int(workers))
        cfg = replace(self, experiment=exp)
        validate(cfg)
        return cfg

    def output_dir(self) -> str:
        return self.experiment.output or os.environ.get("QVMC_OUT") or "qvmc_out"

    def worker_count(self) -> int:
        return self.experiment.workers or os.cpu_count() or 1

    def as_dict(self) -> dict:
        return {
            f.name: {g.name: getattr(getattr(self, f.name), g.name) for g in fields(getattr(self, f.name))}
            for f in fields(self)
        }


SECTIONS = {f.name: f for f in fields(ExperimentConfig)}


def _section_type(name):
    return typing.get_type_hints(ExperimentConfig)[name]


def _convert(raw: str, tp, key: str):
    raw = raw.strip()
    try:
        if tp is bool:
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if tp is int:
            return int(raw)
        if tp is float:
            return float(raw)
        if tp is str:
            return raw
        if typing.get_origin(tp) is tuple:
            inner = typing.get_args(tp)[0]
            parts = [s for s in (x.strip() for x in raw.split(",")) if s]
            return tuple(_convert(s, inner, key) for s in parts)
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {getattr(tp, '__name__', tp)}", key)
    raise ConfigError(f"unsupported type {tp}", key)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config_text(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case-sensitive (B, J0)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    kwargs = {}
    for sec in cp.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"unknown section [{sec}]", sec)
        cls = _section_type(sec)
        hints = typing.get_type_hints(cls)
        values = {}
        for key, raw in cp.items(sec):
            full = f"{sec}.{key}"
            if key not in hints:
                raise ConfigError("unknown key", full)
            values[key] = _convert(raw, hints[key], full)
        kwargs[sec] = cls(**values)
    cfg = ExperimentConfig(**kwargs)
    validate(cfg)
    return cfg


def parse_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config_text(text)


def serialize_config(cfg: ExperimentConfig) -> str:
    out = []
    for sec, body in cfg.as_dict().items():
        out.append(f"[{sec}]")
        out += [f"{k} = {_format(v)}" for k, v in body.items()]
        out.append("")
    return "\n".join(out)


def _need(cond: bool, key: str, msg: str):
    if not cond:
        raise ConfigError(msg, key)


def validate(cfg: ExperimentConfig):
    e, mo, s, v, sw, ie, ot = (
        cfg.experiment, cfg.model, cfg.sampler, cfg.vmc, cfg.sweep, cfg.ieta, cfg.otoc,
    )
    _need(e.kind != "", "experiment.kind", "missing required key")
    _need(e.kind in EXPERIMENT_KINDS, "experiment.kind", f"must be one of {EXPERIMENT_KINDS}")
    _need(e.workers >= 0, "experiment.workers", "must be >= 0")

    _need(mo.type in ("tfim", "ctfim", "pauli"), "model.type", "must be tfim, ctfim or pauli")
    _need(mo.n >= 1, "model.n", "must be >= 1")
    _need(mo.p >= 0, "model.p", "must be >= 0")
    if mo.type == "ctfim":
        _need(mo.n % 2 == 0, "model.n", "c-TFIM needs an even n")
    if mo.type == "tfim" and mo.periodic:
        _need(mo.n >= 3, "model.n", "periodic TFIM needs n >= 3")
    if mo.type == "pauli":
        _need(bool(mo.path), "model.path", "missing required key for type = pauli")
        _need(os.path.isfile(mo.path), "model.path", f"file not found: {mo.path}")

    _need(s.kind in SAMPLER_KINDS, "sampler.kind", f"must be one of {SAMPLER_KINDS}")
    _need(0.0 <= s.gamma <= 1.0, "sampler.gamma", "must lie in [0, 1]")
    _need(len(s.tau_grid) > 0, "sampler.tau_grid", "must be non-empty")
    _need(s.steps >= 1, "sampler.steps", "must be >= 1")
    _need(s.scheme in ("first_order", "strang"), "sampler.scheme", "must be first_order or strang")

    for key in ("samples", "iterations", "reg_decay_every", "refresh", "chains"):
        _need(getattr(v, key) >= 1, f"vmc.{key}", "must be >= 1")
    _need(v.lr > 0 and v.lr != float("inf"), "vmc.lr", "must be finite and > 0")
    _need(v.reg >= 0, "vmc.reg", "must be >= 0")
    _need(v.reg_min >= 0, "vmc.reg_min", "must be >= 0")
    _need(0 < v.reg_decay <= 1, "vmc.reg_decay", "must lie in (0, 1]")
    _need(v.thin >= 0, "vmc.thin", "must be >= 0")
    _need(v.burn_in >= 0, "vmc.burn_in", "must be >= 0")
    _need(v.zve_tail == 0 or v.zve_tail >= 2, "vmc.zve_tail", "must be 0 (auto) or >= 2")
    _need(v.zve_tail <= v.iterations, "vmc.zve_tail", "must not exceed vmc.iterations")
    _need(v.init_std >= 0, "vmc.init_std", "must be >= 0")

    for k in sw.kinds:
        _need(k in SAMPLER_KINDS, "sweep.kinds", f"unknown kind {k!r}")
    _need(len(sw.kinds) > 0, "sweep.kinds", "must be non-empty")
    _need(1 <= sw.n_min <= sw.n_max, "sweep.n_min", "need 1 <= n_min <= n_max")
    _need(sw.n_max <= 10, "sweep.n_max", "transition matrices are capped at n = 10")
    _need(sw.instances >= 1, "sweep.instances", "must be >= 1")
    _need(sw.target in ("born", "uniform"), "sweep.target", "must be born or uniform")
    _need(sw.hidden_ratio > 0, "sweep.hidden_ratio", "must be > 0")
    _need(all(b >= 0 for b in sw.betas), "sweep.betas", "must be >= 0")
    _need(len(sw.betas) > 0, "sweep.betas", "must be non-empty")

    _need(ie.source in ("train", "zero", "random", "file"), "ieta.source", "must be train, zero, random or file")
    if ie.source == "file":
        _need(os.path.isfile(ie.params_path), "ieta.params_path", f"file not found: {ie.params_path!r}")
    _need(ie.samples >= 10, "ieta.samples", "must be >= 10")

    _need(ot.source in ("random", "zero", "file"), "otoc.source", "must be random, zero or file")
    if ot.source == "file":
        _need(os.path.isfile(ot.params_path), "otoc.params_path", f"file not found: {ot.params_path!r}")
    _need(ot.alpha in ("x", "y"), "otoc.alpha", "must be x or y")
    _need(ot.beta in ("x", "y"), "otoc.beta", "must be x or y")
    _need(ot.t_points >= 1, "otoc.t_points", "must be >= 1")
    _need(0 <= ot.k < mo.n, "otoc.k", "must index a visible spin")
    _need(0 <= ot.m < cfg.hidden, "otoc.m", "must index a hidden spin")
