"""Experiment dispatch: turn an :class:`ExperimentConfig` into CSV artifacts
plus a ``manifest.json`` describing the run."""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .config import ExperimentConfig, SamplerSection
from .errors import ConfigError, ExperimentError, QvmcError
from .hamiltonians import (
    PauliSum,
    build_ctfim,
    build_tfim,
    exact_ground_state,
    load_pauli_sum,
)
from .otoc import i_eta_scan, ieta_csv, otoc_trace, otoc_trace_csv
from .rbm import RbmParameters, load_rbm, save_rbm
from .samplers import (
    HaarRandom,
    LocalFlip,
    QuantumAveraged,
    TimeHomogeneous,
    Trotterized,
    UniformRandom,
)
from .seeding import derive_rng
from .transition import (
    gap_beta_sweep,
    gap_records_csv,
    gap_scaling_sweep,
    random_ferromagnet,
    summarize,
)
from .vmc import (
    VmcConfig,
    default_tail,
    energy_estimate,
    exact_energy,
    min_of_tail,
    train,
    zero_variance_extrapolate,
)

log = logging.getLogger(__name__)

EXACT_ENERGY_CAP = 12


@dataclass
class RunManifest:
    config: dict
    artifacts: list[str]
    duration_s: float
    version: str
    seed: int
    summary: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"not JSON-serializable: {type(x)}")


def make_kind(name: str, s: SamplerSection):
    """Proposal kind from its config name and the shared ``[sampler]`` parameters."""
    if name == "local_flip":
        return LocalFlip()
    if name == "uniform":
        return UniformRandom()
    if name == "haar":
        return HaarRandom(seed=s.haar_seed)
    if name == "quantum_averaged":
        return QuantumAveraged(s.tau_grid, s.gamma)
    if name == "time_homogeneous":
        return TimeHomogeneous(s.tau, s.gamma)
    if name == "trotterized":
        return Trotterized(s.tau, s.gamma, s.steps, s.scheme)
    raise ConfigError(f"unknown sampler kind {name!r}", "sampler.kind")


def build_model(cfg: ExperimentConfig) -> PauliSum:
    m = cfg.model
    if m.type == "tfim":
        return build_tfim(m.n, m.B, m.J0, m.periodic)
    if m.type == "ctfim":
        return build_ctfim(m.n, m.B, m.J0)
    return load_pauli_sum(m.path)


def vmc_settings(cfg: ExperimentConfig) -> VmcConfig:
    v = cfg.vmc
    return VmcConfig(
        sampler=make_kind(cfg.sampler.kind, cfg.sampler),
        n_samples=v.samples,
        iterations=v.iterations,
        lr=v.lr,
        reg=v.reg,
        reg_decay=v.reg_decay,
        reg_decay_every=v.reg_decay_every,
        reg_min=v.reg_min,
        seed=cfg.experiment.seed,
        refresh=v.refresh,
        chains=v.chains,
        thin=v.thin or None,
        burn_in=v.burn_in,
        force_real=v.force_real,
    )


class _Writer:
    """Collects artifacts so the manifest lists exactly what was written."""

    def __init__(self, root: str):
        self.root = root
        self.names: list[str] = []
        os.makedirs(root, exist_ok=True)

    def text(self, name: str, content: str):
        with open(os.path.join(self.root, name), "w", newline="") as fh:
            fh.write(content)
        self.names.append(name)

    def path(self, name: str) -> str:
        self.names.append(name)
        return os.path.join(self.root, name)


# --------------------------------------------------------------- experiments


def _gap_scan(cfg: ExperimentConfig, out: _Writer, executor) -> dict:
    sw = cfg.sweep
    kinds = [make_kind(k, cfg.sampler) for k in sw.kinds]
    records, summaries, slopes = gap_scaling_sweep(
        kinds,
        range(sw.n_min, sw.n_max + 1),
        sw.instances,
        target_family=sw.target,
        seed=cfg.experiment.seed,
        hidden_ratio=sw.hidden_ratio,
        bias_scale=sw.bias_scale,
        weight_scale=sw.weight_scale or None,
        executor=executor,
    )
    out.text("gap_records.csv", gap_records_csv(records))
    out.text("gap_summary.csv", gap_records_csv([], summaries))
    return {"slopes": {k: (None if np.isnan(s) else s) for k, s in slopes.items()}}


def _gap_beta(cfg: ExperimentConfig, out: _Writer, executor) -> dict:
    sw = cfg.sweep
    kinds = [make_kind(k, cfg.sampler) for k in sw.kinds]
    h = random_ferromagnet(cfg.model.n, derive_rng(cfg.experiment.seed, "beta-instance"), sw.field_scale)
    records = gap_beta_sweep(kinds, h, sw.betas, executor)
    out.text("gap_records.csv", gap_records_csv(records))
    gaps: dict[str, list[float]] = {}
    for r in records:
        gaps.setdefault(r.kind, []).append(r.delta)
    return {"betas": list(sw.betas), "delta": gaps}


def _train(cfg: ExperimentConfig, H: PauliSum, out: _Writer):
    n, p = H.size, cfg.model.p or H.size
    X0 = RbmParameters.initial(n, p, derive_rng(cfg.experiment.seed, "rbm-init"), cfg.vmc.init_std)
    X, trace = train(H, X0, vmc_settings(cfg))
    out.text("training_trace.csv", trace.to_csv())
    save_rbm(X, out.path("final_params.rbm"))
    tail = cfg.vmc.zve_tail or default_tail(len(trace))
    summary = {
        "final_energy": energy_estimate(trace, tail),
        "min_of_tail": min_of_tail(trace, tail),
        "tail": tail,
    }
    try:
        summary["zve_intercept"], summary["zve_slope"] = zero_variance_extrapolate(trace, tail)
    except QvmcError:
        summary["zve_intercept"] = None
    if n <= EXACT_ENERGY_CAP:
        summary["exact_ground_energy"] = exact_ground_state(H)[0]
        summary["rbm_energy"], summary["rbm_variance"] = exact_energy(H, X)
    return X, summary


def _vmc(cfg: ExperimentConfig, out: _Writer, executor) -> dict:
    _, summary = _train(cfg, build_model(cfg), out)
    return summary


def _ieta(cfg: ExperimentConfig, out: _Writer, executor) -> dict:
    src = cfg.ieta.source
    summary: dict = {"source": src}
    if src == "train":
        cfg_real = cfg
        if not cfg.vmc.force_real:
            log.info("ieta training forces real parameters")
            from dataclasses import replace

            cfg_real = replace(cfg, vmc=replace(cfg.vmc, force_real=True))
        X, train_summary = _train(cfg_real, build_model(cfg), out)
        summary.update(train_summary)
    elif src == "zero":
        X = RbmParameters.zeros(cfg.model.n, cfg.hidden)
    elif src == "random":
        X = RbmParameters.random(cfg.model.n, cfg.hidden, derive_rng(cfg.experiment.seed, "ieta-params"))
    else:
        X = load_rbm(cfg.ieta.params_path)
    points = i_eta_scan(X, samples=cfg.ieta.samples, rng=derive_rng(cfg.experiment.seed, "ieta-gibbs"))
    out.text("ieta_points.csv", ieta_csv(points))
    etas = np.array([q.eta for q in points])
    gaps = np.array([q.mi - q.lb for q in points])
    summary.update(
        mean_eta=float(etas.mean()),
        mean_abs_eta=float(np.abs(etas).mean()),
        median_mi_minus_lb=float(np.median(gaps)),
        max_abs_eta=float(np.abs(etas).max()),
    )
    return summary


def _otoc_check(cfg: ExperimentConfig, out: _Writer, executor) -> dict:
    o = cfg.otoc
    n, p = cfg.model.n, cfg.hidden
    if o.source == "random":
        rng = derive_rng(cfg.experiment.seed, "otoc-params")
        X = RbmParameters.random(n, p, rng, bias_scale=o.bias_scale, weight_scale=o.weight_scale)
    elif o.source == "zero":
        X = RbmParameters.zeros(n, p)
    else:
        X = load_rbm(o.params_path)
    ts = np.linspace(0.0, o.t_max, o.t_points)
    rows = otoc_trace(X, o.k, o.m, ts, o.alpha, o.beta)
    out.text("otoc_trace.csv", otoc_trace_csv(rows))
    resid = max(abs(d - c) for _, _, d, c in rows)
    return {"max_residual": float(resid), "pair": [o.k, o.m], "alpha": o.alpha, "beta": o.beta}


DISPATCH = {
    "gap-scan": _gap_scan,
    "gap-beta": _gap_beta,
    "vmc": _vmc,
    "ieta": _ieta,
    "otoc-check": _otoc_check,
}


def run_experiment(cfg: ExperimentConfig) -> RunManifest:
    """Run one configured experiment and write its artifacts and manifest.

    CSV artifacts are byte-identical for a fixed seed and worker count.
    Library errors are re-raised as :class:`ExperimentError` with the
    original exception chained.
    """
    kind = cfg.experiment.kind
    out = _Writer(cfg.output_dir())
    workers = cfg.worker_count()
    t0 = time.perf_counter()
    executor = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        summary = DISPATCH[kind](cfg, out, executor)
    except ConfigError:
        raise
    except QvmcError as exc:
        raise ExperimentError(kind, exc) from exc
    finally:
        if executor is not None:
            executor.shutdown()
    manifest = RunManifest(
        config=cfg.as_dict(),
        artifacts=sorted(out.names) + ["manifest.json"],
        duration_s=time.perf_counter() - t0,
        version=__version__,
        seed=cfg.experiment.seed,
        summary=summary,
    )
    out.text("manifest.json", manifest.to_json())
    out.names.pop()
    return manifest
