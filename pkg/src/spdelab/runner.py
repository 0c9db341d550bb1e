"""Experiment orchestration: config, ensemble runs, persistence, reporting.

A run turns one declarative config into a directory containing
manifest.json, report.json, optional paths/<idx>.csv, and per-path
diagnostics/<idx>.csv.  Every output byte is a function of (config,
master_seed): diagnostics never consume randomness, and path p always uses
stream p of the master seed.
"""
from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import diagnostics as diag
from .assumptions import check_all, check_commutator_bound, k6_table
from .brownian import uniform_grid
from .integrator import SCHEMES, integrate_ensemble
from .operators import assemble_tilde_A, spectrum
from .systems import SystemSpec, make_system

SCHEMA_VERSION = "1"

DIAG_COLUMNS = (
    "t", "norm_h", "norm_v", "norm_d2", "quotient", "quotient_full",
    "M", "psi", "residual", "S", "X",
)


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the bad key."""


_KINDS = ("simulate", "spectral-limit", "backward-probe", "check",
          "convergence", "gradcheck")


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment."""

    system: dict
    T: float
    dt: float
    kind: str = "simulate"
    scheme: str = "drift-implicit"
    paths: int = 1
    master_seed: int = 0
    eps_list: tuple = (1e-8,)
    delta: float = 1e-6
    r_list: tuple = ()
    N_list: tuple = ()
    output_dir: Optional[str] = None
    write_paths: bool = False
    u0: Optional[tuple] = None

    def validate(self) -> None:
        if not isinstance(self.system, dict) or "name" not in self.system:
            raise ConfigError("config key 'system' must be a table with a 'name'")
        if self.kind not in _KINDS:
            raise ConfigError(f"config key 'kind': unknown kind {self.kind!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"config key 'scheme': unknown scheme {self.scheme!r}")
        if self.T <= 0 or self.dt <= 0:
            raise ConfigError("config keys 'T' and 'dt' must be positive")
        steps = self.T / self.dt
        if abs(steps - round(steps)) > 1e-12 * max(1.0, steps):
            raise ConfigError(
                f"config key 'dt': dt={self.dt} does not divide T={self.T}"
            )
        if self.paths < 1:
            raise ConfigError("config key 'paths' must be >= 1")
        if any(e < 0 for e in self.eps_list):
            raise ConfigError("config key 'eps_list' must be nonnegative")

    def canonical(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def load_config(path: str) -> ExperimentConfig:
    """Read and validate a JSON experiment config."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} line {exc.lineno}: {exc.msg}") from exc
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for req in ("system", "T", "dt"):
        if req not in raw:
            raise ConfigError(f"missing required config key {req!r}")
    for key in ("eps_list", "r_list", "N_list", "u0"):
        if key in raw and raw[key] is not None:
            raw[key] = tuple(raw[key])
    cfg = ExperimentConfig(**raw)
    cfg.validate()
    return cfg


def save_config(cfg: ExperimentConfig, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(asdict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class RunManifest:
    """Provenance record of one run; re-running reproduces the outputs."""

    config: dict
    config_hash: str
    schema_version: str
    streams: list  # per-path (seed, stream_id)
    blowups: dict
    outputs: list
    created: str
    run_dir: str

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "config": self.config,
            "config_hash": self.config_hash,
            "streams": self.streams,
            "blowups": {str(k): v for k, v in self.blowups.items()},
            "outputs": sorted(self.outputs),
            "created": self.created,
        }


def _output_root() -> str:
    return os.environ.get("SPDELAB_OUTPUT_ROOT", "runs")


def _resolve_dir(cfg: ExperimentConfig) -> str:
    if cfg.output_dir:
        return cfg.output_dir
    return os.path.join(_output_root(), f"{cfg.kind}-{cfg.digest()[:12]}")


def _write_csv(path: str, header: tuple, rows: np.ndarray) -> None:
    np.savetxt(path, rows, delimiter=",", header=",".join(header), comments="")


def _constants_for(system: SystemSpec, t_grid: np.ndarray):
    """K1/K2/K6 tables and the nonlinearity witness on the run grid."""
    coarse = t_grid[:: max(1, len(t_grid) // 8)]
    if coarse[-1] != t_grid[-1]:
        coarse = np.concatenate([coarse, [t_grid[-1]]])
    k2, k1_coarse, _ = check_commutator_bound(
        system.ops, system.basis, (0.0, 0.5, 1.0), coarse
    )
    k1 = np.interp(t_grid, coarse, k1_coarse)
    if system.ops.is_constant:
        k6 = np.zeros(len(t_grid))
    else:
        k6_coarse = k6_table(system.ops, system.basis, coarse)
        k6 = np.interp(t_grid, coarse, k6_coarse)
    if system.ops.n_witness is not None:
        n_tab = np.array([system.ops.n_witness(float(t)) for t in t_grid])
    else:
        n_tab = np.zeros(len(t_grid))
    return k1, k2, k6, n_tab


def _diagnostic_rows(system: SystemSpec, traj, eps: float, delta: float,
                     k1, k2, k6, n_tab) -> np.ndarray:
    basis, ops = system.basis, system.ops
    times, states = traj.times, traj.states
    m = diag.exp_martingale(traj, ops, eps if eps > 0 else delta)
    lam = diag.quotient_series(traj, ops, eps)
    x, _ = diag.bound_process_X(traj, ops, eps, K1=k1, K2=k2, K6=k6,
                                n_table=n_tab, martingale=m)
    s = diag.envelope_series(traj, ops, eps, K2=k2, K6=k6, n_table=n_tab,
                             martingale=m)
    psi = diag.psi_series(traj, ops, max(eps, 1e-300), martingale=m)
    norm_h = basis.norm_h(states)
    rows = np.empty((len(times), len(DIAG_COLUMNS)))
    rows[:, 0] = times
    rows[:, 1] = norm_h
    rows[:, 2] = basis.norm_v(states)
    rows[:, 3] = basis.norm_d(states)
    rows[:, 4] = lam
    rows[:, 6] = m
    rows[:, 7] = psi
    rows[:, 9] = s
    rows[:, 10] = x
    for j, t in enumerate(times):
        rows[j, 5] = diag.quotient_full(states[j], ops, float(t), eps)
        if norm_h[j] > diag.NORM_FLOOR:
            rows[j, 8] = diag.eigen_residual(
                states[j], assemble_tilde_A(ops, float(t)), lam[j]
            )
        else:
            rows[j, 8] = np.nan
    return rows


def run(cfg: ExperimentConfig) -> RunManifest:
    """Execute one experiment and persist all requested outputs."""
    cfg.validate()
    params = {k: v for k, v in cfg.system.items() if k != "name"}
    system = make_system(cfg.system["name"], **params)
    run_dir = _resolve_dir(cfg)
    os.makedirs(run_dir, exist_ok=True)
    os.makedirs(os.path.join(run_dir, "diagnostics"), exist_ok=True)
    if cfg.write_paths:
        os.makedirs(os.path.join(run_dir, "paths"), exist_ok=True)
    outputs = []

    grid = uniform_grid(cfg.T, cfg.dt)
    u0 = None if cfg.u0 is None else np.asarray(cfg.u0, dtype=float)
    ens = integrate_ensemble(
        system, cfg.scheme, grid, cfg.master_seed, cfg.paths, u0=u0
    )

    eps = cfg.eps_list[0] if cfg.eps_list else 1e-8
    k1, k2, k6, n_tab = _constants_for(system, grid)
    for p in range(cfg.paths):
        traj = ens.trajectory(p)
        rows = _diagnostic_rows(system, traj, eps, cfg.delta, k1, k2, k6, n_tab)
        rel = os.path.join("diagnostics", f"{p}.csv")
        _write_csv(os.path.join(run_dir, rel), DIAG_COLUMNS, rows)
        outputs.append(rel)
        if cfg.write_paths:
            rel = os.path.join("paths", f"{p}.csv")
            header = ("t",) + tuple(f"u{i}" for i in range(system.basis.dim))
            _write_csv(
                os.path.join(run_dir, rel), header,
                np.column_stack([traj.times, traj.states]),
            )
            outputs.append(rel)

    report = _build_report(cfg, system, ens, eps)
    with open(os.path.join(run_dir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs.append("report.json")

    manifest = RunManifest(
        config=json.loads(cfg.canonical()),
        config_hash=cfg.digest(),
        schema_version=SCHEMA_VERSION,
        streams=[[cfg.master_seed, p] for p in range(cfg.paths)],
        blowups=ens.blowups,
        outputs=outputs + ["manifest.json"],
        created=time.strftime("%Y-%m-%dT%H:%M:%S"),
        run_dir=run_dir,
    )
    with open(os.path.join(run_dir, "manifest.json"), "w") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _build_report(cfg: ExperimentConfig, system: SystemSpec, ens, eps: float) -> dict:
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": cfg.kind,
        "system": system.name,
        "scheme": cfg.scheme,
        "paths": cfg.paths,
        "blowups": {str(k): v for k, v in ens.blowups.items()},
    }
    tilde = assemble_tilde_A(system.ops, 0.0)
    eigs, _ = spectrum(tilde.sym_part, symmetric=True)

    if cfg.kind in ("simulate", "spectral-limit"):
        quots = np.empty((cfg.paths, len(ens.times)))
        for p in range(cfg.paths):
            quots[p] = diag.quotient_series(ens.trajectory(p), system.ops, eps)
        slr = diag.spectral_limit_report(
            quots, ens.states[:, -1, :], tilde.sym_part, eigs.real
        )
        report["spectral_limit"] = slr.to_dict()

    if cfg.kind in ("simulate", "backward-probe"):
        probe = diag.backward_probe(ens.states, ens.times)
        report["backward_probe"] = {
            "margin": probe["margin"],
            "all_positive": probe["all_positive"],
            "n_underflow": probe["n_underflow"],
            "min_norm_per_path": probe["min_norm_per_path"].tolist(),
        }
        if cfg.r_list:
            hits = {}
            for r in cfg.r_list:
                per_path = [
                    diag.hitting_time(ens.trajectory(p), r) for p in range(cfg.paths)
                ]
                hits[str(r)] = per_path
            report["hitting_times"] = hits

    if cfg.kind == "check":
        rep = check_all(system.ops, system.basis, np.linspace(0.0, cfg.T, 5))
        report["assumptions"] = rep.to_dict()

    # ensemble martingale statistics are cheap and always useful
    m_final = np.empty(cfg.paths)
    for p in range(cfg.paths):
        m_final[p] = diag.exp_martingale(ens.trajectory(p), system.ops, cfg.delta)[-1]
    report["martingale"] = {
        "mean_final": float(np.mean(m_final)),
        "stderr_final": float(np.std(m_final) / np.sqrt(cfg.paths)),
        "delta": cfg.delta,
    }

    if cfg.N_list:
        k3_acc: dict = {}
        k4_acc: dict = {}
        for p in range(min(cfg.paths, 8)):
            k3, k4, _ = diag.galerkin_gaps(
                ens.trajectory(p), system.ops, system.basis, eps, cfg.N_list
            )
            for n in cfg.N_list:
                k3_acc.setdefault(n, []).append(k3[n])
                k4_acc.setdefault(n, []).append(k4[n])
        report["galerkin_gaps"] = {
            "K3": {str(n): float(np.mean(v)) for n, v in k3_acc.items()},
            "K4": {str(n): float(np.mean(v)) for n, v in k4_acc.items()},
        }
    return report


def report_summary(run_dir: str) -> dict:
    """Aggregate a finished run directory into a console-friendly summary."""
    man_path = os.path.join(run_dir, "manifest.json")
    rep_path = os.path.join(run_dir, "report.json")
    for p in (man_path, rep_path):
        if not os.path.exists(p):
            raise FileNotFoundError(f"missing run output: {p}")
    with open(man_path) as fh:
        manifest = json.load(fh)
    with open(rep_path) as fh:
        report = json.load(fh)
    if manifest["config"]["paths"] < 1:
        raise ValueError("manifest describes an empty ensemble")
    summary = {
        "run_dir": run_dir,
        "kind": report.get("kind"),
        "system": report.get("system"),
        "paths": manifest["config"]["paths"],
        "blowups": len(manifest.get("blowups", {})),
    }
    if "spectral_limit" in report:
        sl = report["spectral_limit"]
        summary["spectral_histogram"] = sl["histogram"]
        summary["n_settled"] = sl["n_settled"]
    if "backward_probe" in report:
        summary["backward_margin"] = report["backward_probe"]["margin"]
    if "martingale" in report:
        m = report["martingale"]
        summary["martingale_mean"] = m["mean_final"]
        summary["martingale_z"] = (
            (m["mean_final"] - 1.0) / m["stderr_final"]
            if m["stderr_final"] > 0 else 0.0
        )
    return summary
