"""Batch front door: run a configured job, write traces and reports.

Usage:
    balmet run <config.json> [--seed N] [--output-dir D] [--max-iters N]
    balmet check <config.json>

A run executes one job and writes <output_dir>/trace.{json,csv} (when the
job produces a trace or sweep) and <output_dir>/report.json containing the
results plus a manifest (config echo, package version, grid self-test).
Exit codes: 0 success, 2 validation failure, 3 numerical failure.  The
environment variable BALMET_THREADS bounds the evaluation worker count and
never changes any output byte.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from math import comb
from pathlib import Path

import numpy as np

from . import __version__
from ._reduction import worker_count
from .errors import DomainError, NumericalError, ValidationError
from .hermitian import (
    GramMetric,
    geodesic_between,
    geodesic_value,
    log_det,
    sample_around,
)
from .metrics import fs_metric
from .duality_maps import balanced_residual
from .functionals import functional_report, z_functional
from .balance import IterationConfig, run_iteration
from .asymptotics import default_test_potential, run_sweep
from .variety import GeometrySpec, build_geometry

JOBS = ("balance", "functionals", "convexity", "bergman", "mabuchi-sweep")


# ----------------------------------------------------------------------------
# Gram matrix file format: {dim, entries_re: row-major, entries_im: row-major}


def write_gram(H: GramMetric, path) -> None:
    m = H.matrix
    payload = {
        "dim": H.dim,
        "entries_re": [float(v) for v in m.real.ravel()],
        "entries_im": [float(v) for v in m.imag.ravel()],
    }
    Path(path).write_text(json.dumps(payload))


def read_gram(path) -> GramMetric:
    try:
        payload = json.loads(Path(path).read_text())
        d = int(payload["dim"])
        re = np.asarray(payload["entries_re"], dtype=float).reshape(d, d)
        im = np.asarray(payload["entries_im"], dtype=float).reshape(d, d)
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ValidationError(f"bad matrix file {path}: {exc}") from exc
    m = re + 1j * im
    if np.max(np.abs(m - m.conj().T)) > 1e-12 * max(1.0, float(np.max(np.abs(m)))):
        raise ValidationError(f"matrix file {path} is not Hermitian")
    try:
        return GramMetric(m)
    except DomainError as exc:
        raise ValidationError(str(exc)) from exc


# ----------------------------------------------------------------------------
# configuration


class RunConfig:
    """Validated run configuration (one job per process invocation)."""

    def __init__(self, raw: dict, base_dir: Path):
        if not isinstance(raw, dict):
            raise ValidationError("config root must be a JSON object")
        geometry = raw.get("geometry")
        if not isinstance(geometry, dict):
            raise ValidationError("missing field: geometry")
        kind = geometry.get("kind")
        k = geometry.get("k")
        if not isinstance(k, int):
            raise ValidationError("geometry.k must be an integer")
        res = geometry.get("quadrature_resolution")
        cubic = geometry.get("cubic_coefficients")
        if isinstance(cubic, dict):
            cubic = {
                tuple(int(c) for c in key.split(",")): complex(*val)
                if isinstance(val, (list, tuple))
                else complex(val)
                for key, val in cubic.items()
            }
        self.spec = GeometrySpec(
            kind=kind,
            k=k,
            quadrature_resolution=tuple(res) if res else None,
            cubic_coefficients=cubic,
        )
        self.job = raw.get("job")
        if self.job not in JOBS:
            raise ValidationError(f"job must be one of {JOBS}, got {self.job!r}")
        self.initial_metric = raw.get("initial_metric", "identity")
        if isinstance(self.initial_metric, dict):
            path = self.initial_metric.get("file")
            if not path:
                raise ValidationError("initial_metric object needs a 'file' key")
            p = (base_dir / path).resolve() if not Path(path).is_absolute() else Path(path)
            if not p.exists():
                raise ValidationError(f"initial metric file does not exist: {p}")
            self.initial_metric = {"file": str(p)}
        elif self.initial_metric not in ("identity", "round_balanced"):
            raise ValidationError(
                "initial_metric must be 'identity', 'round_balanced', or "
                "{'file': path}"
            )
        iteration = raw.get("iteration", {})
        if not isinstance(iteration, dict):
            raise ValidationError("iteration must be an object")
        self.iteration = IterationConfig(**iteration)
        self.seed = int(raw.get("seed", 0))
        self.output_dir = Path(raw.get("output_dir", "balmet-out"))
        if not self.output_dir.is_absolute():
            self.output_dir = base_dir / self.output_dir
        formats = raw.get("formats", ["json", "csv"])
        if not set(formats) <= {"json", "csv"}:
            raise ValidationError("formats must be a subset of ['json', 'csv']")
        self.formats = tuple(formats)
        self.samples = int(raw.get("samples", 50))
        sweep = raw.get("sweep", {})
        self.sweep_k = tuple(sweep.get("k_values", (4, 8, 12)))
        self.sweep_eps = float(sweep.get("epsilon", 0.3))
        self.raw = raw

    @classmethod
    def load(cls, path) -> "RunConfig":
        p = Path(path)
        if not p.exists():
            raise ValidationError(f"config file does not exist: {p}")
        try:
            raw = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config is not valid JSON: {exc}") from exc
        return cls(raw, p.resolve().parent)


def _round_gram(k: int) -> GramMetric:
    return GramMetric(np.diag([1.0 / comb(k, j) for j in range(k + 1)]).astype(complex))


def _initial_gram(cfg: RunConfig, d: int) -> GramMetric:
    init = cfg.initial_metric
    if init == "identity":
        return GramMetric.identity(d)
    if init == "round_balanced":
        if cfg.spec.kind != "projective_line":
            raise ValidationError(
                "round_balanced start is only available on projective_line"
            )
        return _round_gram(cfg.spec.k)
    H = read_gram(init["file"])
    if H.dim != d:
        raise ValidationError(
            f"initial metric dimension {H.dim} != section dimension {d}"
        )
    return H


def _reference_metric(cfg: RunConfig, grid):
    if cfg.spec.kind == "projective_line":
        return fs_metric(_round_gram(cfg.spec.k), grid), "round_balanced"
    return fs_metric(GramMetric.identity(grid.section_dim), grid), "identity"


# ----------------------------------------------------------------------------
# jobs


def _job_balance(cfg, grid, m_ref):
    H0 = _initial_gram(cfg, grid.section_dim)
    trace = run_iteration(H0, grid, cfg.iteration, m_ref=m_ref)
    if trace.status == "diverged":
        raise NumericalError("iteration diverged (condition number exceeded 1e12)")
    last = trace.steps[-1]
    report = {
        "status": trace.status,
        "iterations": last.iteration,
        "final_rho_flatness": last.rho_flatness,
        "final_map_distance": last.map_distance,
        "final_z_tilde": last.z_tilde,
        "final_l_tilde": last.l_tilde,
    }
    return report, trace


def _job_functionals(cfg, grid, m_ref):
    H = _initial_gram(cfg, grid.section_dim)
    m = fs_metric(H, grid)
    rep = functional_report(m, H, m_ref[0], reference_id=m_ref[1])
    res = balanced_residual(H, grid)
    out = rep.to_dict()
    out["rho_flatness"] = res.rho_flatness
    out["map_distance"] = res.map_distance
    return out, None


def _job_convexity(cfg, grid, m_ref):
    rng = np.random.default_rng(cfg.seed)
    d = grid.section_dim
    center = (
        _round_gram(cfg.spec.k)
        if cfg.spec.kind == "projective_line"
        else GramMetric.identity(d)
    )
    rows = []
    ts = np.linspace(0.0, 1.0, 5)
    eps_cycle = (0.1, 0.5, 1.0)
    for i in range(cfg.samples):
        eps = eps_cycle[i % 3]
        g = geodesic_between(
            sample_around(center, eps, rng), sample_around(center, eps, rng)
        )
        zs = [z_functional(geodesic_value(g, t), m_ref[0], grid) for t in ts]
        lds = [log_det(geodesic_value(g, t)) for t in ts]
        d2 = np.diff(zs, 2)
        affine_resid = np.max(np.abs(np.diff(lds, 2)))
        rows.append(
            {
                "geodesic": i,
                "min_second_difference": float(np.min(d2)),
                "logdet_affine_residual": float(affine_resid),
            }
        )
    report = {
        "n_geodesics": cfg.samples,
        "min_second_difference": min(r["min_second_difference"] for r in rows),
        "max_logdet_affine_residual": max(
            r["logdet_affine_residual"] for r in rows
        ),
        "geodesics": rows,
    }
    return report, None


def _job_sweep(cfg, grid, m_ref):
    if cfg.spec.kind != "projective_line":
        raise ValidationError("sweep jobs are defined on projective_line")
    phi = default_test_potential(cfg.sweep_eps)
    sweep = run_sweep(cfg.sweep_k, phi)
    report = {
        "k_values": list(sweep.k_values),
        "bergman_residuals": list(sweep.bergman_residuals),
        "mabuchi_gaps": list(sweep.mabuchi_gaps),
        "mabuchi_difference": sweep.mabuchi_difference,
        "final_relative_gap": sweep.final_relative_gap(),
        "non_increasing": sweep.non_increasing(),
    }
    return report, sweep


def run_config(cfg: RunConfig) -> int:
    grid, _ = build_geometry(cfg.spec)
    m_ref = _reference_metric(cfg, grid)
    job_fn = {
        "balance": _job_balance,
        "functionals": _job_functionals,
        "convexity": _job_convexity,
        "bergman": _job_sweep,
        "mabuchi-sweep": _job_sweep,
    }[cfg.job]
    if cfg.job in ("balance", "functionals", "convexity"):
        report, trace = job_fn(cfg, grid, m_ref if cfg.job != "balance" else m_ref[0])
    else:
        report, trace = job_fn(cfg, grid, m_ref)

    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "package": "balmet",
        "version": __version__,
        "config": cfg.raw,
        "worker_bound": worker_count(),
        "grid_self_test": {
            key: val
            for key, val in grid.self_test.items()
            if isinstance(val, (int, float, bool, str))
        },
    }
    out = {"manifest": manifest, "report": report}
    if "json" in cfg.formats:
        (cfg.output_dir / "report.json").write_text(
            json.dumps(out, indent=2, sort_keys=True, default=float)
        )
    if trace is not None:
        if "json" in cfg.formats and hasattr(trace, "to_json"):
            (cfg.output_dir / "trace.json").write_text(trace.to_json())
        if "csv" in cfg.formats:
            (cfg.output_dir / "trace.csv").write_text(trace.to_csv())
    return 0


# ----------------------------------------------------------------------------
# entry point


def _emit_error(kind: str, exc: Exception) -> None:
    diag = {"error": kind, "message": str(exc)}
    print(json.dumps(diag, sort_keys=True), file=sys.stderr)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="balmet",
        description="balanced-metric runs: fixed-point iteration, energy "
        "reports, convexity sweeps, large-power trends",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a job described by a config file")
    p_run.add_argument("config", help="path to the JSON run configuration")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--output-dir", default=None)
    p_run.add_argument("--max-iters", type=int, default=None)
    p_check = sub.add_parser("check", help="validate a config file and exit")
    p_check.add_argument("config")

    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        if args.command == "run":
            if args.seed is not None:
                cfg.seed = args.seed
                cfg.raw["seed"] = args.seed
            if args.output_dir is not None:
                cfg.output_dir = Path(args.output_dir)
                cfg.raw["output_dir"] = args.output_dir
            if args.max_iters is not None:
                base = asdict(cfg.iteration)
                base["max_iters"] = args.max_iters
                cfg.iteration = IterationConfig(**base)
                cfg.raw.setdefault("iteration", {})["max_iters"] = args.max_iters
    except (ValidationError, DomainError, TypeError) as exc:
        _emit_error("validation", exc)
        return 2

    if args.command == "check":
        print(json.dumps({"ok": True, "job": cfg.job}, sort_keys=True))
        return 0

    try:
        return run_config(cfg)
    except (ValidationError, DomainError, OSError) as exc:
        _emit_error("validation", exc)
        return 2
    except NumericalError as exc:
        _emit_error("numerical", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
