"""Seeded end-to-end runs and sweeps.

Records are JSON with sorted keys and no wall-clock content, so identical
configs give byte-identical record files. Runtimes go to a sidecar file.
"""

from __future__ import annotations

import copy
import csv
import io
import itertools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .. import __version__
from ..constructive import _derive_seed, approximate
from ..errors import ConfigError, TVSError
from ..network import TrainConfig, init, train
from ..spaces import CompactSampler
from .config import ExperimentConfig, set_path, validate
from .targets import build_target

VERSION_TAG = f"tvsfnn-{__version__}"

CSV_COLUMNS = (
    "point", "status", "reason", "route", "seed", "epsilon", "config_width", "sup_error",
    "l2_error", "width", "total_estimate", "stage1_error", "final_loss", "axes",
)


def _sampler(cfg: ExperimentConfig) -> CompactSampler:
    s = cfg["sampler"]
    return CompactSampler(cfg.space, s["radius"], int(s.get("seed", cfg.seed)), s["smoothness"])


def _sphere(K: CompactSampler, count: int) -> np.ndarray:
    # a sample of the unit sphere of the space, drawn through K's directions
    X = K.clone(_derive_seed(K.seed, 8)).sample_array(count)
    norms = K.space.norm_of(X)
    return X[norms > 0] / norms[norms > 0, None]


def _finite(value):
    return float(value) if value is not None and math.isfinite(value) else None


def _construct(cfg, K, g, out):
    c = cfg["construct"]
    sphere_B = _sphere(K, int(c["sphere_samples"])) if c["sphere"] else None
    mollify = c.get("mollify", {}) or {}
    net, report = approximate(
        g, K, cfg.activation, float(cfg["epsilon"]), sphere_B=sphere_B,
        dict_sizes=tuple(c["dict_sizes"]), seed=cfg.seed, ridge=float(c["ridge"]),
        theta_range=None if c["theta_range"] is None else tuple(c["theta_range"]),
        mollify_delta=float(mollify.get("delta", 0.05)), mollify_nodes=int(mollify.get("nodes", 64)),
        cap=float(c["cap"]), scales=tuple(c["scales"]), n_train=int(c["n_train"]),
        n_val=int(c["n_val"]),
    )
    out.update({
        "dict_size": report.dict_size,
        "stage1_error": report.stage1_error,
        "stage2_error_sum": math.fsum(report.stage2_errors),
        "stage2_error_max": max(report.stage2_errors),
        "stage2_budget": report.stage2_budget,
        "budget_misses": len(report.budget_misses),
        "total_estimate": report.total_estimate,
        "construct_validation_error": report.validation_error,
        "ledger_holds": report.ledger_holds,
    })
    if report.sphere_peaks is not None:
        out["sphere_peak_min"], out["sphere_peak_max"] = report.sphere_peaks
    return net, report


def _train(cfg, K, g, out):
    t = cfg["train"]
    X = K.clone(_derive_seed(K.seed, 9)).sample_array(int(cfg["samples"]["train"]))
    y = g(X)
    net0 = init(cfg.space, cfg.activation, int(cfg["width"]), seed=cfg.seed,
                scale=float(t["init_scale"]))
    tc = TrainConfig(learning_rate=float(t["learning_rate"]), iterations=int(t["iterations"]),
                     batch_size=t["batch_size"], seed=cfg.seed, optimizer=t["optimizer"],
                     momentum=float(t["momentum"]), subgradient=bool(t["subgradient"]))
    net, trace = train(net0, (X, y), tc)
    out.update({
        "loss_initial": float(trace[0]),
        "loss_final": float(trace[-1]),
        "loss_min": float(np.min(trace)),
        "iterations": int(len(trace) - 1),
    })
    return net, None


def execute(cfg: ExperimentConfig):
    """Run one configuration; returns ``(record, runtime_ms, report_dict)``.

    Failures in lower modules become records with ``status: failed`` and a
    machine-readable ``reason``; nothing is raised.
    """
    t0 = time.perf_counter()
    record = {
        "version": VERSION_TAG, "status": "ok", "reason": None, "message": None,
        "route": cfg.route, "seed": cfg.seed, "space": cfg.space.describe(),
        "activation": cfg.activation.name, "target": cfg["target"]["id"],
        "sup_error": None, "l2_error": None, "width": None, "param_max_abs": None,
        "config": cfg.echo(),
    }
    report = None
    try:
        K = _sampler(cfg)
        g = build_target(cfg["target"], cfg.space, cfg.activation)
        stage = {}
        runner = _construct if cfg.route == "construct" else _train
        net, rep = runner(cfg, K, g, stage)
        Xv = K.clone(_derive_seed(K.seed, 7)).sample_array(int(cfg["samples"]["validation"]))
        res = net(Xv) - g(Xv)
        record.update(stage)
        record.update({
            "sup_error": float(np.max(np.abs(res))),
            "l2_error": float(np.sqrt(np.mean(res * res))),
            "width": net.width,
            "param_max_abs": float(np.max(np.abs(net.param_vector()))),
        })
        if rep is not None:
            report = rep.to_dict(timings=False)
        bad = [k for k, v in record.items() if isinstance(v, float) and not math.isfinite(v)]
        if bad:
            raise FloatingPointError(f"non-finite fields: {bad}")
    except TVSError as exc:
        record.update(status="failed", reason=exc.code, message=str(exc))
    except (ArithmeticError, ValueError, MemoryError) as exc:
        record.update(status="failed", reason="numerical_error", message=f"{type(exc).__name__}: {exc}")
    for key, value in list(record.items()):
        if isinstance(value, float):
            record[key] = _finite(value)
    return record, 1e3 * (time.perf_counter() - t0), report


def run(cfg: ExperimentConfig) -> dict:
    return execute(cfg)[0]


def dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, allow_nan=False)


def expand(cfg: ExperimentConfig) -> list[tuple[dict, ExperimentConfig]]:
    """Cartesian grid over the sweep axes, every point validated before any run."""
    axes = cfg.sweep_axes
    if not axes:
        return [({}, cfg)]
    base = {k: v for k, v in cfg.raw.items() if k != "sweep"}
    names = list(axes)
    points = []
    for values in itertools.product(*(axes[n] for n in names)):
        raw = copy.deepcopy(base)
        for name, value in zip(names, values):
            set_path(raw, name, value)
        try:
            points.append((dict(zip(names, values)), validate(raw)))
        except ConfigError as exc:
            raise ConfigError(f"sweep point {dict(zip(names, values))}: {exc}",
                              field=exc.field) from None
    return points


def _median(values):
    vals = [v for v in values if v is not None]
    return float(np.median(vals)) if vals else None


def summarize(points, records) -> dict:
    """Per-axis trends: medians of sup error, width and final loss for each axis value."""
    trends = {}
    for name in (points[0][0] if points else {}):
        rows = []
        for value in dict.fromkeys(json.dumps(p[0][name], sort_keys=True) for p in points):
            group = [r for p, r in zip(points, records)
                     if json.dumps(p[0][name], sort_keys=True) == value]
            rows.append({
                "value": json.loads(value),
                "runs": len(group),
                "failures": sum(r["status"] != "ok" for r in group),
                "median_sup_error": _median(r["sup_error"] for r in group),
                "median_width": _median(r["width"] for r in group),
                "median_final_loss": _median(r.get("loss_final") for r in group),
            })
        trends[name] = rows
    return {
        "version": VERSION_TAG,
        "points": len(records),
        "failures": sum(r["status"] != "ok" for r in records),
        "trends": trends,
    }


def csv_text(points, records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for i, ((axes, _), r) in enumerate(zip(points, records)):
        cfg = r["config"]
        writer.writerow([
            i, r["status"], r["reason"] or "", r["route"], r["seed"], repr(float(cfg["epsilon"])),
            cfg["width"], *(("" if r.get(k) is None else repr(r[k])) for k in
                            ("sup_error", "l2_error", "width", "total_estimate", "stage1_error",
                             "loss_final")),
            json.dumps(axes, sort_keys=True),
        ])
    return buf.getvalue()


def sweep(cfg: ExperimentConfig, output=None, threads: int | None = None):
    """Run every grid point; returns ``(records, summary)`` and writes files under ``output``.

    Files: ``records.jsonl``, ``summary.csv``, ``summary.json``,
    ``timings.json`` and, when ``report`` is set, ``reports/point-NNN.json``.
    """
    points = expand(cfg)
    threads = int(cfg["threads"] if threads is None else threads)
    configs = [p[1] for p in points]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(execute, configs))
    else:
        results = [execute(c) for c in configs]
    records = [r[0] for r in results]
    summary = summarize(points, records)
    output = output if output is not None else cfg["output"]
    if output is not None:
        out = Path(output)
        out.mkdir(parents=True, exist_ok=True)
        (out / "records.jsonl").write_text("".join(dumps(r) + "\n" for r in records))
        (out / "summary.csv").write_text(csv_text(points, records))
        (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n")
        (out / "timings.json").write_text(json.dumps({"runtime_ms": [r[1] for r in results]}) + "\n")
        if cfg["report"]:
            rep_dir = out / "reports"
            rep_dir.mkdir(exist_ok=True)
            for i, (_, _, rep) in enumerate(results):
                if rep is not None:
                    (rep_dir / f"point-{i:03d}.json").write_text(json.dumps(rep, sort_keys=True) + "\n")
    return records, summary
