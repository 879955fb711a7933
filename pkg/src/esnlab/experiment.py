"""Sweep orchestration, aggregation, persistence, and figure emission.

A sweep evaluates every (rho, seed) pair on a fixed architecture and
protocol. Each realization initializes a fresh network, drives it with the
input signal, and measures every layer; it is a pure function of its
arguments, so realizations can run in any order and on any number of workers
without changing a single output bit. BLAS threading is pinned to one thread
inside each realization for exactly that reason.

By default one input signal (derived from the base seed) is shared by all
realizations of a sweep, which isolates network-to-network variance; set
``shared_input=False`` to redraw the signal per realization.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed
from threadpoolctl import threadpool_limits

from . import __version__
from .errors import ConfigurationError, DataError, EsnLabError
from .mc_task import McProtocol, ascending_sum, generate_input, measure_layer
from .reservoir import DeepEsnConfig, init_deep_esn
from .svg import LineChart
from .validation import finite_float, positive_int

RECORDS_BASENAME = "records"
AGGREGATES_BASENAME = "aggregates"
MANIFEST_NAME = "run-manifest.json"
ERROR_MANIFEST_NAME = "error-manifest.json"

_MAX_SEED = 2 ** 64


def default_rho_grid() -> tuple[float, ...]:
    """The paper-range grid: 0.1 to 1.5 in steps of 0.1."""
    return tuple(round(0.1 * i, 10) for i in range(1, 16))


@dataclass(frozen=True)
class EsnArchitecture:
    """Network shape and coupling scale; the spectral radius comes from the grid."""

    n_layers: int = 10
    units_per_layer: int = 100
    input_dim: int = 1
    coupling_norm: float = 1.0

    def to_config(self, rho: float) -> DeepEsnConfig:
        return DeepEsnConfig(
            n_layers=self.n_layers,
            units_per_layer=self.units_per_layer,
            input_dim=self.input_dim,
            spectral_radius=rho,
            coupling_norm=self.coupling_norm,
        )


@dataclass(frozen=True)
class SweepConfig:
    """Everything a sweep needs; two sweeps with equal configs emit equal records."""

    rho_grid: tuple[float, ...] = field(default_factory=default_rho_grid)
    n_realizations: int = 50
    base_seed: int = 0
    esn: EsnArchitecture = field(default_factory=EsnArchitecture)
    protocol: McProtocol = field(default_factory=McProtocol)
    shared_input: bool = True

    def validate(self) -> "SweepConfig":
        if not self.rho_grid:
            raise ConfigurationError("rho_grid must not be empty")
        for rho in self.rho_grid:
            if finite_float(rho, "rho_grid entry") <= 0.0:
                raise ConfigurationError(f"rho_grid entries must be > 0, got {rho!r}")
        positive_int(self.n_realizations, "n_realizations")
        if not isinstance(self.base_seed, (int, np.integer)) or isinstance(self.base_seed, bool) \
                or not 0 <= int(self.base_seed) < _MAX_SEED:
            raise ConfigurationError(f"base_seed must be an unsigned 64-bit integer, got {self.base_seed!r}")
        self.esn.to_config(self.rho_grid[0]).validate()
        self.protocol.validate()
        return self

    @property
    def seeds(self) -> tuple[int, ...]:
        return tuple((self.base_seed + i) % _MAX_SEED for i in range(self.n_realizations))

    def to_dict(self) -> dict:
        return {
            "rho_grid": [float(r) for r in self.rho_grid],
            "n_realizations": self.n_realizations,
            "base_seed": self.base_seed,
            "shared_input": self.shared_input,
            "esn": {
                "n_layers": self.esn.n_layers,
                "units_per_layer": self.esn.units_per_layer,
                "input_dim": self.esn.input_dim,
                "coupling_norm": self.esn.coupling_norm,
            },
            "protocol": {
                "total_steps": self.protocol.total_steps,
                "washout": self.protocol.washout,
                "train_len": self.protocol.train_len,
                "test_len": self.protocol.test_len,
                "k_max": self.protocol.k_max,
                "input_low": self.protocol.input_low,
                "input_high": self.protocol.input_high,
                "ridge": self.protocol.ridge,
                "intercept": self.protocol.intercept,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        if not isinstance(data, dict):
            raise ConfigurationError(f"sweep config must be a JSON object, got {type(data).__name__}")
        known = {"rho_grid", "n_realizations", "base_seed", "shared_input", "esn", "protocol"}
        for key in data:
            if key not in known:
                raise ConfigurationError(f"unknown sweep config field: {key!r}")
        esn_data = dict(data.get("esn", {}))
        esn_known = {"n_layers", "units_per_layer", "input_dim", "coupling_norm"}
        for key in esn_data:
            if key not in esn_known:
                raise ConfigurationError(f"unknown esn config field: {key!r}")
        proto_data = dict(data.get("protocol", {}))
        proto_known = {"total_steps", "washout", "train_len", "test_len", "k_max",
                       "input_low", "input_high", "ridge", "intercept"}
        for key in proto_data:
            if key not in proto_known:
                raise ConfigurationError(f"unknown protocol config field: {key!r}")
        defaults = McProtocol()
        total = proto_data.get("total_steps", defaults.total_steps)
        washout = proto_data.get("washout", defaults.washout)
        test_len = proto_data.get("test_len", defaults.test_len)
        proto_data.setdefault("train_len", total - washout - test_len)
        proto_data.setdefault("total_steps", total)
        proto_data.setdefault("washout", washout)
        proto_data.setdefault("test_len", test_len)
        grid = data.get("rho_grid", default_rho_grid())
        config = cls(
            rho_grid=tuple(float(r) for r in grid),
            n_realizations=data.get("n_realizations", 50),
            base_seed=data.get("base_seed", 0),
            esn=EsnArchitecture(**esn_data),
            protocol=McProtocol(**proto_data),
            shared_input=bool(data.get("shared_input", True)),
        )
        return config.validate()


@dataclass(frozen=True)
class SweepRecord:
    """Measured memory capacity of one layer in one (rho, seed) realization."""

    rho: float
    seed: int
    layer: int
    mc_total: float
    forgetting_curve: np.ndarray


@dataclass(frozen=True)
class AggregateRecord:
    """Across-seed statistics for one (rho, layer) cell."""

    rho: float
    layer: int
    mc_mean: float
    mc_std: float
    curve_mean: np.ndarray


def run_realization(rho: float, seed: int, sweep: SweepConfig) -> list[SweepRecord]:
    """Initialize, simulate, and measure one network; one record per layer."""
    config = sweep.esn.to_config(float(rho)).validate()
    try:
        # One BLAS thread keeps every realization's float stream identical
        # whether it runs serially or inside a worker pool.
        with threadpool_limits(limits=1):
            esn = init_deep_esn(config, seed)
            input_seed = sweep.base_seed if sweep.shared_input else seed
            u = generate_input(sweep.protocol, input_seed)
            records = []
            for trajectory in esn.run_sequence(u):
                result = measure_layer(trajectory, u, sweep.protocol)
                records.append(SweepRecord(
                    rho=float(rho),
                    seed=int(seed),
                    layer=result.layer,
                    mc_total=result.mc_total,
                    forgetting_curve=result.forgetting_curve,
                ))
            return records
    except EsnLabError as exc:
        raise type(exc)(f"realization (rho={rho}, seed={seed}): {exc}") from exc


def aggregate_records(records: list[SweepRecord]) -> list[AggregateRecord]:
    """Mean/std of mc_total and the mean curve per (rho, layer), seeds ascending."""
    groups: dict[tuple[float, int], list[SweepRecord]] = {}
    for record in records:
        groups.setdefault((record.rho, record.layer), []).append(record)
    aggregates = []
    for (rho, layer), group in groups.items():
        group = sorted(group, key=lambda r: r.seed)
        n = len(group)
        mean = ascending_sum(r.mc_total for r in group) / n
        variance = ascending_sum((r.mc_total - mean) ** 2 for r in group) / n
        curve_acc = np.zeros_like(group[0].forgetting_curve)
        for r in group:
            curve_acc += r.forgetting_curve
        aggregates.append(AggregateRecord(
            rho=rho, layer=layer, mc_mean=mean, mc_std=math.sqrt(variance),
            curve_mean=curve_acc / n,
        ))
    return aggregates


def run_sweep(sweep: SweepConfig, workers: int = 1, out_dir=None,
              fmt: str = "csv") -> tuple[list[SweepRecord], list[AggregateRecord]]:
    """Evaluate every (rho, seed) pair; optionally persist results.

    Record order is fixed: rho in grid order, then seed ascending, then layer
    ascending, regardless of the worker count. If a realization fails, the
    records completed so far are flushed to ``out_dir`` (when given) together
    with an error manifest, and the error is re-raised.
    """
    sweep.validate()
    tasks = [(rho, seed) for rho in sweep.rho_grid for seed in sweep.seeds]
    records: list[SweepRecord] = []
    try:
        if workers <= 1:
            for rho, seed in tasks:
                records.extend(run_realization(rho, seed, sweep))
        else:
            parallel = Parallel(n_jobs=workers, backend="loky", return_as="generator")
            for result in parallel(delayed(run_realization)(rho, seed, sweep) for rho, seed in tasks):
                records.extend(result)
    except Exception as exc:
        if out_dir is not None:
            _flush_partial(records, sweep, out_dir, fmt, exc)
        raise
    aggregates = aggregate_records(records)
    if out_dir is not None:
        emit_results(records, aggregates, out_dir, fmt=fmt, sweep=sweep)
    return records, aggregates


def _flush_partial(records, sweep, out_dir, fmt, exc) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_records(records, out, fmt, k_max=sweep.protocol.k_max)
    manifest = {
        "artifact": "esnlab",
        "version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "error_type": type(exc).__name__,
        "error": str(exc),
        "completed_records": len(records),
        "config": sweep.to_dict(),
    }
    with open(out / ERROR_MANIFEST_NAME, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _fmt_float(value) -> str:
    # repr of a Python float is the shortest decimal that round-trips.
    return repr(float(value))


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _write_records(records, out: Path, fmt: str, k_max: int | None = None) -> Path:
    if k_max is None:
        k_max = len(records[0].forgetting_curve) if records else 0
    if fmt == "csv":
        path = out / f"{RECORDS_BASENAME}.csv"
        header = ["rho", "seed", "layer", "mc_total"] + [f"mc_k_{k}" for k in range(1, k_max + 1)]
        rows = (
            [_fmt_float(r.rho), str(r.seed), str(r.layer), _fmt_float(r.mc_total)]
            + [_fmt_float(v) for v in r.forgetting_curve]
            for r in records
        )
        _write_csv(path, header, rows)
    elif fmt == "json":
        path = out / f"{RECORDS_BASENAME}.json"
        payload = [
            {"rho": float(r.rho), "seed": int(r.seed), "layer": int(r.layer),
             "mc_total": float(r.mc_total), "mc_k": [float(v) for v in r.forgetting_curve]}
            for r in records
        ]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    else:
        raise ConfigurationError(f"unknown output format: {fmt!r} (expected 'csv' or 'json')")
    return path


def _write_aggregates(aggregates, out: Path, fmt: str, k_max: int | None = None) -> Path:
    if k_max is None:
        k_max = len(aggregates[0].curve_mean) if aggregates else 0
    if fmt == "csv":
        path = out / f"{AGGREGATES_BASENAME}.csv"
        header = ["rho", "layer", "mc_mean", "mc_std"] + [f"curve_mean_{k}" for k in range(1, k_max + 1)]
        rows = (
            [_fmt_float(a.rho), str(a.layer), _fmt_float(a.mc_mean), _fmt_float(a.mc_std)]
            + [_fmt_float(v) for v in a.curve_mean]
            for a in aggregates
        )
        _write_csv(path, header, rows)
    elif fmt == "json":
        path = out / f"{AGGREGATES_BASENAME}.json"
        payload = [
            {"rho": float(a.rho), "layer": int(a.layer), "mc_mean": float(a.mc_mean),
             "mc_std": float(a.mc_std), "curve_mean": [float(v) for v in a.curve_mean]}
            for a in aggregates
        ]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    else:
        raise ConfigurationError(f"unknown output format: {fmt!r} (expected 'csv' or 'json')")
    return path


def emit_results(records, aggregates, out_dir, fmt: str = "csv",
                 sweep: SweepConfig | None = None, run_options: dict | None = None) -> dict:
    """Write records, aggregates, and the run manifest; returns written paths."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        k_max = sweep.protocol.k_max if sweep is not None else None
        records_path = _write_records(records, out, fmt, k_max=k_max)
        aggregates_path = _write_aggregates(aggregates, out, fmt, k_max=k_max)
        manifest = {
            "artifact": "esnlab",
            "version": __version__,
            "created_utc": datetime.now(timezone.utc).isoformat(),
            "format": fmt,
            "deterministic_replay": True,
            "rho_grid": [float(r) for r in sweep.rho_grid] if sweep is not None else
                        sorted({float(r.rho) for r in records}),
            "seeds": list(sweep.seeds) if sweep is not None else
                     sorted({int(r.seed) for r in records}),
            "config": sweep.to_dict() if sweep is not None else None,
        }
        if run_options:
            manifest["run_options"] = run_options
        manifest_path = out / MANIFEST_NAME
        with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise DataError(f"cannot write results under {out}: {exc}") from exc
    return {"records": records_path, "aggregates": aggregates_path, "manifest": manifest_path}


def load_records(path) -> list[SweepRecord]:
    """Read a records file (csv or json) back into memory, exactly."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"records file not found: {path}")
    if path.suffix == ".json":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return [SweepRecord(rho=float(r["rho"]), seed=int(r["seed"]), layer=int(r["layer"]),
                            mc_total=float(r["mc_total"]),
                            forgetting_curve=np.array(r["mc_k"], dtype=np.float64))
                for r in payload]
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataError(f"records file is empty: {path}")
    header = lines[0].split(",")
    if header[:4] != ["rho", "seed", "layer", "mc_total"]:
        raise DataError(f"unexpected records header in {path}: {header[:4]}")
    records = []
    for line in lines[1:]:
        parts = line.split(",")
        records.append(SweepRecord(
            rho=float(parts[0]), seed=int(parts[1]), layer=int(parts[2]),
            mc_total=float(parts[3]),
            forgetting_curve=np.array([float(v) for v in parts[4:]], dtype=np.float64),
        ))
    return records


def load_aggregates(path) -> list[AggregateRecord]:
    """Read an aggregates file (csv or json) back into memory, exactly."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"aggregates file not found: {path}")
    if path.suffix == ".json":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return [AggregateRecord(rho=float(a["rho"]), layer=int(a["layer"]),
                                mc_mean=float(a["mc_mean"]), mc_std=float(a["mc_std"]),
                                curve_mean=np.array(a["curve_mean"], dtype=np.float64))
                for a in payload]
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataError(f"aggregates file is empty: {path}")
    header = lines[0].split(",")
    if header[:4] != ["rho", "layer", "mc_mean", "mc_std"]:
        raise DataError(f"unexpected aggregates header in {path}: {header[:4]}")
    aggregates = []
    for line in lines[1:]:
        parts = line.split(",")
        aggregates.append(AggregateRecord(
            rho=float(parts[0]), layer=int(parts[1]), mc_mean=float(parts[2]),
            mc_std=float(parts[3]),
            curve_mean=np.array([float(v) for v in parts[4:]], dtype=np.float64),
        ))
    return aggregates


def load_sweep_config(path) -> SweepConfig:
    """Read a config file; accepts both bare configs and run manifests."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
    if isinstance(data, dict) and "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    return SweepConfig.from_dict(data)


def emit_plots(aggregates: list[AggregateRecord], out_dir, fig3_rho: float = 0.9) -> dict:
    """Write the two result figures; returns their paths.

    fig2.svg: mean memory capacity against layer index, one line per rho.
    fig3.svg: mean forgetting curve (MC_k against delay k) of every layer at
    the selected rho.
    """
    if not aggregates:
        raise ConfigurationError("cannot plot an empty aggregate list")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rhos = list(dict.fromkeys(a.rho for a in aggregates))
    fig2 = LineChart(title="Memory capacity by layer",
                     x_label="layer", y_label="memory capacity")
    for rho in rhos:
        cells = sorted((a for a in aggregates if a.rho == rho), key=lambda a: a.layer)
        fig2.add_series(f"rho={_fmt_float(rho)}", [a.layer for a in cells], [a.mc_mean for a in cells])
    fig2_path = out / "fig2.svg"
    fig2.save(fig2_path)

    selected = [a for a in aggregates if abs(a.rho - fig3_rho) <= 1e-12]
    if not selected:
        available = ", ".join(_fmt_float(r) for r in rhos)
        raise ConfigurationError(
            f"no aggregates at rho={_fmt_float(fig3_rho)} for the forgetting-curve figure; "
            f"available rho values: {available}")
    fig3 = LineChart(title=f"Forgetting curves at rho={_fmt_float(fig3_rho)}",
                     x_label="delay k", y_label="MC_k")
    for cell in sorted(selected, key=lambda a: a.layer):
        ks = list(range(1, len(cell.curve_mean) + 1))
        fig3.add_series(f"layer {cell.layer}", ks, list(cell.curve_mean))
    fig3_path = out / "fig3.svg"
    fig3.save(fig3_path)
    return {"fig2": fig2_path, "fig3": fig3_path}
