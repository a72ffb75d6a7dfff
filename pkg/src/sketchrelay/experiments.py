"""Experiment sweeps: run a grid of simulations, emit plot-ready tables.

A JSON spec names a trace source, a base configuration, the policies to
compare, one sweep axis (pps, r, b, or policy) with its values, and how
many seeds to average. Results are written as CSV and JSON with a
canonical record order, so identical specs reproduce identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

from .analytics import MetricsReport, evaluate
from .simulate import POLICIES, SimConfig, run
from .traceio import Trace, ZipfSpec, gen_zipf, load_csv

SWEEP_AXES = ("pps", "r", "b", "policy")

SEED_ENV_VAR = "SKETCHRELAY_SEED"

RESULT_FIELDS = (
    "axis",
    "value",
    "policy",
    "seed",
    *MetricsReport.FIELDS,
    "register_data_accesses",
    "register_int_accesses",
    "int_packets",
    "sketchlets",
)

FIGURES = {
    "fig4": ("pps", ("re_cardinality", "f1_heavy_hitter", "wmre_fsd", "re_entropy")),
    "fig5a": ("pps", ("rae_switch_vs_truth", "rae_recon_vs_truth")),
    "fig5b": ("pps", ("rae_recon_vs_switch",)),
    "fig6-offset": ("r", ("rae_recon_vs_switch",)),
    "fig6-cookie": ("b", ("rae_recon_vs_switch",)),
}


class SpecError(ValueError):
    """Invalid experiment spec; `fields` lists every offending field."""

    def __init__(self, fields: Sequence[str]):
        self.fields = list(fields)
        super().__init__("invalid experiment spec: " + ", ".join(self.fields))


@dataclass(frozen=True)
class ExperimentSpec:
    trace: Mapping[str, Any]
    base: SimConfig
    policies: tuple[str, ...]
    axis: str
    values: tuple[Any, ...]
    seeds: int

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ExperimentSpec":
        bad: list[str] = []

        trace = raw.get("trace")
        if not isinstance(trace, Mapping) or trace.get("type") not in ("zipf", "csv"):
            bad.append("trace.type")
            trace = {}
        elif trace["type"] == "zipf":
            try:
                ZipfSpec(
                    flows=int(trace.get("flows", 0)),
                    packets=int(trace.get("packets", 0)),
                    skew=float(trace.get("skew", 1.0)),
                    duration=float(trace.get("duration", 1.0)),
                    seed=int(trace.get("seed", 0)),
                )
            except (TypeError, ValueError):
                bad.append("trace")
        elif "path" not in trace:
            bad.append("trace.path")

        base_raw = dict(raw.get("base", {}))
        if "seed" not in base_raw and SEED_ENV_VAR in os.environ:
            base_raw["seed"] = int(os.environ[SEED_ENV_VAR])
        if "snapshot_times" in base_raw and base_raw["snapshot_times"] is not None:
            base_raw["snapshot_times"] = tuple(base_raw["snapshot_times"])
        try:
            base = SimConfig(**base_raw)
            base.validate()
        except (TypeError, ValueError):
            bad.append("base")
            base = SimConfig()

        axis = raw.get("axis")
        if axis not in SWEEP_AXES:
            bad.append("axis")
            axis = "pps"

        values = raw.get("values")
        if not isinstance(values, Sequence) or isinstance(values, str) or not values:
            bad.append("values")
            values = ()
        elif axis == "policy" and any(v not in POLICIES for v in values):
            bad.append("values")

        policies = raw.get("policies", [base.policy] if axis != "policy" else [])
        if axis == "policy":
            policies = list(values)
        if not isinstance(policies, Sequence) or any(p not in POLICIES for p in policies):
            bad.append("policies")
            policies = ()

        seeds = raw.get("seeds", 1)
        if not isinstance(seeds, int) or seeds < 1:
            bad.append("seeds")
            seeds = 1

        if bad:
            raise SpecError(bad)
        return cls(
            trace=dict(trace),
            base=base,
            policies=tuple(policies),
            axis=axis,
            values=tuple(values),
            seeds=seeds,
        )

    @classmethod
    def from_json(cls, path: str) -> "ExperimentSpec":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _trace_for_seed(spec: ExperimentSpec, seed_index: int, cache: dict) -> Trace:
    if spec.trace["type"] == "csv":
        if "csv" not in cache:
            cache["csv"] = load_csv(spec.trace["path"])
        return cache["csv"]
    zs = ZipfSpec(
        flows=int(spec.trace["flows"]),
        packets=int(spec.trace["packets"]),
        skew=float(spec.trace.get("skew", 1.0)),
        duration=float(spec.trace.get("duration", 1.0)),
        seed=int(spec.trace.get("seed", 0)) + seed_index,
    )
    key = ("zipf", zs.seed)
    if key not in cache:
        cache.clear()  # traces are large; keep only the current seed's
        cache[key] = gen_zipf(zs)
    return cache[key]


def _config_for(spec: ExperimentSpec, value: Any, policy: str, seed_index: int) -> SimConfig:
    changes: dict[str, Any] = {"policy": policy, "seed": spec.base.seed + seed_index}
    if spec.axis == "pps":
        changes["pps"] = float(value)
    elif spec.axis == "r":
        changes["r"] = int(value)
    elif spec.axis == "b":
        changes["b"] = int(value)
    return replace(spec.base, **changes)


def run_experiment(spec: ExperimentSpec, output_dir: str, kernels=None) -> tuple[Path, Path]:
    """Run the full grid and write results.csv / results.json.

    One record per (axis value, policy, seed), canonically sorted, so a
    rerun of the same spec is byte-identical.
    """
    records: list[dict[str, Any]] = []
    cache: dict = {}
    for seed_index in range(spec.seeds):
        # seed-major order keeps at most one generated trace in memory
        trace = _trace_for_seed(spec, seed_index, cache)
        for value in spec.values:
            for policy in spec.policies if spec.axis != "policy" else [value]:
                cfg = _config_for(spec, value, policy, seed_index)
                result = run(trace, cfg, kernels=kernels)
                snap = result.snapshots[-1]
                report = evaluate(snap.switch, snap.recon, snap.truth)
                rec: dict[str, Any] = {
                    "axis": spec.axis,
                    "value": value,
                    "policy": policy,
                    "seed": seed_index,
                }
                for name in MetricsReport.FIELDS:
                    rec[name] = getattr(report, name)
                if result.registers is not None:
                    rec["register_data_accesses"] = result.registers.data_packet_accesses
                    rec["register_int_accesses"] = result.registers.int_packet_accesses
                else:
                    rec["register_data_accesses"] = None
                    rec["register_int_accesses"] = None
                rec["int_packets"] = result.int_packets
                rec["sketchlets"] = result.sketchlet_count
                records.append(rec)

    records.sort(key=lambda r: (str(r["value"]), r["policy"], r["seed"]))

    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "results.csv"
    json_path = out / "results.json"
    _write_records_csv(csv_path, records, RESULT_FIELDS)
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(records, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return csv_path, json_path


def _json_default(obj):
    raise TypeError(f"not JSON serializable: {obj!r}")


def _csv_cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_records_csv(path: Path, records: Sequence[Mapping[str, Any]],
                       fields: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for rec in records:
            writer.writerow([_csv_cell(rec.get(f)) for f in fields])


def load_records(path: str) -> list[dict[str, Any]]:
    """Read back a results.json produced by run_experiment."""
    with open(path, "r", encoding="utf-8") as fh:
        records = json.load(fh)
    if not isinstance(records, list):
        raise ValueError("results file must hold a list of records")
    return records


def emit_figure_data(
    records: Sequence[Mapping[str, Any]], figure: str
) -> list[dict[str, Any]]:
    """Aggregate records into tidy (value, policy, metric, mean, stderr) rows.

    The figure id fixes which sweep axis the records must carry and which
    metrics are tabulated.
    """
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; choose from {sorted(FIGURES)}")
    if not records:
        raise ValueError("no records to aggregate")
    axis, metrics = FIGURES[figure]
    axes = {r.get("axis") for r in records}
    if axes != {axis}:
        raise ValueError(
            f"figure {figure!r} needs a {axis!r} sweep, records carry {sorted(axes)}"
        )

    groups: dict[tuple[Any, str], list[Mapping[str, Any]]] = {}
    for rec in records:
        groups.setdefault((rec["value"], rec["policy"]), []).append(rec)

    rows = []
    for (value, policy) in sorted(groups, key=lambda g: (str(g[0]), g[1])):
        recs = groups[(value, policy)]
        for metric in metrics:
            vals = [float(r[metric]) for r in recs]
            mean = sum(vals) / len(vals)
            if len(vals) > 1:
                var = sum((v - mean) ** 2 for v in vals) / (len(vals) - 1)
                stderr = math.sqrt(var / len(vals))
            else:
                stderr = 0.0
            rows.append(
                {
                    "axis": axis,
                    "value": value,
                    "policy": policy,
                    "metric": metric,
                    "mean": mean,
                    "stderr": stderr,
                }
            )
    return rows


def write_figure_csv(rows: Sequence[Mapping[str, Any]], path: str) -> None:
    fields = ("axis", "value", "policy", "metric", "mean", "stderr")
    _write_records_csv(Path(path), rows, fields)
