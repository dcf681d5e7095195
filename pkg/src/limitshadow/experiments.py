"""Named, reproducible experiments: config in, verdict JSON + trace CSV + summary out."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .base_space import MetricSystem, SpaceError, Word, preset_system
from .pseudo_orbit import (
    ErrorSchedule,
    FlowPseudoOrbit,
    MapPseudoOrbit,
    generate_limit_pseudo_orbit,
    map_splice,
    project_map_to_flow,
    pseudo_orbit_from_json,
)
from .reparam import Reparam
from .shadowing import (
    NOT_SHADOWED,
    ShadowVerdict,
    map_errors,
    map_tsls_gap_search,
    project_shadow_to_base,
    shadow_flow_pseudo_orbit,
)
from .singular import SingularFlow, singular_nonshadowing_demo
from .suspension import SuspensionFlow, SuspensionPoint

KINDS = ("map-gap", "theorem-a", "round-trip", "singular-demo")
DEFAULT_KNOBS = {"tol": 0.1, "gap_bound": 4, "depth": 4, "seed": 0, "horizon": 64, "samples_per_bracket": 4}


class ConfigError(ValueError):
    pass


class ReplayError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    name: str
    kind: str
    system: dict
    anchor: str = ""
    source: dict = field(default_factory=dict)
    knobs: dict = field(default_factory=dict)
    singular_point: Any = None
    outputs: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        missing = [k for k in ("name", "kind", "system") if k not in obj]
        if missing:
            raise ConfigError(f"config is missing {missing}")
        if obj["kind"] not in KINDS:
            raise ConfigError(f"unknown experiment kind {obj['kind']!r}; choose from {KINDS}")
        unknown = set(obj) - {"name", "kind", "system", "anchor", "source", "knobs", "singular_point", "outputs"}
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        knobs = dict(DEFAULT_KNOBS)
        bad = set(obj.get("knobs", {})) - set(DEFAULT_KNOBS)
        if bad:
            raise ConfigError(f"unknown knobs {sorted(bad)}")
        knobs.update(obj.get("knobs", {}))
        if obj["kind"] == "singular-demo" and "singular_point" not in obj:
            raise ConfigError("singular-demo needs a singular_point")
        return cls(obj["name"], obj["kind"], obj["system"], obj.get("anchor", ""), obj.get("source", {}),
                   knobs, obj.get("singular_point"), obj.get("outputs", {}))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} not found")
        try:
            obj = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        cfg = cls.from_dict(obj)
        src = cfg.source.get("file")
        if src and not Path(src).is_absolute():
            cfg.source = dict(cfg.source, file=str(path.parent / src))
        return cfg

    def to_dict(self) -> dict:
        out = {"name": self.name, "kind": self.kind, "system": self.system, "anchor": self.anchor,
               "source": self.source, "knobs": self.knobs}
        if self.singular_point is not None:
            out["singular_point"] = self.singular_point
        return out

    def config_hash(self) -> str:
        return hashlib.sha256(dumps(self.to_dict()).encode()).hexdigest()


def load_system(desc: dict) -> MetricSystem:
    if "preset" in desc:
        opts = {k: v for k, v in desc.items() if k != "preset"}
        return preset_system(desc["preset"], **opts)
    return MetricSystem.from_descriptor(desc)


def _plain(obj):
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, SuspensionPoint):
        return {"base": obj.base if not isinstance(obj.base, Word) else obj.base.to_json(), "height": obj.height}
    if isinstance(obj, Word):
        return obj.to_json()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, default=_plain)


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


def _map_source(cfg: ExperimentConfig, system) -> MapPseudoOrbit:
    src = cfg.source
    space = system.space
    if "file" in src:
        po = pseudo_orbit_from_json(json.loads(Path(src["file"]).read_text()), space)
        if not isinstance(po, MapPseudoOrbit):
            raise ConfigError("expected a map pseudo-orbit")
        return po
    if "splice" in src:
        past, future = (space.point_from_json(p) for p in src["splice"])
        return map_splice(system, past, future, int(cfg.knobs["horizon"]), int(src.get("cut", 0)))
    if "seeds" in src:
        from .pseudo_orbit import generate_map_pseudo_orbit

        seeds = [space.point_from_json(p) for p in src["seeds"]]
        return generate_map_pseudo_orbit(system, seeds, int(cfg.knobs["horizon"]), int(cfg.knobs["seed"]),
                                         float(src.get("C", 1.0)))
    raise ConfigError("map source needs 'file', 'splice' or 'seeds'")


def _flow_source(cfg: ExperimentConfig, flow) -> FlowPseudoOrbit:
    src = cfg.source
    space = flow.space
    if "file" in src:
        po = pseudo_orbit_from_json(json.loads(Path(src["file"]).read_text()), space)
        if not isinstance(po, FlowPseudoOrbit):
            raise ConfigError("expected a flow pseudo-orbit")
        return po
    if "seeds" in src:
        seeds = [space.point_from_json(p) for p in src["seeds"]]
        sched = ErrorSchedule.from_json(src.get("schedule", {"kind": "limit"}))
        lo, hi = src.get("durations", [2.0, 4.0])
        return generate_limit_pseudo_orbit(flow, seeds, sched, int(cfg.knobs["horizon"]), int(cfg.knobs["seed"]),
                                           (float(lo), float(hi)))
    raise ConfigError("flow source needs 'file' or 'seeds'")


def _entry(label: str, verdict: ShadowVerdict, space, input_key: str) -> dict:
    return {"label": label, "input": input_key, "verdict": verdict.to_json(space)}


def execute(cfg: ExperimentConfig) -> dict:
    """Run an experiment and return the verdict document (no files written)."""
    system = load_system(cfg.system)
    space = system.space
    k = cfg.knobs
    tol, N, depth = float(k["tol"]), int(k["gap_bound"]), int(k["depth"])
    flow = SuspensionFlow(system, depth)
    inputs: dict = {}
    entries: list = []
    if cfg.kind == "map-gap":
        mpo = _map_source(cfg, system)
        inputs["map"] = mpo.to_json(space)
        gap0 = map_tsls_gap_search(system, mpo, 0, tol)
        full = map_tsls_gap_search(system, mpo, N, tol)
        fpo = project_map_to_flow(mpo, flow)
        inputs["flow"] = fpo.to_json(space)
        lifted = shadow_flow_pseudo_orbit(flow, fpo, N, tol, int(k["samples_per_bracket"]))
        entries = [_entry("map", full, space, "map"), _entry("map-gap-0", gap0, space, "map"),
                   _entry("suspension", lifted, space, "flow")]
    elif cfg.kind == "theorem-a":
        fpo = _flow_source(cfg, flow)
        inputs["flow"] = fpo.to_json(space)
        verdict = shadow_flow_pseudo_orbit(flow, fpo, N, tol, int(k["samples_per_bracket"]))
        entries = [_entry("suspension", verdict, space, "flow")]
    elif cfg.kind == "round-trip":
        mpo = _map_source(cfg, system)
        inputs["map"] = mpo.to_json(space)
        direct = map_tsls_gap_search(system, mpo, N, tol)
        fpo = project_map_to_flow(mpo, flow)
        inputs["flow"] = fpo.to_json(space)
        lifted = shadow_flow_pseudo_orbit(flow, fpo, N, tol, int(k["samples_per_bracket"]))
        projected = project_shadow_to_base(flow, lifted, mpo, tol)
        entries = [_entry("projected", projected, space, "map"), _entry("direct", direct, space, "map"),
                   _entry("suspension", lifted, space, "flow")]
    elif cfg.kind == "singular-demo":
        a = space.point_from_json(cfg.singular_point)
        sflow = SingularFlow(system, a, depth=depth)
        verdict = singular_nonshadowing_demo(sflow, int(k["horizon"]), tol, N)
        entries = [_entry("singular", verdict, space, "")]
    return {
        "experiment": cfg.name,
        "kind": cfg.kind,
        "anchor": cfg.anchor,
        "provenance": {"config_hash": cfg.config_hash(), "version": __version__, "knobs": cfg.knobs},
        "config": cfg.to_dict(),
        "inputs": inputs,
        "verdicts": entries,
        "status": entries[0]["verdict"]["status"],
    }


def trace_csv(entry: dict) -> str:
    v = entry["verdict"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if v["mode"] == "map" and v["status"] != NOT_SHADOWED:
        w.writerow(["i", "error"])
    elif v["mode"] == "flow" and v["status"] != NOT_SHADOWED:
        w.writerow(["t", "k", "error"])
    else:
        w.writerow(["candidate", "gap_or_floor", "error"][: len(v["trace"][0]) if v["trace"] else 2])
    for row in v["trace"]:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def summary_text(doc: dict) -> str:
    lines = [f"experiment: {doc['experiment']} ({doc['kind']})", f"claim exercised: {doc['anchor']}",
             f"config hash: {doc['provenance']['config_hash']}", f"version: {doc['provenance']['version']}"]
    for e in doc["verdicts"]:
        v = e["verdict"]
        lines.append(f"[{e['label']}] status={v['status']} gap={v['gap']} tail_error={v['tail_error']!r} tol={v['tol']}")
        if v["status"] == NOT_SHADOWED:
            lines.append(f"    search domain: {json.dumps(v['search_domain'], sort_keys=True)}")
    lines.append("limits are checked on a finite horizon: last-quarter max <= tol and <= half the second-quarter max")
    return "\n".join(lines) + "\n"


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Execute ``cfg`` and write verdict JSON, trace CSV and summary into ``out_dir``."""
    doc = execute(cfg)
    text = dumps(doc)
    paths = {}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        names = {"verdict": f"{cfg.name}.verdict.json", "trace_csv": f"{cfg.name}.trace.csv",
                 "summary": f"{cfg.name}.summary.txt"}
        names.update(cfg.outputs)
        (out / names["verdict"]).write_text(text)
        (out / names["trace_csv"]).write_text(trace_csv(doc["verdicts"][0]))
        (out / names["summary"]).write_text(summary_text(doc))
        paths = {k: str(out / v) for k, v in names.items()}
    return {"status": doc["status"], "document": doc, "text": text, "paths": paths}


def bundled_names() -> list[str]:
    root = resources.files("limitshadow") / "experiments"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def bundled_config(name: str) -> ExperimentConfig:
    path = resources.files("limitshadow") / "experiments" / f"{name}.json"
    if not path.is_file():
        raise ConfigError(f"no bundled experiment {name!r}; available: {bundled_names()}")
    return ExperimentConfig.from_dict(json.loads(path.read_text()))


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------


@dataclass
class ReplayResult:
    ok: bool
    checked: int
    label: str = ""
    first_mismatch: tuple | None = None

    def describe(self) -> str:
        if self.ok:
            return f"replay passed ({self.checked} samples)"
        i, stored, fresh = self.first_mismatch
        return f"replay failed in [{self.label}] at sample {i}: stored {stored!r}, recomputed {fresh!r}"


def _compare(label, stored_rows, fresh_rows, atol) -> ReplayResult:
    if len(stored_rows) != len(fresh_rows):
        return ReplayResult(False, 0, label, (min(len(stored_rows), len(fresh_rows)), len(stored_rows), len(fresh_rows)))
    for i, (a, b) in enumerate(zip(stored_rows, fresh_rows)):
        if len(a) != len(b) or any(abs(float(x) - float(y)) > atol for x, y in zip(a, b)):
            return ReplayResult(False, i, label, (i, list(a), list(b)))
    return ReplayResult(True, len(stored_rows), label)


def _replay_entry(doc: dict, entry: dict, system, atol: float) -> ReplayResult:
    v = entry["verdict"]
    space = system.space
    label = entry["label"]
    knobs = doc["provenance"]["knobs"]
    flow = SuspensionFlow(system, int(knobs["depth"]))
    if doc["kind"] == "singular-demo":
        cfg = ExperimentConfig.from_dict(doc["config"])
        fresh = execute(cfg)["verdicts"][0]["verdict"]
        return _compare(label, v["trace"], fresh["trace"], atol)
    po_json = doc["inputs"].get(entry["input"])
    if po_json is None:
        raise ReplayError(f"verdict {label} has no stored input")
    po = pseudo_orbit_from_json(po_json, space)
    if v["status"] == NOT_SHADOWED:
        if v["mode"] == "map":
            fresh = map_tsls_gap_search(system, po, int(v["search_domain"].get("gap_bound", knobs["gap_bound"])),
                                        float(v["tol"]))
            return _compare(label, v["trace"], [list(r) for r in fresh.trace], atol)
        fresh = shadow_flow_pseudo_orbit(flow, po, int(knobs["gap_bound"]), float(v["tol"]),
                                         int(knobs["samples_per_bracket"]))
        return _compare(label, v["trace"], [list(r) for r in fresh.trace], atol)
    if v["mode"] == "map":
        w = space.point_from_json(v["witness"])
        idx = [int(r[0]) for r in v["trace"]]
        errs = map_errors(system, w, po, int(v["gap"]), idx)
        return _compare(label, v["trace"], [[i, e] for i, e in zip(idx, errs)], atol)
    w = SuspensionPoint(space.point_from_json(v["witness"]["base"]), float(v["witness"]["height"]))
    h = Reparam.from_json(v["reparam"])
    fresh = []
    for t, k, _ in v["trace"]:
        k = int(k)
        star = flow.eval(po.x(k), t - po.s(k))
        fresh.append([t, k, flow.distance(flow.eval(w, h(t)), star)])
    return _compare(label, v["trace"], fresh, atol)


def replay_verdict(doc_or_path, atol: float = 1e-9) -> ReplayResult:
    """Recompute every stored trace from the serialized inputs, witnesses and reparametrizations."""
    if isinstance(doc_or_path, (str, Path)):
        doc = json.loads(Path(doc_or_path).read_text())
    else:
        doc = doc_or_path
    system = load_system(doc["config"]["system"])
    total = 0
    for entry in doc["verdicts"]:
        res = _replay_entry(doc, entry, system, atol)
        if not res.ok:
            return res
        total += res.checked
    return ReplayResult(True, total)
