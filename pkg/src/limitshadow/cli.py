"""Command line front end.  Exit codes: 0 verdict produced, 1 usage error, 2 internal error."""

from __future__ import annotations

import argparse
import csv
import json
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .base_space import SpaceError
from .experiments import (
    ConfigError,
    ExperimentConfig,
    bundled_config,
    bundled_names,
    dumps,
    load_system,
    replay_verdict,
    run_experiment,
)
from .pseudo_orbit import (
    ErrorSchedule,
    MapPseudoOrbit,
    PseudoOrbitError,
    exact_orbit,
    generate_limit_pseudo_orbit,
    generate_map_pseudo_orbit,
    map_splice,
    pseudo_orbit_from_json,
)
from .reparam import Reparam, ReparamError, gap_convergence_trace, remove_gap
from .suspension import SuspensionFlow, SuspensionPoint, metric_suite


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _json_arg(text: str):
    """Inline JSON, or a path to a JSON file."""
    s = text.strip()
    if s[:1] in "{[\"" or s in ("true", "false", "null") or s.lstrip("-").replace(".", "", 1).isdigit():
        try:
            return json.loads(s)
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad JSON {text!r}: {exc}") from exc
    path = Path(text)
    if path.exists():
        try:
            return json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: {exc}") from exc
    # bare point names such as a
    return text


def _json_doc(text: str):
    """Like :func:`_json_arg` but insists on a JSON object or list."""
    obj = _json_arg(text)
    if not isinstance(obj, (dict, list)):
        raise UsageError(f"{text}: expected a JSON file or inline JSON")
    return obj


def _system(arg: str):
    path = Path(arg)
    if path.suffix == ".json" or path.exists():
        if not path.exists():
            raise UsageError(f"system file {arg} not found")
        return load_system(json.loads(path.read_text()))
    return load_system({"preset": arg})


def _emit(obj, out: str | None):
    text = dumps(obj)
    if out:
        Path(out).write_text(text)
    else:
        print(text)


def _write_csv(path: str, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in r])


def _suspension_point(space, obj) -> SuspensionPoint:
    if not isinstance(obj, dict) or "base" not in obj:
        raise UsageError("a suspension point is {\"base\": ..., \"height\": h}")
    return SuspensionPoint(space.point_from_json(obj["base"]), float(obj.get("height", 0.0)))


# -- subcommands --------------------------------------------------------------


def cmd_metric_check(args):
    system = _system(args.system)
    flow = SuspensionFlow(system, args.depth)
    bases = None
    if args.bases:
        bases = [system.space.point_from_json(b) for b in _json_doc(args.bases)]
    elif not hasattr(system.space, "points"):
        raise UsageError("infinite base: pass --bases with a JSON list of base points")
    report = metric_suite(flow, args.step, args.atol, bases)
    _emit(report, args.out)


def cmd_suspend_eval(args):
    system = _system(args.system)
    space = system.space
    flow = SuspensionFlow(system)
    q0 = _suspension_point(space, _json_arg(args.point))
    p = flow.point(q0.base, q0.height)
    times = [float(t) for t in args.time]
    rows = [(t, flow.eval(p, t)) for t in times]
    if args.csv:
        _write_csv(args.csv, ["t", "base", "height"],
                   [(t, json.dumps(space.point_to_json(q.base)), q.height) for t, q in rows])
    _emit([{"t": t, "point": q.to_json(space)} for t, q in rows], args.out)


def cmd_pseudo_gen(args):
    system = _system(args.system)
    space = system.space
    seeds = [space.point_from_json(s) for s in _json_doc(args.seeds)]
    if not seeds:
        raise UsageError("need at least one seed")
    if args.kind == "map":
        po = generate_map_pseudo_orbit(system, seeds, args.horizon, args.seed, args.C)
    elif args.kind == "splice":
        if len(seeds) != 2:
            raise UsageError("splice needs two seeds")
        po = map_splice(system, seeds[0], seeds[1], args.horizon, args.cut)
    else:
        flow = SuspensionFlow(system)
        if args.kind == "exact":
            po = exact_orbit(flow, flow.point(seeds[0], args.height or 0.0), args.horizon, args.durations[0])
        else:
            sched = ErrorSchedule("limit", args.C)
            po = generate_limit_pseudo_orbit(flow, seeds, sched, args.horizon, args.seed, tuple(args.durations),
                                             height=args.height)
    _emit(po.to_json(space), args.out)


def cmd_shadow_verify(args):
    from .shadowing import map_tsls_gap_search, shadow_flow_pseudo_orbit

    system = _system(args.system)
    space = system.space
    po = pseudo_orbit_from_json(_json_doc(args.input), space)
    if isinstance(po, MapPseudoOrbit):
        verdict = map_tsls_gap_search(system, po, args.gap_bound, args.tol)
    else:
        verdict = shadow_flow_pseudo_orbit(SuspensionFlow(system, args.depth), po, args.gap_bound, args.tol,
                                           args.samples)
    if args.trace_csv:
        header = {("map", True): ["i", "error"], ("flow", True): ["t", "k", "error"]}.get(
            (verdict.mode, verdict.shadowed), ["candidate", "gap", "tail"])
        _write_csv(args.trace_csv, header, verdict.trace)
    _emit(verdict.to_json(space), args.out)


def cmd_gap_remove(args):
    h = Reparam.identity() if args.reparam == "identity" else Reparam.from_json(_json_doc(args.reparam))
    alpha = remove_gap(h, args.gap)
    lo, hi, step = args.grid
    ts = np.arange(lo, hi + step / 2, step)
    rows = [(float(t), float(h(t)), float(alpha(t)), float(alpha(t) - h(t) - args.gap)) for t in ts]
    if args.csv:
        _write_csv(args.csv, ["t", "h", "alpha", "alpha_minus_h_minus_K"], rows)
    out = {"K": args.gap, "reparam": alpha.to_json()}
    if args.system:
        system = _system(args.system)
        flow = SuspensionFlow(system)
        z = _suspension_point(system.space, _json_arg(args.point)) if args.point else \
            flow.point(next(iter(system.space.points)), 0.0)
        out["convergence"] = gap_convergence_trace(h, alpha, args.gap, flow, z, [t for t in ts if t > 0])
    _emit(out, args.out)


def cmd_singular_demo(args):
    from .singular import SingularError, SingularFlow, approach_sequence, beta, singular_nonshadowing_demo

    system = _system(args.system)
    space = system.space
    a = space.point_from_json(_json_arg(args.point))
    flow = SingularFlow(system, a, depth=args.depth)
    verdict = singular_nonshadowing_demo(flow, args.horizon, args.tol, args.gap_bound, control=not args.no_control)
    if args.beta_csv:
        try:
            pts = approach_sequence(flow)
        except SingularError:
            pts = [x for x in getattr(space, "points", []) if x != a and system.f(x) != a]
        rows = [(k, json.dumps(space.point_to_json(x)), beta(flow, x)) for k, x in enumerate(pts, start=1)]
        _write_csv(args.beta_csv, ["k", "point", "beta"], rows)
    _emit(verdict.to_json(space), args.out)


def cmd_transitivity_probe(args):
    from .shadowing import transitivity_probe

    flow = SuspensionFlow(_system(args.system), args.depth)
    report = transitivity_probe(flow, args.max_k, args.horizon)
    _emit(report, args.out)


def cmd_replay(args):
    results = []
    for path in args.verdicts:
        if not Path(path).exists():
            raise UsageError(f"verdict file {path} not found")
        res = replay_verdict(path, args.atol)
        results.append({"file": path, "ok": res.ok, "checked": res.checked, "message": res.describe()})
        print(f"{'PASS' if res.ok else 'FAIL'} {path}: {res.describe()}", file=sys.stderr)
    _emit(results, args.out)


def _run_one(item):
    cfg_dict, out_dir = item
    cfg = ExperimentConfig.from_dict(cfg_dict)
    res = run_experiment(cfg, out_dir)
    return cfg.name, res["status"], res["paths"]


def cmd_run(args):
    cfgs = []
    if args.bundled is not None:
        names = args.bundled or bundled_names()
        cfgs += [bundled_config(n) for n in names]
    cfgs += [ExperimentConfig.load(p) for p in args.configs]
    if not cfgs:
        raise UsageError("give config files or --bundled")
    # resolve file sources before handing configs to workers
    items = [(c.to_dict() | ({"outputs": c.outputs} if c.outputs else {}), args.out_dir) for c in cfgs]
    if args.jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            done = list(pool.map(_run_one, items))
    else:
        done = [_run_one(it) for it in items]
    for name, status, paths in done:
        print(f"{name}: {status} -> {paths.get('verdict')}")


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="limitshadow", description="Limit shadowing experiments for suspension flows.")
    sub = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def system_opt(sp, default="swap"):
        sp.add_argument("--system", default=default,
                        help="preset name (swap, two-swaps, full-shift) or a system descriptor JSON file")
        sp.add_argument("--out", help="output JSON file (default stdout)")

    metric = sub.add_parser("metric").add_subparsers(dest="action", required=True, parser_class=_Parser)
    sp = metric.add_parser("check", help="metric axioms of the Bowen-Walters distance on a height grid")
    system_opt(sp)
    sp.add_argument("--depth", type=int, default=4)
    sp.add_argument("--step", type=float, default=0.1)
    sp.add_argument("--atol", type=float, default=1e-9)
    sp.add_argument("--bases", help="JSON list of base points (needed for subshifts)")
    sp.set_defaults(func=cmd_metric_check)

    susp = sub.add_parser("suspend").add_subparsers(dest="action", required=True, parser_class=_Parser)
    sp = susp.add_parser("eval", help="evaluate the suspension flow")
    system_opt(sp)
    sp.add_argument("--point", required=True, help='JSON {"base": ..., "height": h} or a file')
    sp.add_argument("--time", type=float, nargs="+", required=True)
    sp.add_argument("--csv", help="orbit dump (t, base, height)")
    sp.set_defaults(func=cmd_suspend_eval)

    pseudo = sub.add_parser("pseudo").add_subparsers(dest="action", required=True, parser_class=_Parser)
    sp = pseudo.add_parser("gen", help="generate a pseudo-orbit")
    system_opt(sp)
    sp.add_argument("--kind", choices=["flow", "exact", "map", "splice"], default="flow")
    sp.add_argument("--seeds", required=True, help="JSON list of base points")
    sp.add_argument("--horizon", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--C", type=float, default=1.0, help="jump bound C/(1+|i|)")
    sp.add_argument("--durations", type=float, nargs=2, default=[2.0, 4.0])
    sp.add_argument("--height", type=float)
    sp.add_argument("--cut", type=int, default=0)
    sp.set_defaults(func=cmd_pseudo_gen)

    shadow = sub.add_parser("shadow").add_subparsers(dest="action", required=True, parser_class=_Parser)
    sp = shadow.add_parser("verify", help="search for a shadowing orbit")
    system_opt(sp)
    sp.add_argument("--input", required=True, help="pseudo-orbit JSON file")
    sp.add_argument("--tol", type=float, default=0.1)
    sp.add_argument("--gap-bound", type=int, default=4)
    sp.add_argument("--depth", type=int, default=4)
    sp.add_argument("--samples", type=int, default=4, help="samples per bracket for flows")
    sp.add_argument("--trace-csv")
    sp.set_defaults(func=cmd_shadow_verify)

    gap = sub.add_parser("gap").add_subparsers(dest="action", required=True, parser_class=_Parser)
    sp = gap.add_parser("remove", help="absorb a time gap into a reparametrization")
    sp.add_argument("--reparam", default="identity", help="reparametrization JSON file, or 'identity'")
    sp.add_argument("--gap", type=float, required=True)
    sp.add_argument("--grid", type=float, nargs=3, default=[-4.0, 16.0, 0.25], metavar=("LO", "HI", "STEP"))
    sp.add_argument("--csv")
    sp.add_argument("--system", help="optional system for a convergence trace")
    sp.add_argument("--point")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_gap_remove)

    sing = sub.add_parser("singular").add_subparsers(dest="action", required=True, parser_class=_Parser)
    sp = sing.add_parser("demo", help="non-shadowing demonstration for the singular suspension")
    system_opt(sp)
    sp.add_argument("--point", default="a", help="the base point carrying the singularity")
    sp.add_argument("--horizon", type=int, default=16)
    sp.add_argument("--tol", type=float, default=0.1)
    sp.add_argument("--gap-bound", type=int, default=4)
    sp.add_argument("--depth", type=int, default=4)
    sp.add_argument("--no-control", action="store_true")
    sp.add_argument("--beta-csv", help="time of flight along points approaching the singular column")
    sp.set_defaults(func=cmd_singular_demo)

    trans = sub.add_parser("transitivity").add_subparsers(dest="action", required=True, parser_class=_Parser)
    sp = trans.add_parser("probe", help="chain transitivity via a dense limit pseudo-orbit")
    system_opt(sp)
    sp.add_argument("--max-k", type=int, default=4)
    sp.add_argument("--horizon", type=int, default=16)
    sp.add_argument("--depth", type=int, default=4)
    sp.set_defaults(func=cmd_transitivity_probe)

    sp = sub.add_parser("replay", help="recompute stored traces of verdict files")
    sp.add_argument("verdicts", nargs="+")
    sp.add_argument("--atol", type=float, default=1e-9)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_replay)

    sp = sub.add_parser("run", help="run experiment configs")
    sp.add_argument("configs", nargs="*")
    sp.add_argument("--bundled", nargs="*", help="bundled experiment names (all if none given)")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out-dir", default="results")
    sp.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (UsageError, ConfigError, SpaceError, PseudoOrbitError, ReparamError, FileNotFoundError) as exc:
        print(f"limitshadow: error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
