"""Command-line entry points.

Subcommands:
  run    batch-simulate a scenario and write trace.tsv, riskfield.jsonl,
         summary.json into the output directory
  serve  stream live state over a websocket and accept steering commands
  gen    emit the bundled scenario documents as JSON files
  plot   export one cycle's risk-field grid from a riskfield.jsonl trace

Exit codes: 0 success, 2 configuration error (bad scenario / arguments),
1 runtime failure inside the engine.
"""

from __future__ import annotations

import argparse
import json
import logging
import pathlib
import sys

from .rldm import GraphError
from .sim import (
    BUILTIN_SCENARIOS,
    Scenario,
    ScenarioError,
    World,
    export_risk_field_jsonl,
    export_trace_tsv,
    load_scenario,
    summarize,
)

logger = logging.getLogger(__name__)


def _set_by_path(doc: dict, dotted: str, raw: str) -> None:
    """Apply a --set override like risk.tau0=4.0 onto the scenario document."""
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    keys = dotted.split(".")
    node = doc.setdefault("params", {})
    for key in keys[:-1]:
        node = node.setdefault(key, {})
    node[keys[-1]] = value


def _load(args) -> Scenario:
    if args.builtin:
        if not (args.set or args.seed is not None or args.noise is not None):
            return BUILTIN_SCENARIOS[args.builtin]()
        # round-trip through the document form so overrides compose
        doc = scenario_to_doc(BUILTIN_SCENARIOS[args.builtin]())
    else:
        doc = json.loads(pathlib.Path(args.scenario).read_text())
    for item in args.set or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ScenarioError(f"--set {item!r}: expected key=value")
        _set_by_path(doc, key, raw)
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.noise is not None:
        doc["noise"] = {
            "enabled": args.noise > 0,
            "position_std_m": args.noise,
            "velocity_std_ms": args.noise_vel,
        }
    return load_scenario(doc)


def scenario_to_doc(scenario: Scenario) -> dict:
    """Serialize a Scenario back into its document form."""
    doc = {
        "name": scenario.name,
        "duration_s": scenario.duration_s,
        "seed": scenario.seed,
        "map": scenario.map_doc,
        "route_lane": scenario.route_lane,
        "noise": {
            "enabled": scenario.noise.enabled,
            "position_std_m": scenario.noise.position_std_m,
            "velocity_std_ms": scenario.noise.velocity_std_ms,
        },
        "vehicles": [
            {
                "id": v.vehicle_id, "mode": v.mode, "lane": v.lane,
                "arc_m": v.arc_m, "v_ms": v.v_ms,
                **({"schedule": [
                    {k: val for k, val in (("t_s", e.t_s), ("v_target_ms", e.v_target_ms),
                                           ("accel_ms2", e.accel_ms2), ("lane_request", e.lane_request))
                     if val is not None}
                    for e in v.schedule]} if v.schedule else {}),
            }
            for v in scenario.vehicles
        ],
        "ego_commands": [
            {k: val for k, val in (("t_s", c.t_s), ("accel_ms2", c.accel),
                                   ("lane_request", c.lane_request)) if val is not None}
            for c in scenario.ego_commands
        ],
    }
    import dataclasses

    from .planner import PlannerParams

    defaults = PlannerParams()
    params_doc = {}
    for block in ("probe", "risk", "benefit", "ego_unc", "other_unc", "blend"):
        current = getattr(scenario.params, block)
        base = getattr(defaults, block)
        diff = {
            f.name: getattr(current, f.name)
            for f in dataclasses.fields(current)
            if getattr(current, f.name) != getattr(base, f.name)
        }
        if diff:
            params_doc[block] = diff
    for scalar in ("hysteresis_window_s", "dead_band_ms"):
        if getattr(scenario.params, scalar) != getattr(defaults, scalar):
            params_doc[scalar] = getattr(scenario.params, scalar)
    if params_doc:
        doc["params"] = params_doc
    return doc


def cmd_run(args) -> int:
    scenario = _load(args)
    out_dir = pathlib.Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    world = World(scenario)
    world.run()
    with open(out_dir / "trace.tsv", "w") as fh:
        export_trace_tsv(world.records, fh)
    with open(out_dir / "riskfield.jsonl", "w") as fh:
        export_risk_field_jsonl(world.records, fh)
    summary = summarize(world.records)
    summary["scenario"] = scenario.name
    summary["seed"] = scenario.seed
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    scenario = _load(args)
    serve(scenario, host=args.host, port=args.port)
    return 0


def cmd_gen(args) -> int:
    out_dir = pathlib.Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in ("gap", "no_gap"):
        doc = scenario_to_doc(BUILTIN_SCENARIOS[name]())
        path = out_dir / f"{name}.json"
        path.write_text(json.dumps(doc, indent=2) + "\n")
        print(f"wrote {path}")
    return 0


def cmd_plot(args) -> int:
    trace_path = pathlib.Path(args.trace)
    if trace_path.is_dir():
        trace_path = trace_path / "riskfield.jsonl"
    lines = trace_path.read_text().splitlines()
    if not (0 <= args.cycle < len(lines)):
        raise ScenarioError(f"cycle {args.cycle} outside trace (0..{len(lines) - 1})")
    block = json.loads(lines[args.cycle])
    out = pathlib.Path(args.out)
    with open(out, "w") as fh:
        fh.write(f"# t={block['t']}s rate unit: %/s thresholds: "
                 f"blue<{block['thresholds_pct_per_s'][0]} red>={block['thresholds_pct_per_s'][1]}\n")
        fh.write("option\tdirection\th\tv_end_ms\tchosen\t"
                 + "\t".join(f"s{s:.1f}" for s in block["s_grid_s"]) + "\n")
        for i, opt in enumerate(block["options"]):
            for prof in opt["profiles"]:
                mark = "*" if [i, prof["h"]] == block["chosen"] else "-"
                vals = "\t".join(f"{x:.4f}" for x in prof["rate_pct_per_s"])
                fh.write(f"{opt['key']}\t{opt['direction']}\t{prof['h']}\t"
                         f"{prof['v_end_ms']:.3f}\t{mark}\t{vals}\n")
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskprobe",
        description="Risk-based driving warning engine: batch runs, live serving, scenario tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scenario_args(p):
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--scenario", help="scenario JSON file")
        group.add_argument("--builtin", choices=sorted(BUILTIN_SCENARIOS),
                           help="bundled scenario name")
        p.add_argument("--seed", type=int, default=None, help="override the rng seed")
        p.add_argument("--noise", type=float, default=None,
                       help="enable observation noise with this position std dev (m)")
        p.add_argument("--noise-vel", type=float, default=0.3,
                       help="velocity noise std dev used with --noise (m/s)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="parameter override, e.g. risk.tau0=4.0 (repeatable)")

    p_run = sub.add_parser("run", help="batch-simulate and export traces")
    add_scenario_args(p_run)
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.set_defaults(func=cmd_run)

    p_serve = sub.add_parser("serve", help="stream live state over a websocket")
    add_scenario_args(p_serve)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8700)
    p_serve.set_defaults(func=cmd_serve)

    p_gen = sub.add_parser("gen", help="emit the bundled scenario files")
    p_gen.add_argument("--out", default="scenarios", help="output directory")
    p_gen.set_defaults(func=cmd_gen)

    p_plot = sub.add_parser("plot", help="export one cycle's risk-field grid")
    p_plot.add_argument("--trace", required=True,
                        help="riskfield.jsonl file or the run output directory")
    p_plot.add_argument("--cycle", type=int, required=True, help="cycle index")
    p_plot.add_argument("--out", required=True, help="grid file to write")
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, GraphError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        logger.exception("run failed")
        return 1


if __name__ == "__main__":
    sys.exit(main())
