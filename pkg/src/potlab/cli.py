"""Command-line surface.

Subcommands: solve, boundary, verify, mtw, sphere-demo, report.
Exit codes: 0 all predicates pass, 2 a predicate failed, 1 error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .costs import DomainSample, get_cost
from .errors import PotlabError
from .mtw import a3_infimum
from .scenario import (load_scenario, run_pipeline, write_record)
from .sphere import annulus_image_demo, run_cap_example

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_PREDICATE_FAIL = 2


def _add_common(p, scenario_required=True):
    p.add_argument("--scenario", required=scenario_required,
                   help="path to a JSON scenario file")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--seed", type=int, default=None,
                   help="override the scenario seed")
    p.add_argument("--grid", type=int, default=None,
                   help="override the evaluation grid resolution")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="potlab",
        description="discrete optimal partial transport and free-boundary "
                    "geometry checks",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("solve", "solve the scenario and write the plan"),
        ("boundary", "solve and extract the free boundary"),
        ("verify", "run the full pipeline with all enabled predicates"),
    ):
        _add_common(sub.add_parser(name, help=help_))
    p_mtw = sub.add_parser("mtw", help="sample the regularity tensor infimum")
    _add_common(p_mtw)
    p_mtw.add_argument("--basepoints", type=int, default=10)
    p_mtw.add_argument("--directions", type=int, default=200)
    p_sph = sub.add_parser("sphere-demo",
                           help="run the spherical-cap construction")
    _add_common(p_sph, scenario_required=False)
    p_sph.add_argument("--resolution", type=int, default=1000)
    p_rep = sub.add_parser("report",
                           help="summarize a previously written report.json")
    p_rep.add_argument("--out", required=True,
                       help="directory containing report.json")
    return ap


def _load(args):
    scenario = load_scenario(args.scenario)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.grid is not None:
        grid = dict(scenario.raw.get("grid") or {})
        grid["resolution"] = args.grid
        overrides["grid"] = grid
    if overrides:
        doc = dict(scenario.raw)
        doc.update(overrides)
        from .scenario import parse_scenario

        scenario = parse_scenario(json.dumps(doc))
    return scenario


def _emit(record, args, lines):
    for line in lines:
        print(line)
    if args.out:
        for path in write_record(record, args.out):
            print(f"wrote {path}")


def cmd_solve(args) -> int:
    scenario = _load(args)
    record = run_pipeline(scenario)
    _emit(record, args, [
        f"scenario {scenario.name} digest={record.digest} seed={record.seed}",
        f"objective {record.objective!r} mass {record.mass!r}",
        f"duality violation {record.duality_violation:.3e}",
        f"plan entries {len(record.plan_entries)}",
    ])
    return EXIT_PASS


def cmd_boundary(args) -> int:
    scenario = _load(args)
    record = run_pipeline(scenario)
    count = (0 if record.boundary_points is None
             else len(record.boundary_points))
    _emit(record, args, [
        f"scenario {scenario.name} digest={record.digest} seed={record.seed}",
        f"free-boundary samples {count}",
    ])
    return EXIT_PASS


def cmd_verify(args) -> int:
    scenario = _load(args)
    record = run_pipeline(scenario)
    lines = [
        f"scenario {scenario.name} digest={record.digest} seed={record.seed}",
        f"objective {record.objective!r} "
        f"duality violation {record.duality_violation:.3e}",
    ]
    for r in record.reports:
        status = "PASS" if r.passed else "FAIL"
        extra = f" ({r.note})" if r.note else ""
        lines.append(
            f"[{status}] {r.predicate}: worst margin {r.worst_margin:.6g}, "
            f"{r.samples_checked} samples{extra}"
        )
    _emit(record, args, lines)
    return EXIT_PASS if record.all_passed else EXIT_PREDICATE_FAIL


def cmd_mtw(args) -> int:
    scenario = _load(args)
    cost = get_cost(scenario.cost_id, scenario.dimension)
    rng = np.random.default_rng(scenario.seed)
    from .scenario import _build_measure

    f, _ = _build_measure(scenario.source, scenario.dimension, rng)
    g, _ = _build_measure(scenario.target, scenario.dimension, rng)
    k = min(args.basepoints, len(f), len(g))
    pairs = [(f.support[i], g.support[i]) for i in range(k)]
    report = a3_infimum(cost, pairs, args.directions, seed=scenario.seed)
    doc = {"scenario_digest": scenario.digest(), **report.to_dict()}
    print(json.dumps(doc, sort_keys=True, indent=2))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "mtw.json")
        with open(path, "w") as fh:
            fh.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        print(f"wrote {path}")
    if report.c0_estimate is not None and report.c0_estimate < 0:
        return EXIT_PREDICATE_FAIL
    return EXIT_PASS


def cmd_sphere_demo(args) -> int:
    res = args.resolution
    if args.grid is not None:
        res = args.grid
    report = run_cap_example(resolution=res)
    annulus = annulus_image_demo()
    doc = {
        "cap_example": report.to_dict(),
        "annulus_c_convexity": annulus.to_dict(),
    }
    print(json.dumps(doc, sort_keys=True, indent=2))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "sphere_demo.json")
        with open(path, "w") as fh:
            fh.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        print(f"wrote {path}")
    # the construction predicts an inactive polar cap and a c-convexity
    # failure on the antipodal target
    ok = report.north_cap_inactive and not annulus.passed
    return EXIT_PASS if ok else EXIT_PREDICATE_FAIL


def cmd_report(args) -> int:
    path = os.path.join(args.out, "report.json")
    with open(path) as fh:
        doc = json.load(fh)
    print(f"scenario {doc['scenario_name']} "
          f"digest={doc['scenario_digest']} seed={doc['seed']}")
    print(f"objective {doc['objective']!r} mass {doc['mass']!r}")
    print(f"duality violation {doc['duality_violation']:.3e}")
    for r in doc["reports"]:
        status = "PASS" if r["pass"] else "FAIL"
        print(f"[{status}] {r['predicate']}: "
              f"worst margin {r['worst_margin']:.6g}")
    return EXIT_PASS if doc["all_passed"] else EXIT_PREDICATE_FAIL


_COMMANDS = {
    "solve": cmd_solve,
    "boundary": cmd_boundary,
    "verify": cmd_verify,
    "mtw": cmd_mtw,
    "sphere-demo": cmd_sphere_demo,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (PotlabError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
