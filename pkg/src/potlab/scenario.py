"""Scenario configuration, the end-to-end pipeline, and result persistence.

A scenario is a JSON document naming a cost, two measures (explicit points
or generators), a transported-mass fraction, an evaluation grid, and the
predicate toggles.  ``run_pipeline`` turns it into a RunRecord; the writers
emit JSON reports and CSV point lists that embed the scenario digest and are
byte-identical across reruns with the same seed.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import sphere as _sphere
from .boundary import (EvaluationGrid, active_region, cone_envelope,
                       extract_boundary, graph_match)
from .costs import DomainSample, estimate_constants, get_cost
from .errors import ConfigurationError, PotlabError
from .geometry import (PredicateReport, check_ball_condition,
                       check_c_convexity, check_cone_condition,
                       check_semiconvexity, cone_profile)
from .solver import DiscreteMeasure, check_duality, solve_partial

B1_DEGENERATE = 1e-6

_SCENARIO_KEYS = {
    "name", "cost", "source", "target", "mass_fraction", "grid",
    "predicates", "seed",
}
_COST_KEYS = {"id", "dimension", "params"}
_MEASURE_KEYS = {
    "kind", "points", "weights", "lo", "hi", "shape", "center", "radius",
    "height", "count", "total",
}
_GRID_KEYS = {"lo", "hi", "resolution", "margin_cells"}
_PREDICATE_KEYS = {
    "cone", "ball", "semiconvexity", "c_convexity", "theta",
    "ball_radius_factor", "envelope_alpha", "envelope_window",
    "envelope_resolution",
}


@dataclass(frozen=True)
class Scenario:
    """Validated run configuration; ``raw`` is the canonical dict the digest
    is computed from."""

    name: str
    cost_id: str
    dimension: int
    cost_params: dict
    source: dict
    target: dict
    mass_fraction: float
    grid: dict | None
    predicates: dict
    seed: int
    raw: dict = field(repr=False)

    def digest(self) -> str:
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class RunRecord:
    """Everything a pipeline run produced, plus wall-clock timings.

    Timings are informational only and are never written to output files,
    so reruns stay byte-identical.
    """

    scenario: Scenario
    digest: str
    seed: int
    objective: float
    mass: float
    duality_violation: float
    reports: tuple  # of PredicateReport
    plan_entries: tuple
    boundary_points: np.ndarray | None
    boundary_normals: np.ndarray | None
    timings: dict

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.reports)


def _reject_unknown(d, allowed, where):
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigurationError(
            f"unknown key(s) {unknown} in {where}; allowed: {sorted(allowed)}"
        )


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a JSON scenario document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(
            f"scenario is not valid JSON (line {e.lineno}, col {e.colno}): "
            f"{e.msg}"
        ) from e
    if not isinstance(doc, dict):
        raise ConfigurationError("scenario document must be a JSON object")
    _reject_unknown(doc, _SCENARIO_KEYS, "scenario")
    cost = dict(doc.get("cost", {}))
    _reject_unknown(cost, _COST_KEYS, "cost")
    cost_id = cost.get("id", "quadratic")
    dimension = int(cost.get("dimension", 2))
    params = dict(cost.get("params", {}))
    try:
        get_cost(cost_id, dimension)  # fails early listing registered ids
    except PotlabError as e:
        raise ConfigurationError(str(e)) from None

    for side in ("source", "target"):
        if side not in doc:
            raise ConfigurationError(f"scenario is missing the {side!r} spec")
        _reject_unknown(doc[side], _MEASURE_KEYS, side)
        if "kind" not in doc[side]:
            raise ConfigurationError(f"{side} spec needs a 'kind'")

    mu = float(doc.get("mass_fraction", 1.0))
    if not 0.0 < mu <= 1.0:
        raise ConfigurationError(
            f"mass_fraction must lie in (0, 1], got {mu}"
        )
    grid = doc.get("grid")
    if grid is not None:
        _reject_unknown(grid, _GRID_KEYS, "grid")
    predicates = dict(doc.get("predicates", {}))
    _reject_unknown(predicates, _PREDICATE_KEYS, "predicates")

    raw = {
        "name": doc.get("name", "scenario"),
        "cost": {"id": cost_id, "dimension": dimension, "params": params},
        "source": doc["source"],
        "target": doc["target"],
        "mass_fraction": mu,
        "grid": grid,
        "predicates": predicates,
        "seed": int(doc.get("seed", 0)),
    }
    return Scenario(
        name=raw["name"],
        cost_id=cost_id,
        dimension=dimension,
        cost_params=params,
        source=dict(doc["source"]),
        target=dict(doc["target"]),
        mass_fraction=mu,
        grid=dict(grid) if grid is not None else None,
        predicates=predicates,
        seed=raw["seed"],
        raw=raw,
    )


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return parse_scenario(fh.read())


def _build_measure(spec, dimension, rng) -> tuple[DiscreteMeasure, dict]:
    """Measure plus a region descriptor used for the domain mask."""
    kind = spec["kind"]
    total = float(spec.get("total", 1.0))
    if kind == "explicit":
        pts = np.asarray(spec["points"], dtype=float)
        w = spec.get("weights")
        w = (np.asarray(w, dtype=float) if w is not None
             else np.full(len(pts), total / len(pts)))
        region = {"kind": "box", "lo": pts.min(axis=0), "hi": pts.max(axis=0)}
        return DiscreteMeasure(pts, w), region
    if kind == "grid":
        lo = np.asarray(spec["lo"], dtype=float)
        hi = np.asarray(spec["hi"], dtype=float)
        shape = [int(s) for s in spec["shape"]]
        axes = [
            lo[k] + (hi[k] - lo[k]) * (np.arange(s) + 0.5) / s
            for k, s in enumerate(shape)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        w = np.full(len(pts), total / len(pts))
        return DiscreteMeasure(pts, w), {"kind": "box", "lo": lo, "hi": hi}
    if kind == "ball":
        center = np.asarray(spec["center"], dtype=float)
        radius = float(spec["radius"])
        count = int(spec.get("count", 64))
        u = rng.standard_normal((count, dimension))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        r = radius * rng.random(count) ** (1.0 / dimension)
        pts = center + r[:, None] * u
        w = np.full(count, total / count)
        region = {"kind": "ball", "center": center, "radius": radius}
        return DiscreteMeasure(pts, w), region
    if kind == "sphere":
        count = int(spec.get("count", 500))
        pts = _sphere.fibonacci_sphere(count)
        return DiscreteMeasure(pts, np.full(count, total / count)), {"kind": "sphere"}
    if kind == "sphere_cap":
        cap = _sphere.SphericalCap(
            np.asarray(spec["center"], dtype=float), float(spec["height"])
        )
        count = int(spec.get("count", 64))
        pts = _sphere.fibonacci_cap(cap, count)
        return DiscreteMeasure(pts, np.full(count, total / count)), {"kind": "sphere"}
    raise ConfigurationError(
        f"unknown measure kind {kind!r}; "
        "use explicit, grid, ball, sphere, or sphere_cap"
    )


def _region_mask(region, grid: EvaluationGrid) -> np.ndarray:
    centers = grid.cell_centers()
    if region["kind"] == "box":
        inside = np.all(
            (centers >= region["lo"]) & (centers <= region["hi"]), axis=1
        )
    elif region["kind"] == "ball":
        inside = (
            np.linalg.norm(centers - region["center"], axis=1)
            <= region["radius"]
        )
    else:
        raise ConfigurationError(
            "free-boundary extraction needs a Euclidean source region"
        )
    return inside.reshape(grid.resolution)


def _evaluation_grid(scenario, f, g) -> EvaluationGrid:
    if scenario.grid is not None:
        gg = scenario.grid
        if "lo" in gg and "hi" in gg:
            return EvaluationGrid(
                np.asarray(gg["lo"], dtype=float),
                np.asarray(gg["hi"], dtype=float),
                tuple(np.atleast_1d(gg["resolution"]).astype(int)),
            )
        res = gg.get("resolution", 64)
    else:
        res = 64
    pts = np.vstack([f.support, g.support])
    margin = (scenario.grid or {}).get("margin_cells", 2)
    return EvaluationGrid.covering(pts, res, margin_cells=margin)


def run_pipeline(scenario: Scenario) -> RunRecord:
    """solve -> active region -> boundary -> enabled predicates -> record."""
    rng = np.random.default_rng(scenario.seed)
    timings: dict[str, float] = {}
    cost = get_cost(scenario.cost_id, scenario.dimension)

    f, src_region = _build_measure(scenario.source, scenario.dimension, rng)
    g, _ = _build_measure(scenario.target, scenario.dimension, rng)
    m = scenario.mass_fraction * min(f.total_mass, g.total_mass)

    t0 = time.perf_counter()
    plan = solve_partial(f, g, m, cost)
    timings["solve"] = time.perf_counter() - t0
    duality = check_duality(plan, cost)

    reports: list[PredicateReport] = []
    boundary_pts = None
    boundary_nus = None
    pred = scenario.predicates
    euclidean = src_region["kind"] in ("box", "ball")
    wants_boundary = any(
        pred.get(k, True) for k in ("cone", "ball", "semiconvexity")
    )

    samples = []
    consts = None
    if euclidean and wants_boundary:
        t0 = time.perf_counter()
        grid = _evaluation_grid(scenario, f, g)
        field_ = active_region(plan, cost, grid)
        mask = _region_mask(src_region, grid)
        samples = extract_boundary(field_, mask, cost)
        timings["boundary"] = time.perf_counter() - t0
        if samples:
            boundary_pts = np.array([s.point for s in samples])
            boundary_nus = np.array([s.normal for s in samples])
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            consts = estimate_constants(
                cost, DomainSample(f.support, "source"),
                DomainSample(g.support, "target"),
            )
        # with overlapping supports the sampled b1 collapses toward zero and
        # the derived reaches fall below what the grid can resolve
        reach = consts.b1 / consts.c2 if consts.c2 > 0 else 0.0
        b1_ok = consts.b1 > B1_DEGENERATE and reach >= grid.cell_size
        theta = float(pred.get("theta", math.pi / 4))

        def skip(name, why):
            reports.append(PredicateReport(
                predicate=name, passed=True, worst_margin=0.0,
                worst_witness=None, samples_checked=0, degenerate=True,
                note=f"skipped: {why}",
            ))

        t0 = time.perf_counter()
        if pred.get("cone", True):
            if not samples:
                skip("cone_condition", "no free-boundary samples on the grid")
            elif not b1_ok:
                skip("cone_condition",
                     f"b1 estimate {consts.b1:.3g} gives reach below one "
                     "grid cell (overlapping supports?)")
            else:
                prof = cone_profile(cost, consts, theta)
                reports.append(check_cone_condition(
                    field_, samples, prof, seed=scenario.seed,
                ))
        if pred.get("ball", True):
            if not samples:
                skip("ball_condition", "no free-boundary samples on the grid")
            elif not b1_ok:
                skip("ball_condition",
                     f"b1 estimate {consts.b1:.3g} is degenerate")
            else:
                reports.append(check_ball_condition(
                    field_, samples, consts,
                    radius_factor=float(pred.get("ball_radius_factor", 0.9)),
                ))
        if pred.get("semiconvexity", True):
            if not samples or not b1_ok:
                skip("semiconvexity",
                     "needs boundary samples and a positive b1")
            else:
                alpha = float(pred.get("envelope_alpha", 8.0))
                half = float(pred.get(
                    "envelope_window", 4.0 * grid.cell_size
                ))
                base = samples[len(samples) // 2]
                env = cone_envelope(
                    samples, base.normal, alpha,
                    (base.point - half, base.point + half),
                    grid_resolution=int(pred.get("envelope_resolution", 17)),
                )
                reports.append(
                    check_semiconvexity(env, r=consts.b1 / consts.c2)
                )
        timings["predicates"] = time.perf_counter() - t0
    if pred.get("c_convexity", False):
        x0 = f.support[0]
        reports.append(check_c_convexity(
            cost, x0, DomainSample(g.support, "target")
        ))

    return RunRecord(
        scenario=scenario,
        digest=scenario.digest(),
        seed=scenario.seed,
        objective=plan.objective,
        mass=plan.mass,
        duality_violation=duality,
        reports=tuple(reports),
        plan_entries=plan.entries,
        boundary_points=boundary_pts,
        boundary_normals=boundary_nus,
        timings=timings,
    )


# ---------------------------------------------------------------------------
# Persistence: deterministic JSON reports and CSV point lists
# ---------------------------------------------------------------------------


def record_to_json(record: RunRecord) -> str:
    doc = {
        "scenario_digest": record.digest,
        "scenario_name": record.scenario.name,
        "seed": record.seed,
        "objective": record.objective,
        "mass": record.mass,
        "duality_violation": record.duality_violation,
        "all_passed": record.all_passed,
        "reports": [r.to_dict() for r in record.reports],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _csv(header_comment, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# {header_comment}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(repr(float(v)) if isinstance(v, float) else str(v)
                           for v in row) + "\n")
    return buf.getvalue()


def plan_csv(record: RunRecord) -> str:
    return _csv(
        f"scenario_digest={record.digest}",
        ["source_index", "target_index", "mass"],
        [(i, j, float(w)) for i, j, w in record.plan_entries],
    )


def boundary_csv(record: RunRecord) -> str:
    if record.boundary_points is None:
        rows = []
    else:
        rows = [
            tuple(float(v) for v in np.concatenate([p, n]))
            for p, n in zip(record.boundary_points, record.boundary_normals)
        ]
    n = record.scenario.dimension
    cols = [f"x{k}" for k in range(n)] + [f"nu{k}" for k in range(n)]
    return _csv(f"scenario_digest={record.digest}", cols, rows)


def write_record(record: RunRecord, outdir) -> list[str]:
    """Write report.json, plan.csv and boundary.csv; returns the paths."""
    import os

    os.makedirs(outdir, exist_ok=True)
    written = []
    for fname, text in (
        ("report.json", record_to_json(record)),
        ("plan.csv", plan_csv(record)),
        ("boundary.csv", boundary_csv(record)),
    ):
        path = os.path.join(outdir, fname)
        with open(path, "w") as fh:
            fh.write(text)
        written.append(path)
    return written
