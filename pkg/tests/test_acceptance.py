"""Acceptance gate: one test per top-level criterion, each printing a
single PASS/FAIL line (run with -s to see them)."""

import json
import math
import time

import numpy as np
import pytest
from scipy.spatial import cKDTree

from potlab.boundary import (EvaluationGrid, active_region, cone_envelope,
                             extract_boundary, free_normal, graph_match)
from potlab.costs import (DomainSample, RadialCost, estimate_constants,
                          log_cost, quadratic_cost)
from potlab.errors import DomainError
from potlab.geometry import (check_ball_condition, check_cone_condition,
                             check_semiconvexity, cone_profile,
                             holder_exponent)
from potlab.mtw import a3_form, a3_infimum, mtw_tensor
from potlab.scenario import parse_scenario, run_pipeline, write_record
from potlab.solver import (DiscreteMeasure, brute_force_partial,
                           check_duality, solve_partial)
from potlab.sphere import annulus_image_demo, run_cap_example


def report(name, passed, detail=""):
    line = f"[{'PASS' if passed else 'FAIL'}] {name}"
    if detail:
        line += f": {detail}"
    print(line)
    assert passed, line


def random_instance(rng, max_size=5):
    ns = int(rng.integers(1, max_size + 1))
    nt = int(rng.integers(1, max_size + 1))
    f = DiscreteMeasure(rng.uniform(-2, 2, (ns, 2)),
                        rng.uniform(0.1, 1.0, ns))
    g = DiscreteMeasure(rng.uniform(-2, 2, (nt, 2)),
                        rng.uniform(0.1, 1.0, nt))
    return f, g


DISJOINT_SQUARES = {
    "name": "disjoint-squares",
    "cost": {"id": "quadratic", "dimension": 2},
    "source": {"kind": "grid", "lo": [0.0, 0.0], "hi": [1.0, 1.0],
               "shape": [10, 10]},
    "target": {"kind": "grid", "lo": [3.0, 3.0], "hi": [4.0, 4.0],
               "shape": [6, 6]},
    "mass_fraction": 0.5,
    "grid": {"lo": [-0.5, -0.5], "hi": [4.5, 4.5], "resolution": 64},
    "seed": 7,
}


@pytest.fixture(scope="module")
def squares_setup():
    """Disjoint-squares scenario solved once: plan, field, boundary,
    constants."""
    c = quadratic_cost(2)
    sx = np.linspace(0.05, 0.95, 10)
    src = np.array([[a, b] for a in sx for b in sx])
    tx = np.linspace(3.05, 3.95, 6)
    tgt = np.array([[a, b] for a in tx for b in tx])
    f = DiscreteMeasure(src, np.full(len(src), 1.0 / len(src)))
    g = DiscreteMeasure(tgt, np.full(len(tgt), 1.0 / len(tgt)))
    plan = solve_partial(f, g, 0.5, c)
    grid = EvaluationGrid(np.array([-0.5, -0.5]), np.array([4.5, 4.5]),
                          (64, 64))
    field = active_region(plan, c, grid)
    centers = grid.cell_centers()
    mask = np.all((centers >= [0.0, 0.0]) & (centers <= [1.0, 1.0]),
                  axis=1).reshape(grid.resolution)
    samples = extract_boundary(field, mask, c)
    consts = estimate_constants(
        c, DomainSample(src, "source"), DomainSample(tgt, "target")
    )
    return c, plan, grid, field, samples, consts


def test_acceptance_solver_exactness():
    rng = np.random.default_rng(100)
    c = quadratic_cost(2)
    t0 = time.time()
    worst_obj, worst_dual = 0.0, 0.0
    for _ in range(200):
        f, g = random_instance(rng)
        cap = min(f.total_mass, g.total_mass)
        for frac in (0.25, 0.5, 0.75, 1.0):
            plan = solve_partial(f, g, frac * cap, c)
            oracle = brute_force_partial(f, g, frac * cap, c)
            worst_obj = max(worst_obj, abs(plan.objective - oracle.objective))
            worst_dual = max(worst_dual, check_duality(plan, c))
    elapsed = time.time() - t0
    report(
        "solver exactness (200 instances x 4 masses)",
        worst_obj <= 1e-9 and worst_dual <= 1e-9 and elapsed <= 10.0,
        f"obj gap {worst_obj:.2e}, duality {worst_dual:.2e}, {elapsed:.1f}s",
    )


def test_acceptance_mass_monotonicity():
    rng = np.random.default_rng(200)
    c = quadratic_cost(2)  # non-negative cost
    violations = 0
    for _ in range(20):
        f, g = random_instance(rng)
        cap = min(f.total_mass, g.total_mass)
        objs = [solve_partial(f, g, m, c).objective
                for m in np.linspace(0.05, 1.0, 20) * cap]
        violations += sum(b < a - 1e-12 for a, b in zip(objs, objs[1:]))
    report("mass monotonicity (20 instances, 20-point sweep)",
           violations == 0, f"{violations} violations")


def test_acceptance_active_region_fidelity():
    c = quadratic_cost(2)
    f = DiscreteMeasure(np.array([[0.0, 0.0]]), np.array([1.0]))
    g = DiscreteMeasure(np.array([[1.0, 0.0]]), np.array([1.0]))
    plan = solve_partial(f, g, 1.0, c)
    t0 = time.time()
    ok = True
    for res in (32, 64, 128):
        grid = EvaluationGrid(np.array([-2.0, -2.0]), np.array([2.0, 2.0]),
                              (res, res))
        field = active_region(plan, c, grid)
        centers = grid.cell_centers()
        analytic = (np.linalg.norm(centers - [1.0, 0.0], axis=1)
                    < 1.0).reshape(grid.resolution)
        ok = ok and np.array_equal(field.indicator, analytic)
    elapsed = time.time() - t0
    report("active-region fidelity (res 32/64/128 vs analytic ball)",
           ok and elapsed <= 5.0, f"{elapsed:.2f}s")


def test_acceptance_free_normal():
    rng = np.random.default_rng(300)
    c = quadratic_cost(2)

    def scaled(lam):
        return RadialCost(
            2, lambda s, lam=lam: (lam * 0.5 * s, lam * 0.5, 0, 0, 0)
        )

    costs = {0.1: scaled(0.1), 1.0: c, 10.0: scaled(10.0)}
    worst_formula, worst_scale = 0.0, 0.0
    count = 0
    while count < 10_000:
        x, y = rng.uniform(-3, 3, 2), rng.uniform(-3, 3, 2)
        if np.linalg.norm(x - y) < 1e-6:
            continue
        count += 1
        nu = free_normal(x, y, c)
        expected = (y - x) / np.linalg.norm(y - x)
        worst_formula = max(worst_formula, np.abs(nu - expected).max())
        for lam, cl in costs.items():
            worst_scale = max(
                worst_scale, np.abs(free_normal(x, y, cl) - nu).max()
            )
    report(
        "free normal formula + scale invariance (10^4 pairs)",
        worst_formula <= 1e-12 and worst_scale <= 1e-15,
        f"formula gap {worst_formula:.2e}, scale gap {worst_scale:.2e}",
    )


def test_acceptance_cone_condition(squares_setup):
    c, plan, grid, field, samples, consts = squares_setup
    t0 = time.time()
    prof = cone_profile(c, consts, math.pi / 4)
    rep = check_cone_condition(field, samples, prof)
    elapsed = time.time() - t0
    report(
        "cone condition (disjoint squares, res 64, 100% of samples)",
        rep.passed and elapsed <= 10.0,
        f"{rep.samples_checked} samples, worst margin "
        f"{rep.worst_margin:.3g}, {elapsed:.1f}s",
    )


def test_acceptance_ball_condition(squares_setup):
    c, plan, grid, field, samples, consts = squares_setup
    ok = check_ball_condition(field, samples, consts, radius_factor=0.9)
    # region inradius: deepest active cell's distance to the inactive set
    centers = grid.cell_centers()
    flat = field.indicator.ravel()
    inact = cKDTree(centers[~flat])
    inradius = float(inact.query(centers[flat])[0].max())
    bad = check_ball_condition(field, samples, consts,
                               radius=2.0 * inradius, radius_factor=1.0)
    report(
        "ball condition (pass at 0.9 b1/c2, fail at 2x inradius)",
        ok.passed and not bad.passed and bad.worst_margin < 0,
        f"pass margin {ok.worst_margin:.3g}, "
        f"inflated margin {bad.worst_margin:.3g}",
    )


def test_acceptance_lipschitz_envelope(squares_setup):
    c, plan, grid, field, samples, consts = squares_setup
    alpha = 8.0
    h = grid.cell_size
    idx = np.linspace(0, len(samples) - 1, 10).astype(int)
    worst_haus, worst_lip = 0.0, 0.0
    for k in set(idx):
        base = samples[k]
        win = (base.point - 4 * h, base.point + 4 * h)
        env = cone_envelope(samples, base.normal, alpha, win,
                            grid_resolution=17)
        local = [s for s in samples
                 if np.all(s.point >= win[0]) and np.all(s.point <= win[1])]
        worst_haus = max(worst_haus, graph_match(env, local))
        worst_lip = max(worst_lip, env.sampled_lipschitz())
    report(
        "Lipschitz envelope (10 windows)",
        worst_haus <= 2.0 * h and worst_lip <= 1.0 / alpha + 2.0 * h,
        f"Hausdorff {worst_haus:.3g} (limit {2 * h:.3g}), "
        f"Lipschitz {worst_lip:.3g} (limit {1 / alpha + 2 * h:.3g})",
    )


def test_acceptance_semiconvexity(squares_setup):
    c, plan, grid, field, samples, consts = squares_setup
    base = samples[len(samples) // 2]
    h = grid.cell_size
    env = cone_envelope(samples, base.normal, 8.0,
                        (base.point - 4 * h, base.point + 4 * h),
                        grid_resolution=17)
    r = consts.b1 / consts.c2
    good = check_semiconvexity(env, r=r)
    z = np.linspace(-1.0, 1.0, 21)
    concave = type(env)(
        base_normal=env.base_normal, origin=env.origin,
        rotation=env.rotation, alpha=env.alpha, apexes=env.apexes,
        axes=(z,), values=-(z**2),
    )
    bad = check_semiconvexity(concave, r=r)
    report(
        "semiconvexity (pass at r=b1/c2, fail on -|z'|^2)",
        good.passed and not bad.passed,
        f"pass margin {good.worst_margin:.3g}, "
        f"concave margin {bad.worst_margin:.3g}",
    )


def test_acceptance_mtw_tensor():
    rng = np.random.default_rng(400)
    worst = 0.0
    for n in (2, 3):
        analytic = quadratic_cost(n)
        fd = analytic.with_finite_differences_only()
        for k in range(100):
            while True:
                x, y = rng.uniform(-2, 2, n), rng.uniform(-2, 2, n)
                if np.linalg.norm(x - y) > 0.5:
                    break
            assert np.abs(mtw_tensor(analytic, x, y).entries).max() == 0.0
            if k < 10:  # finite differences are slow; spot-check
                worst = max(worst,
                            float(np.abs(mtw_tensor(fd, x, y).entries).max()))
    quad_ok = worst <= 1e-8

    c = log_cost(2)
    pairs = []
    while len(pairs) < 10:
        x, y = rng.uniform(-2, 2, 2), rng.uniform(-2, 2, 2)
        if np.linalg.norm(x - y) > 0.5:
            pairs.append((x, y))
    est = a3_infimum(c, pairs, directions_per_pair=200, seed=0)
    x0, y0 = est.argmin[0], est.argmin[1]
    tensor = mtw_tensor(c, x0, y0)
    angles = np.linspace(0.0, math.pi, 10_000, endpoint=False)
    dense = min(
        a3_form(tensor,
                np.array([math.cos(a), math.sin(a)]),
                np.array([-math.sin(a), math.cos(a)]))
        for a in angles
    )
    rel = abs(est.c0_estimate - dense) / abs(dense)
    report(
        "regularity tensor (quadratic zero; log infimum vs dense scan)",
        quad_ok and rel <= 0.05,
        f"quad FD max {worst:.2e}, infimum {est.c0_estimate:.6f} vs "
        f"dense {dense:.6f} (rel {rel:.2e})",
    )


def test_acceptance_holder_exponent():
    exact = holder_exponent(2, 2) == 1.0 / 11.0
    limit = holder_exponent(math.inf, 2) == 1.0 / 3.0
    ps = np.linspace(1.6, 50.0, 50)
    vals = [holder_exponent(p, 2) for p in ps]
    monotone = all(b >= a for a, b in zip(vals, vals[1:]))
    try:
        holder_exponent(1.5, 2)
        domain_ok = False
    except DomainError:
        domain_ok = True
    report(
        "Hoelder exponent formula",
        exact and limit and monotone and domain_ok,
        f"(2,2)={holder_exponent(2, 2)}, inf limit "
        f"{holder_exponent(math.inf, 2)}",
    )


def test_acceptance_sphere_example():
    t0 = time.time()
    rep = run_cap_example(resolution=1000)
    annulus = annulus_image_demo()
    elapsed = time.time() - t0
    tan_ok = abs(rep.tan_theta - math.sqrt(15.0) / 7.0) <= 1e-12
    angle_ok = rep.two_theta <= 8.0 / 7.0 < 15.0 / 8.0
    report(
        "sphere cap construction (resolution 1000)",
        rep.north_cap_active_mass <= 1e-9 and tan_ok and angle_ok
        and not annulus.passed and elapsed <= 60.0,
        f"north-cap mass {rep.north_cap_active_mass:.2e}, "
        f"tan(theta) gap {abs(rep.tan_theta - math.sqrt(15) / 7):.1e}, "
        f"annulus margin {annulus.worst_margin:.3g}, {elapsed:.1f}s",
    )


def test_acceptance_determinism(tmp_path):
    s = parse_scenario(json.dumps(DISJOINT_SQUARES))
    paths1 = write_record(run_pipeline(s), tmp_path / "a")
    paths2 = write_record(run_pipeline(s), tmp_path / "b")
    identical = all(
        open(p1, "rb").read() == open(p2, "rb").read()
        for p1, p2 in zip(paths1, paths2)
    )
    report("determinism (byte-identical reruns)", identical,
           f"{len(paths1)} files compared")
