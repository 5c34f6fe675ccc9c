"""Geometric predicates: cone/ball conditions, semiconvexity, c-convexity,
and the closed-form exponents."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from potlab.boundary import (ConeEnvelope, EvaluationGrid, active_region,
                             extract_boundary)
from potlab.costs import CostConstants, DomainSample, quadratic_cost
from potlab.errors import DegenerateInputError, DomainError
from potlab.geometry import (check_ball_condition, check_c_convexity,
                             check_cone_condition, check_semiconvexity,
                             cone_profile, curvature_threshold,
                             holder_exponent)
from potlab.solver import DiscreteMeasure, solve_partial


@pytest.fixture(scope="module")
def ball_field():
    """Single-generator quadratic plan: active region is the unit ball
    around (1, 0); boundary samples along the circle."""
    c = quadratic_cost(2)
    f = DiscreteMeasure(np.array([[0.0, 0.0]]), np.array([1.0]))
    g = DiscreteMeasure(np.array([[1.0, 0.0]]), np.array([1.0]))
    plan = solve_partial(f, g, 1.0, c)
    grid = EvaluationGrid(np.array([-2.0, -2.0]), np.array([2.0, 2.0]),
                          (64, 64))
    field = active_region(plan, c, grid)
    samples = extract_boundary(field, np.ones(grid.resolution, dtype=bool), c)
    return field, samples


# -- profile -------------------------------------------------------------------


def test_cone_profile_quadratic_example():
    """b1 = 2*sqrt(2), c2 = 1, theta = pi/4 gives delta = 1, alpha = 1."""
    consts = CostConstants(b0=4.0, b1=2.0 * math.sqrt(2.0), c2=1.0)
    prof = cone_profile(quadratic_cost(2), consts, math.pi / 4)
    assert prof.alpha == pytest.approx(1.0)
    assert prof.delta == pytest.approx(1.0)
    assert not prof.capped


def test_cone_profile_validation_and_cap():
    c = quadratic_cost(2)
    good = CostConstants(b0=1.0, b1=1.0, c2=1.0)
    with pytest.raises(DomainError):
        cone_profile(c, good, 0.0)
    with pytest.raises(DomainError):
        cone_profile(c, good, math.pi / 2)
    with pytest.raises(DegenerateInputError):
        cone_profile(c, CostConstants(b0=1.0, b1=0.0, c2=1.0), math.pi / 4)
    assert cone_profile(c, good, 1e-14).capped


# -- cone and ball conditions ---------------------------------------------------


def test_cone_condition_passes_on_ball(ball_field):
    field, samples = ball_field
    consts = CostConstants(b0=0.5, b1=1.0, c2=1.0)
    prof = cone_profile(quadratic_cost(2), consts, math.pi / 4)
    rep = check_cone_condition(field, samples, prof, rays=16, radii=4)
    assert rep.passed
    assert rep.worst_margin >= 0
    assert rep.samples_checked == len(samples)


def test_cone_condition_fails_on_inverted_field(ball_field):
    field, samples = ball_field
    inverted = type(field)(
        grid=field.grid,
        indicator=~field.indicator,
        witness=field.witness,
        generating_pairs=field.generating_pairs,
    )
    consts = CostConstants(b0=0.5, b1=1.0, c2=1.0)
    prof = cone_profile(quadratic_cost(2), consts, math.pi / 4)
    rep = check_cone_condition(inverted, samples, prof, rays=16, radii=4)
    assert not rep.passed
    assert rep.worst_margin < 0
    assert rep.worst_witness is not None


def test_ball_condition_both_directions(ball_field):
    field, samples = ball_field
    consts = CostConstants(b0=0.5, b1=0.4, c2=1.0)  # r = 0.4 < inradius 1
    ok = check_ball_condition(field, samples, consts, radius_factor=0.9)
    assert ok.passed and ok.worst_margin >= 0
    # inflating past the region inradius must produce negative margins
    bad = check_ball_condition(field, samples, consts, radius=2.0,
                               radius_factor=1.0)
    assert not bad.passed and bad.worst_margin < 0
    assert bad.worst_witness is not None


def test_predicate_report_serializes(ball_field):
    field, samples = ball_field
    consts = CostConstants(b0=0.5, b1=0.4, c2=1.0)
    rep = check_ball_condition(field, samples, consts)
    d = rep.to_dict()
    assert d["pass"] is True
    assert d["predicate"] == "ball_condition"


# -- semiconvexity ----------------------------------------------------------------


def _synthetic_envelope(values, axis):
    return ConeEnvelope(
        base_normal=np.array([0.0, -1.0]), origin=np.zeros(2),
        rotation=np.eye(2), alpha=1.0, apexes=np.zeros((1, 2)),
        axes=(axis,), values=values,
    )


def test_semiconvexity_convex_passes_concave_fails():
    z = np.linspace(-1.0, 1.0, 21)
    convex = _synthetic_envelope(z**2, z)
    concave = _synthetic_envelope(-(z**2), z)
    assert check_semiconvexity(convex, r=2.0).passed
    rep = check_semiconvexity(concave, r=2.0)
    assert not rep.passed
    assert rep.worst_witness is not None


def test_semiconvexity_bound_is_scale_aware():
    """A mild concave bend within the 1/r allowance still passes."""
    z = np.linspace(-1.0, 1.0, 21)
    r = 2.0
    mild = _synthetic_envelope(-(z**2) / (4.0 * r), z)
    assert check_semiconvexity(mild, r=r).passed


def test_semiconvexity_validation():
    z = np.linspace(-1.0, 1.0, 21)
    env = _synthetic_envelope(z**2, z)
    with pytest.raises(DomainError):
        check_semiconvexity(env, r=0.0)


# -- c-convexity -------------------------------------------------------------------


def _disk_sample(center, radius, spacing=0.08):
    g = np.arange(-radius, radius + spacing / 2, spacing)
    gx, gy = np.meshgrid(g, g)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    return pts[np.linalg.norm(pts, axis=1) <= radius] + np.asarray(center)


def test_c_convexity_disk_passes():
    pts = _disk_sample([1.5, 0.0], 0.5)
    rep = check_c_convexity(quadratic_cost(2), np.zeros(2),
                            DomainSample(pts))
    assert rep.passed


def test_c_convexity_annulus_fails():
    ring = _disk_sample([1.5, 0.0], 1.0)
    ring = ring[np.linalg.norm(ring - [1.5, 0.0], axis=1) >= 0.7]
    rep = check_c_convexity(quadratic_cost(2), np.zeros(2),
                            DomainSample(ring))
    assert not rep.passed
    assert rep.worst_margin < 0


def test_c_convexity_collinear_is_degenerate():
    pts = np.column_stack([np.linspace(1.0, 2.0, 10), np.zeros(10)])
    rep = check_c_convexity(quadratic_cost(2), np.zeros(2),
                            DomainSample(pts))
    assert rep.degenerate
    assert rep.passed  # flagged, not failed


def test_c_convexity_needs_enough_points():
    with pytest.raises(DomainError):
        check_c_convexity(quadratic_cost(2), np.zeros(2),
                          DomainSample(np.ones((2, 2))))


# -- closed forms --------------------------------------------------------------------


def test_curvature_threshold():
    assert curvature_threshold(2.0, 3.0, 2) == pytest.approx(4.5)
    with pytest.raises(DomainError):
        curvature_threshold(0.0, 1.0, 2)


def test_holder_exponent_values():
    assert holder_exponent(2, 2) == pytest.approx(1.0 / 11.0, abs=0)
    assert holder_exponent(math.inf, 2) == pytest.approx(1.0 / 3.0, abs=0)
    assert holder_exponent(math.inf, 3) == pytest.approx(0.2, abs=0)
    with pytest.raises(DomainError):
        holder_exponent(1.5, 2)  # p = (n+1)/2
    with pytest.raises(DomainError):
        holder_exponent(2, 0)


@given(st.floats(1.6, 100.0), st.floats(1.6, 100.0))
@settings(max_examples=60, deadline=None)
def test_holder_exponent_monotone_in_p(p1, p2):
    lo, hi = sorted((p1, p2))
    assert holder_exponent(lo, 2) <= holder_exponent(hi, 2) + 1e-15
    assert holder_exponent(hi, 2) <= holder_exponent(math.inf, 2)
