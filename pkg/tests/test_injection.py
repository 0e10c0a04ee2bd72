import math

import numpy as np
import pytest
from conftest import random_feasible_designs
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import exact_injection_min

from trochoswarm.design import EPITROCHOID, HYPOTROCHOID, AgentTrochoid, DesignSpec, make_design
from trochoswarm.errors import SignDegenerate, UnsupportedType
from trochoswarm.injection import (
    OFFSETS,
    brute_force_min_separation,
    closed_form_min_separation,
    injected_position,
    injected_start_points,
    injection_constraints,
    injection_feasible,
    min_separation_phase_pi,
    min_separation_phase_quadrature,
    refresh_period,
    same_path_min_distance,
)
from trochoswarm.region import feasible_region

HALF_PI = 0.5 * math.pi


def circle(agent_id, c_r, k=2):
    return AgentTrochoid(agent_id, c_r=c_r, c_d=0.0, k=k, lambda_min=1.0, lambda_max=float(k + 1))


def test_inject_markers(inject_design):
    t1, t2, t3 = inject_design.trochoids
    np.testing.assert_allclose(injected_position(t1, HALF_PI, 0.0), (0, -6.304), atol=2e-3)
    np.testing.assert_allclose(injected_position(t1, math.pi, 0.0), (3.528, 0), atol=2e-3)
    np.testing.assert_allclose(injected_position(t2, HALF_PI, 0.0), (0, 6.813), atol=2e-3)
    np.testing.assert_allclose(injected_position(t3, HALF_PI, 0.0), (0, 2.523), atol=2e-3)


def test_injected_position_is_time_shift(inject_design):
    tr = inject_design.trochoids[2]
    for phi in OFFSETS:
        t = phi / tr.lambda_min
        p = tr.position(t)
        np.testing.assert_allclose(injected_position(tr, phi, 0.0), p, atol=1e-12)


def test_hypotrochoid_unsupported():
    d = make_design(DesignSpec(k=3, triple=(5, 12, 13), trochoid_type=HYPOTROCHOID), 900, 300)
    with pytest.raises(UnsupportedType):
        injected_position(d.trochoids[0], HALF_PI, 0.0)
    with pytest.raises(UnsupportedType):
        injection_feasible(d.trochoids, 0.5)
    with pytest.raises(UnsupportedType):
        injection_constraints(d.eig, 0.5)


def test_quadrature_concentric_circles():
    a, b = circle(1, 3.0), circle(2, 3.0)
    r = 1.0
    assert min_separation_phase_quadrature(a, b, 0.5) == pytest.approx((3 * math.sqrt(2) * r) ** 2 - 0.25)


def test_pi_circle_case_all_parities():
    for k in (2, 3):
        a, b = circle(1, 2.0 * (k + 1), k), circle(2, 1.0 * (k + 1), k)
        expected = ((k + 1) * (2.0 + 1.0)) ** 2 - 0.25
        assert min_separation_phase_pi(a, b, 0.5, alpha=[1, 1, 1, 2, 0, 0]) == pytest.approx(expected)


def test_pi_even_positive_product(inject_design):
    t1, t2, _ = inject_design.trochoids
    alpha = inject_design.eig.alpha
    # (a1r + a2r)(a1d + a2d) = (-6.75 + 3)(3 - 10) > 0 after scaling by beta_d
    r = np.array([t1.c_r, t2.c_r]) / 3
    d = np.array([t1.c_d, t2.c_d])
    expected = (3 * r.sum() - d.sum()) ** 2 - 0.25
    assert min_separation_phase_pi(t1, t2, 0.5, alpha) == pytest.approx(expected, rel=1e-12)


def test_sign_degenerate():
    a = AgentTrochoid(1, c_r=3.0, c_d=1.0, k=2, lambda_min=1.0, lambda_max=3.0)
    b = AgentTrochoid(2, c_r=-3.0, c_d=1.0, k=2, lambda_min=1.0, lambda_max=3.0)
    with pytest.raises(SignDegenerate):
        min_separation_phase_pi(a, b, 0.5)
    # the dispatcher falls back to the grid search
    v = closed_form_min_separation(a, b, math.pi, 0.5)
    assert v == pytest.approx(exact_injection_min(a, b, math.pi) - 0.25, abs=1e-9)


def test_inject_all_constraints_non_negative(inject_design):
    trs = inject_design.trochoids
    for i in trs:
        for j in trs:
            if i is j:
                continue
            assert min_separation_phase_quadrature(i, j, 0.5) >= 0
            assert min_separation_phase_pi(i, j, 0.5, inject_design.eig.alpha) >= 0


def test_brute_force_matches_closed_form_inject_design(inject_design):
    t1, t2, _ = inject_design.trochoids
    for phi in OFFSETS:
        closed = closed_form_min_separation(t1, t2, phi, 0.5, inject_design.eig.alpha)
        brute = brute_force_min_separation(t1, t2, phi, 0.5)
        assert abs(closed - brute) <= 1e-6 * max(1.0, abs(brute))


def test_brute_force_coincident():
    tr = circle(1, 3.0)
    assert brute_force_min_separation(tr, tr, 0.0, 0.5, grid_n=1000) == pytest.approx(-0.25, abs=1e-12)
    with pytest.raises(ValueError):
        brute_force_min_separation(tr, tr, 0.0, 0.5, grid_n=10)


def test_brute_force_convergence(inject_design):
    t1, _, t3 = inject_design.trochoids
    phi = 1.234  # not a grid multiple, forces direct evaluation
    a = brute_force_min_separation(t1, t3, phi, 0.5, grid_n=50_000)
    b = brute_force_min_separation(t1, t3, phi, 0.5, grid_n=100_000)
    assert abs(a - b) < 1e-8
    assert a == pytest.approx(exact_injection_min(t1, t3, phi) - 0.25, abs=1e-8)


@pytest.mark.parametrize("k", [3, 5, 7])
def test_odd_k_closed_forms_exact(k):
    spec = DesignSpec(k=k, triple=(5, 12, 13))
    d = make_design(spec, 2000, 900)
    trs = d.trochoids
    for i in trs:
        for j in trs:
            if i is j:
                continue
            for phi in OFFSETS:
                got = closed_form_min_separation(i, j, phi, 0.5, d.eig.alpha)
                assert got == pytest.approx(exact_injection_min(i, j, phi) - 0.25, rel=1e-9, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(
    st.integers(2, 9),
    st.floats(0.0, 1.0),
    st.floats(-1.0, 1.0),
    st.floats(0.0, 1.0),
    st.floats(-1.0, 1.0),
)
def test_closed_forms_vs_exact_property(k, cr1, cd1, cr2, cd2):
    a = AgentTrochoid(1, c_r=cr1, c_d=cd1, k=k, lambda_min=1.0, lambda_max=float(k + 1))
    b = AgentTrochoid(2, c_r=-cr2, c_d=cd2, k=k, lambda_min=1.0, lambda_max=float(k + 1))
    for phi in (HALF_PI, 1.5 * math.pi):
        assert min_separation_phase_quadrature(a, b, 0.0) == pytest.approx(
            exact_injection_min(a, b, phi), abs=1e-12
        )
    try:
        got = min_separation_phase_pi(a, b, 0.0)
    except SignDegenerate:
        return
    assert got == pytest.approx(exact_injection_min(a, b, math.pi), abs=1e-12)


def test_injection_feasible_inject_design(inject_design):
    plan = injection_feasible(inject_design.trochoids, 0.5, inject_design.eig.alpha)
    assert plan.agent_count == 12
    assert all(set(v) == set(OFFSETS) for v in plan.offsets.values())
    assert len(plan.delta_sq) == 18
    for T in plan.refresh_periods.values():
        assert T == pytest.approx(inject_design.period / 4)
    assert plan.same_path_safe


def test_injection_feasible_near_circle(circle_design):
    plan = injection_feasible(circle_design.trochoids, 0.5, circle_design.eig.alpha)
    assert plan.agent_count == 12


def test_infeasible_offsets_excluded():
    # two nearly coincident circles: every offset of path 1 collides with path 2 at some time
    a, b = circle(1, 0.6), circle(2, 0.65)
    plan = injection_feasible((a, b), 0.5)
    assert plan.offsets[1] == () or all(plan.delta_sq[(1, 2, lab)] >= 0 for lab in ("pi/2", "pi", "3pi/2"))
    assert plan.agent_count == 2 + sum(len(v) for v in plan.offsets.values())


def test_refresh_period_rule():
    assert refresh_period(4.0, OFFSETS) == pytest.approx(1.0)
    assert refresh_period(4.0, ()) == pytest.approx(4.0)
    assert refresh_period(4.0, (math.pi,)) == pytest.approx(2.0)


def test_start_points_count(inject_design):
    pts = injected_start_points(inject_design.trochoids)
    assert len(pts) == 12
    green_pi = [p for p in pts if p[0] == 3 and p[1] == math.pi][0]
    assert green_pi[2] == pytest.approx(-11.315, abs=2e-3)


def test_same_path_dense(inject_design):
    t = np.linspace(0, 2 * math.pi, 20_000, endpoint=False)
    for tr in inject_design.trochoids:
        phases = (0.0,) + OFFSETS
        pts = [injected_position(tr, p, t) for p in phases]
        dmin = min(
            np.linalg.norm(pts[a] - pts[b], axis=-1).min() for a in range(4) for b in range(a + 1, 4)
        )
        assert dmin >= 0.5
        assert same_path_min_distance(tr, 0.0, math.pi) >= 0.5


def test_shrunk_region_subset(base_spec, base_eig, base_region):
    shrunk = feasible_region(base_spec, base_eig, extra=injection_constraints(base_eig, 0.5))
    assert shrunk.area < base_region.area
    rng = np.random.default_rng(2)
    R = rng.uniform(0, 3100, 20_000)
    d = rng.uniform(0, 2600, 20_000)
    inside = shrunk.contains(R, d)
    assert inside.any()
    assert np.all(base_region.contains(R[inside], d[inside], tol=1e-6))


def test_shrunk_region_points_are_injectable(base_spec, base_eig):
    shrunk = feasible_region(base_spec, base_eig, extra=injection_constraints(base_eig, 0.5))
    for poly in shrunk.polygons:
        R, d = poly.vertices.mean(axis=0)
        design = make_design(base_spec, R, d, base_eig)
        plan = injection_feasible(design.trochoids, 0.5, base_eig.alpha)
        assert plan.agent_count == 12


@pytest.mark.slow
def test_random_designs_closed_vs_brute():
    designs = random_feasible_designs(10, seed=4, types=(EPITROCHOID,))
    for d in designs:
        trs = d.trochoids
        for i in trs:
            for j in trs:
                if i is j:
                    continue
                for phi in OFFSETS:
                    closed = closed_form_min_separation(i, j, phi, 0.5, d.eig.alpha)
                    brute = brute_force_min_separation(i, j, phi, 0.5)
                    assert abs(closed - brute) <= 1e-6 * max(1.0, abs(brute))
