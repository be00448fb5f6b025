#!/usr/bin/env python3
"""
无穷拉普拉斯、AMLE 求解器与各项验证检查的测试
"""
import numpy as np
import pytest

from app.core.domain import admissible_bfs, full_domain
from app.core.errors import DisconnectedDomainError, InputError
from app.core.infinity import (
    InfinityProblem,
    SolveMethod,
    SweepMode,
    infinity_laplacian,
    local_am_violations,
    normalize_boundary,
    residual,
    solve,
    solve_iterate,
    solve_lazarus,
    verify_am_local,
    verify_amle_global,
    verify_cc,
    verify_comparison,
    verify_harnack_alternative,
)
from app.core.lipschitz import VertexField, affine, mcshane_whitney, sup_distance

from helpers import Q1, Q12, Q13, Q2, Q23, Q3, level1_amle, random_subdomains, subdomain

E_GRID = [0.0, 0.1, 0.2, 0.25, 1 / 3, 0.4, 0.5]
METHODS = [SolveMethod.LAZARUS, SolveMethod.ITERATE]


def _field(g, mapping):
    return VertexField(g, {g.index_of(v): value for v, value in mapping.items()})


def _solve_corners(g, corners, method=SolveMethod.LAZARUS, **kwargs):
    u, report = solve(InfinityProblem.from_corners(g, corners), method, **kwargs)
    assert report.converged
    return u


@pytest.mark.parametrize("method", METHODS)
@pytest.mark.parametrize("e", E_GRID)
def test_level_one_closed_form(graph, method, e):
    g = graph(1)
    u = _solve_corners(g, (0.0, e, 1.0), method)
    for v, expected in level1_amle(e).items():
        assert u.at(v) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("e", [0.6, 2 / 3, 0.9, 1.0])
def test_level_one_reflection_for_large_e(graph, e):
    g = graph(1)
    u = _solve_corners(g, (0.0, e, 1.0))
    mirrored = level1_amle(1 - e)
    # q1 <-> q3 交换且 u -> 1 - u
    assert u.at(Q12) == pytest.approx(1 - mirrored[Q23])
    assert u.at(Q23) == pytest.approx(1 - mirrored[Q12])
    assert u.at(Q13) == pytest.approx(0.5)


@pytest.mark.parametrize("e", [0.05, 0.1, 1 / 7])
def test_level_two_value_at_q12(graph, e):
    g = graph(2)
    for method in METHODS:
        u = _solve_corners(g, (0.0, e, 1.0), method)
        assert u.at(Q12) == pytest.approx((3 + 4 * e) / 12, abs=1e-10)


def test_lazarus_stages_at_level_one(graph):
    g = graph(1)
    u, report = solve_lazarus(InfinityProblem.from_corners(g, (0.0, 0.2, 1.0)))
    assert report.method == SolveMethod.LAZARUS
    assert report.iterations == len(report.stages) == 3
    first = report.stages[0]
    assert {g.vertices[i] for i in first.pair} == {Q1, Q3}
    assert first.slope == pytest.approx(1.0)
    assert [g.vertices[i] for i in first.fixed] == [Q13]
    assert [g.vertices[i] for i in report.stages[1].fixed] == [Q23]
    assert [g.vertices[i] for i in report.stages[2].fixed] == [Q12]
    assert report.residual <= report.tol
    data = report.to_dict()
    assert "elapsed" not in data and data["method"] == "lazarus"
    assert "elapsed" in report.to_dict(include_timing=True)


def test_constant_boundary_is_filled(graph):
    g = graph(3)
    for method in METHODS:
        u = _solve_corners(g, (0.25, 0.25, 0.25), method)
        assert all(u[i] == pytest.approx(0.25) for i in range(len(g)))


def _cross_validate(g, seed, count=50):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        corners = tuple(float(x) for x in rng.uniform(-2, 2, size=3))
        a = _solve_corners(g, corners, SolveMethod.LAZARUS)
        b = _solve_corners(g, corners, SolveMethod.ITERATE)
        worst = max(worst, sup_distance(a, b))
    return worst


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_iterate_agrees_with_lazarus(graph, n):
    assert _cross_validate(graph(n), seed=n) <= 1e-9


@pytest.mark.slow
def test_iterate_agrees_with_lazarus_level_five(graph):
    assert _cross_validate(graph(5), seed=5) <= 1e-9


@pytest.mark.parametrize("method", METHODS)
def test_level_zero_solution_is_the_corner_data(graph, method):
    g = graph(0)
    u = _solve_corners(g, (0.0, 0.5, 1.0), method)
    assert u.support == frozenset(g.boundary)
    assert [u[i] for i in g.boundary] == [0.0, 0.5, 1.0]


def test_solvers_agree_on_subdomains(graph):
    g = graph(3)
    for dom, rng in random_subdomains(g, 10, seed=17):
        data = VertexField(g, {i: float(rng.uniform(-1, 1)) for i in dom.boundary})
        problem = InfinityProblem(dom, data)
        a, ra = solve_lazarus(problem)
        b, rb = solve_iterate(problem)
        assert ra.converged and rb.converged
        assert sup_distance(a, b) <= 1e-9
        assert residual(dom, a) <= 1e-10


def test_jacobi_mode_agrees(graph):
    g = graph(3)
    corners = (0.0, 0.2, 1.0)
    a = _solve_corners(g, corners, SolveMethod.LAZARUS)
    b = _solve_corners(g, corners, SolveMethod.ITERATE, mode=SweepMode.JACOBI)
    assert sup_distance(a, b) <= 1e-9


def test_iterate_reports_non_convergence(graph):
    g = graph(3)
    u, report = solve_iterate(InfinityProblem.from_corners(g, (0.0, 0.2, 1.0)), max_sweeps=1)
    assert not report.converged
    assert report.iterations == 1
    assert u.support == frozenset(range(len(g)))


def test_iterate_rejects_bad_tolerance(graph):
    with pytest.raises(InputError):
        solve_iterate(InfinityProblem.from_corners(graph(1), (0, 1, 2)), tol=0.0)


def test_problem_rejects_bad_input(graph):
    g = graph(2)
    with pytest.raises(InputError):
        InfinityProblem.from_corners(g, (0.0, 1.0))
    disconnected = subdomain(g, Q12, Q13, Q23)
    with pytest.raises(DisconnectedDomainError):
        InfinityProblem(disconnected, VertexField.constant(g, range(len(g)), 0.0))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_maximum_principle(graph, n):
    g = graph(n)
    rng = np.random.default_rng(40 + n)
    for _ in range(5):
        corners = rng.uniform(-5, 5, size=3)
        u = _solve_corners(g, tuple(corners))
        values = np.array([u[i] for i in range(len(g))])
        assert values.min() >= corners.min() - 1e-12
        assert values.max() <= corners.max() + 1e-12


def test_affine_equivariance(graph):
    g = graph(3)
    base = (0.0, 0.3, 1.0)
    u = _solve_corners(g, base)
    for alpha, beta in [(2.0, -1.0), (-0.5, 3.0)]:
        v = _solve_corners(g, tuple(alpha * c + beta for c in base))
        assert sup_distance(v, affine(u, alpha, beta)) <= 1e-12


@pytest.mark.parametrize("corners", [(0.0, 0.7, 1.0), (3.0, 9.0, 1.0), (-1.0, -1.0, 2.0)])
def test_normalization_round_trip(graph, corners):
    g = graph(2)
    triple, transform = normalize_boundary(corners)
    assert sorted(triple)[0] == pytest.approx(0.0)
    assert sorted(triple)[2] == pytest.approx(1.0)
    assert sorted(triple)[1] <= 0.5 + 1e-15
    direct = _solve_corners(g, corners)
    via = transform.apply(_solve_corners(g, triple), inverse=True)
    assert sup_distance(direct, via) <= 1e-12


def test_normalize_constant_boundary():
    triple, transform = normalize_boundary((2.0, 2.0, 2.0))
    assert triple == (2.0, 2.0, 2.0)
    assert transform is None


def test_normalize_reflects_when_middle_is_high():
    triple, transform = normalize_boundary((0.0, 0.8, 1.0))
    assert transform.reflected
    assert triple == pytest.approx((1.0, 0.2, 0.0))
    assert transform.inverse(transform.forward(0.37)) == pytest.approx(0.37)


def test_infinity_laplacian_values(graph):
    g = graph(1)
    u = _field(g, level1_amle(0.2))
    for v in (Q12, Q13, Q23):
        assert infinity_laplacian(g, u, v) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(InputError):
        infinity_laplacian(g, u, Q1)
    bumped = u.updated({g.index_of(Q12): 0.0})
    # 邻点 0, 0.2, 0.5, 0.6
    assert infinity_laplacian(g, bumped, Q12) == pytest.approx(0.6)


@pytest.mark.parametrize("n", [2, 3])
def test_distance_is_infinity_superharmonic(graph, n):
    g = graph(n)
    for dom, _ in random_subdomains(g, 8, seed=60 + n):
        for apex in dom.sorted_boundary[:3]:
            dist, _ = admissible_bfs(dom, apex)
            d = VertexField(g, {y: h * g.delta for y, h in dist.items()})
            for x in dom.sorted_interior:
                assert infinity_laplacian(g, d, x, within=dom.closure) <= 1e-12


def test_comparison_principle(graph):
    g = graph(3)
    dom = full_domain(g)
    u = _solve_corners(g, (0.0, 0.3, 1.0))
    lower = affine(u, 1.0, -0.1)
    result = verify_comparison(dom, lower, u)
    assert result.hypotheses_hold and result.passed
    upside_down = verify_comparison(dom, affine(u, 1.0, 0.1), u)
    assert not upside_down.hypotheses_hold
    assert not upside_down.passed
    assert set(upside_down.violations) == dom.closure


def test_cone_comparison_accepts_amle(graph):
    g = graph(3)
    for dom, rng in random_subdomains(g, 5, seed=70):
        data = VertexField(g, {i: float(rng.uniform(0, 1)) for i in dom.boundary})
        u, _ = solve_lazarus(InfinityProblem(dom, data))
        assert verify_cc(dom, u).passed


def test_cone_comparison_detects_raised_vertex(graph):
    g = graph(1)
    dom = full_domain(g)
    good = _field(g, level1_amle(0.2))
    assert verify_cc(dom, good).passed
    bad = good.updated({g.index_of(Q12): 0.8})
    result = verify_cc(dom, bad)
    assert not result.passed
    assert g.index_of(Q12) in result.violations


def test_harnack_alternative(graph):
    g = graph(2)
    u = _solve_corners(g, (0.0, 0.3, 1.0))
    dom = full_domain(g)
    assert verify_harnack_alternative(g, u, dom.interior).passed
    i = g.index_of(Q12)
    peaked = u.updated({i: 5.0})
    result = verify_harnack_alternative(g, peaked, dom.interior)
    assert not result.passed and i in result.violations
    flat = _solve_corners(g, (1.0, 1.0, 1.0))
    assert verify_harnack_alternative(g, flat, dom.interior).passed


def test_local_absolute_minimality(graph):
    g = graph(2)
    dom = full_domain(g)
    u = _solve_corners(g, (0.0, 0.3, 1.0))
    assert local_am_violations(dom, u) == ()
    i = g.index_of(Q13)
    moved = u.updated({i: u[i] + 1e-3})
    assert not verify_am_local(g, moved, i)
    assert i in local_am_violations(dom, moved)


def test_global_amle_accepts_solution(graph):
    g = graph(2)
    dom = full_domain(g)
    u = _solve_corners(g, (0.0, 0.2, 1.0))
    check = verify_amle_global(dom, u, samples=20, seed=1)
    assert check.passed
    assert check.checked == len(dom.interior) + 20


def test_global_amle_rejects_lower_extension(graph):
    g = graph(1)
    dom = full_domain(g)
    lower, _ = mcshane_whitney(dom, _field(g, {Q1: 0.0, Q2: 0.2, Q3: 1.0}))
    # M_* 的 Lip 与边界一致，但在 {q12} 上不是绝对极小
    check = verify_amle_global(dom, lower, samples=0)
    assert not check.passed
    singleton = [v for v in check.violations if v.subset == (g.index_of(Q12),)]
    assert singleton
    assert singleton[0].lip_u == pytest.approx(1.0)
    assert singleton[0].lip_competitor == pytest.approx(0.5)


def test_solution_operator_is_monotone(graph):
    g = graph(3)
    rng = np.random.default_rng(81)
    for _ in range(10):
        low = rng.uniform(-1, 1, size=3)
        high = low + rng.uniform(0, 1, size=3)
        u = _solve_corners(g, tuple(low))
        v = _solve_corners(g, tuple(high))
        assert all(u[i] <= v[i] + 1e-12 for i in range(len(g)))
