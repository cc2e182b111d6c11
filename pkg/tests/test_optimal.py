import math

import numpy as np
import pytest

from planarpose.errors import (
    DegenerateConfigurationError,
    InvalidInputError,
    NoSolutionError,
)
from planarpose.geom import PlanarPose, wrap_angle
from planarpose.optimal import (
    Branch,
    SolverOptions,
    adjugate_coeffs,
    build_design,
    build_lambda_polynomials,
    check_degenerate,
    design_rows,
    holdout_count,
    solve_lambda_system,
    solve_lambda_system_adjugate,
    solve_linear_planar,
    solve_optimal,
    unit_cost,
    _constraint_poly,
    _gram,
    _lambda_poly_coeffs,
)

from helpers import angle_diff_deg, exact_correspondences, grid_search_cost


def random_gram(rng, n=20):
    a = rng.normal(size=(n, 4))
    return a.T @ a


def m_of(g, lam):
    return np.array(
        [
            [lam + g[0, 0], g[0, 1], g[0, 2]],
            [g[0, 1], lam + g[1, 1], g[1, 2]],
            [g[0, 2], g[1, 2], g[2, 2] - lam],
        ]
    )


# ---------------------------------------------------------------- design


def test_design_row_example():
    rows = design_rows(np.array([[0.1, 0.2, 0.3, 0.4]]))
    np.testing.assert_allclose(rows[0], [0.2, -0.06, 0.04, -0.4], atol=1e-16)


def test_design_gram_matches_dense(rng):
    for _ in range(100):
        pts = rng.uniform(-1, 1, (int(rng.integers(3, 40)), 4))
        d = build_design(pts)
        a = np.column_stack(
            [pts[:, 1], -pts[:, 2] * pts[:, 1], pts[:, 3] * pts[:, 0], -pts[:, 3]]
        )
        np.testing.assert_allclose(d.gram, a.T @ a, rtol=1e-12, atol=1e-15)
        assert d.n == len(pts)


def test_design_requires_three_points():
    with pytest.raises(InvalidInputError):
        build_design(np.array([[0.1, 0.2, 0.3, 0.4], [0.5, 0.6, 0.7, 0.8]]))


def test_degenerate_all_zero_y(rng):
    pts = rng.uniform(-1, 1, (15, 4))
    pts[:, 1] = 0.0
    pts[:, 3] = 0.0
    d = build_design(pts)
    np.testing.assert_allclose(d.gram, 0.0, atol=1e-30)
    assert check_degenerate(d)
    with pytest.raises(DegenerateConfigurationError):
        solve_optimal(pts)
    with pytest.raises(DegenerateConfigurationError):
        solve_linear_planar(pts)


def test_degenerate_zero_q2y_block(rng):
    pts = rng.uniform(-1, 1, (15, 4))
    pts[:, 3] = 0.0  # columns 3 and 4 of the design matrix vanish
    assert check_degenerate(build_design(pts))


def test_generic_scene_not_degenerate(rng):
    pts = exact_correspondences(0.05, 1.3, 25, rng)
    assert not check_degenerate(build_design(pts))


def test_holdout_count_rule():
    assert holdout_count(100, 0.05) == 5
    assert holdout_count(10, 0.05) == 1
    assert holdout_count(3, 0.05) == 0   # never starve the fit below 3
    assert holdout_count(50, 0.0) == 0


# ------------------------------------------------- lambda polynomials


def test_lambda_polynomials_decoupled_example():
    g = np.diag([1.0, 1.0, 1.0, 2.0])
    p1, p2, p3, p4 = _lambda_poly_coeffs(g)
    np.testing.assert_allclose(p1, 0.0, atol=1e-15)
    np.testing.assert_allclose(p2, 0.0, atol=1e-15)
    np.testing.assert_allclose(p3, 0.0, atol=1e-15)
    # (lam+1)^2 (1-lam) = 1 + lam - lam^2 - lam^3
    np.testing.assert_allclose(p4, [1.0, 1.0, -1.0, -1.0], atol=1e-15)


def test_determinant_polynomial_matches_dense(rng):
    for _ in range(50):
        g = random_gram(rng)
        _, _, _, p4 = _lambda_poly_coeffs(g)
        for lam in rng.uniform(-5, 5, 4):
            det = np.linalg.det(m_of(g, lam))
            assert np.polyval(p4[::-1], lam) == pytest.approx(det, rel=1e-12, abs=1e-12)


def test_adjugate_identity(rng):
    for _ in range(50):
        g = random_gram(rng)
        adj = adjugate_coeffs(g)
        lam = float(rng.uniform(-3, 3))
        adj_at = np.array([[np.polyval(adj[i][j][::-1], lam) for j in range(3)] for i in range(3)])
        m = m_of(g, lam)
        det = np.linalg.det(m)
        np.testing.assert_allclose(adj_at @ m, det * np.eye(3), atol=1e-10 * max(1.0, abs(det)))


def test_constraint_poly_leading_coefficient(rng):
    for _ in range(20):
        g = random_gram(rng)
        p1, p2, p3, p4 = _lambda_poly_coeffs(g)
        q = _constraint_poly(p1, p2, p3, p4)
        assert q[6] == pytest.approx(-(p4[3] ** 2)) == pytest.approx(-1.0)


def test_build_lambda_polynomials_public(rng):
    pts = exact_correspondences(0.1, 1.4, 12, rng)
    d = build_design(pts)
    p1, p2, p3, p4 = build_lambda_polynomials(d, Branch.FIX_FOURTH)
    assert p4.degree() == 3
    assert max(p.degree() for p in (p1, p2, p3)) <= 2
    pts_bad = np.zeros((5, 4))
    with pytest.raises(DegenerateConfigurationError):
        build_lambda_polynomials(build_design(pts_bad))


def test_adjugate_solution_matches_direct(rng):
    for _ in range(30):
        g = random_gram(rng)
        lam = float(rng.uniform(-3, 3))
        if abs(np.linalg.det(m_of(g, lam))) < 1e-6:
            continue
        np.testing.assert_allclose(
            solve_lambda_system_adjugate(g, lam),
            solve_lambda_system(g, lam),
            rtol=1e-8,
            atol=1e-10,
        )


# ------------------------------------------------------- solve_optimal


def test_exact_recovery_forward(rng):
    pts = exact_correspondences(math.radians(5), math.radians(90), 20, rng)
    pose, diag = solve_optimal(pts)
    assert angle_diff_deg(pose.alpha, math.radians(5)) < 1e-6
    assert angle_diff_deg(pose.beta, math.radians(90)) < 1e-6
    assert diag.n_points == 20
    assert len(diag.candidates) >= 1


def test_three_point_exact_zero_cost(rng):
    pts = exact_correspondences(0.2, 0.9, 3, rng)
    _, diag = solve_optimal(pts)
    assert diag.cost < 1e-18


def test_optimal_beats_grid_oracle(rng):
    for sigma in (0.5, 1.0, 2.0):
        pts = exact_correspondences(
            rng.uniform(-0.1, 0.1), rng.uniform(0.5, 2.5), 40, rng, noise=sigma / 1000.0
        )
        pose, diag = solve_optimal(pts)
        j_oracle, _, _ = grid_search_cost(pts)
        assert diag.cost <= j_oracle * (1.0 + 1e-9) + 1e-18


def test_optimal_cost_below_linear(rng):
    worse = 0
    for _ in range(50):
        pts = exact_correspondences(
            rng.uniform(-0.1, 0.1), rng.uniform(-math.pi, math.pi), 50, rng, noise=1e-3
        )
        pose, diag = solve_optimal(pts)
        lin = solve_linear_planar(pts)
        g = _gram(design_rows(pts))
        j_lin = float(unit_cost(g, lin.alpha, lin.beta))
        if diag.cost > j_lin * (1 + 1e-12):
            worse += 1
    assert worse == 0


def test_duplicating_points_leaves_pose_unchanged(rng):
    pts = exact_correspondences(0.05, 1.1, 30, rng, noise=1e-3)
    pose1, _ = solve_optimal(pts)
    pose2, _ = solve_optimal(np.vstack([pts, pts]))
    assert angle_diff_deg(pose1.alpha, pose2.alpha) < 1e-10
    assert angle_diff_deg(pose1.beta, pose2.beta) < 1e-10


def test_branch_consistency(rng):
    checked = 0
    while checked < 20:
        alpha = rng.uniform(-0.1, 0.1)
        beta = rng.uniform(-math.pi, math.pi)
        ab = alpha + beta
        if abs(math.sin(ab)) < 0.15 or abs(math.cos(ab)) < 0.15:
            continue
        pts = exact_correspondences(alpha, beta, 60, rng, noise=1e-3)
        _, diag = solve_optimal(pts)
        per_branch = {}
        for c in diag.candidates:
            if c.branch not in per_branch or c.cost < per_branch[c.branch].cost:
                per_branch[c.branch] = c
        if len(per_branch) < 2:
            continue
        b1 = per_branch[Branch.FIX_FOURTH]
        b2 = per_branch[Branch.FIX_THIRD]
        # compare mod pi: the +-t sign is resolved later by cheirality
        da = angle_diff_deg(b1.alpha, b2.alpha)
        db = min(angle_diff_deg(b1.beta, b2.beta), 180.0 - angle_diff_deg(b1.beta, b2.beta))
        assert da < 1e-6
        assert db < 1e-6
        checked += 1


def test_candidate_constraint_and_stationarity(rng):
    # small version of the acceptance suite invariant
    for _ in range(200):
        n = int(rng.integers(3, 60))
        sigma = rng.uniform(0.0, 2e-3)
        pts = exact_correspondences(rng.uniform(-0.1, 0.1), rng.uniform(-math.pi, math.pi), n, rng, noise=sigma)
        try:
            _, diag = solve_optimal(pts)
        except (DegenerateConfigurationError, NoSolutionError):
            continue
        g = _gram(design_rows(pts))
        for c in diag.candidates:
            assert c.constraint_residual < 1e-7
            gb = g if c.branch is Branch.FIX_FOURTH else g[np.ix_([0, 1, 3, 2], [0, 1, 3, 2])]
            b = -gb[:3, 3]
            # KKT residual of the chart problem at the raw candidate
            z = np.array([c.gamma, c.delta, c.epsilon])
            grad = 2.0 * (m_of(gb, c.lam) @ z - b)
            assert np.linalg.norm(grad) < 1e-6 * (1.0 + np.linalg.norm(b))


def test_refined_candidates_stationary_in_unit_cost(rng):
    pts = exact_correspondences(0.03, 1.2, 50, rng, noise=1e-3)
    pose, diag = solve_optimal(pts)
    g = _gram(design_rows(pts))
    h = 1e-6
    best = min(diag.candidates, key=lambda c: c.cost)
    da = (unit_cost(g, best.alpha + h, best.beta) - unit_cost(g, best.alpha - h, best.beta)) / (2 * h)
    db = (unit_cost(g, best.alpha, best.beta + h) - unit_cost(g, best.alpha, best.beta - h)) / (2 * h)
    b = -g[:3, 3]
    assert math.hypot(da, db) < 1e-6 * (1.0 + np.linalg.norm(b))


def test_holdout_scoring_path(rng):
    pts = exact_correspondences(0.02, 1.5, 40, rng, noise=1e-3)
    pose, diag = solve_optimal(pts, SolverOptions(holdout_fraction=0.05))
    assert diag.holdout_count == 2
    assert angle_diff_deg(pose.alpha, 0.02) < 0.5
    assert angle_diff_deg(pose.beta, 1.5) < 0.5


def test_fewer_than_three_points_raises(rng):
    with pytest.raises(InvalidInputError):
        solve_optimal(rng.uniform(-1, 1, (2, 4)))


def test_no_real_roots_raises(monkeypatch, rng):
    import planarpose.optimal as mod

    pts = exact_correspondences(0.05, 1.0, 10, rng)
    monkeypatch.setattr(mod.poly, "real_roots_coeffs", lambda *a, **k: np.array([]))
    with pytest.raises(NoSolutionError):
        solve_optimal(pts)


def test_determinism_bitwise(rng):
    pts = exact_correspondences(0.07, 0.8, 35, rng, noise=1e-3)
    p1, d1 = solve_optimal(pts)
    p2, d2 = solve_optimal(pts.copy())
    assert p1.alpha == p2.alpha and p1.beta == p2.beta
    assert d1.cost == d2.cost


# -------------------------------------------------- linear baseline


def test_linear_matches_optimal_on_exact_data(rng):
    pts = exact_correspondences(math.radians(3), math.radians(75), 30, rng)
    lin = solve_linear_planar(pts)
    opt, _ = solve_optimal(pts)
    assert angle_diff_deg(lin.alpha, opt.alpha) < 1e-8
    assert angle_diff_deg(lin.beta, opt.beta) < 1e-8


def test_linear_requires_three_points(rng):
    with pytest.raises(InvalidInputError):
        solve_linear_planar(rng.uniform(-1, 1, (2, 4)))
