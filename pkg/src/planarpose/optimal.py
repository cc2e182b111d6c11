"""Least-squares planar-motion solver from N >= 3 correspondences.

The epipolar residual of a planar essential matrix is linear in
``x = [cos(b), sin(b), sin(a+b), cos(a+b)]`` with design-matrix row
``[q1y, -q2x*q1y, q2y*q1x, -q2y]`` per correspondence, so the problem
is ``A x = 0`` subject to both 2-sub-vectors of ``x`` lying on the unit
circle.  Pinning the fourth coordinate to 1 and enforcing equal
sub-vector lengths with a single Lagrange multiplier ``lam`` turns the
first-order conditions into the 3x3 system ``M(lam) z = b`` whose
consistency with the length constraint is a degree-6 polynomial in
``lam``; the same construction with columns 3 and 4 swapped covers
poses where the pinned coordinate is small.  Both branches are always
computed and their candidates pooled.

The pinned-coordinate normalization biases the stationary points away
from the minimum of the renormalized (unit sub-vector) cost by
O(noise^2), so each candidate is finished with a few guarded Newton
steps on the renormalized cost before scoring.  On exact data the
refinement is a no-op.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import poly
from .errors import DegenerateConfigurationError, InvalidInputError, NoSolutionError
from .geom import PlanarPose, as_point_array, cheirality_select, wrap_angle

GRAM_COMPENSATED_THRESHOLD = 10_000
COST_TIE_TOL = 1e-14


class Branch(enum.Enum):
    """Which unit-circle coordinate of x is pinned to 1."""

    FIX_FOURTH = "fix_fourth"   # pins cos(a+b)
    FIX_THIRD = "fix_third"     # pins sin(a+b)


@dataclass(frozen=True)
class DesignColumns:
    """Gram matrix of the four design columns plus the point count."""

    gram: np.ndarray
    n: int


@dataclass(frozen=True)
class SolverCandidate:
    """One root of the constraint polynomial with its recovered solution.

    gamma/delta/epsilon are the raw chart coordinates (before
    renormalization); alpha/beta are the pose angles after
    renormalization and refinement; cost is the renormalized cost on the
    full input set.
    """

    lam: float
    gamma: float
    delta: float
    epsilon: float
    branch: Branch
    alpha: float
    beta: float
    cost: float
    constraint_residual: float


@dataclass(frozen=True)
class SolverOptions:
    holdout_fraction: float = 0.0
    imag_tol: float = 1e-8
    constraint_tol: float = 1e-5
    refine: bool = True
    refine_steps: int = 10
    degenerate_tol: float | None = None


@dataclass
class SolveDiagnostics:
    candidates: list = field(default_factory=list)
    root_counts: dict = field(default_factory=dict)
    branch: Branch | None = None
    cost: float = math.nan
    n_points: int = 0
    holdout_count: int = 0


def design_rows(points) -> np.ndarray:
    """Stack the per-correspondence rows [q1y, -q2x*q1y, q2y*q1x, -q2y]."""
    pts = as_point_array(points)
    q1x, q1y, q2x, q2y = pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3]
    return np.column_stack([q1y, -q2x * q1y, q2y * q1x, -q2y])


def _gram(rows: np.ndarray) -> np.ndarray:
    if rows.shape[0] > GRAM_COMPENSATED_THRESHOLD:
        # exact per-entry summation keeps rounding bounded for huge N
        g = np.empty((4, 4))
        for i in range(4):
            for j in range(i, 4):
                g[i, j] = g[j, i] = math.fsum(rows[:, i] * rows[:, j])
        return g
    return rows.T @ rows


def build_design(points) -> DesignColumns:
    pts = as_point_array(points)
    if pts.shape[0] < 3:
        raise InvalidInputError(f"need at least 3 correspondences, got {pts.shape[0]}")
    rows = design_rows(pts)
    return DesignColumns(gram=_gram(rows), n=pts.shape[0])


def check_degenerate(d: DesignColumns, tol: float | None = None) -> bool:
    """True when either 2-column block of the design matrix is numerically zero."""
    g = d.gram
    if tol is None:
        tol = 1e-12 * max(1.0, float(np.trace(g)))
    return max(g[0, 0], g[1, 1]) <= tol or max(g[2, 2], g[3, 3]) <= tol


_SWAP34 = np.array([0, 1, 3, 2])


def _branch_gram(g: np.ndarray, branch: Branch) -> np.ndarray:
    if branch is Branch.FIX_FOURTH:
        return g
    return g[np.ix_(_SWAP34, _SWAP34)]


def adjugate_coeffs(g: np.ndarray):
    """Entries of adj(M(lam)) as degree<=2 coefficient arrays (symmetric 3x3).

    M(lam) = [[lam+g11, g12, g13], [g12, lam+g22, g23], [g13, g23, g33-lam]].
    """
    g11, g12, g13 = g[0, 0], g[0, 1], g[0, 2]
    g22, g23 = g[1, 1], g[1, 2]
    g33 = g[2, 2]
    a11 = np.array([g22 * g33 - g23 * g23, g33 - g22, -1.0])
    a22 = np.array([g11 * g33 - g13 * g13, g33 - g11, -1.0])
    a33 = np.array([g11 * g22 - g12 * g12, g11 + g22, 1.0])
    a12 = np.array([g13 * g23 - g12 * g33, g12, 0.0])
    a13 = np.array([g12 * g23 - g13 * g22, -g13, 0.0])
    a23 = np.array([g12 * g13 - g23 * g11, -g23, 0.0])
    return [[a11, a12, a13], [a12, a22, a23], [a13, a23, a33]]


def _lambda_poly_coeffs(g: np.ndarray):
    """Coefficient arrays (low-to-high) of P1..P3 (deg 2) and P4 = det M (deg 3).

    P1..P3 are the rows of adj(M) times b = -[g14, g24, g34]; P4 = det M
    with leading coefficient -1.
    """
    adj = adjugate_coeffs(g)
    (a11, a12, a13), (_, a22, a23), (_, _, a33) = adj
    g11, g12, g13 = g[0, 0], g[0, 1], g[0, 2]
    b1, b2, b3 = -g[0, 3], -g[1, 3], -g[2, 3]
    p1 = a11 * b1 + a12 * b2 + a13 * b3
    p2 = a12 * b1 + a22 * b2 + a23 * b3
    p3 = a13 * b1 + a23 * b2 + a33 * b3

    # det M = (lam+g11)*a11 + g12*a12 + g13*a13
    m11a11 = np.array(
        [
            g11 * a11[0],
            g11 * a11[1] + a11[0],
            g11 * a11[2] + a11[1],
            a11[2],
        ]
    )
    p4 = m11a11 + np.concatenate([g12 * a12 + g13 * a13, [0.0]])
    return p1, p2, p3, p4


def _constraint_poly(p1, p2, p3, p4) -> np.ndarray:
    """gamma^2 + delta^2 - epsilon^2 - 1 = 0 cleared of denominators: degree 6."""
    q = np.zeros(7)
    q[: 2 * len(p1) - 1] += np.convolve(p1, p1)
    q[: 2 * len(p2) - 1] += np.convolve(p2, p2)
    q[: 2 * len(p3) - 1] -= np.convolve(p3, p3)
    q -= np.convolve(p4, p4)
    return q


def build_lambda_polynomials(d: DesignColumns, branch: Branch = Branch.FIX_FOURTH):
    """Public polynomial view of the 3x3 system, for inspection and tests."""
    if check_degenerate(d):
        raise DegenerateConfigurationError("degenerate configuration")
    p1, p2, p3, p4 = _lambda_poly_coeffs(_branch_gram(d.gram, branch))
    return (
        poly.Polynomial(p1),
        poly.Polynomial(p2),
        poly.Polynomial(p3),
        poly.Polynomial(p4),
    )


def _m_of_lambda(g: np.ndarray, lam: float) -> np.ndarray:
    return np.array(
        [
            [lam + g[0, 0], g[0, 1], g[0, 2]],
            [g[0, 1], lam + g[1, 1], g[1, 2]],
            [g[0, 2], g[1, 2], g[2, 2] - lam],
        ]
    )


def solve_lambda_system(g: np.ndarray, lam: float) -> np.ndarray:
    """Direct 3x3 solve of M(lam) z = b; preferred over the adjugate quotient."""
    b = -g[:3, 3]
    return np.linalg.solve(_m_of_lambda(g, lam), b)


def solve_lambda_system_adjugate(g: np.ndarray, lam: float) -> np.ndarray:
    """Adjugate/determinant form of the solution, kept as a cross-check."""
    p1, p2, p3, p4 = _lambda_poly_coeffs(g)
    det = np.polyval(p4[::-1], lam)
    return np.array(
        [
            np.polyval(p1[::-1], lam),
            np.polyval(p2[::-1], lam),
            np.polyval(p3[::-1], lam),
        ]
    ) / det


def unit_cost(gram: np.ndarray, alpha, beta):
    """Sum of squared residuals at unit-circle parameters (vectorized)."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    ab = alpha + beta
    x = np.stack([np.cos(beta), np.sin(beta), np.sin(ab), np.cos(ab)], axis=-1)
    return np.einsum("...i,ij,...j->...", x, gram, x)


def _refine_unit_cost(gram: np.ndarray, beta: np.ndarray, theta: np.ndarray, steps: int):
    """Guarded Newton on J(beta, theta) = x^T G x, x = [cb, sb, st, ct].

    Steps that do not decrease J are halved twice and then rejected, so
    saddle candidates stay put and minima converge quadratically.
    """
    def cost(b, t):
        x = np.stack([np.cos(b), np.sin(b), np.sin(t), np.cos(t)], axis=-1)
        return np.einsum("...i,ij,...j->...", x, gram, x)

    j = cost(beta, theta)
    for _ in range(steps):
        cb, sb = np.cos(beta), np.sin(beta)
        st, ct = np.sin(theta), np.cos(theta)
        zero = np.zeros_like(cb)
        x = np.stack([cb, sb, st, ct], axis=-1)
        xb = np.stack([-sb, cb, zero, zero], axis=-1)
        xt = np.stack([zero, zero, ct, -st], axis=-1)
        gx = x @ gram
        gb = 2.0 * np.einsum("...i,...i->...", xb, gx)
        gt = 2.0 * np.einsum("...i,...i->...", xt, gx)
        # second derivatives of x are -x per block
        ub = np.stack([cb, sb, zero, zero], axis=-1)
        ut = np.stack([zero, zero, st, ct], axis=-1)
        hbb = 2.0 * (np.einsum("...i,ij,...j->...", xb, gram, xb)
                     - np.einsum("...i,...i->...", ub, gx))
        htt = 2.0 * (np.einsum("...i,ij,...j->...", xt, gram, xt)
                     - np.einsum("...i,...i->...", ut, gx))
        hbt = 2.0 * np.einsum("...i,ij,...j->...", xb, gram, xt)
        det = hbb * htt - hbt * hbt
        safe = np.abs(det) > 1e-300
        inv_det = np.where(safe, 1.0 / np.where(safe, det, 1.0), 0.0)
        step_b = (htt * gb - hbt * gt) * inv_det
        step_t = (hbb * gt - hbt * gb) * inv_det
        # cap wild steps from indefinite Hessians
        mag = np.maximum(np.abs(step_b), np.abs(step_t))
        scale = np.where(mag > 0.5, 0.5 / np.maximum(mag, 1e-300), 1.0)
        step_b = step_b * scale
        step_t = step_t * scale
        accepted = np.zeros_like(j, dtype=bool)
        for _halve in range(3):
            nb = beta - np.where(accepted, 0.0, step_b)
            nt = theta - np.where(accepted, 0.0, step_t)
            nj = cost(nb, nt)
            take = ~accepted & (nj <= j)
            beta = np.where(take, nb, beta)
            theta = np.where(take, nt, theta)
            j = np.where(take, nj, j)
            accepted |= take
            step_b = step_b * 0.5
            step_t = step_t * 0.5
    return beta, theta


def holdout_count(n: int, fraction: float) -> int:
    """Points withheld for candidate selection: max(1, floor(fraction*n)),
    shrunk so at least 3 points remain for fitting."""
    if fraction <= 0.0:
        return 0
    k = max(1, int(math.floor(fraction * n)))
    return max(0, min(k, n - 3))


_KKT_SIGNS = np.array([1.0, 1.0, -1.0])


def _kkt_polish(gb: np.ndarray, lams: np.ndarray, zs: np.ndarray, iters: int = 3):
    """Newton on the joint system [M(lam) z - b; g(z)] = 0 for all candidates.

    The companion-matrix roots of the squared constraint polynomial lose
    about half the digits, and near a chart singularity the 3x3 solve
    amplifies that error; polishing the coupled system restores the
    constraint residual to rounding level.  Updates that fail to shrink
    |g(z)| are dropped.
    """
    b = -gb[:3, 3]
    g3 = gb[:3, :3]

    def residual(lams, zs):
        m = g3 + lams[:, None, None] * np.diag(_KKT_SIGNS)
        top = np.einsum("kij,kj->ki", m, zs) - b
        cres = np.einsum("kj,j,kj->k", zs, _KKT_SIGNS, zs) - 1.0
        return m, top, cres

    m, top, cres = residual(lams, zs)
    for _ in range(iters):
        dz = zs * _KKT_SIGNS
        jac = np.zeros((len(lams), 4, 4))
        jac[:, :3, :3] = m
        jac[:, :3, 3] = dz
        jac[:, 3, :3] = 2.0 * dz
        rhs = np.concatenate([top, cres[:, None]], axis=1)
        det = np.linalg.det(jac)
        ok = np.abs(det) > 1e-300
        if not np.any(ok):
            break
        step = np.zeros_like(rhs)
        step[ok] = np.linalg.solve(jac[ok], rhs[ok][..., None])[..., 0]
        new_lams = lams - step[:, 3]
        new_zs = zs - step[:, :3]
        new_m, new_top, new_cres = residual(new_lams, new_zs)
        better = ok & (np.abs(new_cres) <= np.abs(cres)) & np.isfinite(new_cres)
        lams = np.where(better, new_lams, lams)
        zs = np.where(better[:, None], new_zs, zs)
        m, top, cres = residual(lams, zs)
    return lams, zs, np.abs(cres)


def _branch_candidates(g_fit: np.ndarray, branch: Branch, opts: SolverOptions):
    gb = _branch_gram(g_fit, branch)
    p1, p2, p3, p4 = _lambda_poly_coeffs(gb)
    q = _constraint_poly(p1, p2, p3, p4)
    try:
        roots = poly.real_roots_coeffs(q, imag_tol=opts.imag_tol)
    except InvalidInputError:
        return [], 0
    if roots.size == 0:
        return [], 0
    bvec = -gb[:3, 3]
    ms = gb[None, :3, :3] + roots[:, None, None] * np.diag(_KKT_SIGNS)
    dets = np.linalg.det(ms)
    solvable = np.abs(dets) > 1e-300
    if not np.any(solvable):
        return [], len(roots)
    lams = roots[solvable]
    rhs = np.broadcast_to(bvec, (int(solvable.sum()), 3))[..., None]
    zs = np.linalg.solve(ms[solvable], rhs)[..., 0]
    lams, zs, cres = _kkt_polish(gb, lams, zs)
    out = []
    for lam, z, cr in zip(lams, zs, cres):
        gam, dlt, eps = float(z[0]), float(z[1]), float(z[2])
        if not math.isfinite(cr) or cr > opts.constraint_tol:
            continue
        beta = math.atan2(dlt, gam)
        if branch is Branch.FIX_FOURTH:
            theta = math.atan2(eps, 1.0)
        else:
            theta = math.atan2(1.0, eps)
        out.append((lam, gam, dlt, eps, beta, theta, float(cr)))
    return out, len(roots)


def solve_optimal(points, opts: SolverOptions | None = None):
    """Minimum-cost planar pose plus diagnostics carrying every candidate.

    Raises InvalidInputError (< 3 points), DegenerateConfigurationError,
    or NoSolutionError (no usable real root on either branch).
    """
    opts = opts or SolverOptions()
    pts = as_point_array(points)
    n = pts.shape[0]
    if n < 3:
        raise InvalidInputError(f"need at least 3 correspondences, got {n}")

    k = holdout_count(n, opts.holdout_fraction)
    fit_pts = pts[: n - k] if k else pts
    hold_rows = design_rows(pts[n - k:]) if k else None

    all_rows = design_rows(pts)
    g_all = _gram(all_rows)
    g_fit = _gram(all_rows[: n - k]) if k else g_all

    d_fit = DesignColumns(gram=g_fit, n=n - k)
    if check_degenerate(d_fit, opts.degenerate_tol):
        raise DegenerateConfigurationError(
            "degenerate configuration: a design-column block is numerically zero"
        )

    raw = []
    root_counts = {}
    for branch in (Branch.FIX_FOURTH, Branch.FIX_THIRD):
        cands, count = _branch_candidates(g_fit, branch, opts)
        root_counts[branch] = count
        raw.extend((branch,) + c for c in cands)
    if not raw:
        raise NoSolutionError("no real root of the constraint polynomial on either branch")

    betas = np.array([c[5] for c in raw])
    thetas = np.array([c[6] for c in raw])
    if opts.refine:
        betas, thetas = _refine_unit_cost(g_fit, betas, thetas, opts.refine_steps)
    alphas = np.array([wrap_angle(t - b) for b, t in zip(betas, thetas)])
    costs = unit_cost(g_all, alphas, betas)

    if k:
        ab = alphas + betas
        x = np.stack([np.cos(betas), np.sin(betas), np.sin(ab), np.cos(ab)], axis=-1)
        scores = np.einsum("ni,ki,kj,nj->n", x, hold_rows, hold_rows, x)
    else:
        scores = costs

    candidates = [
        SolverCandidate(
            lam=float(c[1]),
            gamma=float(c[2]),
            delta=float(c[3]),
            epsilon=float(c[4]),
            branch=c[0],
            alpha=float(alphas[i]),
            beta=float(betas[i]),
            cost=float(costs[i]),
            constraint_residual=float(c[7]),
        )
        for i, c in enumerate(raw)
    ]

    best_score = float(np.min(scores))
    tie = best_score + COST_TIE_TOL * (1.0 + abs(best_score))
    eligible = [i for i in range(len(candidates)) if scores[i] <= tie]
    order = sorted(
        eligible,
        key=lambda i: (
            0 if candidates[i].branch is Branch.FIX_FOURTH else 1,
            abs(candidates[i].lam),
            scores[i],
            i,
        ),
    )
    chosen = candidates[order[0]]

    pose = PlanarPose(chosen.alpha, chosen.beta)
    pose = cheirality_select([pose, pose.flipped_translation()], pts)

    diag = SolveDiagnostics(
        candidates=candidates,
        root_counts=root_counts,
        branch=chosen.branch,
        cost=chosen.cost,
        n_points=n,
        holdout_count=k,
    )
    return pose, diag


def solve_linear_planar(points) -> PlanarPose:
    """DLT baseline: smallest right singular vector of A, projected onto the
    constraint set by normalizing the two sub-vectors independently."""
    pts = as_point_array(points)
    if pts.shape[0] < 3:
        raise InvalidInputError(f"need at least 3 correspondences, got {pts.shape[0]}")
    rows = design_rows(pts)
    d = DesignColumns(gram=_gram(rows), n=pts.shape[0])
    if check_degenerate(d):
        raise DegenerateConfigurationError(
            "degenerate configuration: a design-column block is numerically zero"
        )
    _, _, vh = np.linalg.svd(rows, full_matrices=False)
    x = vh[-1]
    s1 = math.hypot(x[0], x[1])
    s2 = math.hypot(x[2], x[3])
    if s1 == 0.0 or s2 == 0.0:
        raise DegenerateConfigurationError("null vector has a zero sub-vector")
    beta = math.atan2(x[1] / s1, x[0] / s1)
    theta = math.atan2(x[2] / s2, x[3] / s2)
    pose = PlanarPose(wrap_angle(theta - beta), beta)
    return cheirality_select([pose, pose.flipped_translation()], pts)
