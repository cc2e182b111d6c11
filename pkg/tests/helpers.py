"""Independent oracles shared by the tests.

Nothing here reuses the solver code paths: correspondences come from
explicit pinhole projection, residuals from dense 3x3 matrix products,
and the reference optimum from a grid scan refined by golden-section
bisection on each axis.
"""
import math

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def rot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def dense_essential(alpha, beta):
    """E = [t]_x R computed with explicit matrix products."""
    t = np.array([math.cos(beta), 0.0, math.sin(beta)])
    tx = np.array([[0.0, -t[2], 0.0], [t[2], 0.0, -t[0]], [0.0, t[0], 0.0]])
    return tx @ rot_y(alpha)


def dense_residuals(alpha, beta, points):
    """q2^T E q1 via full 3-vectors and the dense essential matrix."""
    e = dense_essential(alpha, beta)
    pts = np.asarray(points, dtype=float)
    q1 = np.column_stack([pts[:, 0], pts[:, 1], np.ones(len(pts))])
    q2 = np.column_stack([pts[:, 2], pts[:, 3], np.ones(len(pts))])
    return np.einsum("ni,ij,nj->n", q2, e, q1)


def exact_correspondences(alpha, beta, n, rng, noise=0.0, depth=(1.0, 5.0),
                          spread=0.5, baseline=(0.5, 2.0), budget=20_000):
    """Noiseless (or noisy) correspondences for an arbitrary pose.

    Points are built in camera 1 (q1 free in a square, depth free) and
    projected into camera 2 with x2 = R x1 + s*t, resampling until the
    depth in camera 2 is positive.  No image-bound checks.  Extreme
    rotation/translation combinations admit no such points; those
    exhaust the budget and raise RuntimeError.
    """
    r = rot_y(alpha)
    t = np.array([math.cos(beta), 0.0, math.sin(beta)])
    rows = []
    for _ in range(budget):
        if len(rows) == n:
            break
        q1 = rng.uniform(-spread, spread, 2)
        z = rng.uniform(*depth)
        x1 = np.array([q1[0] * z, q1[1] * z, z])
        x2 = r @ x1 + t * rng.uniform(*baseline)
        if x2[2] < 0.1:
            continue
        rows.append([q1[0], q1[1], x2[0] / x2[2], x2[1] / x2[2]])
    if len(rows) < n:
        raise RuntimeError(f"pose ({alpha:.2f}, {beta:.2f}) admits no visible points")
    pts = np.asarray(rows)
    if noise > 0.0:
        pts = pts + rng.normal(0.0, noise, pts.shape)
    return pts


def sample_exact_problem(rng, n, alpha_range=(-1.5, 1.5), noise=0.0):
    """(alpha, beta, points) for a random feasible pose; retries infeasible draws."""
    while True:
        alpha = float(rng.uniform(*alpha_range))
        beta = float(rng.uniform(-math.pi, math.pi))
        try:
            pts = exact_correspondences(alpha, beta, n, rng, noise=noise)
        except RuntimeError:
            continue
        return alpha, beta, pts


def cost_function(points):
    """Callable J(alpha, beta): sum of squared dense residuals."""
    pts = np.asarray(points, dtype=float)

    def j(alpha, beta):
        r = dense_residuals(alpha, beta, pts)
        return float(r @ r)

    return j


def _golden_axis(f, lo, hi, tol=1e-13, iters=200):
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if abs(b - a) < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def grid_search_cost(points, step_deg=0.05, refine_rounds=6):
    """Reference minimum of the unit-form cost over (alpha, beta).

    Full grid at step_deg on both angles (evaluated through the Gram
    matrix of dense design rows), then golden-section bisection on each
    axis in turn around the best grid cell.
    """
    pts = np.asarray(points, dtype=float)
    q1x, q1y, q2x, q2y = pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3]
    a_mat = np.column_stack([q1y, -q2x * q1y, q2y * q1x, -q2y])
    gram = a_mat.T @ a_mat

    m = int(round(360.0 / step_deg))
    grid = np.radians(np.arange(m) * step_deg - 180.0)
    u = np.stack([np.cos(grid), np.sin(grid)], axis=1)          # beta block
    w = np.stack([np.sin(grid), np.cos(grid)], axis=1)          # theta block
    ju = np.einsum("bi,ij,bj->b", u, gram[:2, :2], u)
    jw = np.einsum("bi,ij,bj->b", w, gram[2:, 2:], w)
    cross = 2.0 * u @ gram[:2, 2:]                              # (m, 2)
    best = (math.inf, 0, 0)
    chunk = 512
    for s in range(0, m, chunk):
        block = ju[s:s + chunk, None] + cross[s:s + chunk] @ w.T + jw[None, :]
        i, j = np.unravel_index(np.argmin(block), block.shape)
        val = float(block[i, j])
        if val < best[0]:
            best = (val, s + i, j)
    _, ib, it = best
    beta, theta = float(grid[ib]), float(grid[it])

    def j_bt(b, t):
        x = np.array([math.cos(b), math.sin(b), math.sin(t), math.cos(t)])
        return float(x @ gram @ x)

    h = math.radians(step_deg)
    for _ in range(refine_rounds):
        beta = _golden_axis(lambda b: j_bt(b, theta), beta - h, beta + h)
        theta = _golden_axis(lambda t: j_bt(beta, t), theta - h, theta + h)
        h *= 0.35
    return j_bt(beta, theta), beta, theta


def angle_diff_deg(a, b):
    """Absolute wrapped difference in degrees."""
    return abs(math.degrees(math.atan2(math.sin(a - b), math.cos(a - b))))
