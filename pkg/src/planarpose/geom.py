"""Core geometric types for planar camera motion.

A planar pose is the pair (alpha, beta): rotation by alpha about the Y
axis and translation along ``t = [cos(beta), 0, sin(beta)]`` expressed
in the second camera frame (``x2 = R @ x1 + s*t`` for some positive
scale ``s``).  The matching essential matrix ``E = [t]_x R`` then has
the zero pattern ``e1 = e3 = e5 = e7 = e9 = 0`` with

    e2 = -sin(beta)          e8 = cos(beta)
    e4 = sin(alpha + beta)   e6 = -cos(alpha + beta)

so the epipolar residual ``q2^T E q1`` is linear in
``[cos(beta), sin(beta), sin(alpha+beta), cos(alpha+beta)]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.fmod(a, TWO_PI)
    if w <= -math.pi:
        w += TWO_PI
    elif w > math.pi:
        w -= TWO_PI
    return w


@dataclass(frozen=True)
class Correspondence:
    """One normalized point pair; the homogeneous third coordinate is 1."""

    q1x: float
    q1y: float
    q2x: float
    q2y: float


def as_point_array(points) -> np.ndarray:
    """Accept an (n,4) array of [q1x q1y q2x q2y] rows or a Correspondence list."""
    if isinstance(points, np.ndarray):
        pts = np.asarray(points, dtype=float)
    else:
        seq = list(points)
        if seq and isinstance(seq[0], Correspondence):
            pts = np.array([[c.q1x, c.q1y, c.q2x, c.q2y] for c in seq], dtype=float)
        else:
            pts = np.asarray(seq, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.ndim != 2 or pts.shape[1] != 4:
        raise InvalidInputError(f"expected (n, 4) correspondences, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise InvalidInputError("correspondences must be finite")
    return pts


@dataclass(frozen=True)
class PlanarPose:
    """Rotation angle alpha and translation direction angle beta, radians."""

    alpha: float
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", wrap_angle(float(self.alpha)))
        object.__setattr__(self, "beta", wrap_angle(float(self.beta)))

    def rotation(self) -> np.ndarray:
        return rot_y(self.alpha)

    def translation(self) -> np.ndarray:
        return np.array([math.cos(self.beta), 0.0, math.sin(self.beta)])

    def flipped_translation(self) -> "PlanarPose":
        """The other member of the +-t pair (same rotation)."""
        return PlanarPose(self.alpha, self.beta + math.pi)


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


@dataclass(frozen=True)
class EssentialMatrix:
    """Planar essential matrix stored by its four non-zero entries.

    Row-major the full matrix is [[0, e2, 0], [e4, 0, e6], [0, e8, 0]];
    keeping only e2, e4, e6, e8 makes the zero pattern hold exactly.
    """

    e2: float
    e4: float
    e6: float
    e8: float

    def as_matrix(self) -> np.ndarray:
        return np.array(
            [[0.0, self.e2, 0.0], [self.e4, 0.0, self.e6], [0.0, self.e8, 0.0]]
        )

    def entries(self) -> list:
        """All nine entries, row-major."""
        return [0.0, self.e2, 0.0, self.e4, 0.0, self.e6, 0.0, self.e8, 0.0]

    @staticmethod
    def from_matrix(m: np.ndarray, zero_tol: float = 1e-9) -> "EssentialMatrix":
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 3):
            raise InvalidInputError("essential matrix must be 3x3")
        pattern = np.abs(np.array([m[0, 0], m[0, 2], m[1, 1], m[2, 0], m[2, 2]]))
        if np.max(pattern) > zero_tol * max(1.0, np.max(np.abs(m))):
            raise InvalidInputError("matrix does not match the planar zero pattern")
        return EssentialMatrix(m[0, 1], m[1, 0], m[1, 2], m[2, 1])


def essential_from_pose(pose: PlanarPose) -> EssentialMatrix:
    """E = [t]_x R for planar motion; e2^2 + e8^2 = e4^2 + e6^2 = 1."""
    ab = pose.alpha + pose.beta
    return EssentialMatrix(
        e2=-math.sin(pose.beta),
        e4=math.sin(ab),
        e6=-math.cos(ab),
        e8=math.cos(pose.beta),
    )


def pose_from_essential(e: EssentialMatrix) -> tuple:
    """Both sign-related pose candidates (E and -E describe the same data).

    The second candidate has beta shifted by pi with alpha unchanged.
    """
    scale = math.hypot(e.e2, e.e8)
    if scale == 0.0 or math.hypot(e.e4, e.e6) == 0.0:
        raise InvalidInputError("zero essential matrix")
    beta = math.atan2(-e.e2, e.e8)
    ab = math.atan2(e.e4, -e.e6)
    alpha = wrap_angle(ab - beta)
    first = PlanarPose(alpha, beta)
    return first, first.flipped_translation()


def epipolar_residuals(e: EssentialMatrix, points) -> np.ndarray:
    """Signed algebraic residuals q2^T E q1 for every correspondence."""
    pts = as_point_array(points)
    q1x, q1y, q2x, q2y = pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3]
    return e.e2 * q2x * q1y + e.e4 * q2y * q1x + e.e6 * q2y + e.e8 * q1y


def epipolar_residual(e: EssentialMatrix, c: Correspondence) -> float:
    return float(epipolar_residuals(e, [c])[0])


def sampson_distances(e: EssentialMatrix, points) -> np.ndarray:
    """First-order squared geometric distance to the epipolar constraint.

    r^2 / (|E q1|_{1:2}^2 + |E^T q2|_{1:2}^2); +inf when only the
    denominator vanishes, 0 when numerator and denominator both vanish.
    """
    pts = as_point_array(points)
    q1x, q1y, q2x, q2y = pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3]
    r = e.e2 * q2x * q1y + e.e4 * q2y * q1x + e.e6 * q2y + e.e8 * q1y
    # first two components of E q1 and E^T q2
    a = e.e2 * q1y
    b = e.e4 * q1x + e.e6
    c = e.e4 * q2y
    d = e.e2 * q2x + e.e8
    denom = a * a + b * b + c * c + d * d
    out = np.full(pts.shape[0], np.inf)
    zero_both = (denom == 0.0) & (r == 0.0)
    good = denom > 0.0
    out[good] = (r[good] * r[good]) / denom[good]
    out[zero_both] = 0.0
    return out


def sampson_distance(e: EssentialMatrix, c: Correspondence) -> float:
    return float(sampson_distances(e, [c])[0])


def triangulate_depths(pose: PlanarPose, points) -> tuple:
    """Midpoint-triangulation depths of every point in both cameras.

    Rays are d1 = q1 from the first camera at the origin and d2 = R^T q2
    from the second camera centered at -R^T t; only the depth signs are
    meaningful to callers.  Near-parallel rays yield NaN depths.
    """
    pts = as_point_array(points)
    R = pose.rotation()
    t = pose.translation()
    c2 = -R.T @ t
    d1 = np.column_stack([pts[:, 0], pts[:, 1], np.ones(len(pts))])
    q2 = np.column_stack([pts[:, 2], pts[:, 3], np.ones(len(pts))])
    d2 = q2 @ R  # rows are R^T q2
    a11 = np.einsum("ij,ij->i", d1, d1)
    a12 = -np.einsum("ij,ij->i", d1, d2)
    a22 = np.einsum("ij,ij->i", d2, d2)
    b1 = d1 @ c2
    b2 = -(d2 @ c2)
    det = a11 * a22 - a12 * a12
    with np.errstate(divide="ignore", invalid="ignore"):
        s1 = (b1 * a22 - b2 * a12) / det
        s2 = (a11 * b2 - a12 * b1) / det
    bad = ~np.isfinite(s1) | ~np.isfinite(s2) | (np.abs(det) <= 1e-14 * np.maximum(a11 * a22, 1e-300))
    s1 = np.where(bad, np.nan, s1)
    s2 = np.where(bad, np.nan, s2)
    # depth in camera 1 is s1*d1_z = s1; in camera 2 it is s2*(q2)_z = s2
    return s1, s2


def cheirality_counts(pose: PlanarPose, points) -> int:
    s1, s2 = triangulate_depths(pose, points)
    with np.errstate(invalid="ignore"):
        ok = (s1 > 0.0) & (s2 > 0.0)
    return int(np.count_nonzero(ok))


def cheirality_select(candidates, points) -> PlanarPose:
    """Candidate with the most points triangulating in front of both cameras.

    Ties break toward the lower mean Sampson distance, then input order.
    """
    if not candidates:
        raise InvalidInputError("no candidates")
    pts = as_point_array(points)
    best = None
    for idx, pose in enumerate(candidates):
        count = cheirality_counts(pose, pts)
        mean_sampson = float(np.mean(sampson_distances(essential_from_pose(pose), pts)))
        key = (-count, mean_sampson, idx)
        if best is None or key < best[0]:
            best = (key, pose)
    return best[1]


def fold_angle_90(deg: float) -> float:
    """Nearest modulo-90-degree representative, used on continuous paths.

    110 -> 20 and -110 -> -20; the result lies in [-45, 45].
    """
    return deg - 90.0 * round(deg / 90.0)


def _angle_error_deg(est: float, gt: float, fold_90: bool) -> float:
    if fold_90:
        est = math.radians(fold_angle_90(math.degrees(est)))
        gt = math.radians(fold_angle_90(math.degrees(gt)))
    return abs(math.degrees(wrap_angle(est - gt)))


def rotation_angular_error(alpha_est: float, alpha_gt: float, fold_90: bool = False) -> float:
    """Absolute wrapped rotation-angle difference in degrees, in [0, 180]."""
    return _angle_error_deg(alpha_est, alpha_gt, fold_90)


def translation_angular_error(
    beta_est: float, beta_gt: float, fold_90: bool = False, min_over_sign: bool = False
) -> float:
    """Absolute wrapped translation-angle difference in degrees.

    min_over_sign reports the error of the better of +-t, for callers
    that want the sign ambiguity excluded from the metric.
    """
    err = _angle_error_deg(beta_est, beta_gt, fold_90)
    if min_over_sign:
        err = min(err, _angle_error_deg(beta_est + math.pi, beta_gt, fold_90))
    return err


def rotation_error_matrices(r_est: np.ndarray, r_gt: np.ndarray) -> float:
    """Angle in degrees of r_est @ r_gt^T; handles non-planar ground truth."""
    tr = np.trace(r_est @ r_gt.T)
    return math.degrees(math.acos(min(1.0, max(-1.0, 0.5 * (tr - 1.0)))))


def translation_error_vectors(t_est: np.ndarray, t_gt: np.ndarray, min_over_sign: bool = False) -> float:
    """Angle in degrees between two translation directions."""
    a = np.asarray(t_est, dtype=float)
    b = np.asarray(t_gt, dtype=float)
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0.0:
        raise InvalidInputError("zero translation vector")
    c = float(np.dot(a, b) / denom)
    c = min(1.0, max(-1.0, c))
    ang = math.degrees(math.acos(c))
    if min_over_sign:
        ang = min(ang, 180.0 - ang)
    return ang
