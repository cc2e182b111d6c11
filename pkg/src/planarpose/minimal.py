"""Two-point minimal solver for planar motion, used to seed RANSAC.

Two correspondences give two linear constraints on
``x = [cos(b), sin(b), sin(a+b), cos(a+b)]``.  The solution lies in the
2-dimensional null space ``x = u*n1 + v*n2``; equal sub-vector lengths
make a homogeneous quadratic in (u, v) with at most two real ratio
solutions, each of which yields a pose plus its +-t twin.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateSampleError
from .geom import Correspondence, PlanarPose, as_point_array, wrap_angle
from .optimal import design_rows

RANK_TOL = 1e-10


def solve_two_point(c1: Correspondence, c2: Correspondence) -> list:
    """All planar poses consistent with both correspondences (<= 4 with +-t).

    Raises DegenerateSampleError when the two constraint rows are
    linearly dependent or the length constraint holds identically on
    the null space.
    """
    pts = as_point_array([c1, c2])
    rows = design_rows(pts)
    u_svd, s, vh = np.linalg.svd(rows)
    if s[0] == 0.0 or s[1] <= RANK_TOL * s[0]:
        raise DegenerateSampleError("constraint rows are linearly dependent")
    n1, n2 = vh[2], vh[3]

    # (u*n1 + v*n2) must have equal sub-vector lengths: quadratic in (u,v)
    dmat = np.diag([1.0, 1.0, -1.0, -1.0])
    qa = float(n1 @ dmat @ n1)
    qb = float(n1 @ dmat @ n2)
    qc = float(n2 @ dmat @ n2)
    scale = max(abs(qa), abs(qb), abs(qc))
    if scale <= 1e-14:
        raise DegenerateSampleError("length constraint is identically satisfied")
    qa, qb, qc = qa / scale, qb / scale, qc / scale

    ratios = []  # (u, v) pairs
    if abs(qa) <= 1e-14:
        ratios.append((1.0, 0.0))
        if abs(qb) > 1e-14:
            ratios.append((-qc / (2.0 * qb), 1.0))
    else:
        disc = qb * qb - qa * qc
        if disc >= 0.0:
            root = math.sqrt(disc)
            # stable quadratic formula: avoid cancellation in -b +- sqrt
            if qb >= 0.0:
                big = -(qb + root)
            else:
                big = -(qb - root)
            ratios.append((big / qa, 1.0))
            if root > 0.0:
                if abs(big) > 1e-300:
                    ratios.append((qc / big, 1.0))
                else:
                    ratios.append((0.0, 1.0))

    poses = []
    for u, v in ratios:
        x = u * n1 + v * n2
        s1 = math.hypot(x[0], x[1])
        s2 = math.hypot(x[2], x[3])
        if s1 <= 1e-12 * max(s2, 1e-300) or s2 <= 1e-12 * max(s1, 1e-300):
            continue
        beta = math.atan2(x[1] / s1, x[0] / s1)
        theta = math.atan2(x[2] / s2, x[3] / s2)
        pose = PlanarPose(wrap_angle(theta - beta), beta)
        poses.append(pose)
        poses.append(pose.flipped_translation())
    return poses
