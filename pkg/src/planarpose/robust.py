"""LO-RANSAC for planar relative pose.

Two-point hypotheses, squared-Sampson inlier test, and a non-minimal
optimal refit (with hold-out candidate selection) whenever a hypothesis
improves the consensus.  Sampling uses numpy's PCG64 generator seeded
from the config, so identical inputs reproduce bit-identical results.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateSampleError,
    InvalidInputError,
    NoSolutionError,
    PlanarPoseError,
    RobustFailureError,
)
from .geom import (
    Correspondence,
    PlanarPose,
    as_point_array,
    epipolar_residuals,
    essential_from_pose,
    sampson_distances,
)
from .minimal import solve_two_point
from .optimal import SolverOptions, solve_optimal, unit_cost, design_rows, _gram


@dataclass(frozen=True)
class RansacConfig:
    threshold: float = 1e-6       # squared Sampson distance, normalized units
    max_iterations: int = 1000
    confidence: float = 0.99
    seed: int = 0
    lo_enabled: bool = True
    holdout_fraction: float = 0.05
    min_inliers: int = 5

    def __post_init__(self):
        if self.threshold <= 0.0:
            raise InvalidInputError("threshold must be positive")
        if not 0.0 < self.confidence < 1.0:
            raise InvalidInputError("confidence must be in (0, 1)")
        if self.max_iterations < 1 or self.min_inliers < 1:
            raise InvalidInputError("max_iterations and min_inliers must be positive")
        if not 0.0 <= self.holdout_fraction <= 0.5:
            raise InvalidInputError("holdout_fraction must be in [0, 0.5]")


@dataclass
class RansacResult:
    pose: PlanarPose
    inlier_mask: np.ndarray
    iterations_run: int
    final_cost: float
    solver_failures: int


def select_by_holdout(candidates, holdout) -> PlanarPose:
    """Candidate minimizing the summed squared epipolar residual on the
    hold-out points; empty hold-out falls back to the in-sample cost."""
    if not candidates:
        raise InvalidInputError("no candidates")
    holdout = list(holdout) if not isinstance(holdout, np.ndarray) else holdout
    if len(holdout) == 0:
        return min(candidates, key=lambda pc: pc[1])[0]
    pts = as_point_array(holdout)
    best = None
    for idx, (pose, _cost) in enumerate(candidates):
        r = epipolar_residuals(essential_from_pose(pose), pts)
        score = float(r @ r)
        if best is None or (score, idx) < best[0]:
            best = ((score, idx), pose)
    return best[1]


def _adaptive_bound(inlier_ratio: float, confidence: float, sample_size: int = 2) -> int:
    if inlier_ratio <= 0.0:
        return 1 << 30
    p_good = inlier_ratio ** sample_size
    if p_good >= 1.0:
        return 1
    denom = math.log1p(-p_good)
    if denom == 0.0:
        return 1
    return max(1, int(math.ceil(math.log(max(1.0 - confidence, 1e-300)) / denom)))


def ransac_estimate(points, cfg: RansacConfig | None = None) -> RansacResult:
    """Seeded deterministic hypothesis loop; raises RobustFailureError when
    no model reaches cfg.min_inliers."""
    cfg = cfg or RansacConfig()
    pts = as_point_array(points)
    n = pts.shape[0]
    if n < 2:
        raise InvalidInputError(f"need at least 2 correspondences, got {n}")

    rng = np.random.default_rng(cfg.seed)
    best_pose = None
    best_mask = None
    best_count = 0
    best_score = math.inf  # sum of inlier sampson distances, for tie-breaks
    failures = 0
    iterations = 0
    max_iter = cfg.max_iterations

    def score_pose(pose):
        d = sampson_distances(essential_from_pose(pose), pts)
        mask = d < cfg.threshold
        return mask, int(np.count_nonzero(mask)), float(np.sum(d[mask]))

    def optimal_refit(mask):
        if int(np.count_nonzero(mask)) < 3:
            return None
        try:
            pose, _diag = solve_optimal(
                pts[mask], SolverOptions(holdout_fraction=cfg.holdout_fraction)
            )
            return pose
        except (PlanarPoseError, np.linalg.LinAlgError):
            return None

    while iterations < min(max_iter, cfg.max_iterations):
        iterations += 1
        idx = rng.choice(n, size=2, replace=False)
        try:
            hyps = solve_two_point(
                Correspondence(*pts[idx[0]]), Correspondence(*pts[idx[1]])
            )
        except DegenerateSampleError:
            failures += 1
            continue
        if not hyps:
            failures += 1
            continue
        improved = False
        for pose in hyps:
            mask, count, ssum = score_pose(pose)
            if count > best_count or (count == best_count and ssum < best_score):
                best_pose, best_mask = pose, mask
                best_count, best_score = count, ssum
                improved = True
        if improved and cfg.lo_enabled and best_count >= 3:
            refit = optimal_refit(best_mask)
            if refit is not None:
                mask, count, ssum = score_pose(refit)
                if count > best_count or (count == best_count and ssum < best_score):
                    best_pose, best_mask = refit, mask
                    best_count, best_score = count, ssum
        if best_count > 0:
            max_iter = min(cfg.max_iterations, _adaptive_bound(best_count / n, cfg.confidence))

    if best_pose is None or best_count < cfg.min_inliers:
        raise RobustFailureError(
            f"no hypothesis reached {cfg.min_inliers} inliers "
            f"(best {best_count} after {iterations} iterations)",
            best_inlier_count=best_count,
            iterations_run=iterations,
            solver_failures=failures,
        )

    # final polish on the accepted inlier set, kept only if not worse
    refit = optimal_refit(best_mask)
    if refit is not None:
        mask, count, ssum = score_pose(refit)
        if count > best_count or (count == best_count and ssum <= best_score):
            best_pose, best_mask = refit, mask
            best_count, best_score = count, ssum

    inlier_rows = design_rows(pts[best_mask])
    final_cost = float(unit_cost(_gram(inlier_rows), best_pose.alpha, best_pose.beta))
    return RansacResult(
        pose=best_pose,
        inlier_mask=best_mask,
        iterations_run=iterations,
        final_cost=final_cost,
        solver_failures=failures,
    )
