"""Synthetic forward-motion scenes and the benchmark protocols around them.

Scene recipe: camera 1 sits at the origin looking along +Z with image
plane parallel to XY; the relative pose (rotation alpha about Y,
translation direction beta, default 90 degrees = forward along the
optical axis) places camera 2 `baseline` units away.  3D points are
drawn uniformly from the unit ball around the origin and resampled
until they project in front of and inside both images; zero-mean
Gaussian pixel noise and uniform in-image outliers are then applied.
A non-zero hill steepness pitches camera 2 about X and offsets its Y
coordinate by baseline*tan(steepness), breaking planarity.

All randomness derives from numpy SeedSequence streams, so every scene
and every sweep is reproducible from its seed.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationError, InvalidInputError, PlanarPoseError
from .geom import (
    PlanarPose,
    rot_x,
    rot_y,
    rotation_error_matrices,
    translation_error_vectors,
)
from .optimal import SolverOptions, solve_linear_planar, solve_optimal

RESAMPLE_CHUNKS = 400


@dataclass(frozen=True)
class SceneConfig:
    num_points: int
    focal: float = 1000.0
    principal_point: tuple = (500.0, 500.0)
    baseline: float = 10.0
    max_rotation_deg: float = 5.0
    noise_sigma_px: float = 0.0
    hill_steepness_deg: float = 0.0
    outlier_fraction: float = 0.0
    seed: int = 0
    # fixed values override the random draw / forward default
    rotation_deg: float | None = None
    translation_angle_deg: float = 90.0

    def __post_init__(self):
        if self.focal <= 0.0:
            raise InvalidInputError("focal length must be positive")
        if self.num_points < 2:
            raise InvalidInputError("need at least 2 points")
        if not 0.0 <= self.outlier_fraction < 1.0:
            raise InvalidInputError("outlier_fraction must be in [0, 1)")


@dataclass
class SyntheticScene:
    correspondences: np.ndarray   # (n, 4) normalized [q1x q1y q2x q2y]
    pixel_points: np.ndarray      # (n, 4) noisy pixels [p1x p1y p2x p2y]
    gt_pose: PlanarPose           # planar part; exact when hill == 0
    inlier_labels: np.ndarray     # bool, False where camera-2 point was replaced
    gt_rotation: np.ndarray       # full 3x3, equals RotY(alpha) when hill == 0
    gt_translation: np.ndarray    # unit 3-vector in the camera-2 frame
    points3d: np.ndarray          # (n, 3) world points before noise


def derive_seed(*keys) -> int:
    """Stable 64-bit seed from a tuple of integers."""
    lo, hi = np.random.SeedSequence([int(k) for k in keys]).generate_state(2)
    return int(lo) | (int(hi) << 32)


def generate_scene(cfg: SceneConfig) -> SyntheticScene:
    rng = np.random.default_rng(cfg.seed)
    mr = math.radians(cfg.max_rotation_deg)
    if cfg.rotation_deg is None:
        alpha = float(rng.uniform(-mr, mr))
    else:
        alpha = math.radians(cfg.rotation_deg)
    beta = math.radians(cfg.translation_angle_deg)
    hill = math.radians(cfg.hill_steepness_deg)

    r_planar = rot_y(alpha)
    t_unit = np.array([math.cos(beta), 0.0, math.sin(beta)])
    c2 = -cfg.baseline * (r_planar.T @ t_unit)
    r2 = r_planar
    if hill != 0.0:
        r2 = rot_x(hill) @ r_planar
        c2 = c2.copy()
        c2[1] = cfg.baseline * math.tan(hill)
    t_full = -r2 @ c2

    f = cfg.focal
    cx, cy = cfg.principal_point
    width, height = 2.0 * cx, 2.0 * cy

    n = cfg.num_points
    pts3d = np.empty((0, 3))
    for _ in range(RESAMPLE_CHUNKS):
        need = n - pts3d.shape[0]
        if need <= 0:
            break
        cand = rng.uniform(-1.0, 1.0, size=(max(4 * need, 256), 3))
        cand = cand[np.einsum("ij,ij->i", cand, cand) <= 1.0]
        z1 = cand[:, 2]
        ok = z1 > 1e-6
        x2 = cand @ r2.T + t_full
        ok &= x2[:, 2] > 1e-6
        with np.errstate(divide="ignore", invalid="ignore"):
            p1 = cand[:, :2] / z1[:, None] * f + (cx, cy)
            p2 = x2[:, :2] / x2[:, 2:3] * f + (cx, cy)
        ok &= (p1[:, 0] >= 0) & (p1[:, 0] <= width) & (p1[:, 1] >= 0) & (p1[:, 1] <= height)
        ok &= (p2[:, 0] >= 0) & (p2[:, 0] <= width) & (p2[:, 1] >= 0) & (p2[:, 1] <= height)
        pts3d = np.vstack([pts3d, cand[ok][:need]])
    if pts3d.shape[0] < n:
        raise GenerationError(
            f"could not place {n} visible points (got {pts3d.shape[0]}); "
            "check baseline/rotation/hill configuration"
        )

    x2 = pts3d @ r2.T + t_full
    p1 = pts3d[:, :2] / pts3d[:, 2:3] * f + (cx, cy)
    p2 = x2[:, :2] / x2[:, 2:3] * f + (cx, cy)
    if cfg.noise_sigma_px > 0.0:
        p1 = p1 + rng.normal(0.0, cfg.noise_sigma_px, size=p1.shape)
        p2 = p2 + rng.normal(0.0, cfg.noise_sigma_px, size=p2.shape)

    labels = np.ones(n, dtype=bool)
    n_out = int(math.floor(cfg.outlier_fraction * n))
    if n_out > 0:
        idx = rng.choice(n, size=n_out, replace=False)
        p2[idx, 0] = rng.uniform(0.0, width, size=n_out)
        p2[idx, 1] = rng.uniform(0.0, height, size=n_out)
        labels[idx] = False

    q1 = (p1 - (cx, cy)) / f
    q2 = (p2 - (cx, cy)) / f
    return SyntheticScene(
        correspondences=np.hstack([q1, q2]),
        pixel_points=np.hstack([p1, p2]),
        gt_pose=PlanarPose(alpha, beta),
        inlier_labels=labels,
        gt_rotation=r2,
        gt_translation=t_full / np.linalg.norm(t_full),
        points3d=pts3d,
    )


@dataclass
class SweepRow:
    method: str
    n: int
    sigma: float
    steepness: float
    trial_count: int
    rot_err_med_deg: float
    rot_err_mean_deg: float
    trans_err_med_deg: float
    trans_err_mean_deg: float
    time_us_med: float
    failures: int = 0


def _estimate(method: str, scene: SyntheticScene):
    if method == "optimal":
        pose, _diag = solve_optimal(scene.correspondences, SolverOptions())
        return pose
    if method == "linear":
        return solve_linear_planar(scene.correspondences)
    raise InvalidInputError(f"unknown method {method!r}")


def _pose_errors(pose: PlanarPose, scene: SyntheticScene):
    rot = rotation_error_matrices(pose.rotation(), scene.gt_rotation)
    trans = translation_error_vectors(pose.translation(), scene.gt_translation)
    return rot, trans


def _sweep_cell(method, n, sigma, steepness, trials, seed, cell_key):
    rot = np.full(trials, np.nan)
    trans = np.full(trials, np.nan)
    times = np.full(trials, np.nan)
    failures = 0
    for trial in range(trials):
        cfg = SceneConfig(
            num_points=n,
            noise_sigma_px=sigma,
            hill_steepness_deg=steepness,
            seed=derive_seed(seed, *cell_key, trial),
        )
        scene = generate_scene(cfg)
        t0 = time.perf_counter()
        try:
            pose = _estimate(method, scene)
        except PlanarPoseError:
            failures += 1
            continue
        times[trial] = (time.perf_counter() - t0) * 1e6
        rot[trial], trans[trial] = _pose_errors(pose, scene)
    return SweepRow(
        method=method,
        n=n,
        sigma=sigma,
        steepness=steepness,
        trial_count=trials,
        rot_err_med_deg=float(np.nanmedian(rot)),
        rot_err_mean_deg=float(np.nanmean(rot)),
        trans_err_med_deg=float(np.nanmedian(trans)),
        trans_err_mean_deg=float(np.nanmean(trans)),
        time_us_med=float(np.nanmedian(times)),
        failures=failures,
    )


def run_noise_sweep(point_counts, sigmas, trials, seed, methods=("optimal", "linear")):
    """Angular errors vs point count for each image-noise level."""
    rows = []
    for i_s, sigma in enumerate(sigmas):
        for i_n, n in enumerate(point_counts):
            for method in methods:
                rows.append(
                    _sweep_cell(method, int(n), float(sigma), 0.0, trials, seed, (0, i_s, i_n))
                )
    return rows


def run_hill_sweep(steepness_deg, point_counts, trials, seed,
                   noise_sigma_px=0.5, methods=("optimal", "linear")):
    """Translation error vs point count when planarity is violated."""
    rows = []
    for i_h, steep in enumerate(steepness_deg):
        for i_n, n in enumerate(point_counts):
            for method in methods:
                rows.append(
                    _sweep_cell(
                        method, int(n), float(noise_sigma_px), float(steep),
                        trials, seed, (1, i_h, i_n),
                    )
                )
    return rows


@dataclass
class StabilityResult:
    method: str
    bin_edges: np.ndarray
    counts: np.ndarray
    log10_errors: np.ndarray


def run_stability_test(trials, seed, n_range=(5, 200), methods=("optimal",),
                       bin_edges=None):
    """Noise-free runs with N drawn uniformly from n_range; histograms the
    log10 rotation error in degrees (exact zeros clip to the lowest bin)."""
    if bin_edges is None:
        bin_edges = np.arange(-16.0, 4.0 + 1e-9, 0.5)
    results = []
    for method in methods:
        errs = np.empty(trials)
        for trial in range(trials):
            trial_seed = derive_seed(seed, 2, trial)
            n = int(np.random.default_rng(trial_seed).integers(n_range[0], n_range[1] + 1))
            scene = generate_scene(SceneConfig(num_points=n, seed=derive_seed(seed, 3, trial)))
            pose = _estimate(method, scene)
            rot, _ = _pose_errors(pose, scene)
            errs[trial] = math.log10(rot) if rot > 0.0 else bin_edges[0]
        clipped = np.clip(errs, bin_edges[0], bin_edges[-1])
        counts, _ = np.histogram(clipped, bins=bin_edges)
        results.append(StabilityResult(method, bin_edges, counts, errs))
    return results
