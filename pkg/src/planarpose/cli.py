"""planar-pose command line interface.

Subcommands: solve (one pose from a correspondence CSV), bench
(noise/hill/stability protocols as CSV), trajectory (per-pair robust
poses plus a concatenated 2D path), synth (write a synthetic
correspondence CSV fixture).

Angles are reported in degrees everywhere.  Failures print a JSON
object ``{"code": ..., "message": ...}`` on stderr; exit codes are
0 ok, 2 parse, 3 degenerate, 4 robust failure, 5 internal.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import io as pio
from .errors import (
    DegenerateConfigurationError,
    DegenerateSampleError,
    InvalidInputError,
    ParseError,
    PlanarPoseError,
    RobustFailureError,
)
from .geom import (
    PlanarPose,
    essential_from_pose,
    fold_angle_90,
    rotation_angular_error,
    translation_angular_error,
)
from .optimal import SolverOptions, solve_linear_planar, solve_optimal, unit_cost, design_rows, _gram
from .robust import RansacConfig, ransac_estimate
from .synth import SceneConfig, generate_scene, run_hill_sweep, run_noise_sweep, run_stability_test

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_DEGENERATE = 3
EXIT_ROBUST = 4
EXIT_INTERNAL = 5

BENCH_HEADER = [
    "method", "N", "sigma", "steepness", "trial_count",
    "rot_err_med_deg", "rot_err_mean_deg", "trans_err_med_deg",
    "trans_err_mean_deg", "time_us_med",
]


def _int_list(text):
    return [int(t) for t in text.split(",") if t.strip()]


def _float_list(text):
    return [float(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="planar-pose",
                                 description="Planar relative pose estimation")
    sub = ap.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="estimate one pose from a correspondence CSV")
    p_solve.add_argument("input", help="correspondence CSV (q1x,... normalized or p1x,... pixels)")
    p_solve.add_argument("--method", choices=["optimal", "linear", "ransac"], default="optimal")
    p_solve.add_argument("--calib", help="calibration JSON, required for pixel input")
    p_solve.add_argument("--holdout", type=float, default=0.0,
                         help="hold-out fraction for candidate selection (optimal)")
    p_solve.add_argument("--seed", type=int, default=0)
    p_solve.add_argument("--threshold", type=float, default=1e-6,
                         help="squared Sampson inlier threshold (ransac)")
    p_solve.add_argument("--max-iterations", type=int, default=1000)
    p_solve.add_argument("--min-inliers", type=int, default=5)
    p_solve.add_argument("--confidence", type=float, default=0.99)

    p_bench = sub.add_parser("bench", help="synthetic benchmark protocols, CSV on stdout")
    bench_sub = p_bench.add_subparsers(dest="protocol", required=True)

    p_noise = bench_sub.add_parser("noise", help="angular error vs N per image noise sigma")
    p_noise.add_argument("--points", type=_int_list, default=[10, 20, 50, 100, 200, 1000])
    p_noise.add_argument("--sigmas", type=_float_list, default=[0.5, 1.0, 2.0])
    p_noise.add_argument("--trials", type=int, default=100)
    p_noise.add_argument("--seed", type=int, default=0)

    p_hill = bench_sub.add_parser("hill", help="translation error vs N under planarity violation")
    p_hill.add_argument("--points", type=_int_list, default=[10, 50, 200])
    p_hill.add_argument("--steepness", type=_float_list, default=[1.0, 3.0])
    p_hill.add_argument("--sigma", type=float, default=0.5)
    p_hill.add_argument("--trials", type=int, default=100)
    p_hill.add_argument("--seed", type=int, default=0)

    p_stab = bench_sub.add_parser("stability", help="log10 rotation-error histogram, noise-free")
    p_stab.add_argument("--trials", type=int, default=1000)
    p_stab.add_argument("--seed", type=int, default=0)

    p_traj = sub.add_parser("trajectory", help="robust per-pair poses and concatenated path")
    p_traj.add_argument("pairs", help="JSONL pair records")
    p_traj.add_argument("--calib", help="calibration JSON; treat pair points as pixels")
    p_traj.add_argument("--seed", type=int, default=0)
    p_traj.add_argument("--threshold", type=float, default=1e-6)
    p_traj.add_argument("--max-iterations", type=int, default=1000)
    p_traj.add_argument("--min-inliers", type=int, default=5)
    p_traj.add_argument("--holdout", type=float, default=0.05)
    p_traj.add_argument("--continuous-path", action="store_true",
                        help="fold reported angles to the nearest modulo-90 representative")
    p_traj.add_argument("--min-over-sign", action="store_true",
                        help="report translation error of the better of +-t")
    p_traj.add_argument("--errors-out", help="write the error CDF CSV here")

    p_synth = sub.add_parser("synth", help="write a synthetic correspondence CSV")
    p_synth.add_argument("--alpha-deg", type=float, default=0.0)
    p_synth.add_argument("--beta-deg", type=float, default=90.0)
    p_synth.add_argument("--points", type=int, default=100)
    p_synth.add_argument("--noise-sigma", type=float, default=0.0)
    p_synth.add_argument("--outlier-fraction", type=float, default=0.0)
    p_synth.add_argument("--hill", type=float, default=0.0)
    p_synth.add_argument("--baseline", type=float, default=10.0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--pixels", action="store_true",
                         help="emit pixel coordinates instead of normalized")
    return ap


def _load_points(path, calib_path):
    points, kind = pio.read_correspondences(path)
    if pio.kind_requires_calibration(kind):
        if not calib_path:
            raise ParseError("pixel input requires --calib")
        cam1, cam2 = pio.load_calibration(calib_path)
        points = pio.normalize_points(points, cam1, cam2)
    return points


def cmd_solve(args, out) -> int:
    points = _load_points(args.input, args.calib)
    result = {"alpha_deg": None, "beta_deg": None, "essential": None,
              "cost": None, "candidates_evaluated": None, "branch": None}
    if args.method == "optimal":
        pose, diag = solve_optimal(points, SolverOptions(holdout_fraction=args.holdout))
        result["cost"] = diag.cost
        result["candidates_evaluated"] = len(diag.candidates)
        result["branch"] = diag.branch.value
    elif args.method == "linear":
        pose = solve_linear_planar(points)
        result["cost"] = float(unit_cost(_gram(design_rows(points)), pose.alpha, pose.beta))
        result["candidates_evaluated"] = 1
    else:
        cfg = RansacConfig(
            threshold=args.threshold,
            max_iterations=args.max_iterations,
            seed=args.seed,
            holdout_fraction=args.holdout,
            min_inliers=args.min_inliers,
            confidence=args.confidence,
        )
        rr = ransac_estimate(points, cfg)
        pose = rr.pose
        result["cost"] = rr.final_cost
        result["candidates_evaluated"] = rr.iterations_run
        result["inliers"] = [bool(b) for b in rr.inlier_mask]
    result["alpha_deg"] = math.degrees(pose.alpha)
    result["beta_deg"] = math.degrees(pose.beta)
    result["essential"] = essential_from_pose(pose).entries()
    json.dump(result, out)
    out.write("\n")
    return EXIT_OK


def _bench_rows(rows):
    for r in rows:
        yield [r.method, r.n, r.sigma, r.steepness, r.trial_count,
               r.rot_err_med_deg, r.rot_err_mean_deg,
               r.trans_err_med_deg, r.trans_err_mean_deg, r.time_us_med]


def cmd_bench(args, out) -> int:
    if args.protocol == "noise":
        rows = run_noise_sweep(args.points, args.sigmas, args.trials, args.seed)
        pio.write_csv(out, BENCH_HEADER, _bench_rows(rows))
    elif args.protocol == "hill":
        rows = run_hill_sweep(args.steepness, args.points, args.trials, args.seed,
                              noise_sigma_px=args.sigma)
        pio.write_csv(out, BENCH_HEADER, _bench_rows(rows))
    else:
        results = run_stability_test(args.trials, args.seed, methods=("optimal", "linear"))
        rows = []
        for res in results:
            for lo, hi, count in zip(res.bin_edges[:-1], res.bin_edges[1:], res.counts):
                rows.append([res.method, lo, hi, int(count)])
        pio.write_csv(out, ["method", "bin_log10_lo", "bin_log10_hi", "count"], rows)
    return EXIT_OK


def cmd_trajectory(args, out) -> int:
    records = pio.read_pairs_jsonl(args.pairs)
    cams = pio.load_calibration(args.calib) if args.calib else None
    cfg = RansacConfig(
        threshold=args.threshold,
        max_iterations=args.max_iterations,
        seed=args.seed,
        holdout_fraction=args.holdout,
        min_inliers=args.min_inliers,
    )
    heading = 0.0           # cumulative rotation, degrees
    pos = np.zeros(2)       # (x, z), unit-length step per pair
    have_gt = any(rec.gt is not None for rec in records)
    header = ["pair_id", "status", "n_points", "alpha_deg", "beta_deg", "n_inliers",
              "cost", "heading_deg", "pos_x", "pos_z"]
    if have_gt:
        header += ["rot_err_deg", "trans_err_deg"]
    rows = []
    rot_errs, trans_errs = [], []
    for rec in records:
        points = pio.normalize_points(rec.points, *cams) if cams else rec.points
        try:
            rr = ransac_estimate(points, cfg)
        except (PlanarPoseError, np.linalg.LinAlgError) as exc:
            row = [rec.pair_id, f"failed:{getattr(exc, 'code', 'internal')}",
                   len(points), "", "", "", "", pio.format_float(heading),
                   pio.format_float(pos[0]), pio.format_float(pos[1])]
            if have_gt:
                row += ["", ""]
            rows.append(row)
            continue
        alpha_deg = math.degrees(rr.pose.alpha)
        beta_deg = math.degrees(rr.pose.beta)
        if args.continuous_path:
            alpha_deg = fold_angle_90(alpha_deg)
            beta_deg_step = fold_angle_90(beta_deg - 90.0) + 90.0
        else:
            beta_deg_step = beta_deg
        heading += alpha_deg
        step_dir = math.radians(heading + beta_deg_step - 90.0)
        pos = pos + np.array([math.cos(step_dir), math.sin(step_dir)])
        row = [rec.pair_id, "ok", len(points), alpha_deg, beta_deg,
               int(np.count_nonzero(rr.inlier_mask)), rr.final_cost,
               heading, pos[0], pos[1]]
        if have_gt:
            if rec.gt is not None:
                re = rotation_angular_error(rr.pose.alpha, rec.gt.alpha,
                                            fold_90=args.continuous_path)
                te = translation_angular_error(rr.pose.beta, rec.gt.beta,
                                               fold_90=args.continuous_path,
                                               min_over_sign=args.min_over_sign)
                rot_errs.append(re)
                trans_errs.append(te)
                row += [re, te]
            else:
                row += ["", ""]
        rows.append(row)
    pio.write_csv(out, header, rows)
    if args.errors_out and (rot_errs or trans_errs):
        with open(args.errors_out, "w", encoding="utf-8", newline="") as fh:
            cdf_rows = []
            for metric, errs in (("rotation", rot_errs), ("translation", trans_errs)):
                for i, e in enumerate(sorted(errs), start=1):
                    cdf_rows.append([metric, e, i / len(errs)])
            pio.write_csv(fh, ["metric", "error_deg", "cum_fraction"], cdf_rows)
    return EXIT_OK


def cmd_synth(args, out) -> int:
    cfg = SceneConfig(
        num_points=args.points,
        noise_sigma_px=args.noise_sigma,
        outlier_fraction=args.outlier_fraction,
        hill_steepness_deg=args.hill,
        baseline=args.baseline,
        seed=args.seed,
        rotation_deg=args.alpha_deg,
        translation_angle_deg=args.beta_deg,
    )
    scene = generate_scene(cfg)
    if args.pixels:
        pio.write_correspondences(out, scene.pixel_points, kind="pixel")
    else:
        pio.write_correspondences(out, scene.correspondences, kind="normalized")
    return EXIT_OK


_ERROR_EXITS = (
    ((ParseError, InvalidInputError), EXIT_PARSE),
    ((DegenerateConfigurationError, DegenerateSampleError), EXIT_DEGENERATE),
    (RobustFailureError, EXIT_ROBUST),
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = sys.stdout
    try:
        if args.command == "solve":
            return cmd_solve(args, out)
        if args.command == "bench":
            return cmd_bench(args, out)
        if args.command == "trajectory":
            return cmd_trajectory(args, out)
        return cmd_synth(args, out)
    except PlanarPoseError as exc:
        code = getattr(exc, "code", "internal")
        json.dump({"code": code, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        for types, exit_code in _ERROR_EXITS:
            if isinstance(exc, types):
                return exit_code
        return EXIT_INTERNAL
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
