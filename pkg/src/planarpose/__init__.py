"""Planar relative pose estimation from point correspondences.

Rotation about the vertical axis (angle alpha) and translation
direction in the motion plane (angle beta) are recovered from
normalized correspondences: optimally in the algebraic least-squares
sense from N >= 3 points, minimally from 2 points, and robustly with
LO-RANSAC.  A synthetic benchmark harness and a CLI sit on top.
"""
from .errors import (
    DegenerateConfigurationError,
    DegenerateSampleError,
    GenerationError,
    InvalidInputError,
    NoSolutionError,
    ParseError,
    PlanarPoseError,
    RobustFailureError,
)
from .geom import (
    Correspondence,
    EssentialMatrix,
    PlanarPose,
    cheirality_select,
    epipolar_residual,
    epipolar_residuals,
    essential_from_pose,
    fold_angle_90,
    pose_from_essential,
    rotation_angular_error,
    rotation_error_matrices,
    sampson_distance,
    sampson_distances,
    translation_angular_error,
    translation_error_vectors,
    wrap_angle,
)
from .minimal import solve_two_point
from .optimal import (
    Branch,
    DesignColumns,
    SolveDiagnostics,
    SolverCandidate,
    SolverOptions,
    build_design,
    build_lambda_polynomials,
    check_degenerate,
    solve_linear_planar,
    solve_optimal,
    unit_cost,
)
from .poly import Polynomial, poly_mul, poly_square, real_roots
from .robust import RansacConfig, RansacResult, ransac_estimate, select_by_holdout
from .synth import (
    SceneConfig,
    StabilityResult,
    SweepRow,
    SyntheticScene,
    generate_scene,
    run_hill_sweep,
    run_noise_sweep,
    run_stability_test,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
