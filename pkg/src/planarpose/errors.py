"""Exception hierarchy shared across the solvers and the CLI."""


class PlanarPoseError(Exception):
    """Base class for all errors raised by this package."""

    code = "internal"


class InvalidInputError(PlanarPoseError):
    """Malformed or insufficient input (too few points, bad polynomial, ...)."""

    code = "invalid_input"


class ParseError(PlanarPoseError):
    """Unreadable input file (CSV/JSON structure, missing fields, ...)."""

    code = "parse"


class DegenerateConfigurationError(PlanarPoseError):
    """One column block of the design matrix is numerically zero.

    Happens exactly when the second coordinates of all correspondences
    vanish, making the two angles unobservable.
    """

    code = "degenerate"


class DegenerateSampleError(PlanarPoseError):
    """A minimal sample whose constraint rows are linearly dependent."""

    code = "degenerate_sample"


class NoSolutionError(PlanarPoseError):
    """The constraint polynomial has no real root on either branch.

    Theoretically excluded for a valid minimum on a compact constraint
    set, but reachable under severe rounding; robust estimation treats
    it as a failed hypothesis.
    """

    code = "no_solution"


class RobustFailureError(PlanarPoseError):
    """RANSAC could not reach the configured inlier count."""

    code = "robust_failure"

    def __init__(self, message, best_inlier_count=0, iterations_run=0, solver_failures=0):
        super().__init__(message)
        self.best_inlier_count = best_inlier_count
        self.iterations_run = iterations_run
        self.solver_failures = solver_failures


class GenerationError(PlanarPoseError):
    """Synthetic scene generation exhausted its resampling budget."""

    code = "generation"
