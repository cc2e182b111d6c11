"""Dense univariate real polynomials and real root extraction.

Coefficients are stored low-to-high: ``coeffs[i]`` multiplies ``x**i``.
Root finding goes through the companion matrix of the monic
normalization followed by two Newton polishing iterations on the
original polynomial, which is accurate enough for the degree-6
constraint polynomials this package produces.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

# Trailing coefficients below TRIM_REL * max|coeff| are treated as zero.
TRIM_REL = 1e-13
DEFAULT_IMAG_TOL = 1e-8
ROOT_MERGE_SPACING = 1e-10


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial with dense coefficients, index i -> x**i."""

    coeffs: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if c.size == 0:
            raise InvalidInputError("polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", c)

    def degree(self) -> int:
        """Largest index with a non-negligible coefficient after trimming."""
        return trim_coeffs(self.coeffs).size - 1

    def trimmed(self) -> "Polynomial":
        return Polynomial(trim_coeffs(self.coeffs))

    def __call__(self, x):
        return np.polyval(self.coeffs[::-1], x)

    def derivative(self) -> "Polynomial":
        c = self.coeffs
        if c.size == 1:
            return Polynomial(np.zeros(1))
        return Polynomial(c[1:] * np.arange(1, c.size))


def trim_coeffs(coeffs: np.ndarray) -> np.ndarray:
    """Drop trailing coefficients that are negligible relative to the largest."""
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return c[:1]
    keep = np.nonzero(np.abs(c) > TRIM_REL * scale)[0]
    if keep.size == 0:
        return c[:1]
    return c[: keep[-1] + 1]


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    """Coefficient convolution; degree adds when leading coefficients are non-zero."""
    return Polynomial(np.convolve(p.coeffs, q.coeffs))


def poly_square(p: Polynomial) -> Polynomial:
    """Product of a polynomial with itself (degree doubles)."""
    return poly_mul(p, p)


def real_roots_coeffs(coeffs: np.ndarray, imag_tol: float = DEFAULT_IMAG_TOL) -> np.ndarray:
    """Real roots of a coefficient array (low-to-high), sorted ascending.

    Complex pairs with |imag| > imag_tol*(1+|real|) are discarded; the
    survivors are polished with two Newton iterations and near-equal
    roots (spacing < 1e-10) are merged.
    """
    c = trim_coeffs(coeffs)
    n = c.size - 1
    if n < 1:
        raise InvalidInputError("root finding needs degree >= 1")
    monic = c / c[-1]
    if n == 1:
        roots = np.array([-monic[0]], dtype=complex)
    else:
        comp = np.zeros((n, n))
        comp[1:, :-1] = np.eye(n - 1)
        comp[:, -1] = -monic[:-1]
        roots = np.linalg.eigvals(comp)

    mask = np.abs(roots.imag) <= imag_tol * (1.0 + np.abs(roots.real))
    real = roots.real[mask]
    if real.size == 0:
        return real

    dc = c[1:] * np.arange(1, c.size)
    for _ in range(2):
        fx = np.polyval(c[::-1], real)
        dfx = np.polyval(dc[::-1], real)
        step = np.where(dfx != 0.0, fx / np.where(dfx != 0.0, dfx, 1.0), 0.0)
        cand = real - step
        # keep the Newton update only where it does not increase |p|
        better = np.abs(np.polyval(c[::-1], cand)) <= np.abs(fx)
        real = np.where(better, cand, real)

    real = np.sort(real)
    merged = [real[0]]
    for r in real[1:]:
        if r - merged[-1] < ROOT_MERGE_SPACING:
            merged[-1] = 0.5 * (merged[-1] + r)
        else:
            merged.append(r)
    return np.asarray(merged)


def real_roots(p: Polynomial, imag_tol: float = DEFAULT_IMAG_TOL) -> np.ndarray:
    return real_roots_coeffs(p.coeffs, imag_tol=imag_tol)
