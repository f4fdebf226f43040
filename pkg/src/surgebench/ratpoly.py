"""Real-coefficient polynomial and rational transfer-function algebra.

Polynomials live in the Laplace variable s and are stored as 1-D float
arrays in descending powers with no leading zeros.  ``TransferFunction``
keeps a canonical form (monic denominator) so coefficient-wise equality
tests are meaningful.  Everything here has pure value semantics: no
operation mutates its arguments, so concurrent use is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

# Residual scale accepted from the companion-matrix root finder.
ROOT_TOL = 1e-8
# Default relative root distance below which a pole/zero pair cancels.
CANCEL_TOL = 1e-6


class Polynomial:
    """Real polynomial ``c[0]*s^n + ... + c[n]`` (descending powers)."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[float] | float):
        c = np.atleast_1d(np.asarray(coeffs, dtype=float))
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty 1-D sequence")
        nz = np.flatnonzero(c)
        # normal form: no stored leading zeros; the zero polynomial is [0.0]
        self.coeffs = c[nz[0]:].copy() if nz.size else np.zeros(1)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0.0

    def __call__(self, s):
        return np.polyval(self.coeffs, s)

    def __mul__(self, other):
        return poly_mul(self, as_poly(other))

    __rmul__ = __mul__

    def __add__(self, other):
        return poly_add(self, as_poly(other))

    def __sub__(self, other):
        return poly_sub(self, as_poly(other))

    def __neg__(self):
        return Polynomial(-self.coeffs)

    def __repr__(self):
        return f"Polynomial({np.array2string(self.coeffs, separator=', ')})"


def as_poly(p) -> Polynomial:
    return p if isinstance(p, Polynomial) else Polynomial(p)


def poly_mul(a: Polynomial, b: Polynomial) -> Polynomial:
    """Product polynomial; coefficients are the convolution of the inputs."""
    a, b = as_poly(a), as_poly(b)
    if a.is_zero or b.is_zero:
        return Polynomial(0.0)
    return Polynomial(np.convolve(a.coeffs, b.coeffs))


def poly_add(a: Polynomial, b: Polynomial) -> Polynomial:
    a, b = as_poly(a), as_poly(b)
    n = max(len(a.coeffs), len(b.coeffs))
    c = np.zeros(n)
    c[n - len(a.coeffs):] += a.coeffs
    c[n - len(b.coeffs):] += b.coeffs
    return Polynomial(c)


def poly_sub(a: Polynomial, b: Polynomial) -> Polynomial:
    return poly_add(a, -as_poly(b))


def poly_roots(p: Polynomial) -> np.ndarray:
    """All roots (with multiplicity) via balanced companion-matrix eigenvalues.

    Raises on the zero polynomial, for which roots are undefined.  A nonzero
    constant has no roots and yields an empty array.
    """
    p = as_poly(p)
    if p.is_zero:
        raise ValueError("undefined roots: zero polynomial")
    if p.degree == 0:
        return np.array([], dtype=complex)
    return np.atleast_1d(np.roots(p.coeffs)).astype(complex)


def poly_from_roots(roots, lead: float = 1.0) -> Polynomial:
    """Monic-from-roots reconstruction scaled by ``lead``.

    The root set must be (numerically) closed under conjugation; the tiny
    imaginary residue left by floating point is dropped.
    """
    roots = np.asarray(roots, dtype=complex)
    if roots.size == 0:
        return Polynomial([lead])
    return Polynomial(np.real(np.poly(roots)) * lead)


def deflate_origin(p: Polynomial, rel_tol: float = 1e-9) -> Polynomial:
    """Divide out one structurally known root at s = 0.

    Used where a cancellation at the origin is exact by construction, so it
    must not rely on numerical root pairing.  The constant coefficient has to
    vanish relative to the polynomial's magnitude.
    """
    p = as_poly(p)
    scale = np.max(np.abs(p.coeffs))
    if p.degree == 0 or abs(p.coeffs[-1]) > rel_tol * scale:
        raise ValueError("cannot deflate: no root at s = 0")
    return Polynomial(p.coeffs[:-1])


class TransferFunction:
    """SISO rational function num(s)/den(s), stored with a monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num, den):
        num, den = as_poly(num), as_poly(den)
        if den.is_zero:
            raise ValueError("denominator must not be the zero polynomial")
        lead = den.coeffs[0]
        self.num = Polynomial(num.coeffs / lead)
        self.den = Polynomial(den.coeffs / lead)

    def __call__(self, s):
        return self.num(s) / self.den(s)

    def poles(self) -> np.ndarray:
        return poly_roots(self.den) if self.den.degree >= 1 else np.array([], dtype=complex)

    def zeros(self) -> np.ndarray:
        if self.num.is_zero or self.num.degree == 0:
            return np.array([], dtype=complex)
        return poly_roots(self.num)

    def __mul__(self, other):
        return tf_series(self, as_tf(other))

    __rmul__ = __mul__

    def __repr__(self):
        return (f"TransferFunction({np.array2string(self.num.coeffs, separator=', ')}, "
                f"{np.array2string(self.den.coeffs, separator=', ')})")


def as_tf(g) -> TransferFunction:
    if isinstance(g, TransferFunction):
        return g
    if isinstance(g, Polynomial):
        return TransferFunction(g, [1.0])
    return TransferFunction([float(g)], [1.0])


@dataclass
class StateSpace:
    """Realization (A, B, C, D); SISO here, but shapes stay 2-D matrices."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.C = np.atleast_2d(np.asarray(self.C, dtype=float))
        self.D = np.atleast_2d(np.asarray(self.D, dtype=float))
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ValueError("A must be square")
        if self.B.shape[0] != n or self.C.shape[1] != n:
            raise ValueError("inconsistent state dimensions")
        if self.D.shape != (self.C.shape[0], self.B.shape[1]):
            raise ValueError("inconsistent feedthrough dimensions")

    @property
    def n_states(self) -> int:
        return self.A.shape[0]


def tf_series(g1: TransferFunction, g2: TransferFunction) -> TransferFunction:
    """Cascade g1*g2.  No automatic cancellation; call tf_minreal explicitly."""
    return TransferFunction(poly_mul(g1.num, g2.num), poly_mul(g1.den, g2.den))


def tf_feedback(loop: TransferFunction) -> TransferFunction:
    """Unity negative feedback loop/(1 + loop)."""
    den_cl = poly_add(loop.den, loop.num)
    if den_cl.is_zero:
        raise ValueError("ill-posed loop: 1 + loop is identically zero")
    return TransferFunction(loop.num, den_cl)


def tf_relative_degree(g: TransferFunction) -> int:
    return g.den.degree - g.num.degree


def tf_dcgain(g: TransferFunction) -> float:
    """Limit of g(s) as s -> 0, taken from the lowest non-vanishing terms.

    Integrating systems report signed infinity, differentiating ones zero.
    """
    if g.num.is_zero:
        return 0.0
    num_rev = g.num.coeffs[::-1]
    den_rev = g.den.coeffs[::-1]
    kn = np.flatnonzero(num_rev)[0]
    kd = np.flatnonzero(den_rev)[0]
    ratio = num_rev[kn] / den_rev[kd]
    if kn == kd:
        return float(ratio)
    if kn > kd:
        return 0.0
    return math.copysign(math.inf, ratio)


def tf_minreal(g: TransferFunction, tol: float = CANCEL_TOL) -> TransferFunction:
    """Cancel matching pole/zero pairs closer than ``tol`` in relative root distance.

    The distance |z - p| is compared against tol * max(1, |z|, |p|), so near
    the origin the test is absolute and for large roots it is relative.  The
    result is rebuilt from the surviving roots with the leading coefficients
    unchanged, which preserves the DC gain up to root-finding error.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if g.num.is_zero or g.num.degree == 0 or g.den.degree == 0:
        return TransferFunction(g.num, g.den)
    zn = list(poly_roots(g.num))
    zd = list(poly_roots(g.den))
    lead = g.num.coeffs[0]
    kept_zeros = []
    for z in zn:
        if not zd:
            kept_zeros.append(z)
            continue
        dists = [abs(z - p) for p in zd]
        j = int(np.argmin(dists))
        if dists[j] <= tol * max(1.0, abs(z), abs(zd[j])):
            zd.pop(j)
        else:
            kept_zeros.append(z)
    return TransferFunction(poly_from_roots(kept_zeros, lead), poly_from_roots(zd))


def tf_to_statespace(g: TransferFunction) -> StateSpace:
    """Controllable canonical realization of a proper transfer function."""
    if tf_relative_degree(g) < 0:
        raise ValueError("improper transfer function")
    den = g.den.coeffs
    n = len(den) - 1
    numpad = np.zeros(n + 1)
    numpad[n + 1 - len(g.num.coeffs):] = g.num.coeffs
    d = numpad[0]
    A = np.zeros((n, n))
    if n > 0:
        A[0, :] = -den[1:]
        if n > 1:
            A[1:, :-1] = np.eye(n - 1)
    B = np.zeros((n, 1))
    if n > 0:
        B[0, 0] = 1.0
    C = (numpad[1:] - d * den[1:]).reshape(1, n)
    D = np.array([[d]])
    return StateSpace(A, B, C, D)


class MinPhaseSplit(NamedTuple):
    """Factorization g = minimum_phase * all_pass.

    ``axis_zeros`` lists numerator roots found on the imaginary axis; those
    cannot be mirrored into a stable all-pass and are carried in the
    ``all_pass`` numerator as-is.
    """

    minimum_phase: TransferFunction
    all_pass: TransferFunction
    axis_zeros: tuple


def min_phase_split(g: TransferFunction) -> MinPhaseSplit:
    """Split off the non-minimum-phase numerator content as an all-pass factor.

    Strict right-half-plane zeros z go into (s - z)/(s + conj(z)) all-pass
    pairs (unit gain magnitude at every frequency); left-half-plane zeros and
    all poles stay in the invertible minimum-phase factor.
    """
    zeros = g.zeros()
    lead = g.num.coeffs[0] if not g.num.is_zero else 0.0
    rhp, axis, lhp = [], [], []
    for z in zeros:
        scale = max(1.0, abs(z))
        if z.real > 1e-12 * scale:
            rhp.append(z)
        elif abs(z.real) <= 1e-12 * scale:
            axis.append(z)
        else:
            lhp.append(z)
    if not rhp and not axis:
        return MinPhaseSplit(TransferFunction(g.num, g.den), as_tf(1.0), ())
    mirror = [-np.conj(z) for z in rhp]
    all_pass = TransferFunction(poly_from_roots(rhp + axis), poly_from_roots(mirror))
    minimum_phase = TransferFunction(
        poly_mul(poly_from_roots(lhp, lead), poly_from_roots(mirror)), g.den)
    return MinPhaseSplit(minimum_phase, all_pass, tuple(axis))
