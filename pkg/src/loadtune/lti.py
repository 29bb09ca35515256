"""Rational transfer-operator algebra in the delay operator q^-1.

Operators are stored as numerator/denominator coefficient lists
``[c0, c1, ...]`` meaning ``c0 + c1*q^-1 + c2*q^-2 + ...``.  The
denominator is normalized so that ``den[0] == 1``.  No pole-zero
cancellation is attempted: products and sums grow the polynomial
degrees, which is harmless at the signal lengths this package targets
and avoids cancellation-tolerance bugs.

Simulation is the direct-form difference equation with zero initial
conditions.  Marginally stable or unstable operators are simulated
as-is; callers decide whether the result is meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import DegenerateLoop, NonInvertible, ZeroLeadingDenominator

TRIM_TOL = 1e-12
STAB_TOL = 1e-9
RATIONAL_EQ_TOL = 1e-8


def _trim(coeffs):
    """Drop trailing coefficients with magnitude below TRIM_TOL."""
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("coefficient list must be a non-empty 1-D sequence")
    nz = np.nonzero(np.abs(c) >= TRIM_TOL)[0]
    if nz.size == 0:
        return np.zeros(1)
    return c[: nz[-1] + 1].copy()


@dataclass(frozen=True)
class TransferOperator:
    """Immutable rational function of q^-1 with den[0] == 1."""

    num: tuple
    den: tuple

    @property
    def num_array(self):
        return np.asarray(self.num, dtype=float)

    @property
    def den_array(self):
        return np.asarray(self.den, dtype=float)

    def is_zero(self):
        return len(self.num) == 1 and self.num[0] == 0.0

    def __repr__(self):
        return f"TransferOperator(num={list(self.num)}, den={list(self.den)})"


@dataclass(frozen=True)
class PolePlacementReport:
    """Roots of the denominator in the z variable and a stability verdict."""

    roots: tuple
    max_modulus: float
    stable: bool


@dataclass(frozen=True)
class ClosedLoopMaps:
    """Sensitivity S, complementary sensitivity T and load sensitivity Q."""

    S: TransferOperator
    T: TransferOperator
    Q: TransferOperator


def tf_make(num, den) -> TransferOperator:
    """Build a normalized, trimmed transfer operator num/den."""
    d = np.asarray(den, dtype=float)
    if d.size == 0:
        raise ZeroLeadingDenominator("denominator must be non-empty")
    if d[0] == 0.0:
        raise ZeroLeadingDenominator("den[0] must be nonzero")
    n = np.asarray(num, dtype=float) / d[0]
    d = d / d[0]
    return TransferOperator(tuple(_trim(n)), tuple(_trim(d)))


def tf_mul(a: TransferOperator, b: TransferOperator) -> TransferOperator:
    return tf_make(
        np.convolve(a.num_array, b.num_array),
        np.convolve(a.den_array, b.den_array),
    )


def _padded_sum(p, q):
    n = max(len(p), len(q))
    out = np.zeros(n)
    out[: len(p)] += p
    out[: len(q)] += q
    return out


def tf_add(a: TransferOperator, b: TransferOperator) -> TransferOperator:
    num = _padded_sum(
        np.convolve(a.num_array, b.den_array),
        np.convolve(b.num_array, a.den_array),
    )
    den = np.convolve(a.den_array, b.den_array)
    return tf_make(num, den)


def tf_sub(a: TransferOperator, b: TransferOperator) -> TransferOperator:
    return tf_add(a, tf_neg(b))


def tf_neg(a: TransferOperator) -> TransferOperator:
    return tf_make(-a.num_array, a.den_array)


def tf_inv(a: TransferOperator) -> TransferOperator:
    """Swap numerator and denominator, renormalizing the new denominator."""
    if a.is_zero():
        raise NonInvertible("cannot invert the zero operator")
    if a.num[0] == 0.0:
        raise ZeroLeadingDenominator(
            "inverse has a zero leading denominator coefficient (pure delay factor)"
        )
    return tf_make(a.den_array, a.num_array)


def simulate(h: TransferOperator, x) -> np.ndarray:
    """Run the direct-form difference equation of h on x, zero initial conditions."""
    x = np.asarray(x, dtype=float)
    if x.size < 1:
        raise ValueError("input must have at least one sample")
    return lfilter(h.num_array, h.den_array, x)


def closed_loop(G: TransferOperator, C: TransferOperator) -> ClosedLoopMaps:
    """Sensitivities of the unity-feedback loop of plant G and controller C.

    S = (1 + G*C)^-1, T = 1 - S, Q = G*S.  The characteristic polynomial
    den(G)*den(C) + num(G)*num(C) becomes the denominator of S.
    """
    char = _padded_sum(
        np.convolve(G.den_array, C.den_array),
        np.convolve(G.num_array, C.num_array),
    )
    char = _trim(char)
    if len(char) == 1 and char[0] == 0.0:
        raise DegenerateLoop("1 + G*C is identically zero")
    if char[0] == 0.0:
        raise DegenerateLoop("1 + G*C has a zero leading coefficient")
    loop_num = np.convolve(G.den_array, C.den_array)
    S = tf_make(loop_num, char)
    T = tf_sub(tf_make([1.0], [1.0]), S)
    Q = tf_mul(G, S)
    return ClosedLoopMaps(S=S, T=T, Q=Q)


def stability_report(h: TransferOperator) -> PolePlacementReport:
    """Roots of den(z) (coefficients reversed to the z domain) and stability flag."""
    den = h.den_array
    if len(den) == 1:
        return PolePlacementReport(roots=(), max_modulus=0.0, stable=True)
    roots = np.roots(den)
    max_mod = float(np.max(np.abs(roots)))
    return PolePlacementReport(
        roots=tuple(roots), max_modulus=max_mod, stable=max_mod < 1.0 - STAB_TOL
    )


def rational_equal(a: TransferOperator, b: TransferOperator, tol=RATIONAL_EQ_TOL) -> bool:
    """Test a == b by cross-multiplication of numerators and denominators."""
    lhs = np.convolve(a.num_array, b.den_array)
    rhs = np.convolve(b.num_array, a.den_array)
    diff = _padded_sum(lhs, -rhs)
    scale = 1.0 + max(np.max(np.abs(lhs), initial=0.0), np.max(np.abs(rhs), initial=0.0))
    return float(np.max(np.abs(diff))) < tol * scale


def frequency_response(h: TransferOperator, omega) -> np.ndarray:
    """Evaluate h at z = e^{j*omega} (i.e. q^-1 = e^{-j*omega})."""
    omega = np.asarray(omega, dtype=float)
    zinv = np.exp(-1j * omega)
    num = np.polyval(h.num_array[::-1], zinv)
    den = np.polyval(h.den_array[::-1], zinv)
    return num / den


IDENTITY = tf_make([1.0], [1.0])
ZERO = tf_make([0.0], [1.0])
