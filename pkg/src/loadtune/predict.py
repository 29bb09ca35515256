"""Controller parametrization, regressor construction and the two
one-step-ahead prediction errors.

The identified controller part is B(q)/A(q) with
A = 1 + a1*q^-1 + ... + a_na*q^-na and B = b0 + ... + b_nb*q^-nb,
and the full controller is (B/A) * Cf.  The parameter vector is
ordered [a_1..a_na, b_0..b_nb] everywhere in this package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from . import lti
from .errors import DimensionMismatch, TooFewSamples
from .virtual import VirtualSignals


@dataclass(frozen=True)
class ControllerSpec:
    n_a: int
    n_b: int
    Cf: lti.TransferOperator
    rho: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.n_a < 0 or self.n_b < 0:
            raise ValueError("orders must be nonnegative")
        if self.rho is not None:
            rho = np.asarray(self.rho, dtype=float)
            if rho.shape != (self.n_params,):
                raise DimensionMismatch(
                    f"rho must have length {self.n_params}, got {rho.shape}"
                )
            object.__setattr__(self, "rho", rho)

    @property
    def n_params(self):
        return self.n_a + self.n_b + 1

    def with_rho(self, rho) -> "ControllerSpec":
        return ControllerSpec(self.n_a, self.n_b, self.Cf, np.asarray(rho, dtype=float))

    def a_poly(self) -> np.ndarray:
        """Denominator polynomial A(q) = [1, a_1, ..., a_na]."""
        return np.concatenate(([1.0], self.rho[: self.n_a]))

    def b_poly(self) -> np.ndarray:
        """Numerator polynomial B(q) = [b_0, ..., b_nb]."""
        return self.rho[self.n_a :]

    def realize(self) -> lti.TransferOperator:
        """Full controller (B/A) * Cf."""
        return lti.tf_mul(lti.tf_make(self.b_poly(), self.a_poly()), self.Cf)


def regressor_from_series(u_bar, ef_bar, n_a: int, n_b: int) -> np.ndarray:
    """Regressor matrix with rows [-u_bar(t-1..t-na), ef_bar(t..t-nb)].

    Out-of-range lags (before the first sample) are zero, consistent
    with zero-initial-condition simulation.
    """
    u_bar = np.asarray(u_bar, dtype=float)
    ef_bar = np.asarray(ef_bar, dtype=float)
    n = len(u_bar)
    if len(ef_bar) != n:
        raise DimensionMismatch("u_bar and ef_bar lengths differ")
    p = n_a + n_b + 1
    if n < p:
        raise TooFewSamples(f"need at least {p} samples, got {n}")
    phi = np.zeros((n, p))
    for k in range(1, n_a + 1):
        phi[k:, k - 1] = -u_bar[:-k]
    for k in range(0, n_b + 1):
        col = n_a + k
        if k == 0:
            phi[:, col] = ef_bar
        else:
            phi[k:, col] = ef_bar[:-k]
    return phi


def build_regressor(vs: VirtualSignals, n_a: int, n_b: int) -> np.ndarray:
    return regressor_from_series(vs.u_bar, vs.ef_bar, n_a, n_b)


def eps_linear(spec: ControllerSpec, vs: VirtualSignals) -> np.ndarray:
    """Prediction error of the regression-form predictor: u_bar - phi' rho.

    Identical (to rounding) to A(q)*u_bar - B(q)*ef_bar; affine in rho.
    """
    phi = build_regressor(vs, spec.n_a, spec.n_b)
    return vs.u_bar - phi @ spec.rho


def eps_nonlinear(spec: ControllerSpec, vs: VirtualSignals) -> np.ndarray:
    """Prediction error of the simulation-form predictor: u_bar - (B/A)*ef_bar."""
    pred = lfilter(spec.b_poly(), spec.a_poly(), vs.ef_bar)
    return vs.u_bar - pred
