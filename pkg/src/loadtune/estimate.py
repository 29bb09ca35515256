"""Cost functions and solvers for controller-parameter estimation.

Two costs are supported: the mean squared (filtered) prediction error,
and the squared norm of the cross-correlation between the filtered
prediction error and the experiment's excitation over 2L+1 lags.  Each
cost can be minimized through a closed-form least-squares solve (linear
predictor) or a Nelder-Mead simplex search (nonlinear predictor; also
available for the linear predictor as a fixed-budget alternative).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lti, spectra
from .errors import (
    ConfigError,
    DimensionMismatch,
    IllConditioned,
    NonFiniteCost,
)
from .predict import ControllerSpec, regressor_from_series
from .signals import CLOSED_LOOP, OPEN_LOOP, Dataset
from .virtual import VirtualSignals, make_virtual

LINEAR = "linear"
NONLINEAR = "nonlinear"
NORM = "norm"
CORRELATION = "correlation"

COND_LIMIT = 1e12
BAD_COST = 1e300


# ---------------------------------------------------------------------------
# Filter policies


@dataclass(frozen=True)
class NoFilter:
    pass


@dataclass(frozen=True)
class FixedOperator:
    operator: lti.TransferOperator


@dataclass(frozen=True)
class DesignedMagnitude:
    """Design |K(w)| from the finite-record spectra of the dataset.

    The magnitude is evaluated on the record's own DFT grid and applied
    circularly, so the filtered least-squares problem is exactly the
    frequency-weighted fit the design aims for.  Lags of filtered series
    are circular for the same reason.
    """


# ---------------------------------------------------------------------------
# Costs and closed-form estimators


def cost_pe(eps_K) -> float:
    """Mean squared filtered prediction error."""
    eps_K = np.asarray(eps_K, dtype=float)
    if eps_K.size == 0:
        raise ValueError("empty error series")
    return float(np.mean(eps_K**2))


def cost_corr(f_hat) -> float:
    """Squared 2-norm of the correlation vector, normalized by its length."""
    f_hat = np.asarray(f_hat, dtype=float)
    return float(np.dot(f_hat, f_hat) / len(f_hat))


def corr_vector(eps_K, Z) -> np.ndarray:
    """Cross-correlation estimate (1/N) * sum_t eps_K(t) * zeta(t)."""
    eps_K = np.asarray(eps_K, dtype=float)
    if Z.shape[0] != len(eps_K):
        raise DimensionMismatch("instrument rows must match the error length")
    return Z.T @ eps_K / len(eps_K)


def build_instrument(source, L: int) -> np.ndarray:
    """Stack 2L+1 lagged copies of the excitation signal, zero padded.

    ``source`` is a Dataset (its excitation is u in open loop, r in
    closed loop) or a plain series.  Row t is
    [x(t+L), ..., x(t), ..., x(t-L)].
    """
    if L < 0:
        raise ValueError("L must be >= 0")
    x = source.excitation if isinstance(source, Dataset) else np.asarray(source, float)
    n = len(x)
    Z = np.zeros((n, 2 * L + 1))
    for j in range(2 * L + 1):
        shift = L - j  # column j holds x(t + shift)
        if shift >= 0:
            Z[: n - shift, j] = x[shift:]
        else:
            Z[-shift:, j] = x[: n + shift]
    return Z


def circular_regressor(u_K, ef_K, n_a: int, n_b: int) -> np.ndarray:
    """Regressor with circular (wrap-around) lags.

    Used with designed magnitude filters, which are applied as circular
    DFT-domain operations; zero-padded lags would introduce a boundary
    discontinuity that the filtered cost then amplifies.
    """
    u_K = np.asarray(u_K, dtype=float)
    ef_K = np.asarray(ef_K, dtype=float)
    if len(u_K) != len(ef_K):
        raise DimensionMismatch("u_K and ef_K lengths differ")
    cols = [-np.roll(u_K, k) for k in range(1, n_a + 1)]
    cols += [np.roll(ef_K, k) for k in range(0, n_b + 1)]
    return np.column_stack(cols)


def _solve_lstsq(A, b):
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditioned(
            f"normal equations too ill-conditioned (cond ~ {cond:.3e})", condition=cond
        )
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return sol, cond


def lsq_pe(vs: VirtualSignals, n_a: int, n_b: int, filt=None, circular=False):
    """Closed-form error-norm estimate from filtered virtual signals.

    ``filt`` maps a series to its filtered version (identity if None);
    ``circular`` selects wrap-around lags to match circularly applied
    filters.  Returns (rho_hat, condition_number).
    """
    filt = filt or (lambda s: s)
    u_K = filt(vs.u_bar)
    ef_K = filt(vs.ef_bar)
    build = circular_regressor if circular else regressor_from_series
    phi = build(u_K, ef_K, n_a, n_b)
    return _solve_lstsq(phi, u_K)


def lsq_corr(vs: VirtualSignals, Z, n_a: int, n_b: int, filt=None, circular=False):
    """Closed-form correlation estimate via the stacked instrument system."""
    filt = filt or (lambda s: s)
    u_K = filt(vs.u_bar)
    ef_K = filt(vs.ef_bar)
    build = circular_regressor if circular else regressor_from_series
    phi = build(u_K, ef_K, n_a, n_b)
    n = len(u_K)
    M = Z.T @ phi / n
    g = Z.T @ u_K / n
    return _solve_lstsq(M, g)


# ---------------------------------------------------------------------------
# Nelder-Mead simplex


def simplex_minimize(
    cost,
    rho0,
    max_iters: int = 1000,
    diam_tol: float = 1e-10,
    restart: bool = True,
    max_evals: int | None = None,
):
    """Nelder-Mead with standard coefficients (1, 2, 0.5, 0.5).

    The initial simplex perturbs each coordinate by 5% of its value
    (0.00025 for zero components).  The search runs until ``max_iters``
    total iterations; whenever the simplex diameter falls below
    ``diam_tol`` with budget left, a fresh simplex is rebuilt around the
    best vertex (the simplex is prone to premature collapse in more than
    a few dimensions) and the search continues until the budget is spent
    or two consecutive restarts bring no further improvement.  With
    ``restart=False`` a single round is run,
    stopping at the diameter tolerance or when a budget runs out, which
    mirrors a fixed-budget simplex search without restarts.  ``max_evals``
    optionally caps the number of cost evaluations (the starting point
    counts as one), the way classic simplex implementations cap function
    calls independently of iterations.  Returns
    (best_x, best_f, iterations, trace).
    """
    x0 = np.asarray(rho0, dtype=float)
    f0 = cost(x0)
    if not np.isfinite(f0):
        raise NonFiniteCost("cost is non-finite at the starting point")
    evals = [1]

    if not restart:
        best_x, best_f, used, trace = _simplex_round(
            cost, x0, f0, max_iters, diam_tol, evals, max_evals
        )
        return best_x, best_f, used, trace

    best_x, best_f = x0, f0
    total = 0
    stale = 0
    trace = []
    while total < max_iters and (max_evals is None or evals[0] < max_evals):
        prev_f = best_f
        best_x, best_f, used, tr = _simplex_round(
            cost, best_x, best_f, max_iters - total, diam_tol, evals, max_evals
        )
        total += used
        trace.extend(tr)
        improved = best_f < prev_f - 1e-12 * abs(prev_f)
        stale = 0 if improved else stale + 1
        if stale >= 2:
            break
    return best_x, best_f, total, trace


def _simplex_round(cost, x0, f0, max_iters, diam_tol, evals=None, max_evals=None):
    x0 = np.asarray(x0, dtype=float)
    n = len(x0)
    if evals is None:
        evals = [0]

    def safe_cost(x):
        evals[0] += 1
        f = cost(x)
        return f if np.isfinite(f) else np.inf

    verts = [x0.copy()]
    for i in range(n):
        v = x0.copy()
        if v[i] != 0.0:
            v[i] *= 1.05
        else:
            v[i] = 0.00025
        verts.append(v)
    verts = np.asarray(verts)
    fvals = np.array([f0] + [safe_cost(v) for v in verts[1:]])

    trace = []
    iters = 0
    for iters in range(1, max_iters + 1):
        order = np.argsort(fvals, kind="stable")
        verts, fvals = verts[order], fvals[order]
        trace.append(float(fvals[0]))
        diam = np.max(np.linalg.norm(verts[1:] - verts[0], axis=1))
        if diam < diam_tol:
            break
        if max_evals is not None and evals[0] >= max_evals:
            break

        centroid = np.mean(verts[:-1], axis=0)
        xr = centroid + (centroid - verts[-1])
        fr = safe_cost(xr)
        if fr < fvals[0]:
            xe = centroid + 2.0 * (centroid - verts[-1])
            fe = safe_cost(xe)
            if fe < fr:
                verts[-1], fvals[-1] = xe, fe
            else:
                verts[-1], fvals[-1] = xr, fr
        elif fr < fvals[-2]:
            verts[-1], fvals[-1] = xr, fr
        else:
            if fr < fvals[-1]:
                xc = centroid + 0.5 * (xr - centroid)
                fc = safe_cost(xc)
                accept = fc <= fr
            else:
                xc = centroid - 0.5 * (centroid - verts[-1])
                fc = safe_cost(xc)
                accept = fc < fvals[-1]
            if accept:
                verts[-1], fvals[-1] = xc, fc
            else:
                for i in range(1, n + 1):
                    verts[i] = verts[0] + 0.5 * (verts[i] - verts[0])
                    fvals[i] = safe_cost(verts[i])

    best = int(np.argmin(fvals))
    return verts[best].copy(), float(fvals[best]), iters, trace


# ---------------------------------------------------------------------------
# Tuning orchestrator


@dataclass(frozen=True)
class TuningConfig:
    predictor: str
    method: str
    n_a: int
    n_b: int
    Cf: lti.TransferOperator
    Qd: lti.TransferOperator
    filter_policy: object = field(default_factory=NoFilter)
    L: int | None = None
    rho0: np.ndarray | None = None
    max_simplex_iters: int = 1000
    max_simplex_evals: int | None = None
    simplex_tol: float = 1e-10
    simplex_restart: bool = True
    linear_solver: str = "analytic"
    filter_update_iters: int = 50
    filter_update_tol: float = 1e-8
    disturbance: np.ndarray | None = None
    discard_prefix: int = 0

    def __post_init__(self):
        if self.predictor not in (LINEAR, NONLINEAR):
            raise ConfigError(f"unknown predictor {self.predictor!r}")
        if self.method not in (NORM, CORRELATION):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.linear_solver not in ("analytic", "simplex"):
            raise ConfigError(f"unknown linear solver {self.linear_solver!r}")
        if self.linear_solver == "simplex" and self.rho0 is None:
            raise ConfigError("the simplex linear solver needs a starting point rho0")
        if self.method == CORRELATION and self.L is None:
            raise ConfigError("the correlation method needs the lag count L")
        if isinstance(self.filter_policy, DesignedMagnitude) and self.disturbance is None:
            raise ConfigError("designed filters need the disturbance series")
        if self.rho0 is not None:
            rho0 = np.asarray(self.rho0, dtype=float)
            if rho0.shape != (self.n_a + self.n_b + 1,):
                raise ConfigError("rho0 length must be n_a + n_b + 1")
            object.__setattr__(self, "rho0", rho0)


@dataclass(frozen=True)
class TuningResult:
    rho_hat: np.ndarray
    controller: lti.TransferOperator
    final_cost: float
    iterations: int
    cost_trace: list
    diagnostics: dict


class _FilterFactory:
    """Builds series filters; designed magnitudes may depend on the current A."""

    def __init__(self, cfg: TuningConfig, dataset: Dataset):
        self.policy = cfg.filter_policy
        self.cfg = cfg
        self.description = type(self.policy).__name__
        self.a_dependent = False
        self.circular = isinstance(self.policy, DesignedMagnitude)
        if self.circular:
            y = dataset.y[cfg.discard_prefix :]
            x = dataset.excitation[cfg.discard_prefix :]
            if cfg.method == NORM:
                phi_den = spectra.record_psd(y)
                kind_lin, kind_nlin = spectra.PE_LIN, spectra.PE_NLIN
            else:
                phi_den = spectra.record_csd(x, y)
                kind_lin, kind_nlin = spectra.CORR_LIN, spectra.CORR_NLIN
            self._phi_den = phi_den
            self._phi_d = spectra.disturbance_psd(cfg.disturbance, phi_den.grid)
            self._kind = kind_lin if cfg.predictor == LINEAR else kind_nlin
            # Only the linear-predictor designs carry |A|^2; with n_a = 0
            # the factor is 1 and no filter iteration is needed.
            self.a_dependent = cfg.predictor == LINEAR and cfg.n_a > 0

    def magnitude(self, a_poly) -> spectra.FilterMagnitude:
        return spectra.design_filter(
            self._kind, self.cfg.Qd, a_poly, self._phi_d, self._phi_den
        )

    def build(self, a_poly):
        if isinstance(self.policy, NoFilter):
            return lambda s: s
        if isinstance(self.policy, FixedOperator):
            op = self.policy.operator
            return lambda s: lti.simulate(op, s)
        mag = self.magnitude(a_poly)
        return lambda s: spectra.apply_zero_phase(mag, s)


def tune(cfg: TuningConfig, dataset: Dataset) -> TuningResult:
    """Full pipeline: virtual signals -> (filter design) -> estimate rho."""
    if cfg.method == CORRELATION and cfg.L is not None and cfg.L < 0:
        raise ConfigError("L must be >= 0")
    vs = make_virtual(dataset, cfg.Qd, cfg.Cf, cfg.discard_prefix)
    Z = None
    if cfg.method == CORRELATION:
        x = dataset.excitation[cfg.discard_prefix :]
        Z = build_instrument(x, cfg.L)

    factory = _FilterFactory(cfg, dataset)
    spec = ControllerSpec(cfg.n_a, cfg.n_b, cfg.Cf)

    if cfg.predictor == LINEAR:
        rho, cond, iters, trace = _tune_linear(cfg, vs, Z, factory)
    else:
        rho, cond, iters, trace = _tune_nonlinear(cfg, vs, Z, factory)

    spec = spec.with_rho(rho)
    return TuningResult(
        rho_hat=rho,
        controller=spec.realize(),
        final_cost=trace[-1],
        iterations=iters,
        cost_trace=trace,
        diagnostics={
            "condition": cond,
            "filter": factory.description,
            "max_abs_d_bar": vs.max_abs_d_bar,
        },
    )


def _linear_cost(cfg, vs, Z, filt, rho, circular):
    u_K = filt(vs.u_bar)
    ef_K = filt(vs.ef_bar)
    build = circular_regressor if circular else regressor_from_series
    phi = build(u_K, ef_K, cfg.n_a, cfg.n_b)
    resid = u_K - phi @ rho
    if cfg.method == NORM:
        return cost_pe(resid)
    return cost_corr(corr_vector(resid, Z))


def _tune_linear(cfg, vs, Z, factory):
    if cfg.linear_solver == "simplex":
        # Fixed-budget simplex search on the (quadratic) linear-predictor
        # cost, as an alternative to the closed-form solve.  The filter is
        # frozen at the starting point's denominator.
        a0 = np.concatenate(([1.0], cfg.rho0[: cfg.n_a]))
        filt = factory.build(a0)
        rho, _, iters, trace = simplex_minimize(
            lambda rho: _linear_cost(cfg, vs, Z, filt, rho, factory.circular),
            cfg.rho0,
            cfg.max_simplex_iters,
            cfg.simplex_tol,
            cfg.simplex_restart,
            cfg.max_simplex_evals,
        )
        return rho, None, iters, trace

    a = np.array([1.0])
    rho_prev = None
    trace = []
    cond = None
    iters = 0
    for iters in range(1, cfg.filter_update_iters + 1):
        filt = factory.build(a)
        if cfg.method == NORM:
            rho, cond = lsq_pe(vs, cfg.n_a, cfg.n_b, filt, circular=factory.circular)
        else:
            rho, cond = lsq_corr(
                vs, Z, cfg.n_a, cfg.n_b, filt, circular=factory.circular
            )
        trace.append(_linear_cost(cfg, vs, Z, filt, rho, factory.circular))
        if not factory.a_dependent:
            break
        if rho_prev is not None and np.linalg.norm(rho - rho_prev) < cfg.filter_update_tol:
            break
        rho_prev = rho
        a = np.concatenate(([1.0], rho[: cfg.n_a]))
    return rho, cond, iters, trace


def _tune_nonlinear(cfg, vs, Z, factory):
    from .predict import eps_nonlinear

    if cfg.rho0 is None:
        raise ConfigError("the nonlinear predictor needs a starting point rho0")
    base_spec = ControllerSpec(cfg.n_a, cfg.n_b, cfg.Cf)

    if factory.circular:
        cost = _circular_nonlinear_cost(cfg, vs, Z, factory)
    else:
        filt = factory.build(np.array([1.0]))

        def cost(rho):
            eps = eps_nonlinear(base_spec.with_rho(rho), vs)
            # An unstable A(q) makes the simulated predictor blow up; report
            # a huge-but-finite cost so the simplex backs away without
            # overflow.
            if not np.all(np.isfinite(eps)) or np.max(np.abs(eps)) > 1e100:
                return BAD_COST
            eps_K = filt(eps)
            if cfg.method == NORM:
                return cost_pe(eps_K)
            return cost_corr(corr_vector(eps_K, Z))

    rho, _, iters, trace = simplex_minimize(
        cost,
        cfg.rho0,
        cfg.max_simplex_iters,
        cfg.simplex_tol,
        cfg.simplex_restart,
        cfg.max_simplex_evals,
    )
    return rho, None, iters, trace


def _circular_nonlinear_cost(cfg, vs, Z, factory):
    """Filtered nonlinear prediction error evaluated in the DFT domain.

    Matches the circular convention of designed filters, so for n_a = 0
    the nonlinear path agrees with the linear one to solver tolerance.
    The nonlinear-predictor designs do not depend on rho, so the
    magnitude is fixed before the search.
    """
    from scipy.fft import irfft, rfft

    mag = factory.magnitude(np.array([1.0])).mag
    n = vs.N
    grid = 2.0 * np.pi * np.arange(n // 2 + 1) / n
    U = rfft(vs.u_bar)
    E = rfft(vs.ef_bar)
    zpow = np.exp(-1j * np.outer(grid, np.arange(max(cfg.n_a, cfg.n_b) + 1)))

    def cost(rho):
        a = np.concatenate(([1.0], rho[: cfg.n_a]))
        b = rho[cfg.n_a :]
        A_w = zpow[:, : cfg.n_a + 1] @ a
        B_w = zpow[:, : cfg.n_b + 1] @ b
        if np.min(np.abs(A_w)) < 1e-12:
            return BAD_COST
        eps_K = irfft(mag * (U - (B_w / A_w) * E), n)
        if cfg.method == NORM:
            return cost_pe(eps_K)
        return cost_corr(corr_vector(eps_K, Z))

    return cost
