"""Ground-truth tooling and the Monte Carlo reproduction harness.

Everything here requires a known plant and is meant for validation and
benchmark reproduction only; the tuning pipeline never touches it.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import lti
from .errors import NonInvertible
from .estimate import (
    CORRELATION,
    LINEAR,
    NONLINEAR,
    NORM,
    NoFilter,
    TuningConfig,
    simplex_minimize,
    tune,
)
from .predict import ControllerSpec
from .signals import (
    CLOSED_LOOP,
    OPEN_LOOP,
    ExperimentConfig,
    run_experiment,
)


@dataclass(frozen=True)
class EvaluationScenario:
    plant: lti.TransferOperator
    Qd: lti.TransferOperator
    disturbance: np.ndarray
    controller_under_test: lti.TransferOperator
    horizon: int = 150

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if len(self.disturbance) < self.horizon:
            raise ValueError("disturbance must cover the horizon")


def ideal_controller(G: lti.TransferOperator, Qd: lti.TransferOperator):
    """Controller achieving the reference load sensitivity exactly: Qd^-1 - G^-1."""
    if G.is_zero() or Qd.is_zero():
        raise NonInvertible("plant and reference model must be invertible")
    return lti.tf_sub(lti.tf_inv(Qd), lti.tf_inv(G))


def disturbance_cost(s: EvaluationScenario) -> float:
    """Mean squared deviation of the achieved from the desired disturbance
    response over the horizon; +inf when the closed loop is unstable."""
    maps = lti.closed_loop(s.plant, s.controller_under_test)
    report = lti.stability_report(maps.S)
    if not report.stable:
        return math.inf
    d_series = np.asarray(s.disturbance, float)[: s.horizon]
    # Simulate the two responses separately rather than forming Qd - Q as
    # one rational operator: the combined operator pairs near-cancelling
    # slow poles with an almost-zero numerator, and its coefficient
    # rounding noise would swamp the tiny costs of near-ideal controllers.
    e = lti.simulate(s.Qd, d_series) - lti.simulate(maps.Q, d_series)
    return float(np.mean(e**2))


def optimal_controller_oracle(
    G,
    Qd,
    structure: ControllerSpec,
    disturbance,
    rho0,
    horizon: int = 150,
    max_iters: int = 2000,
):
    """Brute-force minimizer of the disturbance-response cost over the
    given controller structure.  Independent of the tuning pipeline."""

    def cost(rho):
        controller = structure.with_rho(rho).realize()
        return disturbance_cost(
            EvaluationScenario(
                plant=G,
                Qd=Qd,
                disturbance=disturbance,
                controller_under_test=controller,
                horizon=horizon,
            )
        )

    rho, best, _, _ = simplex_minimize(cost, rho0, max_iters)
    return rho, best


# ---------------------------------------------------------------------------
# Monte Carlo harness


@dataclass(frozen=True)
class MonteCarloConfig:
    plant: lti.TransferOperator
    Qd: lti.TransferOperator
    excitation: object
    initial_controller: lti.TransferOperator
    noise_variance: float
    base_seed: int
    runs: int
    tuning_template: TuningConfig
    disturbance: np.ndarray
    horizon: int = 150
    experiments: tuple = (OPEN_LOOP, CLOSED_LOOP)
    predictors: tuple = (LINEAR, NONLINEAR)
    methods: tuple = (NORM, CORRELATION)

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")


@dataclass
class CellStats:
    costs: list = field(default_factory=list)
    unstable: int = 0
    failures: int = 0

    @property
    def finite_costs(self):
        return [c for c in self.costs if math.isfinite(c)]

    @property
    def mean(self):
        vals = self.finite_costs
        return float(np.mean(vals)) if vals else math.nan

    @property
    def std(self):
        vals = self.finite_costs
        if len(vals) < 2:
            return 0.0 if vals else math.nan
        return float(np.std(vals, ddof=1))


@dataclass(frozen=True)
class MonteCarloSummary:
    cells: dict  # (experiment, predictor, method) -> CellStats
    runs: int


def monte_carlo(cfg: MonteCarloConfig) -> MonteCarloSummary:
    """Repeat the experiment with fresh noise realizations and tune every
    configured cell; per-run seeds are base_seed + run_index."""
    cells = {
        (e, p, m): CellStats()
        for e in cfg.experiments
        for p in cfg.predictors
        for m in cfg.methods
    }
    for run in range(cfg.runs):
        seed = cfg.base_seed + run
        datasets = {}
        for exp in cfg.experiments:
            datasets[exp] = run_experiment(
                ExperimentConfig(
                    plant=cfg.plant,
                    mode=exp,
                    excitation=cfg.excitation,
                    noise_variance=cfg.noise_variance,
                    seed=seed,
                    initial_controller=(
                        cfg.initial_controller if exp == CLOSED_LOOP else None
                    ),
                )
            )
        for (exp, pred, meth), stats in cells.items():
            tcfg = replace(cfg.tuning_template, predictor=pred, method=meth)
            try:
                result = tune(tcfg, datasets[exp])
            except Exception:
                stats.failures += 1
                stats.costs.append(math.nan)
                continue
            cost = disturbance_cost(
                EvaluationScenario(
                    plant=cfg.plant,
                    Qd=cfg.Qd,
                    disturbance=cfg.disturbance,
                    controller_under_test=result.controller,
                    horizon=cfg.horizon,
                )
            )
            if math.isinf(cost):
                stats.unstable += 1
            stats.costs.append(cost)
    return MonteCarloSummary(cells=cells, runs=cfg.runs)


def summary_csv(summary: MonteCarloSummary) -> str:
    buf = io.StringIO()
    buf.write("experiment,predictor,method,mean,std,runs,unstable_count\n")
    for (exp, pred, meth), stats in sorted(summary.cells.items()):
        buf.write(
            f"{exp},{pred},{meth},{stats.mean:.17g},{stats.std:.17g},"
            f"{summary.runs},{stats.unstable}\n"
        )
    return buf.getvalue()


def per_run_costs_csv(summary: MonteCarloSummary) -> str:
    buf = io.StringIO()
    buf.write("experiment,predictor,method,run,cost\n")
    for (exp, pred, meth), stats in sorted(summary.cells.items()):
        for run, cost in enumerate(stats.costs):
            buf.write(f"{exp},{pred},{meth},{run},{cost:.17g}\n")
    return buf.getvalue()
