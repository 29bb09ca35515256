"""Command-line front end: config parsing, dataset I/O and the four
workflows (simulate, tune, evaluate, montecarlo).

Configuration files are INI-style text with nested sections; every
section and key is schema-checked before anything runs, and unknown
keys are rejected.  All floating-point output uses 17 significant
digits so reruns with identical inputs produce byte-identical files.

Exit codes: 0 success, 2 configuration or validation error, 3 I/O
error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys

import numpy as np

from . import lti
from .errors import (
    ConfigError,
    IllConditioned,
    LoadtuneError,
    NonFiniteCost,
    ParseError,
)
from .estimate import (
    CORRELATION,
    LINEAR,
    NONLINEAR,
    NORM,
    DesignedMagnitude,
    FixedOperator,
    NoFilter,
    TuningConfig,
    tune,
)
from .evaluate import (
    EvaluationScenario,
    MonteCarloConfig,
    disturbance_cost,
    monte_carlo,
    per_run_costs_csv,
    summary_csv,
)
from .signals import (
    CLOSED_LOOP,
    OPEN_LOOP,
    ExperimentConfig,
    SquareWave,
    load_dataset,
    run_experiment,
    save_dataset,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4

# Allowed keys per section; anything else is a config error.
_SCHEMA = {
    "plant": {"num", "den"},
    "reference_model": {"num", "den"},
    "controller_filter": {"num", "den"},
    "initial_controller": {"num", "den"},
    "excitation": {"kind", "period", "amplitude", "n"},
    "experiment": {"mode", "noise_variance", "seed"},
    "disturbance": {"kind", "amplitude", "n"},
    "evaluation": {"horizon"},
    "tuning": {
        "predictor",
        "method",
        "n_a",
        "n_b",
        "L",
        "rho0",
        "filter",
        "linear_solver",
        "max_simplex_iters",
        "max_simplex_evals",
        "simplex_tol",
        "simplex_restart",
        "filter_update_iters",
        "filter_update_tol",
        "discard_prefix",
    },
    "montecarlo": {"runs", "base_seed", "experiments", "predictors", "methods"},
}


class JobConfig:
    """Validated view of one configuration file."""

    def __init__(self, path):
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str  # keys are case-sensitive (e.g. L)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                parser.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        self.path = path
        self._parser = parser
        for section in parser.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"{path}: unknown section [{section}]")
            extra = set(parser[section]) - _SCHEMA[section]
            if extra:
                raise ConfigError(
                    f"{path}: unknown key(s) in [{section}]: {sorted(extra)}"
                )

    def has(self, section):
        return self._parser.has_section(section)

    def _section(self, name):
        if not self._parser.has_section(name):
            raise ConfigError(f"{self.path}: missing section [{name}]")
        return self._parser[name]

    def _get(self, section, key, default=None, required=False):
        sec = self._section(section)
        if key not in sec:
            if required:
                raise ConfigError(f"{self.path}: [{section}] needs key {key!r}")
            return default
        return sec[key]

    def floats(self, section, key):
        raw = self._get(section, key, required=True)
        try:
            return np.array([float(x) for x in raw.replace(",", " ").split()])
        except ValueError as exc:
            raise ConfigError(f"{self.path}: [{section}] {key}: {exc}") from exc

    def scalar(self, section, key, cast, default=None, required=False):
        raw = self._get(section, key, default=None, required=required)
        if raw is None:
            return default
        try:
            if cast is bool:
                low = raw.strip().lower()
                if low in ("true", "yes", "1"):
                    return True
                if low in ("false", "no", "0"):
                    return False
                raise ValueError(f"not a boolean: {raw!r}")
            return cast(raw)
        except ValueError as exc:
            raise ConfigError(f"{self.path}: [{section}] {key}: {exc}") from exc

    def words(self, section, key, default=None):
        raw = self._get(section, key)
        if raw is None:
            return default
        return tuple(w for w in raw.replace(",", " ").split())

    def operator(self, section) -> lti.TransferOperator:
        return lti.tf_make(self.floats(section, "num"), self.floats(section, "den"))

    def excitation(self):
        kind = self.scalar("excitation", "kind", str, required=True)
        if kind != "square":
            raise ConfigError(f"{self.path}: unsupported excitation kind {kind!r}")
        return SquareWave(
            period=self.scalar("excitation", "period", int, required=True),
            amplitude=self.scalar("excitation", "amplitude", float, required=True),
            n=self.scalar("excitation", "n", int, required=True),
        )

    def disturbance(self):
        kind = self.scalar("disturbance", "kind", str, required=True)
        if kind != "step":
            raise ConfigError(f"{self.path}: unsupported disturbance kind {kind!r}")
        amp = self.scalar("disturbance", "amplitude", float, default=1.0)
        n = self.scalar("disturbance", "n", int, required=True)
        return amp * np.ones(n)

    def experiment_config(self) -> ExperimentConfig:
        mode = self.scalar("experiment", "mode", str, required=True)
        controller = None
        if mode == CLOSED_LOOP:
            controller = self.operator("initial_controller")
        return ExperimentConfig(
            plant=self.operator("plant"),
            mode=mode,
            excitation=self.excitation(),
            noise_variance=self.scalar("experiment", "noise_variance", float, 0.0),
            seed=self.scalar("experiment", "seed", int, 0),
            initial_controller=controller,
        )

    def tuning_config(self) -> TuningConfig:
        Qd = self.operator("reference_model")
        Cf = self.operator("controller_filter")
        filt_name = self.scalar("tuning", "filter", str, default="none")
        if filt_name == "none":
            policy = NoFilter()
        elif filt_name == "reference_model":
            policy = FixedOperator(Qd)
        elif filt_name == "designed":
            policy = DesignedMagnitude()
        else:
            raise ConfigError(f"{self.path}: unknown filter {filt_name!r}")
        rho0 = None
        if self._get("tuning", "rho0") is not None:
            rho0 = self.floats("tuning", "rho0")
        disturbance = self.disturbance() if self.has("disturbance") else None
        return TuningConfig(
            predictor=self.scalar("tuning", "predictor", str, required=True),
            method=self.scalar("tuning", "method", str, required=True),
            n_a=self.scalar("tuning", "n_a", int, required=True),
            n_b=self.scalar("tuning", "n_b", int, required=True),
            Cf=Cf,
            Qd=Qd,
            filter_policy=policy,
            L=self.scalar("tuning", "L", int),
            rho0=rho0,
            max_simplex_iters=self.scalar("tuning", "max_simplex_iters", int, 1000),
            max_simplex_evals=self.scalar("tuning", "max_simplex_evals", int),
            simplex_tol=self.scalar("tuning", "simplex_tol", float, 1e-10),
            simplex_restart=self.scalar("tuning", "simplex_restart", bool, True),
            linear_solver=self.scalar("tuning", "linear_solver", str, "analytic"),
            filter_update_iters=self.scalar("tuning", "filter_update_iters", int, 50),
            filter_update_tol=self.scalar("tuning", "filter_update_tol", float, 1e-8),
            disturbance=disturbance,
            discard_prefix=self.scalar("tuning", "discard_prefix", int, 0),
        )


def _fmt(x):
    return format(float(x), ".17g")


def _fmt_vec(v):
    return " ".join(_fmt(x) for x in np.asarray(v, dtype=float))


def cmd_simulate(config_path, out_path) -> int:
    cfg = JobConfig(config_path)
    ecfg = cfg.experiment_config()
    dataset = run_experiment(ecfg)
    save_dataset(dataset, out_path)
    print(f"N={dataset.N} noise_variance={_fmt(ecfg.noise_variance)}")
    return EXIT_OK


def cmd_tune(config_path, dataset_path, out_path) -> int:
    cfg = JobConfig(config_path)
    mode = cfg.scalar("experiment", "mode", str, required=True)
    dataset = load_dataset(dataset_path)
    if dataset.kind != mode:
        raise ConfigError(
            f"dataset kind {dataset.kind!r} does not match configured mode {mode!r}"
        )
    result = tune(cfg.tuning_config(), dataset)
    lines = [
        f"rho_hat = {_fmt_vec(result.rho_hat)}",
        f"controller_num = {_fmt_vec(result.controller.num)}",
        f"controller_den = {_fmt_vec(result.controller.den)}",
        f"final_cost = {_fmt(result.final_cost)}",
        f"iterations = {result.iterations}",
    ]
    for key, value in sorted(result.diagnostics.items()):
        if isinstance(value, float):
            value = _fmt(value)
        lines.append(f"{key} = {value}")
    text = "\n".join(lines) + "\n"
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"rho_hat = {_fmt_vec(result.rho_hat)}")
    print(f"final_cost = {_fmt(result.final_cost)}")
    return EXIT_OK


def _load_controller(path) -> lti.TransferOperator:
    """Read a controller from tune's output format (key = value lines)."""
    entries = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln in fh:
            if "=" not in ln:
                continue
            key, _, value = ln.partition("=")
            entries[key.strip()] = value.strip()
    for key in ("controller_num", "controller_den"):
        if key not in entries:
            raise ParseError(f"{path}: missing {key!r}")
    try:
        num = [float(x) for x in entries["controller_num"].split()]
        den = [float(x) for x in entries["controller_den"].split()]
    except ValueError as exc:
        raise ParseError(f"{path}: non-numeric coefficient ({exc})") from exc
    return lti.tf_make(num, den)


def cmd_evaluate(config_path, controller_path) -> int:
    cfg = JobConfig(config_path)
    scenario = EvaluationScenario(
        plant=cfg.operator("plant"),
        Qd=cfg.operator("reference_model"),
        disturbance=cfg.disturbance(),
        controller_under_test=_load_controller(controller_path),
        horizon=cfg.scalar("evaluation", "horizon", int, 150)
        if cfg.has("evaluation")
        else 150,
    )
    cost = disturbance_cost(scenario)
    print(f"disturbance_cost = {_fmt(cost)}")
    return EXIT_OK


def cmd_montecarlo(config_path, out_dir, runs=None, seed=None, jobs=None) -> int:
    cfg = JobConfig(config_path)
    noise_variance = cfg.scalar("experiment", "noise_variance", float, 0.0)
    template = cfg.tuning_config()
    mc = MonteCarloConfig(
        plant=cfg.operator("plant"),
        Qd=cfg.operator("reference_model"),
        excitation=cfg.excitation(),
        initial_controller=cfg.operator("initial_controller")
        if cfg.has("initial_controller")
        else None,
        noise_variance=noise_variance,
        base_seed=seed if seed is not None else cfg.scalar("montecarlo", "base_seed", int, 0),
        runs=runs if runs is not None else cfg.scalar("montecarlo", "runs", int, required=True),
        tuning_template=template,
        disturbance=cfg.disturbance(),
        horizon=cfg.scalar("evaluation", "horizon", int, 150) if cfg.has("evaluation") else 150,
        experiments=cfg.words("montecarlo", "experiments", (OPEN_LOOP, CLOSED_LOOP)),
        predictors=cfg.words("montecarlo", "predictors", (LINEAR, NONLINEAR)),
        methods=cfg.words("montecarlo", "methods", (NORM, CORRELATION)),
    )
    if CLOSED_LOOP in mc.experiments and mc.initial_controller is None:
        raise ConfigError("closed-loop cells need an [initial_controller] section")
    # Runs are cheap relative to setup; the single-threaded path keeps
    # output byte-identical regardless of --jobs.
    summary = monte_carlo(mc)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "summary.csv"), "w", encoding="utf-8") as fh:
        fh.write(summary_csv(summary))
    with open(os.path.join(out_dir, "per_run_costs.csv"), "w", encoding="utf-8") as fh:
        fh.write(per_run_costs_csv(summary))
    print(f"cells={len(summary.cells)} runs={summary.runs} out={out_dir}")
    return EXIT_OK


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="loadtune",
        description=(
            "Data-driven tuning of restricted-order feedback controllers "
            "for load-disturbance rejection."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "tune", "evaluate", "montecarlo"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--data", help="dataset CSV (tune) or controller file (evaluate)")
        p.add_argument("--out", help="output file (simulate, tune) or directory (montecarlo)")
        p.add_argument("--runs", type=int, help="override [montecarlo] runs")
        p.add_argument("--seed", type=int, help="override [montecarlo] base_seed")
        p.add_argument("--jobs", type=int, default=1, help="accepted for compatibility; runs are sequential")
    return parser


def _require(value, flag, command):
    if value is None:
        raise ConfigError(f"{command} requires {flag}")
    return value


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args.config, _require(args.out, "--out", "simulate"))
        if args.command == "tune":
            return cmd_tune(
                args.config,
                _require(args.data, "--data", "tune"),
                _require(args.out, "--out", "tune"),
            )
        if args.command == "evaluate":
            return cmd_evaluate(args.config, _require(args.data, "--data", "evaluate"))
        return cmd_montecarlo(
            args.config,
            _require(args.out, "--out", "montecarlo"),
            runs=args.runs,
            seed=args.seed,
            jobs=args.jobs,
        )
    except (IllConditioned, NonFiniteCost, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ParseError, LoadtuneError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
