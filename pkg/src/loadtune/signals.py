"""Excitation and noise generation, experiment simulation, dataset I/O.

Datasets are plain time series from one experiment: open-loop {u, y} or
closed-loop {r, u, y}.  The CSV on-disk format is one header row
("t,u,y" or "t,r,u,y"), a 1-based integer sample index and values with
17 significant digits, so a save/load round trip is bitwise exact.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import lti
from .errors import BadPeriod, ConfigError, ParseError

OPEN_LOOP = "open_loop"
CLOSED_LOOP = "closed_loop"


@dataclass(frozen=True)
class Dataset:
    """Time series from one experiment.

    ``noise`` is the measurement-noise realization used by the simulator.
    It is kept only as a debugging/validation aid and is never serialized;
    real experiments have no access to it.
    """

    kind: str
    u: np.ndarray
    y: np.ndarray
    r: np.ndarray | None = None
    noise: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in (OPEN_LOOP, CLOSED_LOOP):
            raise ConfigError(f"unknown dataset kind {self.kind!r}")
        n = len(self.u)
        if n < 1 or len(self.y) != n:
            raise ConfigError("u and y must have identical nonzero length")
        if self.kind == OPEN_LOOP and self.r is not None:
            raise ConfigError("open-loop datasets carry no reference series")
        if self.kind == CLOSED_LOOP:
            if self.r is None or len(self.r) != n:
                raise ConfigError("closed-loop datasets need r of matching length")

    @property
    def N(self):
        return len(self.u)

    @property
    def excitation(self):
        """The experiment's probing signal: u in open loop, r in closed loop."""
        return self.u if self.kind == OPEN_LOOP else self.r


@dataclass(frozen=True)
class SquareWave:
    period: int
    amplitude: float
    n: int


@dataclass(frozen=True)
class ExperimentConfig:
    plant: lti.TransferOperator
    mode: str
    excitation: object  # SquareWave or array-like series
    noise_variance: float = 0.0
    seed: int = 0
    initial_controller: lti.TransferOperator | None = None

    def __post_init__(self):
        if self.mode not in (OPEN_LOOP, CLOSED_LOOP):
            raise ConfigError(f"unknown experiment mode {self.mode!r}")
        if self.noise_variance < 0:
            raise ConfigError("noise_variance must be >= 0")
        if self.mode == CLOSED_LOOP and self.initial_controller is None:
            raise ConfigError("closed-loop experiments need an initial controller")
        if isinstance(self.excitation, SquareWave):
            if self.excitation.n < self.excitation.period:
                raise ConfigError("excitation length must cover at least one period")


def square_wave(period: int, amplitude: float, n: int) -> np.ndarray:
    """Symmetric square wave starting at +amplitude at t=1.

    The first half-period sits at +amplitude, the second at -amplitude.
    """
    if period < 2:
        raise BadPeriod("period must be at least 2 samples")
    if n < 1:
        raise ValueError("n must be >= 1")
    t = np.arange(n)
    return np.where((t % period) < period / 2.0, amplitude, -amplitude).astype(float)


def gaussian_noise(seed: int, variance: float, n: int) -> np.ndarray:
    """i.i.d. zero-mean normal noise, deterministic per seed (PCG64 generator)."""
    if variance < 0:
        raise ValueError("variance must be >= 0")
    if variance == 0:
        return np.zeros(n)
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, np.sqrt(variance), n)


def _excitation_series(cfg: ExperimentConfig) -> np.ndarray:
    if isinstance(cfg.excitation, SquareWave):
        w = cfg.excitation
        return square_wave(w.period, w.amplitude, w.n)
    return np.asarray(cfg.excitation, dtype=float)


def run_experiment(cfg: ExperimentConfig) -> Dataset:
    """Simulate one experiment and assemble the dataset.

    A single noise realization v(t) is generated per run and injected
    through the loop equations, so u and y share the same v, as the
    closed-loop relations require.
    """
    x = _excitation_series(cfg)
    n = len(x)
    v = gaussian_noise(cfg.seed, cfg.noise_variance, n)
    G = cfg.plant

    if cfg.mode == OPEN_LOOP:
        u = x
        y = lti.simulate(G, u) + v
        return Dataset(kind=OPEN_LOOP, u=u, y=y, noise=v)

    C0 = cfg.initial_controller
    maps = lti.closed_loop(G, C0)
    r = x
    y = lti.simulate(maps.T, r) + lti.simulate(maps.S, v)
    u = lti.simulate(lti.tf_mul(lti.tf_inv(G), maps.T), r) - lti.simulate(
        lti.tf_mul(C0, maps.S), v
    )
    if cfg.noise_variance == 0:
        # Loop-consistency guard: u must equal C0*(r - y) for noiseless data.
        u_check = lti.simulate(C0, r - y)
        err = float(np.max(np.abs(u - u_check)))
        scale = 1.0 + float(np.max(np.abs(u)))
        if err > 1e-8 * scale:
            raise AssertionError(f"closed-loop consistency violated: {err:.3e}")
    return Dataset(kind=CLOSED_LOOP, r=r, u=u, y=y, noise=v)


def _format_rows(header, columns):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    n = len(columns[0])
    for t in range(n):
        cells = [str(t + 1)] + [format(col[t], ".17g") for col in columns]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def save_dataset(d: Dataset, path) -> None:
    if d.kind == OPEN_LOOP:
        text = _format_rows(["t", "u", "y"], [d.u, d.y])
    else:
        text = _format_rows(["t", "r", "u", "y"], [d.r, d.u, d.y])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def load_dataset(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ParseError("empty dataset file")
    header = lines[0].split(",")
    if header == ["t", "u", "y"]:
        kind = OPEN_LOOP
    elif header == ["t", "r", "u", "y"]:
        kind = CLOSED_LOOP
    else:
        raise ParseError(f"unrecognized header {lines[0]!r}")
    ncols = len(header)
    rows = []
    for i, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != ncols:
            raise ParseError(f"line {i}: expected {ncols} cells, got {len(cells)}")
        try:
            rows.append([float(c) for c in cells[1:]])
        except ValueError as exc:
            raise ParseError(f"line {i}: non-numeric cell ({exc})") from exc
    if not rows:
        raise ParseError("dataset file has no data rows")
    data = np.asarray(rows, dtype=float)
    if kind == OPEN_LOOP:
        return Dataset(kind=kind, u=data[:, 0], y=data[:, 1])
    return Dataset(kind=kind, r=data[:, 0], u=data[:, 1], y=data[:, 2])
