"""Shared fixtures: the benchmark plant, reference model, controller
structures and a few canonical datasets."""

import numpy as np
import pytest

from loadtune import (
    ExperimentConfig,
    SquareWave,
    run_experiment,
    tf_make,
)
from loadtune.predict import ControllerSpec
from loadtune.signals import CLOSED_LOOP, OPEN_LOOP


@pytest.fixture(scope="session")
def plant():
    # G = (1/120) (1 - 0.7 q^-1) / (1 - 0.95 q^-1)^2
    return tf_make(
        np.convolve([1.0, -0.7], [1.0 / 120.0]),
        np.convolve([1.0, -0.95], [1.0, -0.95]),
    )


@pytest.fixture(scope="session")
def reference_model():
    # Qd = (1/120) (1 - 0.7 q^-1)(1 - q^-1) / ((1 - 0.9 q^-1)(1 - 0.95 q^-1)^2)
    num = np.convolve(np.convolve([1.0, -0.7], [1.0, -1.0]), [1.0 / 120.0])
    den = np.convolve([1.0, -0.9], np.convolve([1.0, -0.95], [1.0, -0.95]))
    return tf_make(num, den)


@pytest.fixture(scope="session")
def Cf_pidf():
    # Integrator 1 / (1 - q^-1)
    return tf_make([1.0], [1.0, -1.0])


@pytest.fixture(scope="session")
def Cf_pi():
    # Delayed integrator q^-1 / (1 - q^-1)
    return tf_make([0.0, 1.0], [1.0, -1.0])


@pytest.fixture(scope="session")
def rho_ideal():
    return np.array([-0.7, 0.0, 12.0, -22.8, 10.83])


@pytest.fixture(scope="session")
def pidf_spec(Cf_pidf):
    return ControllerSpec(n_a=1, n_b=3, Cf=Cf_pidf)


@pytest.fixture(scope="session")
def ideal_pidf(pidf_spec, rho_ideal):
    return pidf_spec.with_rho(rho_ideal).realize()


@pytest.fixture(scope="session")
def initial_pidf(pidf_spec, rho_ideal):
    """Detuned starting controller: half the ideal parameters."""
    return pidf_spec.with_rho(0.5 * rho_ideal).realize()


@pytest.fixture(scope="session")
def step_disturbance():
    return np.ones(150)


@pytest.fixture(scope="session")
def excitation():
    return SquareWave(period=300, amplitude=1.0, n=3000)


@pytest.fixture(scope="session")
def ol_noiseless(plant, excitation):
    return run_experiment(
        ExperimentConfig(plant=plant, mode=OPEN_LOOP, excitation=excitation)
    )


@pytest.fixture(scope="session")
def cl_noiseless(plant, excitation, initial_pidf):
    return run_experiment(
        ExperimentConfig(
            plant=plant,
            mode=CLOSED_LOOP,
            excitation=excitation,
            initial_controller=initial_pidf,
        )
    )


@pytest.fixture(scope="session")
def ol_noisy(plant, excitation):
    return run_experiment(
        ExperimentConfig(
            plant=plant,
            mode=OPEN_LOOP,
            excitation=excitation,
            noise_variance=0.0025,
            seed=7,
        )
    )


@pytest.fixture(scope="session")
def cl_noisy(plant, excitation, initial_pidf):
    return run_experiment(
        ExperimentConfig(
            plant=plant,
            mode=CLOSED_LOOP,
            excitation=excitation,
            noise_variance=0.0025,
            seed=7,
            initial_controller=initial_pidf,
        )
    )
