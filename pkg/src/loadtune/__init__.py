"""Data-driven tuning of restricted-order feedback controllers for
load-disturbance rejection.

The pipeline reinterprets plant input/output data as a virtual
regulation experiment, then identifies the controller's zeros and poles
by minimizing either the norm of a one-step-ahead prediction error or
its correlation with the experiment's excitation signal.
"""

from .lti import (
    TransferOperator,
    closed_loop,
    rational_equal,
    simulate,
    stability_report,
    tf_add,
    tf_inv,
    tf_make,
    tf_mul,
    tf_neg,
    tf_sub,
)
from .predict import ControllerSpec
from .signals import (
    CLOSED_LOOP,
    OPEN_LOOP,
    Dataset,
    ExperimentConfig,
    SquareWave,
    gaussian_noise,
    load_dataset,
    run_experiment,
    save_dataset,
    square_wave,
)
from .virtual import VirtualSignals, make_virtual
from .spectra import (
    FilterMagnitude,
    SpectralEstimate,
    apply_zero_phase,
    cross_psd,
    design_filter,
    disturbance_psd,
    record_csd,
    record_psd,
    welch_psd,
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
    TuningResult,
    build_instrument,
    simplex_minimize,
    tune,
)
from .evaluate import (
    EvaluationScenario,
    MonteCarloConfig,
    disturbance_cost,
    ideal_controller,
    monte_carlo,
    optimal_controller_oracle,
)

__version__ = "0.1.0"
