"""Stability toolkit for the resting state of plane channel flow with
Navier-slip walls: critical viscosity, dispersion curve, critical
frequency, growing-mode synthesis and a nonlinear pseudospectral
simulator with energy diagnostics."""

__version__ = "0.1.0"

from .errors import (
    BracketFailure,
    ConfigError,
    ConvergenceFailure,
    NonAdmissibleProfile,
    SlipstabError,
    TimeStepError,
)
from .model import (
    DerivedConstants,
    SlipConfig,
    constant_c0,
    critical_viscosity,
    critical_viscosity_closed_form,
    derived_constants,
    maximizer_cubic,
)
from .functionals import (
    FunctionalValue,
    Grid1D,
    Profile,
    default_grid,
    derivative,
    functional_E,
    functional_J,
    functional_N,
    functional_Z,
    maximize_Z_on_sphere,
)
from .eigensolver import (
    DispersionRoot,
    ModeProblem,
    SpectrumPoint,
    dispersion_det,
    dispersion_lambda,
    recover_mode,
    solve_principal_eigen,
)
from .thresholds import (
    CriticalFrequency,
    GrowthEnvelope,
    capital_lambda,
    critical_frequency,
    growth_envelope,
    n_star,
)
from .modes import Cutoff, SynthesizedMode, build_synthesis, normalized_seed, synthesize
from .simulator import (
    DecayReport,
    EnergyLedger,
    EscapeReport,
    FlowState,
    PressureField,
    Stepper,
    decay_experiment,
    energy_audit,
    escape_experiment,
    recover_pressure,
    step,
)
