"""chargesim: two capacitively coupled double-dot charge qubits.

Pulse-driven master-equation simulator with the conditional-rotation
experiments (conditional Rabi, two-pulse control, CNOT process tomography,
Landau-Zener-Stueckelberg controlled rotations) and the accompanying
fidelity analysis, plus a CSV/SVG command-line front end.
"""

from .analysis import (
    FidelityReport,
    RabiFit,
    analytic_controlled_rotation,
    analytic_lzs,
    analytic_two_pulse,
    cnot_success_min,
    fidelity_report,
    fit_rabi,
    leakage_amplitude,
    locate_flip_width,
    process_fidelity,
    pulse_flip_fidelity,
)
from .cli import OutputSpec, RunConfig, dispatch, main, parse_config, serialize_config
from .dynamics import (
    DecoherenceParams,
    IntegrationConfig,
    Trajectory,
    evolve_complex,
    evolve_real,
    run_to_populations,
    run_to_probabilities,
)
from .errors import (
    ChargeSimError,
    FitDiverged,
    InsufficientData,
    InvalidLabel,
    OutOfRange,
    OverlapAmbiguity,
    ParseError,
    StateInvalid,
    StepTooLarge,
    ValidationError,
)
from .experiments import (
    FidelityCurve,
    ProbabilityMap,
    SweepGrid,
    TomographyMatrix,
    run_cnot_tomography,
    run_conditional_rabi,
    run_controlled_universal,
    run_fidelity_vs_j,
    run_lzs_control,
    run_sync_scan,
    run_two_pulse,
)
from .model import (
    ProbabilityPair,
    QubitPairParams,
    build_hamiltonian,
    default_params,
    from_real_form,
    ghz_to_uev,
    thermal_initial_state,
    to_real_form,
    uev_to_ghz,
)
from .pulses import (
    Pulse,
    Schedule,
    evaluate,
    lzs_schedule,
    rabi_schedule,
    sync_schedule,
    tomography_schedule,
    two_pulse_schedule,
    waveform_table,
)

__version__ = "0.1.0"

__all__ = [
    "ChargeSimError",
    "DecoherenceParams",
    "FidelityCurve",
    "FidelityReport",
    "FitDiverged",
    "InsufficientData",
    "IntegrationConfig",
    "InvalidLabel",
    "OutOfRange",
    "OutputSpec",
    "OverlapAmbiguity",
    "ParseError",
    "ProbabilityMap",
    "ProbabilityPair",
    "Pulse",
    "QubitPairParams",
    "RabiFit",
    "RunConfig",
    "Schedule",
    "StateInvalid",
    "StepTooLarge",
    "SweepGrid",
    "TomographyMatrix",
    "Trajectory",
    "ValidationError",
    "analytic_controlled_rotation",
    "analytic_lzs",
    "analytic_two_pulse",
    "build_hamiltonian",
    "cnot_success_min",
    "default_params",
    "dispatch",
    "evaluate",
    "evolve_complex",
    "evolve_real",
    "fidelity_report",
    "fit_rabi",
    "from_real_form",
    "ghz_to_uev",
    "leakage_amplitude",
    "locate_flip_width",
    "lzs_schedule",
    "main",
    "parse_config",
    "process_fidelity",
    "pulse_flip_fidelity",
    "rabi_schedule",
    "run_to_probabilities",
    "run_cnot_tomography",
    "run_conditional_rabi",
    "run_controlled_universal",
    "run_fidelity_vs_j",
    "run_lzs_control",
    "run_sync_scan",
    "run_to_populations",
    "run_two_pulse",
    "serialize_config",
    "sync_schedule",
    "thermal_initial_state",
    "to_real_form",
    "tomography_schedule",
    "two_pulse_schedule",
    "uev_to_ghz",
    "waveform_table",
    "__version__",
]
