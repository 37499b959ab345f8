"""Delay-differential model of HCV dynamics under combination therapy.

Equilibria and reproduction number, delay-dependent linear stability,
Hopf normal form, a method-of-steps integrator, and scenario tooling.
"""

from .model import (
    Equilibrium,
    InvalidModelInput,
    ModelParams,
    NO_THERAPY,
    SystemState,
    TherapyEfficacies,
    basic_r0,
    combined_efficacy,
    critical_efficacy,
    endemic_equilibrium,
    uninfected_equilibrium,
    uninfected_equilibrium_point,
    vector_field,
)
from .stability import (
    CharCoefficients,
    DelayBound,
    OmegaAnalysis,
    RouthHurwitzCheck,
    StabilityError,
    char_coefficients,
    critical_delays,
    delay_length_bound,
    e1_verdict,
    omega_analysis,
    routh_hurwitz_zero_delay,
    transversality,
)
from .hopf import (
    CenterManifoldCoefficients,
    EigenData,
    HopfSummary,
    eigen_data,
    g_coefficients,
    hopf_summary,
    lambda_prime,
)
from .integrator import (
    HistorySpec,
    IntegrationConfig,
    Trajectory,
    classify_longrun,
    integrate,
    interpolate,
    svr_time,
)
from .scenarios import (
    PatientSeries,
    ScenarioConfig,
    StabilityReport,
    TABLE1,
    TABLE2,
    compare_patient,
    preset,
    run_scenario,
    stability_report,
)

__version__ = "0.1.0"

__all__ = [
    "Equilibrium", "InvalidModelInput", "ModelParams", "NO_THERAPY",
    "SystemState", "TherapyEfficacies", "basic_r0", "combined_efficacy",
    "critical_efficacy", "endemic_equilibrium", "uninfected_equilibrium",
    "uninfected_equilibrium_point", "vector_field",
    "CharCoefficients", "DelayBound", "OmegaAnalysis", "RouthHurwitzCheck",
    "StabilityError", "char_coefficients", "critical_delays",
    "delay_length_bound", "e1_verdict", "omega_analysis",
    "routh_hurwitz_zero_delay", "transversality",
    "CenterManifoldCoefficients", "EigenData", "HopfSummary", "eigen_data",
    "g_coefficients", "hopf_summary", "lambda_prime",
    "HistorySpec", "IntegrationConfig", "Trajectory", "classify_longrun",
    "integrate", "interpolate", "svr_time",
    "PatientSeries", "ScenarioConfig", "StabilityReport", "TABLE1", "TABLE2",
    "compare_patient", "preset", "run_scenario", "stability_report",
    "__version__",
]
