"""Spectral gaps of damped perturbed harmonic oscillators."""

from ._core import (
    DomainError,
    NumericError,
    OscgapError,
    ScenarioError,
    WickSymbol,
    __version__,
    average,
    builtin_names,
    load_scenario,
    moyal,
    poisson,
    resonance_module,
    run,
    scenario_hash,
    verify_manifest,
    windowed_spectrum,
)

__all__ = [
    "DomainError",
    "NumericError",
    "OscgapError",
    "ScenarioError",
    "WickSymbol",
    "__version__",
    "average",
    "builtin_names",
    "load_scenario",
    "moyal",
    "poisson",
    "resonance_module",
    "run",
    "scenario_hash",
    "verify_manifest",
    "windowed_spectrum",
]
