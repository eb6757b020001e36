"""Gridless recovery of sparse line spectra from undersampled signals.

Submodules follow the pipeline: ``signal`` (model and scoring),
``trigpoly`` (positive trigonometric polynomial machinery), ``conic``
(structured SDP solver), ``estimators`` (the four recovery programs and
localization), ``harness`` (Monte Carlo experiment driver), ``cli``.
"""

from .conic import SolveOptions, SolverFailure
from .estimators import (
    Estimate,
    atomic_sdp_standard,
    certificate_3s,
    dual_sdp_block,
    dual_sdp_standard,
    dual_sdp_weighted,
    known_poles_sdp,
    localize,
    recover,
    recover_coeffs,
    vandermonde_decompose,
    verify_certificate,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    ExperimentResult,
    preset_config,
    run_experiment,
    sweep_phase_transition,
    verify_theorem3,
)
from .signal import (
    Band,
    Block,
    KnownPoles,
    LineSpectrum,
    NoPrior,
    ObservedSignal,
    PriorSpec,
    Probabilistic,
    RecoveryScore,
    SampleSet,
    load_signal,
    probabilistic_from_pdf,
    random_instance,
    random_sample_set,
    save_signal,
    score_recovery,
    synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "Band",
    "Block",
    "ConfigError",
    "Estimate",
    "ExperimentConfig",
    "ExperimentResult",
    "KnownPoles",
    "LineSpectrum",
    "NoPrior",
    "ObservedSignal",
    "PriorSpec",
    "Probabilistic",
    "RecoveryScore",
    "SampleSet",
    "SolveOptions",
    "SolverFailure",
    "atomic_sdp_standard",
    "certificate_3s",
    "dual_sdp_block",
    "dual_sdp_standard",
    "dual_sdp_weighted",
    "known_poles_sdp",
    "load_signal",
    "localize",
    "preset_config",
    "probabilistic_from_pdf",
    "random_instance",
    "random_sample_set",
    "recover",
    "recover_coeffs",
    "run_experiment",
    "save_signal",
    "score_recovery",
    "sweep_phase_transition",
    "synthesize",
    "vandermonde_decompose",
    "verify_certificate",
    "verify_theorem3",
]
