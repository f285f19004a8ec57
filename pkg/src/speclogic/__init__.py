"""speclogic: sparse spectral estimation feeding rule-based reasoning.

Signals become sums of Lorentzian resonances (via rational approximation,
Krylov tridiagonalization, or a matrix pencil), resonances become discrete
predicates, and predicates feed a stratified forward-chaining rule engine
that emits auditable proof traces.
"""

from .errors import (
    ConfigError,
    ConvergenceError,
    IllConditionedError,
    InputError,
    NumericError,
    PoleProximityError,
    RuleSyntaxError,
    SpecLogicError,
    StratificationError,
)
from .lanczos import (
    HermitianOp,
    RitzSpectrum,
    TridiagResult,
    lanczos_tridiag,
    spectral_density,
    tridiag_eigen,
)
from .pade import PoleSet, RationalApprox, eval_rational, extract_poles, fit_pade
from .pipeline import (
    PipelineConfig,
    RunResult,
    auto_order_sweep,
    detect_anomalies,
    run,
    run_hermitian,
)
from .benchmark import REGIME_NAMES, run_benchmark, synth_oscillator
from .rules import HornRule, ProofTrace, RuleSet, format_rules, infer, parse_rules, replay
from .signal import PreprocessConfig, TimeSeries, autocorrelation, preprocess
from .sparse import (
    LorentzianAtom,
    LorentzianDictionary,
    SampledSpectrum,
    SparseSpectrum,
    atoms_from_poles,
    eval_spectrum,
    fit_matrix_pencil,
    fit_omp,
    refine_nls,
)
from .symbolic import BinAxis, BinningConfig, Predicate, SymbolSet, kernel, project

__version__ = "0.1.0"

__all__ = [
    "BinAxis",
    "BinningConfig",
    "ConfigError",
    "ConvergenceError",
    "HermitianOp",
    "HornRule",
    "IllConditionedError",
    "InputError",
    "LorentzianAtom",
    "LorentzianDictionary",
    "NumericError",
    "PipelineConfig",
    "PoleProximityError",
    "PoleSet",
    "Predicate",
    "PreprocessConfig",
    "ProofTrace",
    "RationalApprox",
    "REGIME_NAMES",
    "RitzSpectrum",
    "RuleSet",
    "RuleSyntaxError",
    "RunResult",
    "SampledSpectrum",
    "SparseSpectrum",
    "SpecLogicError",
    "StratificationError",
    "SymbolSet",
    "TimeSeries",
    "TridiagResult",
    "atoms_from_poles",
    "auto_order_sweep",
    "autocorrelation",
    "detect_anomalies",
    "eval_rational",
    "eval_spectrum",
    "extract_poles",
    "fit_matrix_pencil",
    "fit_omp",
    "fit_pade",
    "format_rules",
    "infer",
    "kernel",
    "lanczos_tridiag",
    "parse_rules",
    "preprocess",
    "project",
    "refine_nls",
    "replay",
    "run",
    "run_benchmark",
    "run_hermitian",
    "spectral_density",
    "synth_oscillator",
    "tridiag_eigen",
]
