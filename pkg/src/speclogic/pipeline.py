"""End-to-end composition: signal -> spectrum -> atoms -> predicates -> facts.

A run preprocesses the input, estimates a sparse Lorentzian decomposition
with the configured spectral back-end, projects the atoms into predicates,
and forward-chains the configured rules, capturing every intermediate in a
:class:`RunResult`. Back-ends:

``pade_z``
    Treats the samples as power-series coefficients of F(z) = sum x[n] z^n,
    fits an [m/n] rational approximant, and maps its pole/residue pairs to
    signal modes. Poles of F sit at the reciprocals of the per-sample mode
    bases z_k, so the approximant's poles p are inverted (z = 1/p, mode
    coefficient c = -r/p, exact partial fractions) before the stable-pole
    mapping of :func:`speclogic.sparse.atoms_from_poles`.

``matrix_pencil``
    Hankel matrix pencil directly on the samples.

``lanczos``
    Operates on symmetric operators, not time series; use
    :func:`run_hermitian`. Ritz values and weights are broadened into a
    density with half-width ``eta``, peaks are picked greedily and refined,
    and the broadening is deconvolved out of the fitted linewidths
    (gamma - eta, floored at eta/10) while amplitudes report each peak's
    integrated mass, i.e. its Ritz weight.

Windows of :func:`detect_anomalies` are independent; results are ordered by
window start regardless of how they are computed.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, IllConditionedError, InputError, SpecLogicError
from .lanczos import HermitianOp, RitzSpectrum, lanczos_tridiag, spectral_density, tridiag_eigen
from .pade import PoleSet, RationalApprox, extract_poles, fit_pade, taylor_coefficients
from .rules import ProofTrace, RuleSet, infer, load_rules, parse_rules
from .signal import PreprocessConfig, TimeSeries, preprocess
from .sparse import (
    LorentzianAtom,
    LorentzianDictionary,
    SampledSpectrum,
    SparseSpectrum,
    atoms_from_poles,
    fit_matrix_pencil,
    fit_omp,
    refine_nls,
)
from .symbolic import BinningConfig, SymbolSet, project

BACKENDS = ("pade_z", "lanczos", "matrix_pencil")

MAX_PADE_ORDER = 64


@dataclass(frozen=True)
class PadeSettings:
    """Orders for the rational back-end; ``auto`` sweeps n = 1..n_max."""

    m: int = 1
    n: int = 2
    auto: bool = False
    n_max: int = 8
    residual_tol: float = 1e-8

    def __post_init__(self):
        if not (0 <= self.m <= MAX_PADE_ORDER and 0 <= self.n <= MAX_PADE_ORDER):
            raise ConfigError(f"orders must lie in [0, {MAX_PADE_ORDER}]")
        if not 1 <= self.n_max <= MAX_PADE_ORDER:
            raise ConfigError(f"n_max must lie in [1, {MAX_PADE_ORDER}]")


@dataclass(frozen=True)
class LanczosSettings:
    """Krylov depth (None means the operator dimension) and broadening."""

    k: int | None = None
    eta: float = 0.05
    reorthogonalize: bool = True

    def __post_init__(self):
        if self.k is not None and self.k < 1:
            raise ConfigError(f"k must be positive, got {self.k}")
        if not self.eta > 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")


@dataclass(frozen=True)
class SparseSettings:
    """Decomposition limits: ``k_max`` atoms, singular-value cutoff for the
    pencil, iteration budget for refinement, pursuit stop tolerance."""

    k_max: int = 4
    sv_tol: float = 1e-8
    nls_iters: int = 60
    omp_tol: float = 1e-6

    def __post_init__(self):
        if self.k_max < 1:
            raise ConfigError(f"k_max must be positive, got {self.k_max}")
        if self.nls_iters < 1:
            raise ConfigError(f"nls_iters must be positive, got {self.nls_iters}")


@dataclass
class PipelineConfig:
    """Everything a run needs; serializable to a single JSON object.

    Rules come either from ``rules_path`` or inline ``rules_text`` (exactly
    one must be set before running).
    """

    binning: BinningConfig
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    backend: str = "matrix_pencil"
    pade: PadeSettings = field(default_factory=PadeSettings)
    lanczos: LanczosSettings = field(default_factory=LanczosSettings)
    sparse: SparseSettings = field(default_factory=SparseSettings)
    rules_path: str | None = None
    rules_text: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}; expected one of {BACKENDS}")
        self._ruleset: RuleSet | None = None

    def load_ruleset(self) -> RuleSet:
        """Parse (and cache) the configured rules; validates stratification."""
        if self._ruleset is None:
            if (self.rules_path is None) == (self.rules_text is None):
                raise ConfigError("exactly one of rules_path or rules_text must be set")
            if self.rules_text is not None:
                self._ruleset = parse_rules(self.rules_text)
            else:
                self._ruleset = load_rules(self.rules_path)
        return self._ruleset

    def to_dict(self) -> dict:
        return {
            "preprocess": {
                "window": self.preprocess.window,
                "detrend": self.preprocess.detrend,
                "zero_pad_to": self.preprocess.zero_pad_to,
            },
            "backend": self.backend,
            "pade": {
                "m": self.pade.m,
                "n": self.pade.n,
                "auto": self.pade.auto,
                "n_max": self.pade.n_max,
                "residual_tol": self.pade.residual_tol,
            },
            "lanczos": {
                "k": self.lanczos.k,
                "eta": self.lanczos.eta,
                "reorthogonalize": self.lanczos.reorthogonalize,
            },
            "sparse": {
                "k_max": self.sparse.k_max,
                "sv_tol": self.sparse.sv_tol,
                "nls_iters": self.sparse.nls_iters,
                "omp_tol": self.sparse.omp_tol,
            },
            "binning": self.binning.to_dict(),
            "rules_path": self.rules_path,
            "rules_text": self.rules_text,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, record: dict) -> "PipelineConfig":
        try:
            return cls(
                binning=BinningConfig.from_dict(record["binning"]),
                preprocess=PreprocessConfig(**record.get("preprocess", {})),
                backend=record.get("backend", "matrix_pencil"),
                pade=PadeSettings(**record.get("pade", {})),
                lanczos=LanczosSettings(**record.get("lanczos", {})),
                sparse=SparseSettings(**record.get("sparse", {})),
                rules_path=record.get("rules_path"),
                rules_text=record.get("rules_text"),
                seed=int(record.get("seed", 0)),
            )
        except TypeError as exc:
            raise ConfigError(f"bad pipeline config: {exc}") from None

    @classmethod
    def from_json_file(cls, path: str | Path) -> "PipelineConfig":
        try:
            record = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(record)


@dataclass(frozen=True, eq=False)
class RunResult:
    """All intermediates of one pipeline run.

    ``diagnostics`` holds per-stage counters and residuals and is part of
    the serialized form; ``timings`` (seconds per stage) is informational
    only and deliberately left out of serialization so that identical inputs
    produce byte-identical output.
    """

    atoms: SparseSpectrum
    predicates: SymbolSet
    derived: SymbolSet
    trace: ProofTrace
    diagnostics: dict
    timings: dict

    def to_dict(self) -> dict:
        return {
            "atoms": self.atoms.to_dict(),
            "predicates": self.predicates.to_json(),
            "derived": self.derived.to_json(),
            "trace": self.trace.to_json(),
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        """Canonical serialization: sorted keys, compact separators."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


class SweepResult(NamedTuple):
    """Outcome of the automatic order sweep."""

    m: int
    n: int
    residual: float
    converged: bool


def auto_order_sweep(c, n_max: int, residual_tol: float) -> SweepResult:
    """Pick rational orders by increasing n (with m = n-1) until the
    re-expansion of the fit reproduces the whole available series to
    ``residual_tol`` (relative). Falls back to the minimal-residual order
    with ``converged=False`` when no order reaches the tolerance.
    """
    c = np.asarray(c, dtype=float)
    if n_max < 1:
        raise InputError(f"n_max must be positive, got {n_max}")
    scale = float(np.linalg.norm(c))
    if scale == 0:
        return SweepResult(0, 1, 0.0, True)
    best: SweepResult | None = None
    for n in range(1, min(n_max, c.size // 2) + 1):
        m = n - 1
        try:
            r = fit_pade(c, m, n)
        except IllConditionedError as exc:
            candidate = SweepResult(m, n, exc.residual / scale, False)
        else:
            tail = taylor_coefficients(r, c.size)
            candidate = SweepResult(m, n, float(np.linalg.norm(tail - c)) / scale, False)
        if candidate.residual <= residual_tol:
            return candidate._replace(converged=True)
        if best is None or candidate.residual < best.residual:
            best = candidate
    return best


def _signal_modes(rational: RationalApprox, poles: PoleSet) -> tuple[PoleSet, int]:
    """Invert approximant poles into per-sample mode bases with coefficients.

    F(z) ~ r/(z - p) contributes (-r/p) * (1/p)^n to sample n, so the mode
    base is z = 1/p with coefficient c = -r/p. Poles at the origin carry no
    mode and are dropped.
    """
    zs, cs = [], []
    dropped = 0
    for p, r in zip(poles.poles, poles.residues):
        if abs(p) < 1e-12:
            dropped += 1
            continue
        zs.append(1.0 / p)
        cs.append(-r / p)
    return PoleSet(np.asarray(zs, complex), np.asarray(cs, complex)), dropped


def _estimate(x: TimeSeries, cfg: PipelineConfig, diagnostics: dict) -> SparseSpectrum:
    if cfg.backend == "matrix_pencil":
        sp = fit_matrix_pencil(x, 2 * cfg.sparse.k_max, cfg.sparse.sv_tol)
        diagnostics["estimate"] = {
            "backend": "matrix_pencil",
            "residual_norm": sp.residual_norm,
            "dropped": sp.dropped,
        }
        return sp
    if cfg.backend == "pade_z":
        c = x.samples
        if cfg.pade.auto:
            sweep = auto_order_sweep(c, cfg.pade.n_max, cfg.pade.residual_tol)
            m, n = sweep.m, sweep.n
            order_diag = {"auto": True, "residual": sweep.residual, "converged": sweep.converged}
        else:
            m, n = cfg.pade.m, cfg.pade.n
            order_diag = {"auto": False}
        rational = fit_pade(c, m, n)
        modes, pre_dropped = _signal_modes(rational, extract_poles(rational))
        sp = atoms_from_poles(modes, x.dt)
        sp = replace(sp, dropped=sp.dropped + pre_dropped)
        diagnostics["estimate"] = {
            "backend": "pade_z",
            "orders": [m, n],
            "dropped": sp.dropped,
            **order_diag,
        }
        return sp
    raise ConfigError(
        "the lanczos backend estimates spectra of operators, not time series; "
        "use run_hermitian"
    )


def _atoms_from_ritz(ritz: RitzSpectrum, eta: float, cfg: SparseSettings) -> SparseSpectrum:
    """Peak-fit the broadened density, then deconvolve the broadening.

    The density is by construction a sum of width-eta kernels centered on
    the Ritz values, so the dictionary offers exactly those candidates and
    greedy pursuit recovers them (or the heaviest ones when k_max
    truncates). Output amplitudes are the integrated masses pi*gamma*amp of
    the fitted peaks, i.e. the Ritz weights they represent.
    """
    lo = float(ritz.lambdas.min()) - 20 * eta
    hi = float(ritz.lambdas.max()) + 20 * eta
    grid = np.linspace(lo, hi, 2048)
    target = SampledSpectrum(grid, spectral_density(ritz, grid, eta))
    dictionary = LorentzianDictionary(np.unique(ritz.lambdas), np.array([eta]))
    sp = fit_omp(target, dictionary, cfg.k_max, cfg.omp_tol)
    if sp.atoms:
        sp = refine_nls(sp, target, cfg.nls_iters)
    deconvolved = [
        LorentzianAtom(at.omega, max(at.gamma - eta, eta / 10.0), math.pi * at.gamma * at.amp)
        for at in sp.atoms
    ]
    return SparseSpectrum.from_atoms(
        deconvolved, sp.residual_norm, sp.dropped, sp.converged
    )


class _StageTimer:
    def __init__(self):
        self.timings: dict[str, float] = {}

    def run(self, stage: str, fn, *args):
        start = time.perf_counter()
        try:
            return fn(*args)
        except SpecLogicError as exc:
            if exc.stage is None:
                exc.stage = stage
            raise
        finally:
            self.timings[stage] = time.perf_counter() - start


def _finish(
    atoms: SparseSpectrum, cfg: PipelineConfig, timer: _StageTimer, diagnostics: dict
) -> RunResult:
    ruleset = timer.run("rules", cfg.load_ruleset)
    predicates = timer.run("project", project, atoms, cfg.binning)
    derived, trace = timer.run("infer", infer, ruleset, predicates)
    diagnostics["project"] = {"predicates": len(predicates.names)}
    diagnostics["infer"] = {"firings": len(trace), "derived": len(derived.names)}
    return RunResult(atoms, predicates, derived, trace, diagnostics, timer.timings)


def run(x: TimeSeries, cfg: PipelineConfig) -> RunResult:
    """Execute the full pipeline on a time series."""
    timer = _StageTimer()
    diagnostics: dict = {}
    timer.run("rules", cfg.load_ruleset)
    pre = timer.run("preprocess", preprocess, x, cfg.preprocess)
    diagnostics["preprocess"] = {"samples": len(pre)}
    atoms = timer.run("estimate", _estimate, pre, cfg, diagnostics)
    return _finish(atoms, cfg, timer, diagnostics)


def run_hermitian(op: HermitianOp, q1, cfg: PipelineConfig) -> RunResult:
    """Execute the pipeline on a symmetric operator (lanczos back-end only).

    Preprocessing does not apply; the Krylov start vector plays the role of
    the signal.
    """
    if cfg.backend != "lanczos":
        raise ConfigError(
            f"run_hermitian requires the lanczos backend, config says {cfg.backend!r}"
        )
    timer = _StageTimer()
    diagnostics: dict = {}
    timer.run("rules", cfg.load_ruleset)
    k = cfg.lanczos.k if cfg.lanczos.k is not None else op.dim
    tri = timer.run(
        "estimate", lanczos_tridiag, op, q1, k, cfg.lanczos.reorthogonalize
    )
    ritz = timer.run("estimate_eigen", tridiag_eigen, tri)
    atoms = timer.run("decompose", _atoms_from_ritz, ritz, cfg.lanczos.eta, cfg.sparse)
    diagnostics["estimate"] = {
        "backend": "lanczos",
        "steps": tri.k,
        "breakdown": tri.breakdown,
        "residual_norm": atoms.residual_norm,
    }
    return _finish(atoms, cfg, timer, diagnostics)


def detect_anomalies(
    x: TimeSeries,
    cfg: PipelineConfig,
    window: int,
    stride: int,
    alert_head: str,
) -> list[tuple[int, RunResult]]:
    """Run the pipeline over sliding windows; keep those deriving the alert.

    Window starts are 0, stride, 2*stride, ... up to len(x)-window; every
    index reachable by the stride is examined. Returns (start, result)
    pairs, ordered by start, for windows whose derived facts contain
    ``alert_head``.
    """
    n = len(x)
    if not 2 <= window <= n:
        raise InputError(f"window must be in [2, {n}], got {window}")
    if stride < 1:
        raise InputError(f"stride must be positive, got {stride}")
    flagged = []
    for start in range(0, n - window + 1, stride):
        segment = TimeSeries(x.samples[start : start + window], x.dt, x.label)
        result = run(segment, cfg)
        if alert_head in result.derived.names:
            flagged.append((start, result))
    return flagged


def window_count(n: int, window: int, stride: int) -> int:
    """Number of windows examined by :func:`detect_anomalies`."""
    return (n - window) // stride + 1
