"""Time-domain signal container, preconditioning, and file ingestion.

Everything here is a pure function over immutable values; results are safe
to share between threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError

#: Relative tolerance used to validate uniform time spacing in CSV input.
UNIFORM_SPACING_RTOL = 1e-6

WINDOWS = ("none", "hann")


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled real-valued signal.

    Parameters
    ----------
    samples : array_like
        At least two finite values.
    dt : float
        Positive sample spacing in seconds.
    label : str, optional
        Identifier carried through transformations.
    """

    samples: np.ndarray
    dt: float
    label: str | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size < 2:
            raise InputError("signal must be one-dimensional with at least 2 samples")
        if not np.all(np.isfinite(samples)):
            raise InputError("signal contains non-finite samples")
        try:
            dt = float(self.dt)
        except (TypeError, ValueError):
            raise InputError(f"dt must be a number, got {self.dt!r}") from None
        if not (math.isfinite(dt) and dt > 0):
            raise InputError(f"dt must be a positive finite number, got {self.dt!r}")
        object.__setattr__(self, "dt", dt)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.dt


@dataclass(frozen=True)
class PreprocessConfig:
    """Signal conditioning applied before spectral estimation.

    ``detrend`` subtracts the sample mean, ``window`` tapers with a Hann
    profile, ``zero_pad_to`` extends with trailing zeros. Applied in that
    order; the all-default configuration is the identity.
    """

    window: str = "none"
    detrend: bool = False
    zero_pad_to: int | None = None

    def __post_init__(self):
        if self.window not in WINDOWS:
            raise InputError(f"unknown window {self.window!r}; expected one of {WINDOWS}")
        if self.zero_pad_to is not None and int(self.zero_pad_to) < 2:
            raise InputError("zero_pad_to must be at least 2")


def preprocess(x: TimeSeries, cfg: PreprocessConfig) -> TimeSeries:
    """Detrend, window, then zero-pad ``x``; dt and label are unchanged."""
    y = x.samples
    if cfg.detrend:
        y = y - y.mean()
    if cfg.window == "hann":
        # w_n = 0.5*(1 - cos(2*pi*n/(N-1))), endpoints exactly zero
        y = y * np.hanning(y.size)
    if cfg.zero_pad_to is not None:
        target = int(cfg.zero_pad_to)
        if target < y.size:
            raise InputError(
                f"zero_pad_to={target} is shorter than the signal ({y.size} samples)"
            )
        y = np.concatenate([y, np.zeros(target - y.size)])
    return TimeSeries(y, x.dt, x.label)


def autocorrelation(x: TimeSeries, max_lag: int) -> TimeSeries:
    """Unbiased sample autocorrelation for lags 0..max_lag.

    C(l) = (1/(N-l)) * sum_n x[n]*x[n+l]. The mean is not removed here;
    detrend first if that is wanted. dt is preserved so lag l maps to time
    l*dt.
    """
    n = len(x)
    if not 1 <= max_lag < n:
        raise InputError(f"max_lag must be in [1, {n - 1}], got {max_lag}")
    s = x.samples
    c = np.array([s[: n - lag] @ s[lag:] / (n - lag) for lag in range(max_lag + 1)])
    return TimeSeries(c, x.dt, x.label)


def load_timeseries_csv(path: str | Path) -> TimeSeries:
    """Read a ``t,value`` CSV with uniform time spacing.

    Spacing is validated to relative tolerance 1e-6; non-uniform input is
    rejected with a descriptive error.
    """
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise InputError(f"{path}: empty file")
    header = [h.strip().lower() for h in lines[0].split(",")]
    if header[:2] != ["t", "value"]:
        raise InputError(f"{path}: expected header 't,value', got {lines[0]!r}")
    t, v = [], []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) < 2:
            raise InputError(f"{path}:{i}: expected two comma-separated fields")
        try:
            t.append(float(parts[0]))
            v.append(float(parts[1]))
        except ValueError:
            raise InputError(f"{path}:{i}: non-numeric row {line!r}") from None
    if len(t) < 2:
        raise InputError(f"{path}: need at least 2 rows")
    t = np.asarray(t)
    steps = np.diff(t)
    dt = float(np.median(steps))
    if dt <= 0:
        raise InputError(f"{path}: time column must be strictly increasing")
    if np.max(np.abs(steps - dt)) > UNIFORM_SPACING_RTOL * abs(dt):
        worst = int(np.argmax(np.abs(steps - dt)))
        raise InputError(
            f"{path}: non-uniform time spacing near row {worst + 2} "
            f"(step {steps[worst]:.9g} vs median {dt:.9g})"
        )
    return TimeSeries(np.asarray(v), dt)


def save_timeseries_csv(x: TimeSeries, path: str | Path) -> None:
    """Write ``x`` as a ``t,value`` CSV readable by :func:`load_timeseries_csv`."""
    rows = ["t,value"]
    rows += [f"{float(t)!r},{float(v)!r}" for t, v in zip(x.times, x.samples)]
    Path(path).write_text("\n".join(rows) + "\n")


def load_timeseries_json(path: str | Path) -> TimeSeries:
    """Read a ``{dt, samples, label}`` JSON record."""
    path = Path(path)
    try:
        record = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(record, dict) or "dt" not in record or "samples" not in record:
        raise InputError(f"{path}: expected an object with 'dt' and 'samples'")
    return TimeSeries(record["samples"], record["dt"], record.get("label"))


def save_timeseries_json(x: TimeSeries, path: str | Path) -> None:
    record = {"dt": x.dt, "samples": x.samples.tolist(), "label": x.label}
    Path(path).write_text(json.dumps(record))
