"""Rational [m/n] approximants built from power-series coefficients.

Given series coefficients c_0..c_L, the [m/n] approximant is the rational
function P_m(s)/Q_n(s) with Q_n(0) = 1 whose Taylor expansion reproduces
c_0..c_{m+n}. The denominator solves the Toeplitz moment system

    sum_{j=1..n} b_j c_{m+i-j} = -c_{m+i},   i = 1..n   (c_k = 0 for k < 0)

and the numerator follows by convolution. Rank-deficient systems (degenerate
blocks of the approximant table) are resolved by minimum-norm least squares.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import IllConditionedError, InputError, PoleProximityError

#: Solver residuals above this fraction of ||c|| are reported as failures.
MOMENT_RESIDUAL_RTOL = 1e-6

#: Two denominator roots closer than this are flagged as a multiple pole.
MULTIPLE_POLE_TOL = 1e-8

#: Evaluation refuses points within this distance of a denominator root.
POLE_PROXIMITY_TOL = 1e-12


def _horner(coeffs: np.ndarray, s: complex) -> np.complex128:
    """Evaluate a polynomial with ascending coefficients at ``s``.

    Works in numpy complex so division by an exact zero downstream yields
    inf/nan rather than raising.
    """
    acc = np.complex128(0.0)
    s = np.complex128(s)
    for c in coeffs[::-1]:
        acc = acc * s + c
    return acc


@dataclass(frozen=True, eq=False)
class RationalApprox:
    """Rational function a(s)/(1 + b_1 s + ... + b_n s^n).

    ``a`` holds the m+1 ascending numerator coefficients; ``b`` holds
    b_1..b_n (the constant denominator term is fixed to 1).
    """

    a: np.ndarray
    b: np.ndarray
    m: int
    n: int

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if a.size != self.m + 1 or b.size != self.n:
            raise InputError(
                f"coefficient lengths ({a.size}, {b.size}) do not match orders "
                f"[{self.m}/{self.n}]"
            )
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise InputError("rational coefficients must be finite")

    @property
    def denominator(self) -> np.ndarray:
        """Full ascending denominator coefficients, starting with 1."""
        return np.concatenate(([1.0], self.b))

    @cached_property
    def denominator_roots(self) -> np.ndarray:
        """Roots of the denominator via companion-matrix eigenvalues."""
        return _polynomial_roots(self.denominator)

    def to_dict(self) -> dict:
        return {"m": self.m, "n": self.n, "a": self.a.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_dict(cls, record: dict) -> "RationalApprox":
        try:
            return cls(
                np.asarray(record["a"], dtype=float),
                np.asarray(record["b"], dtype=float),
                int(record["m"]),
                int(record["n"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad rational-approximant record: {exc}") from None


@dataclass(frozen=True, eq=False)
class PoleSet:
    """Poles and matching residues, sorted by (real, imaginary) part.

    ``multiple_poles`` is set when two roots lie within 1e-8 of each other;
    residues are then computed by the simple-pole formula regardless and
    should be treated with suspicion.
    """

    poles: np.ndarray
    residues: np.ndarray
    multiple_poles: bool = False

    def __post_init__(self):
        poles = np.asarray(self.poles, dtype=complex)
        residues = np.asarray(self.residues, dtype=complex)
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "residues", residues)
        if poles.shape != residues.shape:
            raise InputError("poles and residues must have equal length")

    def __len__(self) -> int:
        return self.poles.size


def _polynomial_roots(coeffs_ascending: np.ndarray) -> np.ndarray:
    """Companion-matrix roots; trailing near-zero coefficients are trimmed."""
    q = np.asarray(coeffs_ascending, dtype=float)
    scale = np.max(np.abs(q))
    if scale == 0:
        return np.empty(0, dtype=complex)
    keep = np.nonzero(np.abs(q) > 1e-14 * scale)[0]
    if keep.size == 0 or keep[-1] == 0:
        return np.empty(0, dtype=complex)
    q = q[: keep[-1] + 1]
    return np.roots(q[::-1])


def fit_pade(c, m: int, n: int) -> RationalApprox:
    """Fit the [m/n] approximant to series coefficients ``c``.

    Requires at least m+n+1 coefficients. Raises
    :class:`~speclogic.errors.IllConditionedError` when the moment system
    cannot be solved to residual 1e-6*||c|| even in the least-squares sense.
    """
    c = np.asarray(c, dtype=float)
    if m < 0 or n < 0:
        raise InputError(f"orders must be nonnegative, got [{m}/{n}]")
    if c.ndim != 1 or c.size < m + n + 1:
        raise InputError(
            f"need at least {m + n + 1} series coefficients for [{m}/{n}], got {c.size}"
        )
    if not np.all(np.isfinite(c)):
        raise InputError("series coefficients must be finite")

    used = c[: m + n + 1]
    scale = float(np.linalg.norm(used))
    if n == 0:
        return RationalApprox(used[: m + 1].copy(), np.empty(0), m, n)

    rows = np.empty((n, n))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            k = m + i - j
            rows[i - 1, j - 1] = c[k] if k >= 0 else 0.0
    rhs = -c[m + 1 : m + n + 1]
    b, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    residual = float(np.linalg.norm(rows @ b - rhs))
    if residual > MOMENT_RESIDUAL_RTOL * scale:
        raise IllConditionedError(
            f"moment system for [{m}/{n}] is singular beyond least-squares rescue",
            residual,
        )

    b_full = np.concatenate(([1.0], b))
    a = np.array(
        [sum(b_full[j] * c[k - j] for j in range(0, min(k, n) + 1)) for k in range(m + 1)]
    )
    return RationalApprox(a, b, m, n)


def taylor_coefficients(r: RationalApprox, count: int) -> np.ndarray:
    """First ``count`` Taylor coefficients of a/b around s = 0.

    Uses the division recurrence d_k = a_k - sum_{j>=1} b_j d_{k-j}, which is
    exact because the denominator has unit constant term.
    """
    d = np.zeros(count)
    for k in range(count):
        acc = r.a[k] if k <= r.m else 0.0
        for j in range(1, min(k, r.n) + 1):
            acc -= r.b[j - 1] * d[k - j]
        d[k] = acc
    return d


def eval_rational(r: RationalApprox, s: complex) -> complex:
    """Evaluate P_m(s)/Q_n(s) by Horner's scheme on both polynomials.

    Points within 1e-12 of a denominator root are refused.
    """
    s = complex(s)
    for root in r.denominator_roots:
        if abs(s - root) < POLE_PROXIMITY_TOL:
            raise PoleProximityError(s, root)
    return complex(_horner(r.a, s) / _horner(r.denominator, s))


def extract_poles(r: RationalApprox) -> PoleSet:
    """Poles of the approximant with residues P(s_k)/Q'(s_k).

    Roots come from the companion matrix of the denominator. An order-0
    denominator yields an empty pole set. Roots closer than 1e-8 raise the
    ``multiple_poles`` flag on the result instead of failing.
    """
    if r.n == 0:
        return PoleSet(np.empty(0, complex), np.empty(0, complex))
    roots = _polynomial_roots(r.denominator)
    if roots.size == 0:
        return PoleSet(np.empty(0, complex), np.empty(0, complex))

    q = r.denominator
    dq = q[1:] * np.arange(1, q.size)  # derivative, ascending coefficients
    with np.errstate(divide="ignore", invalid="ignore"):
        residues = np.array([_horner(r.a, z) / _horner(dq, z) for z in roots])

    order = np.lexsort((roots.imag, roots.real))
    roots = roots[order]
    residues = residues[order]

    multiple = False
    if roots.size > 1:
        diff = np.abs(roots[:, None] - roots[None, :])
        diff[np.diag_indices_from(diff)] = np.inf
        multiple = bool(np.min(diff) < MULTIPLE_POLE_TOL)
    return PoleSet(roots, residues, multiple)
