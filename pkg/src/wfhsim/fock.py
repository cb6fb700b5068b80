"""Truncated Fock-space primitives.

Factorial/binomial tables, overlaps of Fock states with displaced Fock states,
and the splitting of a coherent displacement on a beam splitter.  The displaced
Fock state written ``|alpha;n>`` is D(alpha) a_dag^n |0>; it is *unnormalised*,
its squared norm is n! and for a fixed displacement the family is orthogonal:
<alpha;n|alpha;m> = n! delta_nm.  All normalisation factors owed to that
convention are applied downstream, in :mod:`wfhsim.wfh`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CutoffExceeded

# Largest n with n! representable in float64.
MAX_PHOTONS = 170


@lru_cache(maxsize=None)
def factorials(n_max: int = MAX_PHOTONS) -> np.ndarray:
    """Read-only table of n! for n = 0..n_max."""
    if n_max > MAX_PHOTONS:
        raise CutoffExceeded(f"factorials overflow float64 beyond {MAX_PHOTONS}!, got {n_max}")
    table = np.ones(n_max + 1)
    if n_max >= 1:
        table[1:] = np.cumprod(np.arange(1, n_max + 1, dtype=float))
    table.setflags(write=False)
    return table


def binomial(n: int, k: int) -> float:
    """C(n, k) via the multiplicative recurrence (no factorial overflow)."""
    if k < 0 or k > n:
        return 0.0
    k = min(k, n - k)
    out = 1.0
    for i in range(k):
        out = out * (n - i) / (i + 1)
    return out


@lru_cache(maxsize=None)
def binomial_row(n: int) -> np.ndarray:
    """Read-only row [C(n,0), ..., C(n,n)]."""
    row = np.array([binomial(n, k) for k in range(n + 1)])
    row.setflags(write=False)
    return row


@dataclass(frozen=True)
class FockCutoff:
    """Highest retained photon number per mode."""

    n_max: int

    def __post_init__(self) -> None:
        if self.n_max < 1:
            raise ValueError(f"cutoff must satisfy n_max >= 1, got {self.n_max}")

    @property
    def dim(self) -> int:
        return self.n_max + 1


@dataclass(frozen=True)
class BeamSplitter:
    """Lossless beam splitter in the asymmetric convention.

    ``t`` is the real transmittivity amplitude, ``r`` the (possibly complex)
    reflectivity amplitude with |t|^2 + |r|^2 = 1.
    """

    t: float
    r: complex

    def __post_init__(self) -> None:
        if not 0.0 <= self.t <= 1.0:
            raise ValueError(f"transmittivity amplitude must lie in [0, 1], got {self.t}")
        closure = abs(self.t**2 + abs(self.r) ** 2 - 1.0)
        if closure > 1e-12:
            raise ValueError(f"|t|^2 + |r|^2 deviates from 1 by {closure:.3g}")

    @classmethod
    def balanced(cls) -> "BeamSplitter":
        """50:50 splitter with real amplitudes."""
        return cls(t=1.0 / math.sqrt(2.0), r=1.0 / math.sqrt(2.0))

    @classmethod
    def from_transmittivity(cls, t: float) -> "BeamSplitter":
        return cls(t=t, r=math.sqrt(max(0.0, 1.0 - t * t)))


def displaced_fock_overlap(m: int, alpha: complex, n: int) -> complex:
    """Overlap <m|alpha;n> of a Fock state with the unnormalised displaced Fock state.

    Evaluated as the finite sum over kappa of
    C(n,kappa) * sqrt(m!)/(m-kappa)! * (-conj(alpha))^(n-kappa) * alpha^(m-kappa)
    times exp(-|alpha|^2/2).  Exact to floating precision for m, n below the
    factorial-table range.
    """
    if m < 0 or n < 0:
        raise ValueError("photon numbers must be nonnegative")
    if m > MAX_PHOTONS or n > MAX_PHOTONS:
        raise CutoffExceeded(f"overlap indices m={m}, n={n} exceed table size {MAX_PHOTONS}")
    alpha = complex(alpha)
    if alpha == 0:
        return complex(math.sqrt(factorials()[n])) if m == n else 0.0
    fact = factorials()
    acc = 0.0 + 0.0j
    neg_conj = -alpha.conjugate()
    for kappa in range(min(m, n) + 1):
        acc += (
            binomial(n, kappa)
            * math.sqrt(fact[m])
            / fact[m - kappa]
            * neg_conj ** (n - kappa)
            * alpha ** (m - kappa)
        )
    return acc * math.exp(-0.5 * abs(alpha) ** 2)


def displaced_fock_overlap_table(m_max: int, alpha: complex, n_max: int) -> np.ndarray:
    """Matrix O[m, n] = <m|alpha;n> for m <= m_max, n <= n_max."""
    out = np.empty((m_max + 1, n_max + 1), dtype=complex)
    for n in range(n_max + 1):
        for m in range(m_max + 1):
            out[m, n] = displaced_fock_overlap(m, alpha, n)
    return out


def bs_split_displacement(alpha: complex, bs: BeamSplitter) -> tuple[complex, complex]:
    """Split a displacement entering the LO port: D(alpha) -> D(-r alpha) x D(t alpha).

    Returns the pair (out1, out2) = (-r*alpha, t*alpha).
    """
    return (-bs.r * alpha, bs.t * alpha)
