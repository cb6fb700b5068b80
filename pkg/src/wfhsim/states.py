"""Input-state constructors.

The two families of two-mode resources handled by the pipeline: a mixed
single-photon state split on a balanced beam splitter, and a (possibly noisy)
two-mode squeezed vacuum.  Mixed states are stored as convex combinations of
orthogonal pure components, which doubles as their eigendecomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidSqueezing, InvalidWeights, Undefined
from .fock import FockCutoff, binomial


@dataclass(frozen=True)
class SingleModeMixture:
    """Photon-number-diagonal single-mode state: weights[n] = <n|rho|n>."""

    weights: np.ndarray
    cutoff: FockCutoff

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if np.any(w < -1e-12) or np.any(w > 1 + 1e-12):
            raise InvalidWeights("weights must lie in [0, 1]")
        if abs(w.sum() - 1.0) > 1e-12:
            raise InvalidWeights(f"weights must sum to 1, got {w.sum()!r}")


@dataclass(frozen=True)
class TwoModeState:
    """Two bosonic modes with a common Fock cutoff.

    ``components`` holds (weight, c) pairs where c[n, n'] are coefficients of a
    normalised pure state; a pure state is a single component of weight 1.
    The retained components are mutually orthogonal, so they are also the
    eigencomponents of the density operator.
    """

    kind: str  # "pure" | "mixed"
    components: tuple
    cutoff: FockCutoff
    truncation_deficit: float = 0.0

    @property
    def is_pure(self) -> bool:
        return self.kind == "pure"

    @property
    def coefficients(self) -> np.ndarray:
        if not self.is_pure:
            raise ValueError("coefficient matrix only defined for pure states")
        return self.components[0][1]

    def density(self) -> np.ndarray:
        """Materialise rho[n, n', m, m'] = <n n'|rho|m m'> as a dense tensor."""
        d = self.cutoff.dim
        rho = np.zeros((d, d, d, d), dtype=complex)
        for w, c in self.components:
            rho += w * np.einsum("ab,cd->abcd", c, c.conj())
        return rho

    def marginal(self, mode: int) -> np.ndarray:
        """Photon-number distribution of one mode (0 = A, 1 = B)."""
        axis = 1 if mode == 0 else 0
        out = np.zeros(self.cutoff.dim)
        for w, c in self.components:
            out += w * (np.abs(c) ** 2).sum(axis=axis)
        return out

    def total_photon_weights(self) -> np.ndarray:
        """Probability of each total photon number n + n'."""
        d = self.cutoff.dim
        out = np.zeros(2 * d - 1)
        for w, c in self.components:
            p = np.abs(c) ** 2
            for n in range(d):
                for npr in range(d):
                    out[n + npr] += w * p[n, npr]
        return out

    def to_json_dict(self) -> dict:
        """Serialisable form: sparse entries of c (pure) or of rho (mixed)."""
        entries = []
        if self.is_pure:
            c = self.coefficients
            for (n, npr), v in np.ndenumerate(c):
                if v != 0:
                    entries.append([int(n), int(npr), float(v.real), float(v.imag)])
        else:
            rho = self.density()
            for idx, v in np.ndenumerate(rho):
                if abs(v) > 1e-15:
                    entries.append([*map(int, idx), float(v.real), float(v.imag)])
        return {
            "kind": self.kind,
            "cutoff": self.cutoff.n_max,
            "truncation_deficit": self.truncation_deficit,
            "entries": entries,
        }


def state_from_json_dict(doc: dict) -> TwoModeState:
    """Rebuild a state serialised by :meth:`TwoModeState.to_json_dict`."""
    cutoff = FockCutoff(int(doc["cutoff"]))
    d = cutoff.dim
    deficit = float(doc.get("truncation_deficit", 0.0))
    if doc["kind"] == "pure":
        c = np.zeros((d, d), dtype=complex)
        for n, npr, re, im in doc["entries"]:
            c[n, npr] = re + 1j * im
        return TwoModeState("pure", ((1.0, c),), cutoff, deficit)
    rho = np.zeros((d, d, d, d), dtype=complex)
    for n, npr, m, mpr, re, im in doc["entries"]:
        rho[n, npr, m, mpr] = re + 1j * im
    # Eigendecompose back into pure components.
    mat = rho.reshape(d * d, d * d)
    vals, vecs = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    comps = []
    for w, v in zip(vals[::-1], vecs.T[::-1]):
        if w > 1e-12:
            comps.append((float(w), v.reshape(d, d)))
    return TwoModeState("mixed", tuple(comps), cutoff, deficit)


def make_ssps_input(w0: float, w1: float, cutoff: FockCutoff | None = None) -> SingleModeMixture:
    """Mixed single-photon resource {|0>: w0, |1>: w1, |2>: 1-w0-w1}."""
    if w0 < 0 or w1 < 0 or w0 + w1 > 1 + 1e-12:
        raise InvalidWeights(f"need w0, w1 >= 0 and w0 + w1 <= 1, got ({w0}, {w1})")
    weights = np.array([w0, w1, max(0.0, 1.0 - w0 - w1)])
    return SingleModeMixture(weights, cutoff or FockCutoff(2))


def split_fock_on_balanced_bs(n: int, dim: int) -> np.ndarray:
    """Coefficients of Fock state |n> split 50:50: c[n-k, k] = sqrt(C(n,k)) / 2^(n/2)."""
    c = np.zeros((dim, dim), dtype=complex)
    for k in range(n + 1):
        c[n - k, k] = math.sqrt(binomial(n, k)) / 2 ** (n / 2)
    return c


def split_on_balanced_bs(mixture: SingleModeMixture) -> TwoModeState:
    """Send each Fock layer of the mixture through a symmetric beam splitter.

    Layer |n> becomes the pure entangled state with binomial amplitudes; the
    convex combination over layers keeps the input weights exactly (photon
    number is conserved by the splitter).
    """
    n_top = len(mixture.weights) - 1
    dim = n_top + 1
    comps = [
        (float(w), split_fock_on_balanced_bs(n, dim))
        for n, w in enumerate(mixture.weights)
        if w > 0
    ]
    return TwoModeState("mixed", tuple(comps), FockCutoff(n_top), 0.0)


def default_tmss_cutoff(lam: complex) -> FockCutoff:
    """Cutoff heuristic n_max = max(8, ceil(4 |lam|^2/(1-|lam|^2)) + 8)."""
    x = abs(lam) ** 2
    return FockCutoff(max(8, math.ceil(4.0 * x / (1.0 - x)) + 8))


def make_tmss(lam: complex, cutoff: FockCutoff | None = None) -> TwoModeState:
    """Two-mode squeezed vacuum: c[n, n] = sqrt(1-|lam|^2) lam^n up to the cutoff."""
    lam = complex(lam)
    if abs(lam) >= 1:
        raise InvalidSqueezing(f"need |lambda| < 1, got {abs(lam)}")
    cutoff = cutoff or default_tmss_cutoff(lam)
    d = cutoff.dim
    c = np.zeros((d, d), dtype=complex)
    c[np.arange(d), np.arange(d)] = math.sqrt(1.0 - abs(lam) ** 2) * lam ** np.arange(d)
    deficit = abs(lam) ** (2 * (cutoff.n_max + 1))
    return TwoModeState("pure", ((1.0, c),), cutoff, float(deficit))


def make_noisy_tmss(lam: complex, p: float, cutoff: FockCutoff | None = None) -> TwoModeState:
    """(1-p) |TMSS><TMSS| + p |0,1><0,1| with the noise photon on mode B."""
    if not 0.0 <= p <= 1.0:
        raise InvalidWeights(f"noise weight must lie in [0, 1], got {p}")
    tmss = make_tmss(lam, cutoff)
    d = tmss.cutoff.dim
    noise = np.zeros((d, d), dtype=complex)
    noise[0, 1] = 1.0
    comps = []
    if p < 1.0:
        comps.append((1.0 - p, tmss.coefficients))
    if p > 0.0:
        comps.append((p, noise))
    return TwoModeState("mixed", tuple(comps), tmss.cutoff, (1.0 - p) * tmss.truncation_deficit)


def g2_of_distribution(f: np.ndarray) -> float:
    """Second-order correlation <n(n-1)> / <n>^2 of a photon-number distribution."""
    f = np.asarray(f, dtype=float)
    if np.any(f < -1e-12):
        raise ValueError("distribution must be nonnegative")
    n = np.arange(len(f))
    mean = float(n @ f)
    if mean <= 0.0:
        raise Undefined("g2 undefined for vacuum (zero mean photon number)")
    return float((n * (n - 1)) @ f) / mean**2
