"""Time-multiplexed detector response.

A click record is reached from the true photon statistics through two
column-stochastic maps: binomial loss at efficiency eta, then probabilistic
binning of the survivors over a fixed number of detector bins.  For a joint
record the two sides act independently:

    P = C1 . L(eta1) . F . L(eta2)^T . C2^T

The inverse direction (counting statistics -> photon statistics) is solved as
a least-squares problem on a caller-chosen low-photon support block, which is
the only regime in which the map is well conditioned at percent-level
efficiencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, IllConditioned, InvalidEfficiency


def loss_matrix(eta: float, n_max: int) -> np.ndarray:
    """Binomial loss channel L[m, n] = C(n, m) eta^m (1-eta)^(n-m)."""
    if not 0.0 <= eta <= 1.0:
        raise InvalidEfficiency(f"efficiency must lie in [0, 1], got {eta}")
    L = np.zeros((n_max + 1, n_max + 1))
    for n in range(n_max + 1):
        for m in range(n + 1):
            L[m, n] = math.comb(n, m) * eta**m * (1.0 - eta) ** (n - m)
    return L


def binning_matrix(bins: int, n_max: int) -> np.ndarray:
    """C[k, n]: probability that n photons spread uniformly over `bins` slots
    occupy exactly k distinct slots.

    Computed by inclusion-exclusion with integer arithmetic, so small entries
    (bins=8, n <= 4) are exact rationals divided once at the end.
    """
    if bins < 1:
        raise ValueError(f"need at least one bin, got {bins}")
    C = np.zeros((bins + 1, n_max + 1))
    for n in range(n_max + 1):
        denom = bins**n
        for k in range(min(n, bins) + 1):
            if n == 0 and k == 0:
                C[0, 0] = 1.0
                continue
            count = math.comb(bins, k) * sum(
                (-1) ** j * math.comb(k, j) * (k - j) ** n for j in range(k + 1)
            )
            C[k, n] = count / denom
    return C


@dataclass(frozen=True)
class GprModel:
    """Reflectivity modulation of a geometric phase rotator.

    r(theta) = r0 * sqrt(1 + v cos(4 theta + theta0)); the companion
    transmittivity is t = sqrt(1 - r^2).
    """

    r0: float = 0.5
    v: float = 0.0
    theta0: float = 0.0

    def __post_init__(self) -> None:
        if self.v < 0:
            raise ValueError("modulation depth must be nonnegative")
        vmax = min(1.0, 1.0 / self.r0**2 - 1.0) if self.r0 > 0 else 1.0
        if self.v >= vmax and self.v != 0.0:
            raise ValueError(
                f"modulation depth {self.v} leaves r(theta) outside [0, 1] (need v < {vmax:.3g})"
            )


def gpr_reflectivity(theta: float, model: GprModel) -> float:
    """Amplitude reflectivity r(theta) of the splitter behind a rotated GPR."""
    return model.r0 * math.sqrt(1.0 + model.v * math.cos(4.0 * theta + model.theta0))


@dataclass(frozen=True)
class JointClickMatrix:
    """Joint click probabilities P[m, m'] plus the truncation mass not covered."""

    probs: np.ndarray
    truncation_deficit: float = 0.0

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", p)
        if p.min() < -1e-12:
            raise ValueError(f"negative click probability {p.min():.3g}")
        if p.sum() > 1.0 + 1e-9:
            raise ValueError(f"click probabilities sum to {p.sum()!r} > 1")

    def to_csv(self, path) -> None:
        """Matrix CSV with a header row/column of click counts."""
        rows, cols = self.probs.shape
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("clicks," + ",".join(str(j) for j in range(cols)) + "\n")
            for i in range(rows):
                fh.write(str(i) + "," + ",".join("%.17g" % v for v in self.probs[i]) + "\n")


def load_click_matrix(path) -> JointClickMatrix:
    raw = np.genfromtxt(path, delimiter=",", skip_header=1)
    if raw.ndim == 1:
        raw = raw[None, :]
    return JointClickMatrix(raw[:, 1:])


def _response_factor(eta: float, bins: int, n_max: int) -> np.ndarray:
    return binning_matrix(bins, n_max) @ loss_matrix(eta, n_max)


def apply_response(
    F: np.ndarray, eta_a: float, eta_b: float, bins: int, truncation_deficit: float | None = None
) -> JointClickMatrix:
    """Map joint photon statistics to joint click statistics, P = C1 L1 F L2^T C2^T."""
    F = np.asarray(F)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise DimensionMismatch(f"photon statistics must be square, got {F.shape}")
    n_max = F.shape[0] - 1
    A = _response_factor(eta_a, bins, n_max)
    B = _response_factor(eta_b, bins, n_max)
    P = A @ F @ B.T
    if truncation_deficit is None:
        truncation_deficit = max(0.0, 1.0 - float(F.sum()))
    return JointClickMatrix(np.clip(P, 0.0, None), float(truncation_deficit))


def apply_response_single(f: np.ndarray, eta: float, bins: int) -> np.ndarray:
    """Single-mode variant p = C L f."""
    f = np.asarray(f, dtype=float)
    return _response_factor(eta, bins, len(f) - 1) @ f


def invert_response(
    P: np.ndarray | JointClickMatrix,
    eta_a: float,
    eta_b: float,
    bins: int,
    support: int = 3,
    cond_limit: float = 1e8,
) -> np.ndarray:
    """Least-squares photon statistics on the block n, n' <= support.

    Raises IllConditioned when the truncated response map has condition number
    above ``cond_limit`` -- the requested support cannot be recovered at the
    given efficiencies.
    """
    probs = P.probs if isinstance(P, JointClickMatrix) else np.asarray(P, dtype=float)
    n_click = probs.shape[0] - 1
    A = _response_factor(eta_a, bins, max(n_click, support))[: n_click + 1, : support + 1]
    B = _response_factor(eta_b, bins, max(probs.shape[1] - 1, support))[
        : probs.shape[1], : support + 1
    ]
    cond = max(np.linalg.cond(A), np.linalg.cond(B))
    if cond > cond_limit:
        raise IllConditioned(
            f"response block condition number {cond:.3g} exceeds {cond_limit:.3g}"
        )
    # vec(P) = (A kron B) vec(F) in row-major layout
    M = np.kron(A, B)
    sol, *_ = np.linalg.lstsq(M, probs.reshape(-1), rcond=None)
    return sol.reshape(support + 1, support + 1)


def invert_response_single(
    p: np.ndarray, eta: float, bins: int, support: int = 3, cond_limit: float = 1e8
) -> np.ndarray:
    """Single-mode least-squares inverse of p = C L f on f[0..support]."""
    p = np.asarray(p, dtype=float)
    A = _response_factor(eta, bins, max(len(p) - 1, support))[: len(p), : support + 1]
    if np.linalg.cond(A) > cond_limit:
        raise IllConditioned(f"condition number {np.linalg.cond(A):.3g} exceeds {cond_limit:.3g}")
    sol, *_ = np.linalg.lstsq(A, p, rcond=None)
    return sol


def estimate_fock_weights(
    P: np.ndarray | JointClickMatrix, eta_a: float, eta_b: float, bins: int, support: int = 2
) -> tuple[float, float]:
    """Recover the (w0, w1) source weights from no-LO joint click statistics.

    Inverts the detector response and reads off w0 = F(0,0),
    w1 = F(1,0) + F(0,1).
    """
    F = invert_response(P, eta_a, eta_b, bins, support=support)
    return float(F[0, 0]), float(F[1, 0] + F[0, 1])
