"""Analytic weak-field homodyne pipeline.

Single-mode and joint photon statistics of signals interfered with weak local
oscillators, and the phase-scan drivers that produce joint click-statistics
fringes for the split-single-photon and two-mode-squeezed inputs.

The photon statistics of one detected arm follow from expanding the signal in
displaced Fock states of the transmitted local oscillator and tracing the
reflected arm:

    phi(m) = sum_k r^(2k) k! | sum_n (c_n / sqrt(n!)) C(n,k) t^(n-k) <m|t alpha; n-k> |^2

with the straightforward two-detector generalisation for joint statistics.
The 1/sqrt(n!) lift normalises the unnormalised displaced-Fock convention of
:mod:`wfhsim.fock`; no output distribution is rescaled after the fact, so
"sums to one minus the truncation deficit" is a testable property.
"""

from __future__ import annotations

import cmath
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .detector import GprModel, JointClickMatrix, apply_response, gpr_reflectivity
from .errors import CutoffExceeded
from .fock import MAX_PHOTONS, displaced_fock_overlap_table, factorials
from .states import TwoModeState, make_noisy_tmss, make_ssps_input, split_on_balanced_bs

DEFAULT_SCAN_POINTS = 72


@dataclass(frozen=True)
class WFHChannel:
    """One homodyne arm: local oscillator, splitter amplitudes and detector.

    ``t`` and ``r`` may be left as None for templates whose splitter is driven
    by a GPR model; scan drivers resolve them per phase point.
    """

    lo_magnitude: float
    lo_phase: float = 0.0
    eta: float = 1.0
    bins: int = 8
    t: float | None = None
    r: float | None = None

    @property
    def alpha(self) -> complex:
        return self.lo_magnitude * cmath.exp(1j * self.lo_phase)

    def resolved(self) -> "WFHChannel":
        if self.t is None or self.r is None:
            raise ValueError("channel splitter amplitudes are unresolved")
        return self

    def at_gpr(self, gpr: GprModel, theta: float) -> "WFHChannel":
        """Resolve the splitter at HWP angle theta and add the 4*theta LO phase."""
        r = gpr_reflectivity(theta, gpr)
        t = math.sqrt(max(0.0, 1.0 - r * r))
        return replace(self, t=t, r=r, lo_phase=self.lo_phase + 4.0 * theta)


def _loss_order_tensor(channel: WFHChannel, n_s: int, m_max: int) -> np.ndarray:
    """H[k, n, m] = C(n, k) t^(n-k) <m|t alpha; n-k> for one detected arm.

    k is the number of photons lost into the traced reflected arm.
    """
    ch = channel.resolved()
    if n_s > MAX_PHOTONS:
        raise CutoffExceeded(f"state cutoff {n_s} exceeds factorial table")
    overlaps = displaced_fock_overlap_table(m_max, ch.t * ch.alpha, n_s)
    H = np.zeros((n_s + 1, n_s + 1, m_max + 1), dtype=complex)
    for k in range(n_s + 1):
        for n in range(k, n_s + 1):
            H[k, n] = math.comb(n, k) * ch.t ** (n - k) * overlaps[:, n - k]
    return H


def _loss_weights(channel: WFHChannel, n_s: int) -> np.ndarray:
    ks = np.arange(n_s + 1)
    return channel.r ** (2 * ks) * factorials()[ks]


def single_mode_stats(coeffs: np.ndarray, channel: WFHChannel, m_max: int = 12) -> np.ndarray:
    """Photon-number distribution of one WFH detector watching sum_n c_n |n>."""
    ch = channel.resolved()
    coeffs = np.asarray(coeffs, dtype=complex)
    n_s = coeffs.shape[0] - 1
    c_norm = coeffs / np.sqrt(factorials()[: n_s + 1])
    H = _loss_order_tensor(ch, n_s, m_max)
    amps = np.einsum("n,knm->km", c_norm, H)
    return np.einsum("k,km->m", _loss_weights(ch, n_s), np.abs(amps) ** 2).real


@dataclass(frozen=True)
class JointPhotonStats:
    """Joint photon statistics matrix with its truncation bookkeeping."""

    matrix: np.ndarray
    truncation_deficit: float


def joint_photon_stats(
    state: TwoModeState, ch_a: WFHChannel, ch_b: WFHChannel, m_max: int = 12
) -> JointPhotonStats:
    """Joint photon statistics of two WFH detectors on a two-mode state.

    Mixed states are convex sums over their pure components.
    """
    ch_a = ch_a.resolved()
    ch_b = ch_b.resolved()
    n_s = state.cutoff.n_max
    fact_root = np.sqrt(factorials()[: n_s + 1])
    HA = _loss_order_tensor(ch_a, n_s, m_max)
    HB = _loss_order_tensor(ch_b, n_s, m_max)
    wa = _loss_weights(ch_a, n_s)
    wb = _loss_weights(ch_b, n_s)
    F = np.zeros((m_max + 1, m_max + 1))
    for weight, c in state.components:
        c_norm = c / np.outer(fact_root, fact_root)
        half = np.einsum("np,knm->kpm", c_norm, HA)
        amp = np.einsum("kpm,lpq->klmq", half, HB)
        F += weight * np.einsum("k,l,klmq->mq", wa, wb, np.abs(amp) ** 2).real
    deficit = max(0.0, 1.0 - float(F.sum()))
    return JointPhotonStats(F, deficit)


# ---------------------------------------------------------------------------
# Phase scans


@dataclass(frozen=True)
class PhaseScan:
    """Joint click statistics on a grid of half-wave-plate angles.

    ``grid`` holds the HWP angles Phi of the scanned rotator; the physical
    scan axis is phi = 4 Phi, a phase difference for the split single photon
    and a phase sum for the squeezed state.
    """

    axis: str  # "difference" | "sum"
    grid: np.ndarray
    clicks: list
    params: dict

    def curves(self, p_max: int = 2) -> np.ndarray:
        """Stack of P(m, m') curves, shape (len(grid), p_max+1, p_max+1)."""
        return np.array([jc.probs[: p_max + 1, : p_max + 1] for jc in self.clicks])

    def to_csv(self, path, p_max: int = 2) -> None:
        names = [f"P{m}{mp}" for m in range(p_max + 1) for mp in range(p_max + 1)]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("phi," + ",".join(names) + "\n")
            for phi_hwp, jc in zip(self.grid, self.clicks):
                row = [4.0 * phi_hwp] + [
                    jc.probs[m, mp] for m in range(p_max + 1) for mp in range(p_max + 1)
                ]
                fh.write(",".join("%.17g" % v for v in row) + "\n")

    def sidecar(self) -> dict:
        return {
            "axis": self.axis,
            "hwp_convention": "Phi = phi/4; csv column phi holds the scan phase in radians",
            "grid_hwp_angles": [float(g) for g in self.grid],
            **self.params,
        }


def default_phase_grid(n_points: int = DEFAULT_SCAN_POINTS) -> np.ndarray:
    """Uniform HWP-angle grid covering one full fringe period of phi = 4 Phi."""
    return np.linspace(0.0, 2.0 * math.pi / 4.0, n_points, endpoint=False)


def _scan_point(args) -> JointClickMatrix:
    state, ch_a, ch_b, gpr_a, gpr_b, theta, m_max = args
    cha = ch_a.at_gpr(gpr_a, theta)
    chb = ch_b.at_gpr(gpr_b, 0.0)
    # Combine at click level, layer by layer, to keep layer weights explicit.
    total = None
    deficit = 0.0
    for w, c in state.components:
        comp = TwoModeState("pure", ((1.0, c),), state.cutoff, 0.0)
        stats = joint_photon_stats(comp, cha, chb, m_max)
        clicks = apply_response(stats.matrix, cha.eta, chb.eta, cha.bins)
        total = w * clicks.probs if total is None else total + w * clicks.probs
        deficit += w * clicks.truncation_deficit
    return JointClickMatrix(total, deficit + state.truncation_deficit)


def _run_scan(
    state: TwoModeState,
    ch_a: WFHChannel,
    ch_b: WFHChannel,
    gpr_a: GprModel,
    gpr_b: GprModel,
    grid: np.ndarray,
    axis: str,
    m_max: int,
    params: dict,
    workers: int = 1,
) -> PhaseScan:
    jobs = [(state, ch_a, ch_b, gpr_a, gpr_b, float(th), m_max) for th in grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            clicks = list(pool.map(_scan_point, jobs))
    else:
        clicks = [_scan_point(j) for j in jobs]
    return PhaseScan(axis, np.asarray(grid, dtype=float), clicks, params)


def ssps_scan(
    w0: float,
    w1: float,
    ch_a: WFHChannel,
    ch_b: WFHChannel,
    gpr_a: GprModel | None = None,
    gpr_b: GprModel | None = None,
    grid: np.ndarray | None = None,
    m_max: int = 12,
    workers: int = 1,
) -> PhaseScan:
    """Phase-difference scan of the split mixed single photon.

    Each Fock layer of the input mixture is split on a symmetric beam
    splitter, pushed through both WFH channels and the detector response, and
    the click matrices are combined with the layer weights
    P = w0 P0 + w1 P1 + (1 - w0 - w1) P2.
    """
    gpr_a = gpr_a or GprModel()
    gpr_b = gpr_b or GprModel()
    state = split_on_balanced_bs(make_ssps_input(w0, w1))
    grid = default_phase_grid() if grid is None else np.asarray(grid, dtype=float)
    params = {
        "state": "ssps",
        "w0": w0,
        "w1": w1,
        "channel_a": _channel_params(ch_a, gpr_a),
        "channel_b": _channel_params(ch_b, gpr_b),
        "m_max": m_max,
    }
    return _run_scan(state, ch_a, ch_b, gpr_a, gpr_b, grid, "difference", m_max, params, workers)


def tmss_scan(
    lam: complex,
    noise_p: float,
    ch_a: WFHChannel,
    ch_b: WFHChannel,
    gpr_a: GprModel | None = None,
    gpr_b: GprModel | None = None,
    grid: np.ndarray | None = None,
    m_max: int = 12,
    workers: int = 1,
) -> PhaseScan:
    """Phase-sum scan of the noisy two-mode squeezed state."""
    gpr_a = gpr_a or GprModel()
    gpr_b = gpr_b or GprModel()
    state = make_noisy_tmss(lam, noise_p)
    grid = default_phase_grid() if grid is None else np.asarray(grid, dtype=float)
    params = {
        "state": "tmss",
        "lambda_abs": abs(lam),
        "lambda_phase": cmath.phase(complex(lam)),
        "noise_p": noise_p,
        "cutoff": state.cutoff.n_max,
        "channel_a": _channel_params(ch_a, gpr_a),
        "channel_b": _channel_params(ch_b, gpr_b),
        "m_max": m_max,
    }
    return _run_scan(state, ch_a, ch_b, gpr_a, gpr_b, grid, "sum", m_max, params, workers)


def _channel_params(ch: WFHChannel, gpr: GprModel) -> dict:
    return {
        "lo_magnitude": ch.lo_magnitude,
        "lo_phase": ch.lo_phase,
        "eta": ch.eta,
        "bins": ch.bins,
        "gpr": {"r0": gpr.r0, "v": gpr.v, "theta0": gpr.theta0},
    }


def write_sidecar(scan: PhaseScan, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scan.sidecar(), fh, indent=2, sort_keys=True)
