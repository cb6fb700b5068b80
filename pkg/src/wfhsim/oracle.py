"""Brute-force circuit simulator used to validate the analytic pipeline.

Everything here is dense linear algebra on truncated Fock tensors: coherent
states as explicit amplitude columns, beam-splitter unitaries exponentiated
from their quadratic generator, partial traces by summing squared amplitudes.
No formula from :mod:`wfhsim.wfh` or :mod:`wfhsim.bell` is reused, which is
what makes agreement between the two paths evidence of correctness.

The splitter maps input modes (signal, lo) onto outputs (d, e) as

    signal_dag -> t d_dag + conj(r) e_dag
    lo_dag     -> -r d_dag + t e_dag

with real t, so t = 1 is the identity.  Feeding -alpha into the lo port
reproduces the alternative sign convention lo_dag -> r d_dag - t e_dag used by
the four-arm Bell layout; the helpers below pick the right input signs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import MemoryBudgetExceeded
from .fock import BeamSplitter, factorials
from .states import FockCutoff, TwoModeState, make_tmss
from .wfh import WFHChannel

DEFAULT_BUDGET_BYTES = 2 * 1024**3


def coherent_amplitudes(alpha: complex, n_max: int) -> np.ndarray:
    """Fock column of |alpha> up to n_max."""
    n = np.arange(n_max + 1)
    col = np.asarray(alpha, dtype=complex) ** n / np.sqrt(factorials()[: n_max + 1])
    return col * math.exp(-0.5 * abs(alpha) ** 2)


def coherent_cutoff(alpha: complex, tail: float = 1e-13) -> int:
    """Smallest cutoff keeping the coherent tail mass below ``tail``."""
    x = abs(alpha) ** 2
    n = max(4, math.ceil(x + 8.0 * math.sqrt(x) + 10.0))
    while _poisson_tail(x, n) > tail:
        n += 2
    return n


def _poisson_tail(x: float, n: int) -> float:
    term = math.exp(-x)
    total = term
    for k in range(1, n + 1):
        term *= x / k
        total += term
    return max(0.0, 1.0 - total)


def _mode_matrix_log(t: float, r: complex) -> np.ndarray:
    """Hermitian h with exp(i h) = [[t, -r], [conj(r), t]]."""
    V = np.array([[t, -r], [np.conjugate(r), t]], dtype=complex)
    vals, vecs = np.linalg.eig(V)
    q, _ = np.linalg.qr(vecs)
    phases = np.angle(np.diag(q.conj().T @ V @ q))
    h = q @ np.diag(phases) @ q.conj().T
    return 0.5 * (h + h.conj().T)


def bs_unitary_blocks(t: float, r: complex, n_total: int) -> list[np.ndarray]:
    """Photon-number-conserving blocks of the two-mode splitter unitary.

    Block n acts on the basis {|k, n-k>, k = 0..n} (first index = photons in
    the signal input mode).  Each block is the exponential of the restricted
    quadratic generator, hence exactly unitary.
    """
    h = _mode_matrix_log(t, r)
    blocks = []
    for n in range(n_total + 1):
        K = np.zeros((n + 1, n + 1), dtype=complex)
        for k in range(n + 1):
            K[k, k] = h[0, 0] * k + h[1, 1] * (n - k)
            if k + 1 <= n:
                hop = math.sqrt((k + 1) * (n - k))
                K[k + 1, k] = h[0, 1] * hop  # a1_dag a2 : |k, n-k> -> |k+1, n-k-1>
                K[k, k + 1] = h[1, 0] * hop
        blocks.append(expm(1j * K))
    return blocks


def bs_unitary(t: float, r: complex, n_total: int) -> np.ndarray:
    """Dense splitter unitary on the pair space with per-mode dimension n_total+1.

    Blocks with total photon number <= n_total act exactly; the higher blocks
    clipped by the per-mode truncation are exponentials of the restricted
    generator, so they stay unitary but no longer represent the full splitter.
    """
    d = n_total + 1
    h = _mode_matrix_log(t, r)
    U = np.zeros((d * d, d * d), dtype=complex)
    for n in range(2 * n_total + 1):
        ks = [k for k in range(n + 1) if k <= n_total and n - k <= n_total]
        K = np.zeros((len(ks), len(ks)), dtype=complex)
        for i, k in enumerate(ks):
            K[i, i] = h[0, 0] * k + h[1, 1] * (n - k)
            if i + 1 < len(ks) and ks[i + 1] == k + 1:
                hop = math.sqrt((k + 1) * (n - k))
                K[i + 1, i] = h[0, 1] * hop
                K[i, i + 1] = h[1, 0] * hop
        idx = [k * d + (n - k) for k in ks]
        U[np.ix_(idx, idx)] = expm(1j * K)
    return U


def _bs_tensor(t: float, r: complex, n_total: int, in_dims: tuple[int, int]) -> np.ndarray:
    """Splitter as a 4-tensor [d_out, e_out, s_in, l_in] on the given input dims."""
    d = n_total + 1
    out = np.zeros((d, d, in_dims[0], in_dims[1]), dtype=complex)
    for n, block in enumerate(bs_unitary_blocks(t, r, n_total)):
        for col, k_in in enumerate(range(n + 1)):
            l_in = n - k_in
            if k_in >= in_dims[0] or l_in >= in_dims[1]:
                continue
            for row, k_out in enumerate(range(n + 1)):
                out[k_out, n - k_out, k_in, l_in] = block[row, col]
    return out


@dataclass(frozen=True)
class CircuitSpec:
    """Full interference circuit: two-mode input, one LO and splitter per side.

    ``keep`` selects the measured arms: "transmitted" traces both reflected
    outputs (the fringe-scan layout), "all" keeps all four (the Bell layout).
    """

    state: TwoModeState
    lo: tuple[complex, complex]
    bs: tuple[BeamSplitter, BeamSplitter]
    keep: str = "transmitted"


def simulate_circuit(
    spec: CircuitSpec,
    m_max: int = 12,
    lo_tail: float = 1e-13,
    budget_bytes: int = DEFAULT_BUDGET_BYTES,
) -> np.ndarray:
    """Joint photon statistics of the kept arms by dense simulation.

    Returns F[m, m'] over the two transmitted arms for keep="transmitted", or
    the four-arm probability tensor P[d1, e1, d2, e2] for keep="all".
    """
    n_s = spec.state.cutoff.n_max
    dims_lo = [coherent_cutoff(a, lo_tail) + 1 for a in spec.lo]
    totals = [n_s + dim - 1 for dim in dims_lo]
    pair_dims = [tot + 1 for tot in totals]
    need = 16 * (pair_dims[0] * pair_dims[0]) * (pair_dims[1] * pair_dims[1])
    if need > budget_bytes:
        raise MemoryBudgetExceeded(
            f"dense output tensor needs {need / 2**30:.2f} GiB > budget {budget_bytes / 2**30:.2f} GiB"
        )
    U1 = _bs_tensor(spec.bs[0].t, spec.bs[0].r, totals[0], (n_s + 1, dims_lo[0]))
    U2 = _bs_tensor(spec.bs[1].t, spec.bs[1].r, totals[1], (n_s + 1, dims_lo[1]))
    lo1 = coherent_amplitudes(spec.lo[0], dims_lo[0] - 1)
    lo2 = coherent_amplitudes(spec.lo[1], dims_lo[1] - 1)

    if spec.keep == "transmitted":
        result = np.zeros((m_max + 1, m_max + 1))
    elif spec.keep == "all":
        result = np.zeros((pair_dims[0], pair_dims[0], pair_dims[1], pair_dims[1]))
    else:
        raise ValueError(f"unknown keep mode {spec.keep!r}")

    for weight, c in spec.state.components:
        psi_in = np.einsum("ab,i,j->aibj", c, lo1, lo2)
        half = np.einsum("deai,aibj->debj", U1, psi_in)
        out = np.einsum("fgbj,debj->defg", U2, half)
        probs = np.abs(out) ** 2  # axes (d1, e1, d2, e2)
        if spec.keep == "transmitted":
            F = probs.sum(axis=(1, 3))
            result += weight * F[: m_max + 1, : m_max + 1]
        else:
            result += weight * probs
    return result


def circuit_for_channels(
    state: TwoModeState, ch_a: WFHChannel, ch_b: WFHChannel
) -> CircuitSpec:
    """Circuit equivalent to the analytic channels of the fringe pipeline.

    The analytic pipeline defines each LO by the displacement t*alpha it
    leaves on the detected arm; feeding -(t/r)*alpha into the physical lo port
    realises that displacement.  The traced arm then carries a different
    displacement, which no kept observable sees.  Requires r > 0 whenever
    alpha != 0.
    """
    resolved = []
    for ch in (ch_a, ch_b):
        ch = ch.resolved()
        if ch.alpha != 0 and ch.r == 0:
            raise ValueError("a fully transmitting splitter cannot carry an LO to the detector")
        lo_in = -(ch.t / ch.r) * ch.alpha if ch.alpha != 0 else 0.0
        resolved.append((lo_in, BeamSplitter(ch.t, ch.r)))
    return CircuitSpec(
        state=state,
        lo=(resolved[0][0], resolved[1][0]),
        bs=(resolved[0][1], resolved[1][1]),
        keep="transmitted",
    )


def bell_sector_probabilities(
    M: int,
    lam: complex,
    alpha: complex,
    beta: complex,
    bs1: BeamSplitter,
    bs2: BeamSplitter,
) -> tuple[np.ndarray, float]:
    """Four-arm oracle for the M-photons-per-side sector.

    Simulates TMSS x LO1 x LO2 through both splitters keeping all four arms,
    in the convention lo_dag -> r d_dag - t e_dag (hence the negated LO
    inputs), then reads out the outcomes (Gamma_A, Gamma_B) = transmitted
    counts with M - Gamma photons on the matching reflected arm.  Per-side
    photon-number conservation makes the sector exact despite truncation.

    Returns (conditional table, unconditioned sector weight).
    """
    state = make_tmss(lam, FockCutoff(max(M, 1)))
    spec = CircuitSpec(state, (-alpha, -beta), (bs1, bs2), keep="all")
    probs = simulate_circuit(spec)
    Q = np.zeros((M + 1, M + 1))
    for ga in range(M + 1):
        for gb in range(M + 1):
            Q[ga, gb] = probs[ga, M - ga, gb, M - gb]
    weight = float(Q.sum())
    return Q / weight, weight
