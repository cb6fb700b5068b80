"""Acceptance suite: one test per release criterion, with a PASS line printed
for every criterion that holds at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see the report lines and
timings.  The two fringe-shape criteria assert exact flatness of the
zero-click panels; the exact model keeps a residual O(eta_a * eta_b)
interference modulation there (confirmed independently by the brute-force
circuit oracle), so those two assertions document a real property gap rather
than an implementation defect.
"""

import itertools
import math
import time

import numpy as np
import pytest

from wfhsim.bell import (
    BellSettings,
    SearchConfig,
    layer_probabilities,
    lossy_layer_check,
    optimize_IM,
    output_amplitudes_m2,
)
from wfhsim.detector import (
    apply_response,
    binning_matrix,
    estimate_fock_weights,
    invert_response,
    loss_matrix,
)
from wfhsim.oracle import bell_sector_probabilities, circuit_for_channels, simulate_circuit
from wfhsim.states import make_ssps_input, make_tmss, split_on_balanced_bs
from wfhsim.wfh import WFHChannel, default_phase_grid, joint_photon_stats, ssps_scan, tmss_scan

FLAT_PANELS = [(0, 0), (0, 1), (0, 2), (1, 0), (2, 0)]
OSC_PANELS = [(1, 1), (1, 2), (2, 1)]


def _report(name: str, detail: str = "") -> None:
    print(f"\n[ACCEPTANCE] {name}: PASS {detail}".rstrip())


def _modulation(curve: np.ndarray) -> float:
    return float((curve.max() - curve.min()) / curve.mean())


def _fundamental(curve: np.ndarray) -> int:
    spec = np.abs(np.fft.rfft(curve - curve.mean()))
    return int(np.argmax(spec[1:]) + 1)


def _first_harmonic_phase(curve: np.ndarray) -> float:
    return float(np.angle(np.fft.rfft(curve - curve.mean())[1]))


def test_oracle_equivalence():
    """Core correctness: analytic click statistics == brute-force circuit."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for trial in range(50):
        if trial % 2 == 0:
            w0, w1 = rng.dirichlet(np.ones(3))[:2]
            state = split_on_balanced_bs(make_ssps_input(w0, w1))
        else:
            lam = rng.uniform(0.05, 0.35) * np.exp(2j * math.pi * rng.random())
            state = make_tmss(lam)
        chans = []
        for _ in range(2):
            r = rng.uniform(0.5, 0.8)
            chans.append(
                WFHChannel(
                    lo_magnitude=rng.uniform(0.05, 1.0),
                    lo_phase=rng.uniform(0.0, 2.0 * math.pi),
                    eta=rng.uniform(0.05, 1.0),
                    bins=8,
                    t=math.sqrt(1.0 - r * r),
                    r=r,
                )
            )
        ch_a, ch_b = chans
        analytic = joint_photon_stats(state, ch_a, ch_b, m_max=10)
        brute = simulate_circuit(circuit_for_channels(state, ch_a, ch_b), m_max=10)
        p_analytic = apply_response(analytic.matrix, ch_a.eta, ch_b.eta, 8)
        p_brute = apply_response(brute, ch_a.eta, ch_b.eta, 8)
        worst = max(worst, float(np.abs(p_analytic.probs - p_brute.probs).max()))
    elapsed = time.perf_counter() - t0
    assert worst < 1e-9, f"max click-statistics deviation {worst:.3e}"
    assert elapsed < 120.0, f"oracle equivalence took {elapsed:.1f}s (budget 120s)"
    _report("oracle equivalence", f"(max deviation {worst:.2e}, {elapsed:.1f}s)")


def _scan_shape_checks(curves: np.ndarray, label: str) -> None:
    for m, mp in OSC_PANELS:
        curve = curves[:, m, mp]
        assert _modulation(curve) > 1e-3, f"{label} P({m},{mp}) does not oscillate"
        assert _fundamental(curve) == 1, f"{label} P({m},{mp}) fundamental != one fringe period"
    phases = [_first_harmonic_phase(curves[:, m, mp]) for m, mp in OSC_PANELS]
    spread = max(abs(math.remainder(a - b, 2 * math.pi)) for a in phases for b in phases)
    assert spread < 1e-6, f"{label} first-harmonic phase spread {spread:.3e} rad"

    flat_mods = {(m, mp): _modulation(curves[:, m, mp]) for m, mp in FLAT_PANELS}
    worst = max(flat_mods.values())
    assert worst < 1e-8, (
        f"{label} zero-click panels are not flat at 1e-8: relative modulations "
        + ", ".join(f"P({m},{mp})={v:.2e}" for (m, mp), v in sorted(flat_mods.items()))
        + ". The exact model keeps a residual O(eta_a*eta_b) interference term in "
        "zero-click panels (the brute-force circuit oracle reproduces the same "
        "curves to 1e-9), so exact flatness is unattainable for displaced-state "
        "interference; only the marginals are exactly flat."
    )


def test_fig3_shape_properties():
    """Split-photon fringe scan: flat zero rows, aligned one-period fringes."""
    scan = ssps_scan(
        0.161,
        0.669,
        WFHChannel(lo_magnitude=0.510, eta=0.072, bins=8),
        WFHChannel(lo_magnitude=0.585, eta=0.064, bins=8),
        grid=default_phase_grid(72),
    )
    curves = scan.curves(p_max=2)
    _scan_shape_checks(curves, "ssps")
    _report("fig3 shape properties")


def test_fig4_shape_properties():
    """Squeezed-state fringe scan on the phase-sum axis, plus its invariance."""
    ch_a = WFHChannel(lo_magnitude=0.365, eta=0.132, bins=8)
    ch_b = WFHChannel(lo_magnitude=0.347, eta=0.155, bins=8)
    scan = tmss_scan(0.295, 0.04, ch_a, ch_b, grid=default_phase_grid(72), m_max=12)

    from wfhsim.states import make_noisy_tmss

    state = make_noisy_tmss(0.295, 0.04)
    t, r = math.sqrt(0.75), 0.5
    for delta in (0.4, 1.3):
        F0 = joint_photon_stats(
            state,
            WFHChannel(lo_magnitude=0.365, lo_phase=0.2, t=t, r=r),
            WFHChannel(lo_magnitude=0.347, lo_phase=0.5, t=t, r=r),
            m_max=10,
        ).matrix
        F1 = joint_photon_stats(
            state,
            WFHChannel(lo_magnitude=0.365, lo_phase=0.2 + delta, t=t, r=r),
            WFHChannel(lo_magnitude=0.347, lo_phase=0.5 - delta, t=t, r=r),
            m_max=10,
        ).matrix
        assert np.abs(F0 - F1).max() < 1e-10, "anti-symmetric phase invariance"

    curves = scan.curves(p_max=2)
    _scan_shape_checks(curves, "tmss")
    _report("fig4 shape properties")


def test_fig5b_bell_violation_profile():
    """Search profile: violation up to the five-photon layer, none beyond."""
    t0 = time.perf_counter()
    config = SearchConfig(n_starts=64, seed=11)
    values = {}
    for m in range(1, 9):
        values[m] = optimize_IM(m, config).best_value
    elapsed = time.perf_counter() - t0
    detail = ", ".join(f"I_{m}={v:.4f}" for m, v in values.items())
    for m in (1, 2, 3, 4, 5):
        assert values[m] > 2.0, f"no violation found at M={m}: {detail}"
    for m in (6, 7, 8):
        assert values[m] <= 2.0 + 1e-6, f"spurious violation at M={m}: {detail}"
    assert values[1] <= 2.0 * math.sqrt(2.0) + 1e-9
    assert elapsed < 600.0, f"search took {elapsed:.0f}s (budget 600s)"
    _report("fig5b violation profile", f"({detail}; {elapsed:.0f}s)")


def test_m2_closed_form():
    """Three independent routes to the two-photon-layer probabilities agree."""
    rng = np.random.default_rng(23)
    worst_pq = 0.0
    worst_oracle = 0.0
    for _ in range(50):
        def lo():
            return rng.uniform(0.08, 1.2) * np.exp(2j * math.pi * rng.random())

        s = BellSettings(
            m=2,
            lam=rng.uniform(0.08, 0.6) * np.exp(2j * math.pi * rng.random()),
            alphas=(lo(), lo()),
            betas=(lo(), lo()),
        )
        q = np.abs(output_amplitudes_m2(s)) ** 2
        table = layer_probabilities(s)
        worst_pq = max(worst_pq, float(np.abs(q / q.sum() - table.q).max()))
        Qo, _ = bell_sector_probabilities(2, s.lam, s.alphas[0], s.betas[0], *s.bs)
        worst_oracle = max(worst_oracle, float(np.abs(Qo - table.q).max()))
    assert worst_pq < 1e-10, f"closed form vs expansion deviation {worst_pq:.3e}"
    assert worst_oracle < 1e-10, f"oracle vs expansion deviation {worst_oracle:.3e}"

    # four-photon expectation curves: exactly two distinct fundamental periods
    n_grid = 64
    curves = np.empty((n_grid, 3, 3))
    for i, phi in enumerate(np.linspace(0.0, 2.0 * math.pi, n_grid, endpoint=False)):
        alpha = 0.131 * np.exp(1j * phi)
        beta = 0.131 * np.exp(1j * (phi + math.pi / 4))
        s = BellSettings(m=2, lam=0.3, alphas=(alpha, alpha), betas=(beta, beta))
        curves[i] = np.abs(output_amplitudes_m2(s)) ** 2
    fundamentals = {
        _fundamental(curves[:, ga, gb]) for ga in range(3) for gb in range(3)
    }
    assert len(fundamentals) == 2, f"fundamental FFT bins {sorted(fundamentals)}"
    _report(
        "m2 closed form",
        f"(three-path deviations {worst_pq:.2e}/{worst_oracle:.2e}, "
        f"fundamental bins {sorted(fundamentals)})",
    )


def test_loss_decomposition_scaling():
    """Residual beyond the first-order loss model scales as (1-eta)^2."""
    a = 0.131
    s = BellSettings(m=2, lam=0.3, alphas=(a, a), betas=(a * np.exp(1j * math.pi / 4), a))
    r95 = lossy_layer_check(2, 0.95, s).residual_normalized
    r90 = lossy_layer_check(2, 0.90, s).residual_normalized
    ratio = r95 / r90
    assert abs(ratio - 0.25) < 0.25 * 0.25, f"residual ratio {ratio:.4f} not near 1/4"
    exact1 = lossy_layer_check(2, 1.0, s)
    assert exact1.residual == 0.0 and exact1.exact == pytest.approx(exact1.p_ideal, rel=1e-12)
    _report("loss decomposition", f"(residual ratio {ratio:.4f})")


def test_detector_matrices():
    """Loss and binning maps are column stochastic; small binning entries exact."""
    for eta in np.linspace(0.0, 1.0, 11):
        for n_max in (1, 7, 30):
            L = loss_matrix(float(eta), n_max)
            assert np.abs(L.sum(axis=0) - 1.0).max() < 1e-12
    for bins in (1, 8):
        for n_max in (1, 7, 30):
            C = binning_matrix(bins, n_max)
            assert np.abs(C.sum(axis=0) - 1.0).max() < 1e-12

    C8 = binning_matrix(8, 4)
    for n in range(5):
        counts = np.zeros(9, dtype=np.int64)
        for placement in itertools.product(range(8), repeat=n):
            counts[len(set(placement))] += 1
        assert np.array_equal(C8[:, n], counts / 8**n), f"binning column n={n} not exact"
    _report("detector matrices")


def test_response_inversion_round_trip():
    """Click statistics invert back to photon statistics on the small block."""
    rng = np.random.default_rng(29)
    worst = 0.0
    for _ in range(10):
        F = np.zeros((9, 9))
        F[:4, :4] = rng.random((4, 4))
        F /= F.sum()
        P = apply_response(F, 0.072, 0.064, 8)
        rec = invert_response(P, 0.072, 0.064, 8, support=3)
        worst = max(worst, float(np.abs(rec - F[:4, :4]).max()))
    assert worst < 1e-6, f"round-trip deviation {worst:.3e}"

    w0, w1 = 0.161, 0.669
    w2 = 1.0 - w0 - w1
    F = np.zeros((9, 9))
    F[0, 0] = w0
    F[1, 0] = F[0, 1] = w1 / 2
    F[2, 0] = F[0, 2] = w2 / 4
    F[1, 1] = w2 / 2
    P = apply_response(F, 0.072, 0.064, 8)
    got_w0, got_w1 = estimate_fock_weights(P, 0.072, 0.064, 8)
    assert abs(got_w0 - w0) < 1e-6 and abs(got_w1 - w1) < 1e-6
    _report(
        "response inversion round trip",
        f"(block deviation {worst:.2e}, w0/w1 errors {abs(got_w0-w0):.2e}/{abs(got_w1-w1):.2e})",
    )
