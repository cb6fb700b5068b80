import itertools
import math

import numpy as np
import pytest

from wfhsim.bell import (
    BellSettings,
    OutcomeTable,
    SearchConfig,
    balanced_splitter,
    cglmp_I,
    chsh_value,
    i3_expansion,
    layer_probabilities,
    lossy_layer_check,
    optimize_IM,
    outcome_tables,
    output_amplitudes_m2,
    sector_amplitudes,
)
from wfhsim.errors import DimensionMismatch, WrongLayer
from wfhsim.oracle import bell_sector_probabilities


def random_settings(rng, m=2, lam_hi=0.6, lo_hi=1.2):
    def lo():
        return rng.uniform(0.08, lo_hi) * np.exp(2j * math.pi * rng.random())

    return BellSettings(
        m=m,
        lam=rng.uniform(0.08, lam_hi) * np.exp(2j * math.pi * rng.random()),
        alphas=(lo(), lo()),
        betas=(lo(), lo()),
    )


def random_tables(rng, d, n=4):
    tabs = []
    for _ in range(n):
        q = rng.random((d, d))
        tabs.append(OutcomeTable(q / q.sum(), 1.0))
    return tabs


# ---------------------------------------------------------------------------
# closed form vs expansion vs oracle


def test_m2_amplitudes_at_zero_squeezing_come_from_the_lo_alone():
    s = BellSettings(m=2, lam=0.0, alphas=(0.4, 0.1), betas=(0.5 * np.exp(0.3j), 0.2))
    A = output_amplitudes_m2(s)
    a, b = s.alphas[0], s.betas[0]
    t = 1 / math.sqrt(2)
    r = -1j * t
    scale = math.exp(-0.5 * (abs(a) ** 2 + abs(b) ** 2))
    # corner amplitude |2200>: only the (alpha beta)^2 reflection term survives
    want = 2 * (a**2 * b**2 / 4) * r**2 * r**2 * scale
    assert abs(A[2, 2] - want) < 1e-14


def test_m2_amplitudes_without_lo_are_squeezing_terms():
    s = BellSettings(m=2, lam=0.31 * np.exp(0.7j), alphas=(0.0, 0.1), betas=(0.0, 0.2))
    A = output_amplitudes_m2(s)
    lam = s.lam
    t = 1 / math.sqrt(2)
    rc = np.conjugate(-1j * t)
    scale = math.sqrt(1 - abs(lam) ** 2)
    assert abs(A[2, 2] - 2 * lam**2 / 2 * t**4 * scale) < 1e-14
    assert abs(A[0, 0] - 2 * lam**2 / 2 * rc**4 * scale) < 1e-14
    # every ket keeps its squeezing contribution, e.g. the (2,1) pattern
    assert abs(A[2, 1] - math.sqrt(2) * lam**2 * t**3 * rc * scale) < 1e-14


def test_closed_form_matches_expansion_and_oracle():
    rng = np.random.default_rng(31)
    for _ in range(100):
        s = random_settings(rng)
        A = output_amplitudes_m2(s)
        q = np.abs(A) ** 2
        table = layer_probabilities(s)
        assert abs(q.sum() - table.normalization) < 1e-12
        assert np.abs(q / q.sum() - table.q).max() < 1e-10

    for _ in range(5):
        s = random_settings(rng)
        Qo, wo = bell_sector_probabilities(2, s.lam, s.alphas[0], s.betas[0], *s.bs)
        table = layer_probabilities(s)
        assert np.abs(Qo - table.q).max() < 1e-10
        assert abs(wo - table.normalization) < 1e-12


def test_wrong_layer_is_rejected():
    s = BellSettings(m=3, lam=0.3, alphas=(0.4, 0.1), betas=(0.5, 0.2))
    with pytest.raises(WrongLayer):
        output_amplitudes_m2(s)


def test_product_state_factorises():
    s = BellSettings(m=2, lam=0.0, alphas=(0.6 * np.exp(0.2j), 0.1), betas=(0.45, 0.2))
    table = layer_probabilities(s)
    qa = table.q.sum(axis=1)
    qb = table.q.sum(axis=0)
    assert np.abs(table.q - np.outer(qa, qb)).max() < 1e-12
    assert table.q.sum() == pytest.approx(1.0, abs=1e-12)


def test_layer_probabilities_against_general_oracle():
    rng = np.random.default_rng(77)
    for m in (1, 3, 4):
        s = random_settings(rng, m=m)
        table = layer_probabilities(s)
        Qo, wo = bell_sector_probabilities(m, s.lam, s.alphas[0], s.betas[0], *s.bs)
        assert np.abs(Qo - table.q).max() < 1e-10
        assert abs(wo - table.normalization) < 1e-12


# ---------------------------------------------------------------------------
# the correlator


def test_uniform_tables_give_zero():
    for m in (1, 2, 5):
        d = m + 1
        tabs = [OutcomeTable(np.full((d, d), 1.0 / d**2), 1.0)] * 4
        assert cglmp_I(tabs, m) == pytest.approx(0.0, abs=1e-14)


def _deterministic_table(a, b, d):
    q = np.zeros((d, d))
    q[a, b] = 1.0
    return OutcomeTable(q, 1.0)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_local_deterministic_bound(m):
    d = m + 1
    best = -np.inf
    for a1, a2, b1, b2 in itertools.product(range(d), repeat=4):
        tabs = [
            _deterministic_table(a1, b1, d),
            _deterministic_table(a2, b1, d),
            _deterministic_table(a2, b2, d),
            _deterministic_table(a1, b2, d),
        ]
        val = cglmp_I(tabs, m)
        best = max(best, val)
        assert val <= 2.0 + 1e-12
    assert best == pytest.approx(2.0, abs=1e-12)


def test_m1_reduces_to_chsh():
    rng = np.random.default_rng(13)
    for _ in range(100):
        tabs = random_tables(rng, 2)
        assert cglmp_I(tabs, 1) == pytest.approx(chsh_value(tabs), abs=1e-12)


def test_i3_expansion_equals_the_weighted_sum():
    rng = np.random.default_rng(14)
    for _ in range(100):
        tabs = random_tables(rng, 3)
        assert cglmp_I(tabs, 2) == pytest.approx(i3_expansion(tabs), abs=1e-12)


def test_dimension_checks():
    rng = np.random.default_rng(15)
    with pytest.raises(DimensionMismatch):
        cglmp_I(random_tables(rng, 3, n=3), 2)
    with pytest.raises(DimensionMismatch):
        cglmp_I(random_tables(rng, 3), 3)


def test_correlator_invariant_under_opposite_phase_shifts():
    rng = np.random.default_rng(16)
    for m in (1, 2, 3):
        s = random_settings(rng, m=m)
        base = cglmp_I(outcome_tables(s), m)
        for delta in (0.3, 1.7):
            rot = BellSettings(
                m=m,
                lam=s.lam,
                alphas=tuple(a * np.exp(1j * delta) for a in s.alphas),
                betas=tuple(b * np.exp(-1j * delta) for b in s.betas),
                bs=s.bs,
            )
            assert cglmp_I(outcome_tables(rot), m) == pytest.approx(base, abs=1e-9)


def test_quantum_sanity_ceilings():
    rng = np.random.default_rng(17)
    tsirelson = 2.0 * math.sqrt(2.0)
    for _ in range(1000):
        m = int(rng.integers(1, 5))
        s = random_settings(rng, m=m)
        val = cglmp_I(outcome_tables(s), m)
        if m == 1:
            assert val <= tsirelson + 1e-9
        else:
            assert val <= 4.0  # no-signalling algebraic ceiling


def test_product_state_never_violates():
    rng = np.random.default_rng(18)
    for _ in range(300):
        m = int(rng.integers(1, 4))
        s = random_settings(rng, m=m)
        s = BellSettings(m=m, lam=0.0, alphas=s.alphas, betas=s.betas, bs=s.bs)
        assert cglmp_I(outcome_tables(s), m) <= 2.0 + 1e-9


def test_search_constrained_to_zero_squeezing_stays_local():
    res = optimize_IM(2, SearchConfig(n_starts=6, seed=5, lam_max=2e-6))
    assert res.best_value <= 2.0 + 1e-9


def test_search_finds_the_chsh_optimum():
    res = optimize_IM(1, SearchConfig(n_starts=10, seed=11))
    assert res.best_value > 2.7
    assert res.best_value <= 2.0 * math.sqrt(2.0) + 1e-9
    assert 0.0 < res.converged_fraction <= 1.0
    assert set(res.boundary_hits) == {"lam", "alpha1", "alpha2", "beta1", "beta2"}


def test_search_parallel_matches_serial():
    serial = optimize_IM(1, SearchConfig(n_starts=4, seed=2, workers=1))
    parallel = optimize_IM(1, SearchConfig(n_starts=4, seed=2, workers=2))
    assert serial.best_value == parallel.best_value
    assert [s.value for s in serial.starts] == [s.value for s in parallel.starts]


# ---------------------------------------------------------------------------
# loss decomposition


def fig7_settings(m=2):
    a = 0.131
    return BellSettings(m=m, lam=0.3, alphas=(a, a), betas=(a * np.exp(1j * math.pi / 4), a))


def test_lossless_layer_recovers_ideal_sector():
    s = fig7_settings()
    dec = lossy_layer_check(2, 1.0, s)
    assert dec.residual == 0.0
    assert dec.exact == pytest.approx(dec.p_ideal, rel=1e-12)
    assert dec.p_ideal == pytest.approx(layer_probabilities(s).normalization, rel=1e-10)


def test_loss_residual_scales_quadratically():
    s = fig7_settings()
    r95 = lossy_layer_check(2, 0.95, s).residual_normalized
    r90 = lossy_layer_check(2, 0.90, s).residual_normalized
    ratio = r95 / r90
    assert abs(ratio - 0.25) < 0.25 * 0.25

    c99 = lossy_layer_check(2, 0.99, s).residual_normalized / 0.01**2
    c995 = lossy_layer_check(2, 0.995, s).residual_normalized / 0.005**2
    assert abs(c99 / c995 - 1.0) < 0.05


def test_lossy_check_converges():
    s = fig7_settings()
    dec = lossy_layer_check(2, 0.9, s, delta_max=10)
    assert dec.tail_estimate < 1e-12 * max(dec.exact, 1e-300)
