import math

import numpy as np
import pytest
from scipy.linalg import expm

from wfhsim.errors import CutoffExceeded
from wfhsim.fock import (
    BeamSplitter,
    FockCutoff,
    binomial,
    bs_split_displacement,
    displaced_fock_overlap,
    displaced_fock_overlap_table,
    factorials,
)


def displacement_overlap_oracle(m: int, alpha: complex, n: int, dim: int = 41) -> complex:
    """<m| D(alpha) adag^n |0> via a dense matrix exponential."""
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)  # annihilation
    D = expm(alpha * a.conj().T - np.conjugate(alpha) * a)
    col = np.zeros(dim)
    col[n] = math.sqrt(math.factorial(n))
    return (D @ col)[m]


def test_vacuum_overlap_of_coherent_state():
    assert displaced_fock_overlap(0, 0.5, 0) == pytest.approx(math.exp(-0.125), abs=1e-14)


def test_zero_displacement_is_fock_norm():
    assert displaced_fock_overlap(2, 0.0, 2) == pytest.approx(math.sqrt(2.0), abs=0)
    for n in range(5):
        for m in range(5):
            val = displaced_fock_overlap(m, 0.0, n)
            expected = math.sqrt(math.factorial(n)) if m == n else 0.0
            assert val == expected


def test_overlap_matches_displacement_oracle():
    assert abs(
        displaced_fock_overlap(1, 0.510, 1) - displacement_overlap_oracle(1, 0.510, 1)
    ) < 1e-10
    rng = np.random.default_rng(42)
    for _ in range(25):
        m = int(rng.integers(0, 9))
        n = int(rng.integers(0, 7))
        alpha = rng.uniform(0.05, 1.2) * np.exp(2j * math.pi * rng.random())
        got = displaced_fock_overlap(m, alpha, n)
        want = displacement_overlap_oracle(m, alpha, n)
        assert abs(got - want) < 1e-10, (m, alpha, n)


@pytest.mark.parametrize("alpha", [0.3, 0.8 + 0.4j, 1.0j])
def test_displaced_fock_orthogonality(alpha):
    # sum_k conj(<k|a;n>) <k|a;m> = n! delta_nm at a cutoff safely above n+m
    n_top = 5
    cutoff = 2 * n_top + 8 * math.ceil(abs(alpha) ** 2) + 8
    table = displaced_fock_overlap_table(cutoff, alpha, n_top)
    gram = table.conj().T @ table
    expected = np.diag(factorials()[: n_top + 1])
    assert np.abs(gram - expected).max() < 1e-8


def test_completeness_monotone_in_cutoff():
    for alpha in (0.4, 1.0):
        for n in range(7):
            cutoff = int(n + 10 + 4 * abs(alpha) ** 2)
            table = displaced_fock_overlap_table(cutoff, alpha, n)
            mass = np.cumsum(np.abs(table[:, n]) ** 2) / math.factorial(n)
            assert np.all(np.diff(mass) >= -1e-15)  # monotone growth
            assert 1.0 - mass[-1] < 1e-8


def test_overlap_rejects_table_overflow():
    with pytest.raises(CutoffExceeded):
        displaced_fock_overlap(171, 0.5, 0)


def test_binomial_recurrence():
    assert binomial(8, 3) == 56.0
    assert binomial(3, 5) == 0.0
    assert binomial(60, 30) == pytest.approx(math.comb(60, 30), rel=1e-12)


def test_beam_splitter_validation():
    BeamSplitter.balanced()
    BeamSplitter(t=1.0, r=0.0)
    BeamSplitter(t=math.sqrt(0.75), r=-0.5j)
    with pytest.raises(ValueError):
        BeamSplitter(t=0.9, r=0.9)
    with pytest.raises(ValueError):
        BeamSplitter(t=-0.1, r=0.99498743710662)
    with pytest.raises(ValueError):
        FockCutoff(0)


def test_split_displacement():
    out1, out2 = bs_split_displacement(1.0, BeamSplitter(t=1.0, r=0.0))
    assert (out1, out2) == (0.0, 1.0)
    bal = BeamSplitter.balanced()
    out1, out2 = bs_split_displacement(0.585, bal)
    assert out1 == pytest.approx(-0.585 / math.sqrt(2))
    assert out2 == pytest.approx(0.585 / math.sqrt(2))
    assert bs_split_displacement(0.0, bal) == (0.0, 0.0)
