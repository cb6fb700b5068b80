"""Generalised Bell-inequality analysis of WFH detection on a squeezed state.

Both modes of a two-mode squeezed vacuum are interfered with weak local
oscillators and all four splitter outputs are photon counted.  Conditioning on
exactly M photons per side gives D = M+1 outcomes per side, labelled by the
transmitted count Gamma; four LO settings then feed the CGLMP correlator I_M
with local realistic bound |I_M| <= 2.

The outcome amplitudes come from an exact finite expansion of the M-per-side
sector of (TMSS x LO1 x LO2) through the splitter relations

    signal_dag -> t d_dag + conj(r) e_dag,   lo_dag -> r d_dag - t e_dag

with real t and r = -i|r| for the quadrature convention of the splitters.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from .errors import CutoffExceeded, DimensionMismatch, WrongLayer
from .fock import MAX_PHOTONS, BeamSplitter, binomial, factorials


def balanced_splitter() -> BeamSplitter:
    """t = |r| = 1/sqrt(2) with the reflected amplitude at -i|r|."""
    s = 1.0 / math.sqrt(2.0)
    return BeamSplitter(t=s, r=-1j * s)


@dataclass(frozen=True)
class BellSettings:
    """Photon layer, squeezing and the four LO settings of a Bell run."""

    m: int
    lam: complex
    alphas: tuple[complex, complex]
    betas: tuple[complex, complex]
    bs: tuple[BeamSplitter, BeamSplitter] = field(
        default_factory=lambda: (balanced_splitter(), balanced_splitter())
    )

    def __post_init__(self) -> None:
        if self.m < 1:
            raise WrongLayer(f"photon layer must satisfy M >= 1, got {self.m}")
        if abs(self.lam) >= 1:
            raise ValueError(f"need |lambda| < 1, got {abs(self.lam)}")

    @property
    def outcomes(self) -> int:
        return self.m + 1


@dataclass(frozen=True)
class OutcomeTable:
    """Joint outcome probabilities conditioned on the M-per-side sector.

    ``q[gamma_a, gamma_b]`` is the conditional probability of the transmitted
    counts; ``normalization`` keeps the unconditioned sector weight.
    """

    q: np.ndarray
    normalization: float

    def __post_init__(self) -> None:
        q = np.asarray(self.q, dtype=float)
        object.__setattr__(self, "q", q)
        if q.min() < -1e-12:
            raise ValueError("negative outcome probability")
        if abs(q.sum() - 1.0) > 1e-10:
            raise ValueError(f"conditional table must sum to 1, got {q.sum()!r}")


@lru_cache(maxsize=100_000)
def _arm_amplitude(n_sig: int, n_lo: int, d: int, t: float, r: complex) -> complex:
    """Amplitude factor for d transmitted photons on one side.

    Expands (signal_dag)^n_sig (lo_dag)^n_lo through the splitter and collects
    the (d_dag)^d (e_dag)^(n_sig+n_lo-d) coefficient.
    """
    rc = r.conjugate()
    total = 0j
    for u in range(max(0, d - n_lo), min(n_sig, d) + 1):
        total += (
            math.comb(n_sig, u)
            * t**u
            * rc ** (n_sig - u)
            * math.comb(n_lo, d - u)
            * r ** (d - u)
            * (-t) ** (n_lo - d + u)
        )
    return total


@lru_cache(maxsize=4096)
def _arm_amplitude_matrix(m: int, t: float, r: complex) -> np.ndarray:
    """S[n, d] = arm amplitude for n signal + (m - n) LO photons, d transmitted.

    Depends only on the layer and the splitter, so it is cached across the
    whole of an optimisation run.
    """
    S = np.empty((m + 1, m + 1), dtype=complex)
    for n in range(m + 1):
        for d in range(m + 1):
            S[n, d] = _arm_amplitude(n, m - n, d, t, r)
    S.setflags(write=False)
    return S


def four_mode_amplitude(
    lam: complex,
    alpha: complex,
    beta: complex,
    bs1: BeamSplitter,
    bs2: BeamSplitter,
    counts: tuple[int, int, int, int],
) -> complex:
    """Exact amplitude of the four-arm count pattern (d1, e1, d2, e2).

    Includes the global factor sqrt(1-|lam|^2) exp(-|alpha|^2/2 - |beta|^2/2)
    and the Fock normalisation of the output kets, so squared magnitudes are
    unconditioned probabilities.
    """
    d1, e1, d2, e2 = counts
    if min(counts) < 0:
        raise ValueError("counts must be nonnegative")
    n_a, n_b = d1 + e1, d2 + e2
    if max(n_a, n_b) * 2 + 4 > MAX_PHOTONS:
        raise CutoffExceeded(f"count pattern {counts} exceeds the factorial table")
    fact = factorials()
    lam, alpha, beta = complex(lam), complex(alpha), complex(beta)
    g = math.sqrt(1.0 - abs(lam) ** 2) * math.exp(-0.5 * (abs(alpha) ** 2 + abs(beta) ** 2))
    total = 0j
    for n in range(min(n_a, n_b) + 1):
        j, k = n_a - n, n_b - n
        total += (
            lam**n
            / fact[n]
            * alpha**j
            / fact[j]
            * beta**k
            / fact[k]
            * _arm_amplitude(n, j, d1, bs1.t, complex(bs1.r))
            * _arm_amplitude(n, k, d2, bs2.t, complex(bs2.r))
        )
    return total * g * math.sqrt(fact[d1] * fact[e1] * fact[d2] * fact[e2])


def sector_amplitudes(
    m: int,
    lam: complex,
    alpha: complex,
    beta: complex,
    bs1: BeamSplitter,
    bs2: BeamSplitter,
) -> np.ndarray:
    """Amplitudes A[gamma_a, gamma_b] of the M-per-side outcomes."""
    lam, alpha, beta = complex(lam), complex(alpha), complex(beta)
    fact = factorials()
    n = np.arange(m + 1)
    coef = lam**n / fact[: m + 1] * (alpha * beta) ** (m - n) / fact[m::-1] ** 2
    S1 = _arm_amplitude_matrix(m, bs1.t, complex(bs1.r))
    S2 = _arm_amplitude_matrix(m, bs2.t, complex(bs2.r))
    A = np.einsum("n,nd,ne->de", coef, S1, S2)
    norms = np.sqrt(fact[: m + 1] * fact[m::-1])
    g = math.sqrt(1.0 - abs(lam) ** 2) * math.exp(-0.5 * (abs(alpha) ** 2 + abs(beta) ** 2))
    return g * A * np.outer(norms, norms)


def layer_probabilities(
    settings: BellSettings, a_index: int = 0, b_index: int = 0
) -> OutcomeTable:
    """Conditional outcome table of one setting pair on the M-photon layer."""
    A = sector_amplitudes(
        settings.m,
        settings.lam,
        settings.alphas[a_index],
        settings.betas[b_index],
        settings.bs[0],
        settings.bs[1],
    )
    q = np.abs(A) ** 2
    weight = float(q.sum())
    if weight <= 0:
        raise ValueError("sector has zero weight for these settings")
    return OutcomeTable(q / weight, weight)


def output_amplitudes_m2(
    settings: BellSettings, a_index: int = 0, b_index: int = 0
) -> np.ndarray:
    """Closed-form four-photon amplitudes for the M = 2 layer.

    Returns the 3x3 array over (gamma_a, gamma_b) transmitted counts, i.e. the
    amplitudes of |2200>, |2101>, ..., |0022> in (d1, d2, e1, e2) ket order,
    including the Fock norms of the kets and the global prefactor.
    """
    if settings.m != 2:
        raise WrongLayer(f"closed form is for the two-photon layer, got M={settings.m}")
    lam = complex(settings.lam)
    a = complex(settings.alphas[a_index])
    b = complex(settings.betas[b_index])
    t1, r1 = settings.bs[0].t, complex(settings.bs[0].r)
    t2, r2 = settings.bs[1].t, complex(settings.bs[1].r)
    r1c, r2c = np.conjugate(r1), np.conjugate(r2)
    ar1, ar2 = abs(r1) ** 2, abs(r2) ** 2
    ab2 = a**2 * b**2
    lab = lam * a * b
    s2 = math.sqrt(2.0)

    A = np.zeros((3, 3), dtype=complex)
    A[2, 2] = 2 * (ab2 / 4 * r1**2 * r2**2 + lam**2 / 2 * t1**2 * t2**2 + lab * t1 * t2 * r1 * r2)
    A[0, 0] = 2 * (
        ab2 / 4 * t1**2 * t2**2 + lam**2 / 2 * r1c**2 * r2c**2 + lab * t1 * t2 * r1c * r2c
    )
    A[2, 0] = 2 * (
        ab2 / 4 * r1**2 * t2**2 + lam**2 / 2 * t1**2 * r2c**2 - lab * t1 * t2 * r1 * r2c
    )
    A[0, 2] = 2 * (
        ab2 / 4 * t1**2 * r2**2 + lam**2 / 2 * r1c**2 * t2**2 - lab * t1 * t2 * r1c * r2
    )
    A[1, 1] = (
        ab2 * t1 * t2 * r1 * r2
        + 2 * lam**2 * t1 * t2 * r1c * r2c
        - lab * (t2**2 * ar1 - ar1 * ar2 + t1**2 * ar2 - t1**2 * t2**2)
    )
    A[2, 1] = s2 * (
        -ab2 / 2 * t2 * r1**2 * r2
        + lam**2 * t1**2 * t2 * r2c
        - lab * (t1 * t2**2 * r1 - t1 * r1 * ar2)
    )
    A[1, 2] = s2 * (
        -ab2 / 2 * t1 * r1 * r2**2
        + lam**2 * t1 * t2**2 * r1c
        - lab * (t1**2 * t2 * r2 - t2 * ar1 * r2)
    )
    A[0, 1] = s2 * (
        -ab2 / 2 * t1**2 * t2 * r2
        + lam**2 * t2 * r1c**2 * r2c
        - lab * (t1 * r1c * ar2 - t1 * t2**2 * r1c)
    )
    A[1, 0] = s2 * (
        -ab2 / 2 * t1 * t2**2 * r1
        + lam**2 * t1 * r1c * r2c**2
        + lab * (t1**2 * t2 * r2c - t2 * ar1 * r2c)
    )
    scale = math.sqrt(1.0 - abs(lam) ** 2) * math.exp(-0.5 * (abs(a) ** 2 + abs(b) ** 2))
    return scale * A


# ---------------------------------------------------------------------------
# CGLMP correlator


def outcome_tables(settings: BellSettings) -> tuple[OutcomeTable, ...]:
    """Tables for the setting pairs (a, b), (a', b), (a', b'), (a, b')."""
    pairs = ((0, 0), (1, 0), (1, 1), (0, 1))
    return tuple(layer_probabilities(settings, i, j) for i, j in pairs)


def _p_congruent(table: OutcomeTable | np.ndarray, eps: int, d: int) -> float:
    """P(A - B == eps mod d) on one outcome table."""
    q = table.q if isinstance(table, OutcomeTable) else np.asarray(table)
    gammas = np.arange(d)
    return float(q[gammas, (gammas - eps) % d].sum())


def cglmp_I(tables, m: int) -> float:
    """CGLMP correlator I_M for D = M+1 outcomes.

    ``tables`` holds the four outcome tables ordered as produced by
    :func:`outcome_tables`.
    """
    if len(tables) != 4:
        raise DimensionMismatch(f"need 4 outcome tables, got {len(tables)}")
    d = m + 1
    for t in tables:
        q = t.q if isinstance(t, OutcomeTable) else np.asarray(t)
        if q.shape != (d, d):
            raise DimensionMismatch(f"table shape {q.shape} does not match D={d}")
    t11, t21, t22, t12 = tables
    total = 0.0
    for eps in range((m + 1) // 2):
        w = 1.0 - 2.0 * eps / m
        plus = (
            _p_congruent(t11, eps, d)
            + _p_congruent(t21, -eps - 1, d)
            + _p_congruent(t22, eps, d)
            + _p_congruent(t12, -eps, d)
        )
        minus = (
            _p_congruent(t11, -eps - 1, d)
            + _p_congruent(t21, eps, d)
            + _p_congruent(t22, -eps - 1, d)
            + _p_congruent(t12, eps + 1, d)
        )
        total += w * (plus - minus)
    return total


def i3_expansion(tables) -> float:
    """Independent spelled-out form of the M = 2 correlator.

    Every congruence class is written as its explicit index pairs, providing
    a second arithmetic path against :func:`cglmp_I`.
    """
    t11, t21, t22, t12 = [t.q if isinstance(t, OutcomeTable) else np.asarray(t) for t in tables]

    def s(q, pairs):
        return float(sum(q[a, b] for a, b in pairs))

    equal = [(0, 0), (1, 1), (2, 2)]
    a_is_b_minus_1 = [(0, 1), (1, 2), (2, 0)]  # A = B - 1 (mod 3)
    a_is_b_plus_1 = [(1, 0), (2, 1), (0, 2)]  # A = B + 1 (mod 3)

    plus = s(t11, equal) + s(t21, a_is_b_minus_1) + s(t22, equal) + s(t12, equal)
    minus = s(t11, a_is_b_minus_1) + s(t21, equal) + s(t22, a_is_b_minus_1) + s(t12, a_is_b_plus_1)
    return plus - minus


def chsh_value(tables) -> float:
    """Two-outcome CHSH combination E11 + E12 + E22 - E21 from outcome tables."""
    sign = np.array([[1.0, -1.0], [-1.0, 1.0]])

    def corr(t):
        q = t.q if isinstance(t, OutcomeTable) else np.asarray(t)
        return float((q * sign).sum())

    t11, t21, t22, t12 = tables
    return corr(t11) + corr(t12) + corr(t22) - corr(t21)


# ---------------------------------------------------------------------------
# Numerical maximisation of I_M


@dataclass(frozen=True)
class SearchConfig:
    """Multi-start derivative-free search settings."""

    n_starts: int = 64
    seed: int = 11
    lam_max: float = 0.95
    lo_max: float = 2.0
    maxiter: int = 4000
    polish_rounds: int = 2
    workers: int = 1
    free_bs: bool = False


@dataclass(frozen=True)
class StartResult:
    value: float
    x: np.ndarray
    converged: bool
    nfev: int


@dataclass(frozen=True)
class BellSearchResult:
    m: int
    best_value: float
    settings: BellSettings
    starts: tuple[StartResult, ...]
    converged_fraction: float
    boundary_hits: dict
    seed: int


def _vector_to_settings(x: np.ndarray, m: int, free_bs: bool) -> BellSettings:
    lam = x[0] * np.exp(1j * x[1])
    a1 = x[2]
    a2 = x[3] * np.exp(1j * x[4])
    b1 = x[5] * np.exp(1j * x[6])
    b2 = x[7] * np.exp(1j * x[8])
    if free_bs:
        bs = (
            BeamSplitter(x[9], -1j * math.sqrt(max(0.0, 1.0 - x[9] ** 2))),
            BeamSplitter(x[10], -1j * math.sqrt(max(0.0, 1.0 - x[10] ** 2))),
        )
    else:
        bs = (balanced_splitter(), balanced_splitter())
    return BellSettings(m=m, lam=lam, alphas=(a1, a2), betas=(b1, b2), bs=bs)


def _bounds(m: int, config: SearchConfig):
    two_pi = 2.0 * math.pi
    b = [
        (1e-6, config.lam_max),
        (-two_pi, two_pi),
        (1e-6, config.lo_max),
        (1e-6, config.lo_max),
        (-two_pi, two_pi),
        (1e-6, config.lo_max),
        (-two_pi, two_pi),
        (1e-6, config.lo_max),
        (-two_pi, two_pi),
    ]
    if config.free_bs:
        b += [(0.05, 0.999), (0.05, 0.999)]
    return b


def _negative_im(x: np.ndarray, m: int, free_bs: bool) -> float:
    settings = _vector_to_settings(x, m, free_bs)
    qs = []
    for i, j in ((0, 0), (1, 0), (1, 1), (0, 1)):
        A = sector_amplitudes(
            m, settings.lam, settings.alphas[i], settings.betas[j], settings.bs[0], settings.bs[1]
        )
        q = np.abs(A) ** 2
        w = q.sum()
        if w <= 1e-300:
            return 0.0  # zero-weight sector: no violation here
        qs.append(q / w)
    return -cglmp_I(qs, m)


def _single_start(args) -> StartResult:
    x0, m, config, tight = args
    res = minimize(
        _negative_im,
        x0,
        args=(m, config.free_bs),
        method="Nelder-Mead",
        bounds=_bounds(m, config),
        options={
            "maxiter": config.maxiter,
            "maxfev": config.maxiter,
            "xatol": 1e-11 if tight else 1e-7,
            "fatol": 1e-13 if tight else 1e-9,
        },
    )
    return StartResult(value=-float(res.fun), x=np.asarray(res.x), converged=bool(res.success), nfev=int(res.nfev))


def optimize_IM(m: int, config: SearchConfig | None = None) -> BellSearchResult:
    """Maximise I_M over squeezing and the four LO settings.

    Multi-start Nelder-Mead with deterministic seeding; the first LO phase is
    gauge-fixed to zero (the correlator is invariant under opposite phase
    shifts of the two sides).  Splitters stay balanced unless freed.
    """
    config = config or SearchConfig()
    rng = np.random.default_rng(config.seed)
    bounds = _bounds(m, config)
    x0s = []
    for _ in range(config.n_starts):
        x0 = []
        for lo, hi in bounds:
            if (lo, hi) == (-2.0 * math.pi, 2.0 * math.pi):
                x0.append(rng.uniform(-math.pi, math.pi))
            else:
                span = hi - lo
                x0.append(rng.uniform(lo + 0.02 * span, hi - 0.1 * span))
        x0s.append(np.array(x0))

    jobs = [(x0, m, config, False) for x0 in x0s]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            starts = list(pool.map(_single_start, jobs))
    else:
        starts = [_single_start(j) for j in jobs]

    best = max(range(len(starts)), key=lambda i: (starts[i].value, -i))
    best_x, best_val = starts[best].x, starts[best].value
    for _ in range(config.polish_rounds):
        polished = _single_start((best_x, m, config, True))
        if polished.value > best_val:
            best_val, best_x = polished.value, polished.x

    boundary_hits = {}
    for name, idx in (("lam", 0), ("alpha1", 2), ("alpha2", 3), ("beta1", 5), ("beta2", 7)):
        lo, hi = bounds[idx]
        boundary_hits[name] = bool(best_x[idx] > hi - 1e-3 * (hi - lo) or best_x[idx] < lo + 1e-9)
    return BellSearchResult(
        m=m,
        best_value=best_val,
        settings=_vector_to_settings(best_x, m, config.free_bs),
        starts=tuple(starts),
        converged_fraction=sum(s.converged for s in starts) / len(starts),
        boundary_hits=boundary_hits,
        seed=config.seed,
    )


# ---------------------------------------------------------------------------
# Loss decomposition of a photon layer


@dataclass(frozen=True)
class LossDecomposition:
    """First-order loss expansion of the M-per-side sector probability.

    exact(eta)  = eta^(2M) * sum_delta W_delta (1-eta)^delta
    model(eta)  = eta^(2M) * (W_0 + W_1 (1-eta))
    The normalised residual sum_{delta>=2} W_delta (1-eta)^delta isolates the
    quadratic scaling in (1-eta).
    """

    m: int
    eta: float
    w_series: np.ndarray
    exact: float
    first_order: float
    residual: float
    residual_normalized: float
    p_ideal: float
    nu_next_layer: float
    tail_estimate: float


def lossy_layer_check(
    m: int,
    eta: float,
    settings: BellSettings,
    a_index: int = 0,
    b_index: int = 0,
    delta_max: int = 10,
) -> LossDecomposition:
    """Exact lossy probability of the M-per-side sector and its expansion.

    Loss acts independently on all four detected arms at efficiency eta, so an
    observed M-per-side record draws on true patterns with delta extra
    photons, weighted by eta^(2M) (1-eta)^delta and binomial survivor counts.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"need 0 < eta <= 1, got {eta}")
    lam = settings.lam
    alpha = settings.alphas[a_index]
    beta = settings.betas[b_index]
    bs1, bs2 = settings.bs
    w_series = np.zeros(delta_max + 1)
    for ga in range(m + 1):
        for gb in range(m + 1):
            c = (ga, m - ga, gb, m - gb)
            for da in range(delta_max + 1):
                for db in range(delta_max + 1 - da):
                    delta = da + db
                    acc = 0.0
                    for x1 in range(da + 1):
                        for x2 in range(db + 1):
                            true = (c[0] + x1, c[1] + da - x1, c[2] + x2, c[3] + db - x2)
                            amp = four_mode_amplitude(lam, alpha, beta, bs1, bs2, true)
                            comb = (
                                binomial(true[0], c[0])
                                * binomial(true[1], c[1])
                                * binomial(true[2], c[2])
                                * binomial(true[3], c[3])
                            )
                            acc += abs(amp) ** 2 * comb
                    w_series[delta] += acc
    one_minus = (1.0 - eta) ** np.arange(delta_max + 1)
    exact = eta ** (2 * m) * float(w_series @ one_minus)
    p_ideal = float(w_series[0])
    w1 = float(w_series[1])
    first_order = eta ** (2 * m) * (p_ideal + w1 * (1.0 - eta))
    residual = exact - first_order
    tail = float(w_series[-1] * one_minus[-1])
    return LossDecomposition(
        m=m,
        eta=eta,
        w_series=w_series,
        exact=exact,
        first_order=first_order,
        residual=residual,
        residual_normalized=residual / eta ** (2 * m),
        p_ideal=p_ideal,
        nu_next_layer=w1 / (m + 1),
        tail_estimate=tail,
    )
