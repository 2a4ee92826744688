import math

import numpy as np
import pytest
from scipy.special import erf

from cvbell.correlators import BellSettings, Quadrature, correlation
from cvbell.epr_state import EprState
from cvbell.lhv_phase_space import (
    LhvRun,
    MonteCarlo,
    lhv_chsh_grid,
    lhv_chsh_scan,
    lhv_correlation,
    random_shifts,
    sample_state,
)
from cvbell.observables import (
    SymbolError,
    WignerSymbol,
    make_parity,
    make_parity_inversion,
    make_sign,
    make_unsharp,
    wigner_symbol,
)

E00_N10 = 0.969673304035792261834313475923
N10 = EprState(10)
SYM_S = wigner_symbol(make_sign())


def test_sign_sign_zero_shift():
    assert lhv_correlation(N10, SYM_S, SYM_S) == pytest.approx(E00_N10, abs=1e-10)


@pytest.mark.parametrize("sa, sb", [((0.1, 0.4), (-0.2, 0.0)), ((-0.3, -1.0), (0.25, 0.7))])
def test_matches_quantum_correlation(sa, sb):
    quantum = correlation(N10, make_sign().shifted(*sa), make_sign().shifted(*sb), Quadrature())
    assert lhv_correlation(N10, SYM_S, SYM_S, sa, sb) == pytest.approx(quantum, abs=1e-10)


def test_vacuum_factorizes():
    # n_mean = 0: q_a, q_b independent N(0, 1/2), so E[sgn(q - q0)] = -erf(q0)
    vac = EprState(0)
    qa, qb = 0.3, -0.55
    val = lhv_correlation(vac, SYM_S, SYM_S, (qa, 0.2), (qb, -0.1))
    assert val == pytest.approx(erf(qa) * erf(qb), abs=1e-11)


def test_monte_carlo_agrees_within_statistics():
    mc = MonteCarlo(count=200_000, seed=3)
    sa, sb = (0.1, 0.0), (-0.05, 0.0)
    exact = lhv_correlation(N10, SYM_S, SYM_S, sa, sb)
    est = lhv_correlation(N10, SYM_S, SYM_S, sa, sb, mc)
    sigma = math.sqrt(max(1 - exact ** 2, 1e-12) / mc.count)
    assert abs(est - exact) < 5 * sigma


def test_p_dependent_symbol_quadrature_vs_mc():
    sym = WignerSymbol("regular", func=lambda q, p: np.sign(q) * np.cos(p) / (2 * math.pi),
                       sup=1 / (2 * math.pi), kinks=(0.0,), p_dependent=True)
    sa, sb = (0.05, 0.3), (-0.1, -0.2)
    exact = lhv_correlation(EprState(1), sym, sym, sa, sb)
    est = lhv_correlation(EprState(1), sym, sym, sa, sb, MonteCarlo(400_000, seed=1))
    assert abs(est - exact) < 5 / math.sqrt(400_000)


@pytest.mark.parametrize("spec", [make_parity(), make_parity_inversion(), make_unsharp(1, 10.0)])
def test_singular_symbols_refused(spec):
    sym = wigner_symbol(spec)
    with pytest.raises(SymbolError, match="bounded"):
        lhv_correlation(N10, sym, SYM_S)
    with pytest.raises(SymbolError):
        LhvRun(Quadrature(), (sym, SYM_S), BellSettings(((0, 0), (0, 0)), ((0, 0), (0, 0))))


def test_sample_state_statistics():
    s = sample_state(N10, 200_000, seed=5)
    cov = N10.covariance_matrix()
    sd = np.sqrt(np.diag(cov))
    assert np.all(np.abs(s.mean(axis=0)) < 5 * sd / math.sqrt(len(s)))
    rho = np.corrcoef(s[:, 0], s[:, 1])[0, 1]
    assert abs(rho - N10.s2 / N10.c2) < 0.002
    # no position-momentum correlation
    for i, j in [(0, 2), (0, 3), (1, 2), (1, 3)]:
        assert abs(np.corrcoef(s[:, i], s[:, j])[0, 1]) < 5 / math.sqrt(len(s))


def test_sample_state_deterministic_and_blocked():
    a = sample_state(N10, 70_000, seed=9)
    b = sample_state(N10, 70_000, seed=9)
    assert np.array_equal(a, b)
    # a prefix of blocks does not depend on the total count
    c = sample_state(N10, 1 << 16, seed=9)
    assert np.array_equal(a[: 1 << 16], c)
    with pytest.raises(ValueError):
        sample_state(N10, 0)


def test_chsh_degenerate_settings():
    st = BellSettings(((0.1, 0.2), (0.1, 0.2)), ((0.0, 0.0), (0.0, 0.0)))
    b, _ = lhv_chsh_scan(N10, SYM_S, [st])
    assert b == pytest.approx(2 * abs(lhv_correlation(N10, SYM_S, SYM_S, (0.1, 0.2))), abs=1e-12)
    assert b <= 2


def test_chsh_scan_strong_squeezing():
    rng = np.random.default_rng(11)
    settings_list = [BellSettings(tuple(map(tuple, rng.uniform(-0.3, 0.3, (2, 2)))),
                                  tuple(map(tuple, rng.uniform(-0.3, 0.3, (2, 2)))))
                     for _ in range(50)]
    b, arg = lhv_chsh_scan(EprState(100), SYM_S, settings_list)
    assert b <= 2 + 1e-6
    assert arg in settings_list


def test_chsh_grid_small():
    alice, bob = random_shifts(6, 1, 0.3), random_shifts(6, 2, 0.3)
    best, idx, mat = lhv_chsh_grid(N10, SYM_S, alice, bob)
    assert mat.shape == (6, 6)
    assert best <= 2 + 1e-6
    i, i2, j, j2 = idx
    b = mat[i, j] + mat[i, j2] + mat[i2, j] - mat[i2, j2]
    assert abs(b) == pytest.approx(best)


def test_chsh_rejects_empty_and_unbounded():
    with pytest.raises(ValueError):
        lhv_chsh_scan(N10, SYM_S, [])
    big = WignerSymbol("regular", func=lambda q, p: np.sign(q), sup=1.0)
    with pytest.raises(ValueError):
        lhv_chsh_scan(N10, big, [BellSettings(((0, 0), (0, 0)), ((0, 0), (0, 0)))])


def test_random_shifts_reproducible():
    assert random_shifts(4, 7, 0.5) == random_shifts(4, 7, 0.5)
    assert all(abs(q) <= 0.5 and abs(p) <= 0.5 for q, p in random_shifts(50, 1, 0.5))


def test_monte_carlo_validation():
    with pytest.raises(ValueError):
        MonteCarlo(count=0)
