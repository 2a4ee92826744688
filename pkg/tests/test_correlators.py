import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cvbell import correlators as corr
from cvbell.correlators import (
    KERNEL_SIGN,
    BellSettings,
    ClosedForm,
    ConvergenceError,
    FockTruncation,
    Quadrature,
    bell_complex_scan,
    bell_real_scan,
    bell_value,
    closed_form_E,
    complex_settings,
    correlation,
    correlation_detail,
    max_violation,
    oracle_compare,
    real_settings,
    unsharp_threshold,
)
from cvbell.epr_state import EprState
from cvbell.observables import ObservableSpec, Profile, make_parity, make_parity_inversion, make_sign, make_unsharp

# mpmath, 30 digits (tests/oracle_values.py)
E00_N10 = 0.969673304035792261834313475923
E11_N10 = 0.969211402831240494220201702374  # shifts (0.1, 0.1)
DSTAR_N10 = 0.104888753609524515223769488752  # stationarity of the closed-form B(d)
BSTAR_N10 = 2.12391684174950830064489910745

R = make_parity_inversion()
N10 = EprState(10)


def test_closed_form_examples():
    assert closed_form_E(0, 0, N10) == pytest.approx(E00_N10, abs=1e-15)
    assert closed_form_E(0, 0, EprState(0)) == 0.0
    assert closed_form_E(0.1, 0.1, N10) == pytest.approx(E11_N10, abs=1e-14)


def test_sign_convention_recorded():
    assert KERNEL_SIGN == -1.0
    assert correlation(N10, R, R, ClosedForm()) == pytest.approx(-E00_N10, abs=1e-15)


@pytest.mark.parametrize("method", [Quadrature(), FockTruncation(256), FockTruncation()])
def test_parity_inversion_zero_shift_all_methods(method):
    res = correlation_detail(N10, R, R, method)
    assert res.converged
    assert res.value == pytest.approx(-E00_N10, abs=1e-6)
    assert abs(res.value + E00_N10) <= max(res.error, 1e-12) * 10


def test_quadrature_matches_closed_form_tightly():
    assert correlation(N10, R, R, Quadrature()) == pytest.approx(-E00_N10, abs=1e-12)


def test_fock_auto_truncation_error_estimate_is_honest():
    res = correlation_detail(N10, R, R, FockTruncation())
    assert res.n_used >= N10.default_truncation(1e-10)
    assert abs(res.value + E00_N10) <= res.error + 1e-12


@pytest.mark.parametrize("n", [0.0, 1.0, 10.0, 57.3])
def test_parity_product_is_one(n):
    st_ = EprState(n)
    for method in (Quadrature(), FockTruncation()):
        assert correlation(st_, make_parity(), make_parity(), method) == pytest.approx(1.0, abs=1e-9)


def test_sign_sign_orthant():
    S = make_sign()
    assert correlation(N10, S, S, Quadrature()) == pytest.approx(E00_N10, abs=1e-10)
    assert correlation(N10, S, S, FockTruncation()) == pytest.approx(E00_N10, abs=1e-6)


def test_closed_form_restrictions():
    with pytest.raises(ValueError):
        correlation(N10, make_sign(), make_sign(), ClosedForm())
    with pytest.raises(ValueError):
        correlation(N10, R.shifted(0.1, 0.2), R, ClosedForm())


def test_non_hermitian_rejected():
    bad = ObservableSpec(-1, Profile("sign"))
    with pytest.raises(ValueError):
        correlation(N10, bad, bad)


def test_unknown_method():
    with pytest.raises(TypeError):
        correlation_detail(N10, R, R, "quad")


def test_fock_non_convergence_raises():
    with pytest.raises(ConvergenceError) as info:
        correlation(N10, R, R, FockTruncation(n=16, tol=1e-12))
    assert info.value.error > 1e-12


@settings(max_examples=12, deadline=None)
@given(st.floats(-0.4, 0.4), st.floats(-0.4, 0.4), st.sampled_from([0.5, 3.0, 10.0]))
def test_quadrature_vs_closed_form_real_shifts(q, q2, n):
    s = EprState(n)
    exact = KERNEL_SIGN * closed_form_E(q, q2, s)
    assert correlation(s, R.shifted(q), R.shifted(q2), Quadrature()) == pytest.approx(exact, abs=1e-9)


@settings(max_examples=6, deadline=None)
@given(st.tuples(*[st.floats(-0.3, 0.3)] * 4))
def test_quadrature_vs_fock_complex_shifts(sh):
    qa, pa, qb, pb = sh
    a, b = R.shifted(qa, pa), R.shifted(qb, pb)
    quad = correlation(EprState(1), a, b, Quadrature())
    fock = correlation(EprState(1), a, b, FockTruncation(128))
    assert quad == pytest.approx(fock, abs=1e-8)


def test_unsharp_quadrature_vs_fock():
    f1 = make_unsharp(1, 3.0)
    a, b = f1.shifted(-0.2, 0.1), f1.shifted(0.15, 0.05)
    assert correlation(N10, a, b, Quadrature()) == pytest.approx(
        correlation(N10, a, b, FockTruncation(256)), abs=1e-6)


def test_real_correlation_symmetric_under_exchange():
    e1 = correlation(N10, R.shifted(-0.1), R.shifted(0.05))
    e2 = correlation(N10, R.shifted(0.05), R.shifted(-0.1))
    assert e1 == pytest.approx(e2, abs=1e-13)


# -- Bell combinations ------------------------------------------------------------

def test_settings_layout():
    st_ = real_settings(0.2)
    assert st_.alice == ((0.0, 0.0), (-0.2, 0.0)) and st_.bob == ((0.0, 0.0), (0.2, 0.0))
    c = complex_settings(0.2)
    assert c.alice[1] == (-0.2, 0.1) and c.bob[1] == (0.2, 0.1)
    assert [p[2] for p in st_.pairs()] == [1, 1, 1, -1]
    with pytest.raises(ValueError):
        BellSettings(((0, 0),), ((0, 0), (1, 0)))
    with pytest.raises(ValueError):
        BellSettings(((0, 0), (math.nan, 0)), ((0, 0), (1, 0)))


@pytest.mark.parametrize("n", [0.0, 0.5, 10.0, 1e3])
def test_degenerate_settings(n):
    s = EprState(n)
    b = bell_value(s, R, real_settings(0.0), ClosedForm())
    assert abs(b) == pytest.approx(2 * closed_form_E(0, 0, s), abs=1e-12)
    assert abs(b) <= 2


def test_bell_limits():
    assert bell_value(EprState(0), R, real_settings(0.3), ClosedForm()) == 0.0
    far = bell_value(N10, R, real_settings(5.0), ClosedForm())
    assert abs(far) == pytest.approx(E00_N10, abs=1e-12)


def test_bell_value_methods_agree():
    st_ = real_settings(0.1049)
    vals = [bell_value(N10, R, st_, m) for m in (ClosedForm(), Quadrature(), FockTruncation(256))]
    assert vals[1] == pytest.approx(vals[0], abs=1e-9)
    assert vals[2] == pytest.approx(vals[0], abs=1e-6)
    assert abs(vals[0]) == pytest.approx(2.1239, abs=1e-4)


def test_max_violation_real():
    d, b = max_violation(N10, R, "real")
    assert d == pytest.approx(DSTAR_N10, abs=1e-5)
    assert b == pytest.approx(BSTAR_N10, abs=1e-9)


def test_max_violation_bad_kind():
    with pytest.raises(ValueError):
        max_violation(N10, R, "imaginary")


def test_unsharp_real_maximizer_matches_sharp():
    # for position-only shifts E factorizes into the same Gaussian times a constant
    d_sharp, _ = max_violation(N10, R, "real")
    d_soft, b_soft = max_violation(N10, make_unsharp(1, 10.0), "real")
    assert d_soft == pytest.approx(d_sharp, abs=1e-4)
    assert b_soft < BSTAR_N10


def test_unsharp_threshold_s1_no_violation():
    ((s, b),) = unsharp_threshold(N10, 1, [1.0])
    assert s == 1.0 and b <= 2
    with pytest.raises(ValueError):
        unsharp_threshold(N10, 1, [])


# -- scans ------------------------------------------------------------------------

def test_real_scan_shape_and_d0_column():
    res = bell_real_scan([0.0, 1.0, 10.0], [0.0, 0.05, 0.1049, 0.4])
    assert res.values.shape == (3, 4) and res.converged.all()
    for i, n in enumerate(res.n_grid):
        assert abs(res.values[i, 0]) == pytest.approx(2 * closed_form_E(0, 0, EprState(n)), abs=1e-12)
    n, d, b = res.max_abs()
    assert (n, d) == (10.0, 0.1049) and b == pytest.approx(2.1239, abs=1e-4)
    rows = list(res.rows())
    assert len(rows) == 12 and rows[0][:2] == (0.0, 0.0) and rows[4][1] == 1.0


def test_real_scan_quadrature_matches_closed():
    q = bell_real_scan([2.0], [0.0, 0.2], R, Quadrature())
    c = bell_real_scan([2.0], [0.0, 0.2], R, ClosedForm())
    assert np.allclose(q.values, c.values, atol=1e-9)


def test_complex_scan_rejects_closed_form():
    with pytest.raises(ValueError):
        bell_complex_scan([10.0], [0.1], R, ClosedForm())


def test_empty_scan_grid():
    with pytest.raises(ValueError):
        bell_real_scan([], [0.1])


def test_scan_independent_of_worker_count(monkeypatch):
    grid = ([1.0, 3.0], [0.05, 0.15, 0.3])
    monkeypatch.setenv("CVBELL_WORKERS", "1")
    corr._cached_detail.cache_clear()
    one = bell_complex_scan(*grid)
    monkeypatch.setenv("CVBELL_WORKERS", "4")
    corr._cached_detail.cache_clear()
    four = bell_complex_scan(*grid)
    assert np.array_equal(one.values, four.values)


def test_complex_scan_d0():
    res = bell_complex_scan([10.0], [0.0])
    assert abs(res.values[0, 0]) == pytest.approx(2 * E00_N10, abs=1e-10)


# -- oracle comparison --------------------------------------------------------------

def test_oracle_compare_real_includes_closed_form():
    settings_list = [((-0.1, 0.0), (0.05, 0.0)), ((0.0, 0.0), (0.1, 0.0))]
    rep = oracle_compare(EprState(1), R, settings_list)
    assert set(rep) == {("quadrature", "fock"), ("quadrature", "closed_form"), ("fock", "closed_form")}
    assert max(rep.values()) < 1e-6
    assert rep[("quadrature", "closed_form")] < 1e-9


def test_oracle_compare_complex():
    rep = oracle_compare(N10, R, [((-0.1, 0.05), (0.1, 0.05))])
    assert list(rep) == [("quadrature", "fock")]
    assert rep[("quadrature", "fock")] < 1e-6
    with pytest.raises(ValueError):
        oracle_compare(N10, R, [])
