import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ridgecert.bounds import (
    BoundFamily,
    Certificate,
    certify,
    certify_tv,
    certify_tv_tail,
    critical_argument,
    j_basic,
    j_datafree,
    j_improved,
    loss_function,
    make_certificate,
    plateau,
    sobolev_check_1d,
)
from ridgecert.diagnostic import DiagnosticMatrix, eigh
from ridgecert.measures import SobolevBudget

# closed forms evaluated at 30 digits
J_BASIC_HALF_2 = 1.17157287525380990239662255158
J_IMPROVED_3Q_1 = 0.492104150574062226859251583605
J_BASIC_3Q_1 = 0.508250563066408015996598738319
LSI_EXP_HALF = 0.141643556633353289603625903476  # exp(1/8)/8, both sides

GRID = np.arange(0, 2001) * 0.01
ALPHAS = [round(0.1 * k, 1) for k in range(1, 11)]
J_FUNCS = [j_basic, j_improved, j_datafree]


def test_examples():
    assert j_basic(1.0, 3.0) == 1.5
    assert j_basic(0.5, 2.0) == pytest.approx(J_BASIC_HALF_2, abs=1e-14)
    assert j_basic(0.5, 4.0) == pytest.approx(4.0, abs=1e-14)
    assert make_certificate(0.5, BoundFamily.BASIC, 1.0, 4.0).saturated
    assert j_improved(0.75, 1.0) == pytest.approx(J_IMPROVED_3Q_1, abs=1e-14)
    assert j_basic(0.75, 1.0) == pytest.approx(J_BASIC_3Q_1, abs=1e-14)
    assert j_datafree(1.0, 3.0) == 1.5
    assert j_datafree(0.5, 2.0) == pytest.approx(2.0)


def test_vectorized_matches_scalar():
    t = np.array([0.0, 0.3, 5.0, 40.0])
    for f in J_FUNCS:
        np.testing.assert_array_equal(f(0.6, t), [f(0.6, float(s)) for s in t])


@pytest.mark.parametrize("f", J_FUNCS)
def test_domain_errors(f):
    for a in (0.0, -0.5, 1.2):
        with pytest.raises(ValueError):
            f(a, 1.0)
    with pytest.raises(ValueError):
        f(0.5, -1.0)


@pytest.mark.parametrize("alpha", ALPHAS)
@pytest.mark.parametrize("f", J_FUNCS)
def test_monotone_and_below_plateau(f, alpha):
    v = f(alpha, GRID)
    assert np.all(np.diff(v) >= -1e-12)
    assert v[0] == 0.0
    if alpha < 1:
        assert np.all(v <= plateau(alpha) + 1e-12)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_ordering(alpha):
    b, i = j_basic(alpha, GRID), j_improved(alpha, GRID)
    if alpha == 0.5:
        np.testing.assert_allclose(b, i, atol=1e-12, rtol=0)
    elif alpha >= 0.5:
        assert np.all(i <= b + 1e-12)
    else:
        assert np.all(b <= i + 1e-12)


@pytest.mark.parametrize("alpha", [2 / 3, 0.75, 0.9])
def test_improved_concave(alpha):
    assert np.all(np.diff(j_improved(alpha, GRID), 2) <= 1e-9)
    assert np.all(np.diff(j_datafree(alpha, GRID), 2) <= 1e-9)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_basic_convex_below_critical(alpha):
    t = GRID[GRID < critical_argument(alpha, BoundFamily.BASIC)]
    assert np.all(np.diff(j_basic(alpha, t), 2) >= -1e-9)


def test_improved_tends_to_half_t_near_one():
    # the gap to t/2 is O(eps t^2)
    errs = [np.max(np.abs(j_improved(1 - eps, GRID) - 0.5 * GRID) / (1 + GRID**2)) for eps in (1e-3, 1e-5, 1e-7)]
    assert errs[0] <= 1e-3
    assert errs[1] <= 1e-2 * errs[0] * 1.01 and errs[2] <= 1e-2 * errs[1] * 1.01 + 1e-12


@pytest.mark.parametrize("alpha", [0.05, 0.2, 0.5, 0.7, 0.95])
@pytest.mark.parametrize("f", [j_basic, j_improved])
def test_slope_at_origin(f, alpha):
    h = 1e-9
    slope = 0.5 if alpha > 0.5 else 1 / (4 * alpha)
    assert f(alpha, h) / h == pytest.approx(slope, rel=1e-6)


def test_small_alpha_improved_does_not_approach_half_t():
    # the conjectured small-alpha limit is not asserted; with the stated formula the
    # plateau grows and the saturation point shrinks, so J blows up at fixed t > 0
    t = 0.5
    vals = [float(j_improved(a, t)) for a in (1e-1, 1e-2, 1e-3)]
    assert vals[0] < vals[1] < vals[2]
    assert critical_argument(1e-3, BoundFamily.IMPROVED) < t


@pytest.mark.parametrize("family", [BoundFamily.BASIC, BoundFamily.IMPROVED, BoundFamily.DATA_FREE])
@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.6, 0.7, 0.9])
def test_saturation_exactly_at_critical_argument(family, alpha):
    crit = critical_argument(alpha, family)
    f = loss_function(family)
    assert f(alpha, crit) == pytest.approx(plateau(alpha), rel=1e-12)
    assert f(alpha, 0.999 * crit) < plateau(alpha)
    assert make_certificate(alpha, family, 1.0, crit).saturated
    assert not make_certificate(alpha, family, 1.0, 0.999 * crit).saturated


def test_critical_arguments_closed_forms():
    assert critical_argument(0.75, BoundFamily.BASIC) == pytest.approx(2 / 0.25)
    assert critical_argument(0.25, BoundFamily.BASIC) == pytest.approx(4 * 0.25 / 0.75)
    assert critical_argument(0.75, BoundFamily.IMPROVED) == pytest.approx(1 / 0.25**2)
    assert critical_argument(0.25, BoundFamily.IMPROVED) == pytest.approx(2 * 0.25 / 0.75**2)
    assert critical_argument(1.0, BoundFamily.BASIC) == math.inf
    with pytest.raises(ValueError):
        critical_argument(0.5, BoundFamily.PINSKER_TV)


def _spec(*lam):
    return eigh(DiagnosticMatrix(np.diag(lam)))


def test_certify_examples():
    gauss = SobolevBudget.analytic(1.0)
    for fam in (BoundFamily.BASIC, BoundFamily.IMPROVED, BoundFamily.DATA_FREE):
        for a in (0.3, 0.5, 1.0):
            assert certify(a, fam, gauss, _spec(3.0, 2.0), 2).bound == 0.0
    c = certify(0.5, BoundFamily.BASIC, gauss, _spec(7.0), 0)
    assert c.bound == pytest.approx(4.0) and c.saturated and c.notes
    c = certify(1.0, BoundFamily.BASIC, gauss, _spec(0.2), 0)
    assert c.bound == pytest.approx(0.1) and not c.saturated


def test_certify_uses_beta_min_inverse_alpha_two():
    budget = SobolevBudget(0.5, 2.0)
    # every beta in [1, 2] uses max(C1, C2)
    assert certify(0.8, BoundFamily.BASIC, budget, _spec(0.1), 0).c_sub == 2.0
    assert certify(0.3, BoundFamily.BASIC, budget, _spec(0.1), 0).c_sub == 2.0


@given(
    st.sampled_from(list(BoundFamily)[:3]),
    st.floats(0.05, 1.0),
    st.floats(0, 10),
    st.floats(0, 10),
)
def test_certificate_recomputes(family, alpha, c, tail):
    cert = make_certificate(alpha, family, c, tail)
    assert cert.recompute() == pytest.approx(cert.bound, abs=1e-14, rel=1e-14)
    if alpha < 1 - 1e-8:
        at_plateau = cert.bound >= plateau(alpha) * (1 - 1e-12)
        assert cert.saturated == (c * tail >= critical_argument(alpha, family))
        if cert.saturated:
            assert at_plateau
    else:
        assert not cert.saturated


def test_datafree_note_below_two_thirds():
    assert make_certificate(0.5, BoundFamily.DATA_FREE, 1.0, 0.1).notes
    assert not make_certificate(0.8, BoundFamily.DATA_FREE, 1.0, 0.1).notes
    with pytest.raises(ValueError):
        make_certificate(0.5, BoundFamily.PINSKER_TV, 1.0, 0.1)
    with pytest.raises(ValueError):
        make_certificate(0.5, BoundFamily.BASIC, -1.0, 0.1)


def test_tv_certificates():
    gauss = SobolevBudget.analytic(1.0)
    c = certify_tv(gauss, _spec(0.5), 0)
    assert c.bound == pytest.approx(0.5) and not c.saturated and not c.notes
    assert certify_tv(gauss, _spec(0.5), 1).bound == 0.0
    c = certify_tv_tail(1.0, 2.0)
    assert c.bound == pytest.approx(1.0) and c.notes
    assert isinstance(c, Certificate) and c.recompute() == pytest.approx(1.0)


def test_sobolev_examples():
    assert sobolev_check_1d(1.0, lambda x: 0 * x + 3.0) == pytest.approx((0.0, 0.0), abs=1e-14)
    lhs, rhs = sobolev_check_1d(1.0, lambda x: np.exp(x / 2), df=lambda x: 0.5 * np.exp(x / 2))
    # e^{x/2} is an extremal of the Gaussian log-Sobolev inequality
    assert lhs == pytest.approx(LSI_EXP_HALF, rel=1e-12)
    assert rhs == pytest.approx(LSI_EXP_HALF, rel=1e-12)
    lhs, rhs = sobolev_check_1d(2.0, lambda x: 1 + x**2)
    assert lhs == pytest.approx(1.0, rel=1e-10)  # Var(x^2)/2
    assert rhs == pytest.approx(2.0, rel=1e-8)  # E[(2x)^2]/2
    with pytest.raises(ValueError):
        sobolev_check_1d(0.5, np.exp)
    with pytest.raises(ValueError):
        sobolev_check_1d(1.0, lambda x: x)


@given(st.floats(1.0, 2.0), st.floats(-1.5, 1.5), st.floats(0.1, 2.0))
def test_sobolev_inequality_for_exponential_family(beta, a, b):
    f = lambda x: b * np.exp(a * x)
    lhs, rhs = sobolev_check_1d(beta, f, df=lambda x: a * f(x))
    assert lhs <= rhs * (1 + 1e-9) + 1e-12
