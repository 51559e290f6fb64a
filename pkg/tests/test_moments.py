"""Moment functionals, root finding, and the assumption checklist."""

import math
import time

import numpy as np
import pytest

import smoothtail as st
from smoothtail.moments import EPSILON_GRID, estimate_domain, iid_sum_moment

from conftest import (
    ALPHA_LN,
    BETA_LN,
    M_PRIME_BETA_LN,
    alpha2_model,
    collapse_model,
    const_two_model,
    degenerate_linked_model,
    homogeneous_half_model,
    lognormal_model,
)


# ---------------------------------------------------------------------------
# closed-form evaluation


def test_m_closed_values():
    model = lognormal_model()
    # m(s) = 2 exp(-s + s^2/4); at s = 2 this is 2/e
    got = st.eval_m(model, 2.0)
    assert got.closed and got.stderr == 0.0
    assert got.value == pytest.approx(2.0 / math.e, abs=1e-14)
    for s in (0.1, 1.0, 2.7, 5.0):
        want = 2.0 * math.exp(-s + 0.25 * s * s)
        assert st.eval_m(model, s).value == pytest.approx(want, abs=1e-12)


def test_m_rejects_negative_exponent():
    with pytest.raises(st.DomainError):
        st.eval_m(lognormal_model(), -0.5)


def test_mu_closed_value_at_two():
    # E(|T1|+|T2|)^2 = 2 E T^2 + 2 (E|T|)^2 = 2/e + 2 exp(-1.5)
    got = st.eval_mu(lognormal_model(), 2.0)
    want = 2.0 / math.e + 2.0 * math.exp(-1.5)
    assert got.closed
    assert got.value == pytest.approx(want, abs=1e-12)
    assert got.value == pytest.approx(1.1820192026397442, abs=1e-14)


def test_m_epsilon_closed_for_constant_weights():
    # deterministic weights make (sum |T|^s)^(1+eps) a constant
    got = st.eval_m_epsilon(degenerate_linked_model(), 1.0, 0.5)
    assert got.closed
    assert got.value == pytest.approx((2 * 0.4) ** 1.5, abs=1e-14)


def test_m_derivative_at_roots():
    model = lognormal_model()
    da = st.eval_m_derivative(model, ALPHA_LN)
    db = st.eval_m_derivative(model, BETA_LN)
    assert da.value == pytest.approx(-M_PRIME_BETA_LN, abs=1e-12)
    assert db.value == pytest.approx(M_PRIME_BETA_LN, abs=1e-12)


def test_m_is_convex_on_grid():
    model = lognormal_model()
    grid = np.linspace(0.05, 6.0, 120)
    vals = np.array([st.eval_m(model, s).value for s in grid])
    second = np.diff(vals, 2)
    assert np.all(second >= -1e-10)


def test_monte_carlo_matches_closed_form():
    closed = st.eval_m(lognormal_model(), 1.3).value
    mc_model = lognormal_model(use_closed_forms=False)
    for seed in range(6):
        got = st.eval_m(mc_model, 1.3, budget=1 << 16, seed=seed)
        assert not got.closed and got.stderr > 0.0
        assert abs(got.value - closed) <= 3.0 * got.stderr


def test_monte_carlo_heavy_exponent_is_not_trusted():
    # mu(40) exists but is astronomically large; the sampler must either
    # flag divergence or report an error bar as big as the estimate
    mc_model = lognormal_model(use_closed_forms=False)
    flagged = st.eval_mu(mc_model, 40.0, budget=1 << 14, seed=2)
    assert flagged.diverged and math.isinf(flagged.value)
    for seed in (0, 1, 3):
        got = st.eval_mu(mc_model, 40.0, budget=1 << 14, seed=seed)
        assert got.diverged or got.stderr >= 0.5 * got.value


def test_mc_values_are_reproducible():
    mc_model = lognormal_model(use_closed_forms=False)
    a = st.eval_m(mc_model, 1.1, budget=1 << 14, seed=5)
    b = st.eval_m(mc_model, 1.1, budget=1 << 14, seed=5)
    assert a.value == b.value and a.stderr == b.stderr


def test_iid_sum_moment_recursion():
    pmf = np.array([0.2, 0.3, 0.5])
    got = iid_sum_moment(pmf, lambda j: 0.5**j, 3)
    # Y deterministic 1/2, so E S_N^3 = sum_n p_n (n/2)^3
    want = sum(p * (0.5 * n) ** 3 for n, p in enumerate(pmf))
    assert got == pytest.approx(want, abs=1e-14)
    with pytest.raises(ValueError):
        iid_sum_moment(pmf, lambda j: 0.5**j, -1)


# ---------------------------------------------------------------------------
# roots


def test_find_roots_lognormal_closed_form():
    pair = st.find_roots(lognormal_model())
    assert pair.alpha == pytest.approx(ALPHA_LN, abs=1e-9)
    assert pair.beta == pytest.approx(BETA_LN, abs=1e-9)
    # refined brackets collapse, so the root residual is exactly zero or
    # one ulp away
    assert abs(st.eval_m(lognormal_model(), pair.alpha).value - 1.0) < 1e-12
    assert abs(st.eval_m(lognormal_model(), pair.beta).value - 1.0) < 1e-12


def test_find_roots_collapse_model():
    pair = st.find_roots(collapse_model())
    want_alpha = 4.0 - math.sqrt(16.0 - 4.0 * math.log(2.0))
    want_beta = 4.0 + math.sqrt(16.0 - 4.0 * math.log(2.0))
    assert pair.alpha == pytest.approx(want_alpha, abs=1e-9)
    assert pair.beta == pytest.approx(want_beta, abs=1e-9)


def test_single_root_decreasing_families():
    # two weights of 0.4: m(s) = 2 * 0.4^s crosses 1 once, going down
    with pytest.raises(st.SingleRootError) as err:
        st.find_roots(degenerate_linked_model())
    assert err.value.root == pytest.approx(math.log(2.0) / math.log(2.5), abs=1e-12)
    assert err.value.slope < 0.0 and not err.value.tangent
    assert st.eval_m(degenerate_linked_model(), err.value.root).value - 1.0 == 0.0

    with pytest.raises(st.SingleRootError) as err:
        st.find_roots(homogeneous_half_model())
    assert err.value.root == pytest.approx(1.0, abs=1e-12)

    # a single weight makes m(0) = EN = 1 the only crossing
    with pytest.raises(st.SingleRootError) as err:
        st.find_roots(const_two_model())
    assert err.value.root == 0.0 and err.value.slope < 0.0


def test_tangent_unit_weight_case():
    model = st.WeightModel(st.NFixed(1), st.TPointMass(1.0), st.QNormal(0.0, 1.0))
    with pytest.raises(st.SingleRootError) as err:
        st.find_roots(model)
    assert err.value.root == 0.0 and err.value.slope == 0.0 and err.value.tangent


def test_no_root_when_mass_exceeds_one():
    model = st.WeightModel(st.NFixed(2), st.TPointMass(1.2), st.QNormal(0.0, 1.0))
    with pytest.raises(st.NoRootError) as err:
        st.find_roots(model)
    assert err.value.min_value == pytest.approx(2.0)
    assert err.value.argmin == pytest.approx(0.0)


def test_find_roots_monte_carlo_agrees():
    pair = st.find_roots(lognormal_model(use_closed_forms=False), seed=1)
    assert pair.alpha == pytest.approx(ALPHA_LN, abs=0.05)
    assert pair.beta == pytest.approx(BETA_LN, abs=0.08)
    assert pair.alpha_halfwidth > 0.0 and pair.beta_halfwidth > 0.0


# ---------------------------------------------------------------------------
# gamma


def test_gamma_lognormal_is_four():
    g = st.find_gamma(lognormal_model(), beta=BETA_LN)
    assert g.gamma == pytest.approx(4.0, abs=1e-9)
    assert not g.multi_root and g.below_s_infty


def test_gamma_bounded_weights_raise():
    with pytest.raises(st.NoGammaError):
        st.find_gamma(degenerate_linked_model(), beta=0.76)
    with pytest.raises(st.NoGammaError):
        st.find_gamma(homogeneous_half_model(), beta=1.0)


def test_gamma_unit_weights_return_infimum():
    model = st.WeightModel(st.NFixed(2), st.TPointMass(1.0), st.QNormal(0.0, 1.0))
    g = st.find_gamma(model, beta=2.0)
    assert g.gamma == 2.0 and g.multi_root


def test_gamma_index_starts_at_one():
    with pytest.raises(ValueError):
        st.find_gamma(lognormal_model(), k=0)


# ---------------------------------------------------------------------------
# mean equation, domain, profile


def test_mean_equation_statuses():
    unique = st.solve_mean_equation(lognormal_model())
    assert unique.status == "unique" and unique.r == 0.0

    nonunique = st.solve_mean_equation(homogeneous_half_model())
    assert nonunique.status == "nonunique" and nonunique.r is None

    impossible = st.solve_mean_equation(
        st.WeightModel(st.NFixed(2), st.TPointMass(0.5), st.QPointMass(1.0))
    )
    assert impossible.status == "none"

    linked = st.solve_mean_equation(degenerate_linked_model())
    assert linked.status == "unique" and linked.r == pytest.approx(3.0)


def test_domain_closed_families_are_everywhere_finite():
    dom = estimate_domain(lognormal_model())
    assert dom.closed
    assert dom.s0 == 0.0
    assert math.isinf(dom.s1[0]) and math.isinf(dom.s_infty[0])
    assert dom.s_hat_infty == 1.0
    assert set(dom.s_eps) == set(EPSILON_GRID)


def test_domain_monte_carlo_brackets():
    dom = estimate_domain(lognormal_model(use_closed_forms=False), seed=3)
    assert not dom.closed
    assert dom.s1[0] <= dom.s1[1]
    assert dom.s_infty[0] <= dom.s_infty[1]
    assert 0.0 < dom.s_hat_infty <= 1.0


def test_profile_lognormal():
    prof = st.moment_profile(lognormal_model(), seed=0)
    assert prof.alpha == pytest.approx(ALPHA_LN, abs=1e-9)
    assert prof.beta == pytest.approx(BETA_LN, abs=1e-9)
    assert prof.gamma == pytest.approx(4.0, abs=1e-9)
    assert prof.m_prime_alpha == pytest.approx(-M_PRIME_BETA_LN, abs=1e-9)
    assert prof.m_prime_beta == pytest.approx(M_PRIME_BETA_LN, abs=1e-9)
    assert prof.root_diagnostic is None
    assert prof.tail_exponent == prof.beta
    assert prof.alpha_like == prof.alpha
    assert prof.mean is not None and prof.mean.status == "unique"


def test_profile_single_root_models():
    deg = st.moment_profile(degenerate_linked_model(), seed=0)
    assert deg.root_diagnostic == "single_root"
    assert deg.single_root == pytest.approx(math.log(2.0) / math.log(2.5), abs=1e-12)
    assert deg.single_root_slope < 0.0
    assert deg.alpha_like == deg.single_root == deg.tail_exponent
    assert deg.gamma is None

    const = st.moment_profile(const_two_model(), seed=0)
    assert const.single_root == 0.0 and const.alpha_like == 0.0

    a2 = st.moment_profile(alpha2_model(), seed=0)
    assert a2.single_root == pytest.approx(2.0, abs=1e-9)
    assert a2.alpha_like == pytest.approx(2.0, abs=1e-9)


def test_root_recovery_is_fast():
    start = time.monotonic()
    st.find_roots(lognormal_model())
    st.find_gamma(lognormal_model(), beta=BETA_LN)
    assert time.monotonic() - start < 1.0


# ---------------------------------------------------------------------------
# assumption checklist


def test_assumptions_lognormal_all_pass():
    report = st.check_assumptions(lognormal_model(), seed=0)
    assert report.all_pass
    ids = [c.id for c in report.checks]
    for required in ("A", "B", "C", "D", "Dstar", "E", "sign", "nonlattice", "alpha_range"):
        assert required in ids
    assert report.verdict("A") == "pass"
    assert report.failures() == []


def test_assumptions_flag_degenerate_weight_sum():
    report = st.check_assumptions(homogeneous_half_model(), seed=0)
    assert not report.all_pass
    assert any(c.verdict == "fail" for c in report.checks)
