import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mflil import (
    BernoulliProduct,
    ChiProfile,
    FlatSpectrumError,
    LogBase,
    MarkovMeasure,
    MultinomialMeasure,
    SelfSimilarMeasure,
    ValidationError,
    chi,
    chi_inverse,
    dimension,
    is_flat,
    log_partition_sum,
    not_flat_check,
    sigma2,
    sigma2_scale_free,
    sigma2_to_base,
    spectrum_table,
    tau,
    tau_empirical,
    tau_scale_free,
    tau_to_base,
)
from mflil.zoo import load_zoo_model, zoo_models

QUARTER = BernoulliProduct(0.25)
LN2 = math.log(2.0)


def test_tau_fixed_points():
    assert abs(tau_scale_free(QUARTER, 1.0)) <= 1e-14
    assert tau_scale_free(QUARTER, 0.0) == pytest.approx(1.0, abs=1e-14)
    assert tau_scale_free(QUARTER, 2.0) == pytest.approx(-0.6780719051126377, abs=1e-12)


def test_tau_implicit_cantor():
    cn = load_zoo_model("cantor_natural")
    delta = math.log(2) / math.log(3)
    for q in (-1.0, 0.0, 0.5, 2.0):
        assert tau_scale_free(cn, q) == pytest.approx((1 - q) * delta, abs=1e-12)
    cb = load_zoo_model("cantor_biased")
    assert tau_scale_free(cb, 2.0) == pytest.approx(math.log(0.625) / math.log(3), abs=1e-11)


def test_tau_perron_markov():
    mk = load_zoo_model("markov_chain")
    # 2x2 closed form: log_2 of the larger eigenvalue of the q-matrix
    tr = 0.9 ** 2 + 0.5 ** 2
    det = (0.9 * 0.5) ** 2 - (0.1 * 0.5) ** 2
    lam = (tr + math.sqrt(tr * tr - 4 * det)) / 2
    assert tau_scale_free(mk, 2.0) == pytest.approx(math.log2(lam), abs=1e-11)
    assert abs(tau_scale_free(mk, 1.0)) <= 1e-11


def test_methods_agree_on_products():
    m = MultinomialMeasure(3, 1, (0.2, 0.3, 0.5))
    for q in (-1.5, 0.3, 2.5):
        closed = tau_scale_free(m, q, method="closed")
        # the same weights as a chain with identical rows
        mk = MarkovMeasure(3, 1, (0.2, 0.3, 0.5), ((0.2, 0.3, 0.5),) * 3)
        perron = tau_scale_free(mk, q, method="perron")
        assert closed == pytest.approx(perron, abs=1e-10)


def test_markov_irreducibility_guard():
    # two closed classes inside the support: no single Perron root
    reducible = MarkovMeasure(2, 1, (0.5, 0.5), ((1.0, 0.0), (0.0, 1.0)))
    with pytest.raises(ValidationError):
        tau_scale_free(reducible, 2.0)
    # absorbing structure OUTSIDE the support is fine: restrict and proceed
    restricted = MarkovMeasure(2, 1, (0.0, 1.0), ((0.5, 0.5), (0.0, 1.0)))
    assert abs(tau_scale_free(restricted, 1.0)) <= 1e-12


@given(st.floats(0.05, 0.95), st.floats(-2, 3), st.floats(-2, 3), st.floats(-2, 3))
@settings(max_examples=60)
def test_tau_convex_decreasing(p, q1, q2, q3):
    qs = sorted((q1, q2, q3))
    m = BernoulliProduct(p)
    t = [tau_scale_free(m, q) for q in qs]
    assert t[0] >= t[1] - 1e-10 >= t[2] - 2e-10
    if qs[2] - qs[0] > 1e-3 and qs[1] - qs[0] > 1e-4 and qs[2] - qs[1] > 1e-4:
        lam = (qs[1] - qs[0]) / (qs[2] - qs[0])
        assert t[1] <= (1 - lam) * t[0] + lam * t[2] + 1e-9


@given(st.floats(0.05, 0.95))
@settings(max_examples=40)
def test_bernoulli_symmetry(p):
    a, b = BernoulliProduct(p), BernoulliProduct(1 - p)
    assert tau_scale_free(a, 1.7) == pytest.approx(tau_scale_free(b, 1.7), abs=1e-12)
    assert dimension(a) == pytest.approx(dimension(b), abs=1e-12)


def test_relabeling_invariance():
    m1 = MultinomialMeasure(3, 1, (0.2, 0.3, 0.5))
    m2 = MultinomialMeasure(3, 1, (0.5, 0.2, 0.3))
    for q in (-1.0, 0.5, 2.0):
        assert tau_scale_free(m1, q) == pytest.approx(tau_scale_free(m2, q), abs=1e-13)
    assert sigma2_scale_free(m1).value == pytest.approx(sigma2_scale_free(m2).value, abs=1e-12)


def test_bernoulli_equals_selfsimilar_twin():
    # p-Bernoulli on the dyadic grid == self-similar with ratios 1/2 in natural units
    b = BernoulliProduct(0.3)
    s = SelfSimilarMeasure((0.7, 0.3), (0.5, 0.5))
    for q in (-1.0, 0.5, 2.0):
        nat_b = tau(b, q, LogBase.NATURAL)
        nat_s = tau_scale_free(s, q) * LN2  # implicit exponent is per ln(1/r)
        assert nat_b == pytest.approx(nat_s, abs=1e-11)
    assert dimension(b) == pytest.approx(dimension(s), abs=1e-11)


def test_base_conversions():
    t_nat = tau(QUARTER, 2.0, LogBase.NATURAL)
    t_b2 = tau(QUARTER, 2.0, LogBase.BASE_2)
    assert t_nat == pytest.approx(t_b2 * LN2, abs=1e-13)
    s_nat = sigma2(QUARTER, LogBase.NATURAL).value
    s_b2 = sigma2(QUARTER, LogBase.BASE_2).value
    assert s_nat == pytest.approx(s_b2 * LN2, abs=1e-13)
    assert tau_to_base(QUARTER, 1.0, LogBase.NATURAL) == pytest.approx(LN2)
    assert sigma2_to_base(QUARTER, 1.0, LogBase.BASE_2) == pytest.approx(1.0 / LN2)


def test_selfsimilar_units_are_natural_only():
    cb = load_zoo_model("cantor_biased")
    with pytest.raises(ValidationError):
        tau(cb, 2.0, LogBase.BASE_2)
    assert tau(cb, 2.0, LogBase.NATURAL) == pytest.approx(
        tau_scale_free(cb, 2.0), abs=1e-14
    )


def test_anchor_values():
    assert dimension(QUARTER) == pytest.approx(0.8112781244591328, abs=1e-12)
    assert sigma2(QUARTER, LogBase.BASE_2).value == pytest.approx(0.471019899129799, abs=1e-12)
    assert sigma2_scale_free(QUARTER).value == pytest.approx(0.32648611506945, abs=1e-12)
    cb = load_zoo_model("cantor_biased")
    assert dimension(cb) == pytest.approx(0.5118595071429147, abs=1e-12)
    assert sigma2_scale_free(cb).value == pytest.approx(0.20598980412527054, abs=1e-11)
    mk = load_zoo_model("markov_chain")
    assert dimension(mk) == pytest.approx(0.5574963279910676, abs=1e-10)


def test_markov_sigma2_flag_and_err():
    mk = load_zoo_model("markov_chain")
    res = sigma2_scale_free(mk)
    assert res.err >= 0
    assert not res.flagged
    assert res.value == pytest.approx(0.8774000084681973, abs=1e-5)


def test_flatness():
    assert is_flat(BernoulliProduct(0.5))
    assert is_flat(load_zoo_model("cantor_natural"))
    assert not is_flat(QUARTER)
    assert sigma2_scale_free(BernoulliProduct(0.5)).value == 0.0


def test_chi_values():
    assert chi(QUARTER, 0.5) == pytest.approx(0.044345251246929396, abs=1e-12)
    assert chi(QUARTER, 0.25) > 0
    # chi vanishes quadratically at q = 0
    assert chi(QUARTER, 1e-5) == pytest.approx(0.0, abs=1e-8)


def test_chi_profile_inverse_round_trip():
    prof = ChiProfile(QUARTER, side=1, q_max=1.0)
    for q in (0.03, 0.2, 0.7, 1.0):
        y = prof.chi(q)
        assert prof.inverse(y) == pytest.approx(q, abs=1e-9)
    y = prof.chi_at_qmax()
    assert chi_inverse(QUARTER, y, side=1) == pytest.approx(1.0, abs=1e-9)


def test_chi_profile_flat_raises():
    prof = ChiProfile(BernoulliProduct(0.5), side=1)
    assert prof.flat
    with pytest.raises(FlatSpectrumError):
        prof.inverse(0.01)


def test_theta_domain():
    prof = ChiProfile(QUARTER, side=1, q_max=1.0)
    t_lo = 1.0 / prof.chi_at_qmax()
    assert prof.theta(t_lo * 2) > 0
    with pytest.raises(ValidationError):
        prof.theta(t_lo * 0.5)
    # theta is non-increasing in chi: larger t -> smaller 1/t -> smaller q
    assert prof.theta(t_lo * 10) < prof.theta(t_lo * 2) * 10


def test_not_flat_check():
    res = not_flat_check(QUARTER, q_max=1.0, levels=10)
    assert res.holds and not res.flat
    assert res.C >= 1.0
    assert res.alpha_lower_bound > 0
    flat = not_flat_check(BernoulliProduct(0.5))
    assert flat.flat and not flat.holds


@given(st.floats(0.06, 0.94), st.floats(0.05, 1.0))
@settings(max_examples=40)
def test_chi_doubling_property(p, q):
    m = BernoulliProduct(p)
    if is_flat(m):
        return
    c1, c2 = chi(m, q), chi(m, q / 2)
    assert c1 > 0 and c2 > 0
    assert c1 >= c2 - 1e-15  # chi increases along the branch
    # doubling with a uniform constant on this parameter box; the measured
    # sup of chi(q)/chi(q/2) over it is 5.77 (at p = 0.06, q = 1)
    assert c1 <= 6.5 * c2


def test_log_partition_sum_routes_agree():
    for model in (QUARTER, MultinomialMeasure(3, 1, (0.2, 0.3, 0.5))):
        for q in (-1.0, 0.5, 2.0):
            fac = log_partition_sum(model, q, 6, method="factorized")
            enu = log_partition_sum(model, q, 6, method="enumerate")
            assert fac == pytest.approx(enu, abs=1e-11)
    mk = load_zoo_model("markov_chain")
    a = log_partition_sum(mk, 2.0, 6, method="enumerate")
    b = log_partition_sum(mk, 2.0, 6)
    assert a == pytest.approx(b, abs=1e-11)


def test_tau_empirical():
    # product families: the finite-level exponent equals tau at every level
    assert tau_empirical(QUARTER, 2.0, 8) == pytest.approx(
        tau(QUARTER, 2.0), abs=1e-12
    )
    mk = load_zoo_model("markov_chain")
    t_inf = tau_scale_free(mk, 2.0)
    gap10 = abs(tau_empirical(mk, 2.0, 10) - t_inf)
    gap14 = abs(tau_empirical(mk, 2.0, 14) - t_inf)
    assert gap14 < gap10  # converging in n


def test_spectrum_table():
    table = spectrum_table(QUARTER, q_min=-1.0, q_max=2.0, q_step=0.25)
    assert 1.0 in table.q and 0.0 in table.q
    i1 = table.q.index(1.0)
    assert abs(table.tau[i1]) <= 1e-10
    i0 = table.q.index(0.0)
    assert table.tau[i0] == pytest.approx(table.delta, abs=1e-12)
    assert table.d == pytest.approx(0.8112781244591328, abs=1e-10)
    assert not table.flat
    with pytest.raises(ValidationError):
        spectrum_table(QUARTER, q_step=-0.1)


def test_dimension_all_zoo_cross_checks():
    for name, model in zoo_models().items():
        d = dimension(model)  # raises NumericalError if routes disagree
        assert 0.0 < d <= 1.0 + 1e-12, name
