import math

import numpy as np
import pytest

from mflil import (
    BernoulliProduct,
    ChiProfile,
    GaugeSpec,
    ValidationError,
    dimension,
    gauge_test,
    gauge_value,
    lil_sigma,
    mass_gauge_fraction,
    theta_correction,
)
from mflil.gauges import log_gauge_from_u
from mflil.zoo import load_zoo_model

QUARTER = BernoulliProduct(0.25)
LN2 = math.log(2.0)


def test_lil_sigma_conventions():
    assert lil_sigma(QUARTER, "base-2") == pytest.approx(math.sqrt(0.471019899129799), abs=1e-12)
    assert lil_sigma(QUARTER, "natural") == pytest.approx(math.sqrt(0.32648611506945), abs=1e-12)
    cb = load_zoo_model("cantor_biased")
    assert lil_sigma(cb, "natural") == pytest.approx(math.sqrt(0.20598980412527054), abs=1e-11)


def test_theta_domains():
    nat = theta_correction("natural")
    assert nat.u_min == pytest.approx(math.e)
    b2 = theta_correction("base-2")
    assert b2.u_min == pytest.approx(math.e * LN2)
    b3 = theta_correction("base-ell", ell=3)
    assert b3.u_min == pytest.approx(3 * math.log(3.0))
    with pytest.raises(ValidationError):
        theta_correction("nonsense")


def test_theta_monotone_and_domain_guard():
    th = theta_correction("base-2")
    us = np.linspace(th.u_min * 1.01, th.u_min * 400, 300)
    vals = th.log_theta_from_u(us)
    assert np.all(np.diff(vals) > 0)
    with pytest.raises(ValidationError):
        th.log_theta_from_u(np.array([th.u_min * 0.5]))


def test_theta_anchor_at_deep_scale():
    # at t = 2^(-2^16) the base-2 exponent is 561.5773922398699
    th = theta_correction("base-2")
    u = (2.0 ** 16) * LN2
    assert th.log_theta_from_u(u) / LN2 == pytest.approx(561.5773922398699, abs=1e-9)


def test_theta_cross_base_consistency():
    b2 = theta_correction("base-2")
    nat = theta_correction("natural")
    u = (2.0 ** 20) * LN2  # t = 2^(-2^20)
    ratio = (b2.log_theta_from_u(u) / LN2) * math.sqrt(LN2) / nat.log_theta_from_u(u)
    assert ratio == pytest.approx(1.0, abs=0.01)


def test_theta_value_underflow_guard():
    th = theta_correction("base-2")
    t = 2.0 ** -64
    assert th.theta(t) > 1.0
    assert math.isfinite(th.log_theta(t))


def test_gauge_spec_validation():
    d = dimension(QUARTER)
    th = theta_correction("base-2")
    with pytest.raises(ValidationError):
        GaugeSpec(family="bogus", d=d)
    with pytest.raises(ValidationError):
        GaugeSpec(family="lil_hausdorff", d=d, sigma=0.5, epsilon=0.0, theta=th)
    with pytest.raises(ValidationError):
        GaugeSpec(family="lil_hausdorff", d=d, sigma=0.5, epsilon=0.3)  # no theta
    with pytest.raises(ValidationError):
        GaugeSpec(family="sqrt", d=d, a=0.0)
    with pytest.raises(ValidationError):
        GaugeSpec(family="theta", d=d, a=1.5, chi_profile=ChiProfile(QUARTER))
    spec = GaugeSpec(family="lil_packing", d=d, sigma=0.5, epsilon=0.3, epsilon_sign=1, theta=th)
    assert spec.exponent() == pytest.approx(-0.8)  # packing applies it negatively
    spec_minus = GaugeSpec(family="lil_hausdorff", d=d, sigma=0.5, epsilon=0.3,
                           epsilon_sign=-1, theta=th)
    assert spec_minus.exponent() == pytest.approx(0.2)


def test_power_gauge_value():
    spec = GaugeSpec(family="power", d=0.5)
    g = gauge_value(spec, 0.25)
    assert g.value == pytest.approx(0.5, abs=1e-15)
    assert not g.underflowed


def test_gauge_underflow_reporting():
    spec = GaugeSpec(family="power", d=1.0)
    deep = gauge_value(spec, 1e-320)
    assert deep.value == 0.0 and deep.underflowed
    assert math.isfinite(deep.log_value)
    assert deep.log_value == pytest.approx(math.log(1e-320), rel=1e-12)
    with pytest.raises(ValidationError):
        gauge_value(spec, 0.0)
    with pytest.raises(ValidationError):
        gauge_value(spec, 1.0)


def test_hausdorff_packing_ordering():
    d = dimension(QUARTER)
    sig = lil_sigma(QUARTER, "base-2")
    th = theta_correction("base-2")
    haus = GaugeSpec(family="lil_hausdorff", d=d, sigma=sig, epsilon=0.3, theta=th)
    pack = GaugeSpec(family="lil_packing", d=d, sigma=sig, epsilon=0.3, theta=th)
    u = 2.0 ** 12 * LN2
    lg_h = log_gauge_from_u(haus, u)
    lg_p = log_gauge_from_u(pack, u)
    # hausdorff multiplies by Theta^(sigma+eps), packing divides by it
    assert lg_h > lg_p
    assert lg_h - lg_p == pytest.approx(
        2 * (sig + 0.3) * th.log_theta_from_u(u), rel=1e-12
    )


def test_sqrt_and_theta_families_evaluate():
    d = dimension(QUARTER)
    s = GaugeSpec(family="sqrt", d=d, a=0.5, ell=2)
    u = 40.0
    val = log_gauge_from_u(s, u)
    assert math.isfinite(val)
    prof = ChiProfile(QUARTER, side=1, q_max=1.0)
    t_spec = GaugeSpec(family="theta", d=d, a=0.5, ell=2, chi_profile=prof)
    u_big = math.log(1.0 / (1.0 / prof.chi_at_qmax() / 4))  # within theta domain
    u_ok = max(u_big, math.log(4.0 / prof.chi_at_qmax()))
    assert math.isfinite(log_gauge_from_u(t_spec, u_ok + 5.0))


def test_gauge_test_uniform_boundary():
    # p = 1/2: S_n = n bits exactly and the power gauge with d = 1 sits exactly
    # on the mass, so every path hits at every checkpoint
    half = BernoulliProduct(0.5)
    spec = GaugeSpec(family="power", d=1.0)
    res = gauge_test(half, spec, [16, 64], N=25, seed=4)
    assert res.fractions == (1.0, 1.0)
    assert res.hit_ever == 1.0


def test_gauge_test_checkpoint_floor():
    spec = GaugeSpec(family="power", d=1.0)
    with pytest.raises(ValidationError):
        gauge_test(BernoulliProduct(0.5), spec, [4, 64], N=10)


def test_gauge_test_deterministic_and_cumulative():
    d = dimension(QUARTER)
    sig = lil_sigma(QUARTER, "base-2")
    th = theta_correction("base-2")
    spec = GaugeSpec(family="lil_hausdorff", d=d, sigma=sig, epsilon=0.3, theta=th)
    a = gauge_test(QUARTER, spec, [64, 256, 1024], N=300, seed=11, threads=1)
    b = gauge_test(QUARTER, spec, [64, 256, 1024], N=300, seed=11, threads=3)
    assert a == b
    hb = np.asarray(a.hit_by)
    assert np.all(np.diff(hb) >= 0)
    assert a.hit_ever == hb[-1]
    assert a.family == "lil_hausdorff"


def test_mass_gauge_fraction_wrapper():
    spec = GaugeSpec(family="power", d=1.0)
    f = mass_gauge_fraction(BernoulliProduct(0.5), spec, 32, N=10, seed=0)
    assert f == 1.0


def test_selfsimilar_gauge_test():
    cb = load_zoo_model("cantor_biased")
    d = dimension(cb)
    sig = lil_sigma(cb, "natural")
    th = theta_correction("natural")
    spec = GaugeSpec(family="lil_hausdorff", d=d, sigma=sig, epsilon=0.3, theta=th)
    res = gauge_test(cb, spec, [64, 256], N=200, seed=3)
    assert 0.0 <= res.fractions[0] <= 1.0
    assert res.hit_by[-1] >= res.fractions[-1] - 1e-12
