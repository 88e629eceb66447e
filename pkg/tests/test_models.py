import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mflil import (
    BernoulliProduct,
    BudgetError,
    MarkovMeasure,
    MultinomialMeasure,
    SelfSimilarMeasure,
    ValidationError,
    cylinder_diameter,
    cylinder_mass,
    homogeneous_measure,
    log_cylinder_mass,
    model_from_dict,
    model_to_dict,
    parse_model_file,
    path_rng,
    sample_symbols,
    stationary_distribution,
    support_info,
    symbol_weights,
)
from mflil.models import check_enumeration_budget
from mflil.symbolic import word
from mflil.zoo import load_zoo_model, zoo_models


def test_bernoulli_validation():
    with pytest.raises(ValidationError):
        BernoulliProduct(0.0)
    with pytest.raises(ValidationError):
        BernoulliProduct(1.0)
    b = BernoulliProduct(0.25)
    assert np.allclose(b.weights, [0.75, 0.25])


def test_multinomial_validation():
    with pytest.raises(ValidationError):
        MultinomialMeasure(2, 1, (0.5, 0.6))
    with pytest.raises(ValidationError):
        MultinomialMeasure(2, 1, (0.5, 0.25, 0.25))  # wrong arity
    with pytest.raises(ValidationError):
        MultinomialMeasure(2, 1, (0.0, 0.0))
    m = MultinomialMeasure(2, 1, (0.0, 1.0))  # zero weights allowed
    assert m.alphabet.k == 2


def test_selfsimilar_validation():
    with pytest.raises(ValidationError):
        SelfSimilarMeasure((0.5, 0.5), (0.5, 1.0))
    with pytest.raises(ValidationError):
        SelfSimilarMeasure((0.5, 0.5), (0.5,))
    with pytest.raises(ValidationError):
        SelfSimilarMeasure((1.0, 0.0), (0.5, 0.5))  # zero prob not allowed here


def test_markov_validation():
    with pytest.raises(ValidationError):
        MarkovMeasure(2, 1, (0.5, 0.5), ((0.9, 0.2), (0.5, 0.5)))  # bad row sum
    with pytest.raises(ValidationError):
        MarkovMeasure(2, 1, (0.5, 0.5), ((0.9, 0.1), (0.5, 0.5)))  # pi not stationary
    # same pi waived explicitly
    m = MarkovMeasure(2, 1, (0.5, 0.5), ((0.9, 0.1), (0.5, 0.5)), stationary_required=False)
    assert m.alphabet.ell == 2


def test_stationary_distribution():
    P = np.array([[0.9, 0.1], [0.5, 0.5]])
    pi = stationary_distribution(P)
    assert np.allclose(pi @ P, pi, atol=1e-13)
    assert pi[0] == pytest.approx(5.0 / 6.0, abs=1e-12)


@given(st.lists(st.integers(0, 1), min_size=0, max_size=10),
       st.lists(st.integers(0, 1), min_size=0, max_size=10))
def test_product_mass_multiplicative(a, b):
    m = BernoulliProduct(0.3)
    u, v = word(a), word(b)
    uv = word(list(a) + list(b))
    lm = log_cylinder_mass(m, uv)
    assert lm == pytest.approx(log_cylinder_mass(m, u) + log_cylinder_mass(m, v), abs=1e-12)


@pytest.mark.parametrize("name", ["bernoulli_quarter", "cantor_biased", "markov_chain"])
def test_mass_additivity(name):
    model = load_zoo_model(name)
    k = model.k if isinstance(model, SelfSimilarMeasure) else model.alphabet.k
    parent = word([0, 1, 0], ell=model.alphabet.ell)
    total = sum(
        cylinder_mass(model, word([0, 1, 0, s], ell=model.alphabet.ell))
        for s in range(k)
    )
    assert total == pytest.approx(cylinder_mass(model, parent), abs=1e-14)


def test_mass_additivity_at_root():
    for model in zoo_models().values():
        k = model.k if isinstance(model, SelfSimilarMeasure) else model.alphabet.k
        total = sum(
            cylinder_mass(model, word([s], ell=model.alphabet.ell)) for s in range(k)
        )
        assert total == pytest.approx(1.0, abs=1e-14)


def test_cylinder_diameter():
    grid = BernoulliProduct(0.25)
    assert cylinder_diameter(grid, word([0, 1, 1])) == pytest.approx(0.125, abs=0)
    ss = load_zoo_model("cantor_biased")
    w = word([0, 1], ell=ss.alphabet.ell)
    assert cylinder_diameter(ss, w) == pytest.approx((1.0 / 3.0) ** 2, rel=1e-12)


def test_support_info():
    full = support_info(BernoulliProduct(0.25))
    assert full.full and full.delta == pytest.approx(1.0)
    gappy = support_info(MultinomialMeasure(3, 1, (0.5, 0.0, 0.5)))
    assert not gappy.full
    assert gappy.delta == pytest.approx(math.log(2) / math.log(3), abs=1e-14)
    assert tuple(gappy.active) == (0, 2)


def test_homogeneous_measure():
    h = homogeneous_measure(MultinomialMeasure(3, 1, (0.5, 0.0, 0.5)))
    assert np.allclose(symbol_weights(h), [0.5, 0.0, 0.5])
    h2 = homogeneous_measure(BernoulliProduct(0.25))
    assert np.allclose(symbol_weights(h2), [0.5, 0.5])


def test_model_round_trip():
    for model in zoo_models().values():
        again = model_from_dict(model_to_dict(model))
        assert type(again) is type(model)
        assert model_to_dict(again) == model_to_dict(model)


def test_model_schema_rejects_junk(tmp_path):
    with pytest.raises(ValidationError):
        model_from_dict({"family": "bernoulli", "p": 0.25, "extra": 1})
    with pytest.raises(ValidationError):
        model_from_dict({"family": "bernoulli"})
    with pytest.raises(ValidationError):
        model_from_dict({"family": "nonsense", "p": 0.5})
    bad = tmp_path / "bad.json"
    bad.write_text("not json")
    with pytest.raises(ValidationError):
        parse_model_file(str(bad))
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"family": "bernoulli", "p": 0.25}))
    assert isinstance(parse_model_file(str(good)), BernoulliProduct)


def test_sampling_determinism():
    m = load_zoo_model("markov_chain")
    a = sample_symbols(m, 64, path_rng(9, 3))
    b = sample_symbols(m, 64, path_rng(9, 3))
    c = sample_symbols(m, 64, path_rng(9, 4))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sample_frequencies_roughly_match():
    m = BernoulliProduct(0.25)
    syms = sample_symbols(m, 20000, path_rng(1, 0))
    assert abs(syms.mean() - 0.25) < 0.02


def test_path_rng_validation():
    with pytest.raises(ValidationError):
        path_rng(-1, 0)
    with pytest.raises(ValidationError):
        path_rng(0, 2 ** 64)


def test_enumeration_budget():
    with pytest.raises(BudgetError):
        check_enumeration_budget(BernoulliProduct(0.25), 64)
    check_enumeration_budget(BernoulliProduct(0.25), 16)
