"""Bundled canonical models: two coin measures, two Cantor measures, one chain.

These five cover every family and both sides of the dichotomy:

  bernoulli_half     binary product, p = 1/2 (Lebesgue itself; flat spectrum)
  bernoulli_quarter  binary product, p = 1/4 (the standard curved example)
  cantor_natural     self-similar, p_i = r_i^delta on the middle-third set
                     (dimension equals the support dimension)
  cantor_biased      self-similar on the same set, probs (1/4, 3/4)
  markov_chain       2-state chain, pi = (5/6, 1/6), P = [[.9, .1], [.5, .5]]
                     (quasi-Bernoulli with constant 3, not a product)

The JSON files living next to this module are ordinary model files; export
them with the `zoo` CLI subcommand to use them as templates.
"""

from __future__ import annotations

import json
from importlib import resources

from ..errors import ValidationError
from ..models import MeasureModel, model_from_dict

ZOO_NAMES = (
    "bernoulli_half",
    "bernoulli_quarter",
    "cantor_natural",
    "cantor_biased",
    "markov_chain",
)


def zoo_text(name: str) -> str:
    """Raw JSON text of a bundled model file."""
    if name not in ZOO_NAMES:
        raise ValidationError(f"unknown zoo model {name!r}; available: {ZOO_NAMES}")
    return (resources.files(__name__) / f"{name}.json").read_text(encoding="utf-8")


def load_zoo_model(name: str) -> MeasureModel:
    return model_from_dict(json.loads(zoo_text(name)))


def zoo_models() -> dict[str, MeasureModel]:
    return {name: load_zoo_model(name) for name in ZOO_NAMES}
