"""Measure families and their cylinder calculus.

Four families:
  * BernoulliProduct(p): binary product measure on [0,1); digit 1 carries
    weight p, digit 0 carries 1-p.
  * MultinomialMeasure(ell, dim, weights): product measure over the k = ell**dim
    adic subcubes, one weight per packed symbol. Zero weights are legal and
    carve the support down to the active symbols.
  * SelfSimilarMeasure(probs, ratios): attractor of an IFS of similarities with
    contraction ratios r_i and selection probabilities p_i, strong separation
    assumed. Cylinders are coded by symbol words; the level-n cylinder has
    diameter prod r_i (diam of the whole attractor normalized to 1).
  * MarkovMeasure(ell, dim, pi, P): shift-invariant Markov measure on symbol
    strings; pi must be stationary for P (checked) unless explicitly waived.

All mass computation is done in the log domain: the mass of a cylinder is
exp of the sum of per-symbol log factors, never the log of a float product.

Sampling uses a counter-based generator (Philox) keyed by
(run_seed, path_index): every path owns a substream, so ensembles are
reproducible bit for bit regardless of scheduling or thread count.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import BudgetError, ValidationError
from .symbolic import Alphabet, Word

_WEIGHT_SUM_TOL = 1e-12
_STATIONARY_TOL = 1e-10


def path_rng(run_seed: int, path_index: int = 0) -> np.random.Generator:
    """Per-path generator: Philox keyed by (run_seed, path_index)."""
    if not 0 <= int(run_seed) < 2 ** 64:
        raise ValidationError(f"seed must fit in 64 bits, got {run_seed!r}")
    if not 0 <= int(path_index) < 2 ** 64:
        raise ValidationError(f"path index must fit in 64 bits, got {path_index!r}")
    return np.random.Generator(np.random.Philox(key=[int(run_seed), int(path_index)]))


def _check_probability_vector(name: str, v, allow_zero: bool) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValidationError(f"{name} must be a non-empty 1-d vector")
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise ValidationError(f"{name} entries must be finite and >= 0")
    if not allow_zero and np.any(arr == 0):
        raise ValidationError(f"{name} entries must be strictly positive")
    if abs(arr.sum() - 1.0) > _WEIGHT_SUM_TOL:
        raise ValidationError(
            f"{name} must sum to 1 within {_WEIGHT_SUM_TOL}, got sum {arr.sum()!r}"
        )
    return arr


@dataclass(frozen=True)
class BernoulliProduct:
    """Binary product measure; digit 1 has weight p, digit 0 has weight 1-p."""

    p: float

    def __post_init__(self):
        if not (isinstance(self.p, (int, float)) and 0.0 < float(self.p) < 1.0):
            raise ValidationError(f"p must lie in (0, 1), got {self.p!r}")

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(2, 1)

    @property
    def weights(self) -> np.ndarray:
        return np.array([1.0 - self.p, self.p])


@dataclass(frozen=True)
class MultinomialMeasure:
    """Product measure over adic cubes with one weight per packed symbol."""

    ell: int
    dim: int
    weights: tuple[float, ...]

    def __post_init__(self):
        alph = Alphabet(self.ell, self.dim)
        w = np.asarray(self.weights, dtype=float)
        if w.size != alph.k:
            raise ValidationError(
                f"need {alph.k} weights for ell={self.ell}, dim={self.dim}, got {w.size}"
            )
        _check_probability_vector("weights", w, allow_zero=True)
        if np.count_nonzero(w) == 0:
            raise ValidationError("at least one weight must be positive")

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.ell, self.dim)


@dataclass(frozen=True)
class SelfSimilarMeasure:
    """Self-similar measure: probabilities over IFS branches with ratios r_i."""

    probs: tuple[float, ...]
    ratios: tuple[float, ...]

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        r = np.asarray(self.ratios, dtype=float)
        if p.shape != r.shape:
            raise ValidationError("probs and ratios must have equal length")
        _check_probability_vector("probs", p, allow_zero=False)
        if np.any(r <= 0) or np.any(r >= 1) or np.any(~np.isfinite(r)):
            raise ValidationError("ratios must lie strictly inside (0, 1)")

    @property
    def alphabet(self) -> Alphabet:
        # symbolic coding alphabet; branch count stands in for ell
        return Alphabet(max(2, len(self.probs)), 1)

    @property
    def k(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class MarkovMeasure:
    """Stationary Markov measure on symbol strings over the adic alphabet."""

    ell: int
    dim: int
    pi: tuple[float, ...]
    P: tuple[tuple[float, ...], ...]
    stationary_required: bool = True

    def __post_init__(self):
        alph = Alphabet(self.ell, self.dim)
        k = alph.k
        pi = np.asarray(self.pi, dtype=float)
        P = np.asarray(self.P, dtype=float)
        if pi.shape != (k,):
            raise ValidationError(f"pi must have length {k}, got {pi.shape}")
        if P.shape != (k, k):
            raise ValidationError(f"P must be {k}x{k}, got {P.shape}")
        _check_probability_vector("pi", pi, allow_zero=True)
        if np.any(P < 0) or np.any(~np.isfinite(P)):
            raise ValidationError("P entries must be finite and >= 0")
        rows = P.sum(axis=1)
        bad = np.where(np.abs(rows - 1.0) > _WEIGHT_SUM_TOL)[0]
        if bad.size:
            raise ValidationError(
                f"P rows must sum to 1 within {_WEIGHT_SUM_TOL}; row(s) {bad.tolist()} sum to "
                f"{rows[bad].tolist()}"
            )
        if self.stationary_required:
            drift = np.max(np.abs(pi @ P - pi))
            if drift > _STATIONARY_TOL:
                raise ValidationError(
                    f"pi is not stationary for P (|pi P - pi| = {drift:.3e} > {_STATIONARY_TOL}); "
                    "pass stationary_required=False to waive"
                )

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.ell, self.dim)


MeasureModel = Union[BernoulliProduct, MultinomialMeasure, SelfSimilarMeasure, MarkovMeasure]


def stationary_distribution(P, tol: float = 1e-14, max_iter: int = 100000) -> np.ndarray:
    """Stationary row vector of a row-stochastic matrix, by power iteration."""
    P = np.asarray(P, dtype=float)
    k = P.shape[0]
    v = np.full(k, 1.0 / k)
    for _ in range(max_iter):
        w = v @ P
        w /= w.sum()
        if np.max(np.abs(w - v)) < tol:
            return w
        v = w
    raise ValidationError("stationary distribution iteration did not converge")


# ---------------------------------------------------------------------------
# per-symbol tables shared by mass computation and sampling


def _is_product(model: MeasureModel) -> bool:
    return isinstance(model, (BernoulliProduct, MultinomialMeasure, SelfSimilarMeasure))


def symbol_weights(model: MeasureModel) -> np.ndarray:
    """Per-symbol weights for product families (error for Markov)."""
    if isinstance(model, BernoulliProduct):
        return model.weights
    if isinstance(model, MultinomialMeasure):
        return np.asarray(model.weights, dtype=float)
    if isinstance(model, SelfSimilarMeasure):
        return np.asarray(model.probs, dtype=float)
    raise ValidationError("Markov measures have no per-symbol weight vector")


def log_symbol_weights(model: MeasureModel) -> np.ndarray:
    w = symbol_weights(model)
    out = np.full(w.shape, -np.inf)
    pos = w > 0
    out[pos] = np.log(w[pos])
    return out


def _validate_word(model: MeasureModel, w: Word) -> None:
    if isinstance(model, SelfSimilarMeasure):
        if any(s >= model.k for s in w.symbols):
            raise ValidationError(
                f"word uses symbols outside the {model.k} IFS branches"
            )
        return
    if w.alphabet != model.alphabet:
        raise ValidationError(
            f"word alphabet {w.alphabet} does not match model alphabet {model.alphabet}"
        )


def log_cylinder_mass(model: MeasureModel, w: Word) -> float:
    """Natural log of the cylinder mass; -inf when the mass is zero."""
    _validate_word(model, w)
    syms = np.asarray(w.symbols, dtype=np.intp)
    if syms.size == 0:
        return 0.0
    if _is_product(model):
        lw = log_symbol_weights(model)
        vals = lw[syms]
        if np.any(np.isneginf(vals)):
            return float("-inf")
        return float(math.fsum(vals.tolist()))
    # Markov: initial factor then transitions
    pi = np.asarray(model.pi, dtype=float)
    P = np.asarray(model.P, dtype=float)
    first = pi[syms[0]]
    if first == 0.0:
        return float("-inf")
    trans = P[syms[:-1], syms[1:]] if syms.size > 1 else np.array([])
    if trans.size and np.any(trans == 0.0):
        return float("-inf")
    terms = [math.log(first)] + [math.log(t) for t in trans.tolist()]
    return float(math.fsum(terms))


def cylinder_mass(model: MeasureModel, w: Word) -> float:
    """Cylinder mass, exp of the log mass."""
    lm = log_cylinder_mass(model, w)
    return 0.0 if lm == float("-inf") else math.exp(lm)


def log_cylinder_diameter(model: MeasureModel, w: Word) -> float:
    """Natural log of the cylinder diameter (side length for cubes)."""
    _validate_word(model, w)
    if isinstance(model, SelfSimilarMeasure):
        lr = np.log(np.asarray(model.ratios, dtype=float))
        syms = np.asarray(w.symbols, dtype=np.intp)
        return float(math.fsum(lr[syms].tolist())) if syms.size else 0.0
    return -w.level * math.log(model.alphabet.ell)


def cylinder_diameter(model: MeasureModel, w: Word) -> float:
    if not isinstance(model, SelfSimilarMeasure):
        # keep grid side lengths exact instead of exp(log) round-tripping
        _validate_word(model, w)
        return float(model.alphabet.ell) ** (-w.level)
    return math.exp(log_cylinder_diameter(model, w))


# ---------------------------------------------------------------------------
# support


@dataclass(frozen=True)
class SupportInfo:
    """Active symbols G, their count g, and delta = log_ell g."""

    active: tuple[int, ...]
    g: int
    delta: float
    full: bool


def support_info(model: MeasureModel) -> SupportInfo:
    if isinstance(model, MarkovMeasure):
        pi = np.asarray(model.pi, dtype=float)
        P = np.asarray(model.P, dtype=float)
        # states reachable from the initial support through positive transitions
        active = set(np.where(pi > 0)[0].tolist())
        frontier = list(active)
        while frontier:
            i = frontier.pop()
            for j in np.where(P[i] > 0)[0]:
                if j not in active:
                    active.add(int(j))
                    frontier.append(int(j))
        act = tuple(sorted(active))
        k = model.alphabet.k
        ell = model.alphabet.ell
    elif isinstance(model, SelfSimilarMeasure):
        act = tuple(range(model.k))
        k = model.k
        ell = None
    else:
        w = symbol_weights(model)
        act = tuple(int(i) for i in np.where(w > 0)[0])
        k = w.size
        ell = model.alphabet.ell
    g = len(act)
    if ell is None:
        # no grid base; report the branch count, dimension handled elsewhere
        delta = float("nan")
    else:
        delta = math.log(g) / math.log(ell)
    return SupportInfo(active=act, g=g, delta=delta, full=(g == k))


def homogeneous_measure(model: MeasureModel) -> MultinomialMeasure:
    """Uniform weights 1/g on the active symbols of a grid family."""
    if isinstance(model, SelfSimilarMeasure):
        raise ValidationError("homogeneous measure is defined for grid families only")
    info = support_info(model)
    k = model.alphabet.k
    w = np.zeros(k)
    w[list(info.active)] = 1.0 / info.g
    return MultinomialMeasure(model.alphabet.ell, model.alphabet.dim, tuple(w.tolist()))


# ---------------------------------------------------------------------------
# sampling


def _sampling_tables(model: MeasureModel):
    """(cumulative weights over symbols, symbol ids) for inverse-CDF draws."""
    w = symbol_weights(model)
    cum = np.cumsum(w)
    cum[-1] = 1.0  # guard the top end against rounding
    return cum


def sample_symbols(model: MeasureModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """n symbols of one path as an integer array, consuming `rng`."""
    if n < 0:
        raise ValidationError(f"n must be >= 0, got {n}")
    if _is_product(model):
        cum = _sampling_tables(model)
        u = rng.random(n)
        return np.searchsorted(cum, u, side="right").astype(np.intp)
    # Markov
    pi = np.asarray(model.pi, dtype=float)
    P = np.asarray(model.P, dtype=float)
    if n == 0:
        return np.zeros(0, dtype=np.intp)
    info = support_info(model)
    rows = P[list(info.active)]
    if np.any(rows.sum(axis=1) <= 0):
        raise ValidationError("an active state has no successor; sampling would trap")
    cum_pi = np.cumsum(pi)
    cum_pi[-1] = 1.0
    cum_P = np.cumsum(P, axis=1)
    cum_P[:, -1] = 1.0
    u = rng.random(n)
    out = np.empty(n, dtype=np.intp)
    s = int(np.searchsorted(cum_pi, u[0], side="right"))
    out[0] = s
    for t in range(1, n):
        s = int(np.searchsorted(cum_P[s], u[t], side="right"))
        out[t] = s
    return out


def sample_path(model: MeasureModel, n: int, seed: int, path_index: int = 0) -> Word:
    """One sampled path of length n as a Word, reproducible from (seed, path_index)."""
    rng = path_rng(seed, path_index)
    syms = sample_symbols(model, n, rng)
    alph = model.alphabet
    return Word(alph, tuple(int(s) for s in syms))


# ---------------------------------------------------------------------------
# model files


_FAMILIES = ("bernoulli", "multinomial", "selfsimilar", "markov")
_FIELDS = {
    "bernoulli": {"family", "p", "ell", "D"},
    "multinomial": {"family", "ell", "D", "weights"},
    "selfsimilar": {"family", "probs", "ratios"},
    "markov": {"family", "ell", "D", "pi", "P"},
}


def model_from_dict(doc: dict) -> MeasureModel:
    """Build a model from a parsed model-file document. Strict: unknown fields reject."""
    if not isinstance(doc, dict):
        raise ValidationError("model document must be a JSON object")
    fam = doc.get("family")
    if fam not in _FAMILIES:
        raise ValidationError(
            f"unknown family {fam!r}; expected one of {', '.join(_FAMILIES)}"
        )
    allowed = _FIELDS[fam]
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ValidationError(
            f"unknown field(s) {unknown} for family {fam!r}; allowed: {sorted(allowed)}"
        )
    try:
        if fam == "bernoulli":
            if "ell" in doc and doc["ell"] != 2:
                raise ValidationError("bernoulli family is binary; ell must be 2")
            if "D" in doc and doc["D"] != 1:
                raise ValidationError("bernoulli family lives on [0,1); D must be 1")
            if "p" not in doc:
                raise ValidationError("bernoulli family requires field 'p'")
            return BernoulliProduct(p=float(doc["p"]))
        if fam == "multinomial":
            for req in ("ell", "weights"):
                if req not in doc:
                    raise ValidationError(f"multinomial family requires field {req!r}")
            return MultinomialMeasure(
                ell=int(doc["ell"]),
                dim=int(doc.get("D", 1)),
                weights=tuple(float(x) for x in doc["weights"]),
            )
        if fam == "selfsimilar":
            for req in ("probs", "ratios"):
                if req not in doc:
                    raise ValidationError(f"selfsimilar family requires field {req!r}")
            return SelfSimilarMeasure(
                probs=tuple(float(x) for x in doc["probs"]),
                ratios=tuple(float(x) for x in doc["ratios"]),
            )
        for req in ("ell", "pi", "P"):
            if req not in doc:
                raise ValidationError(f"markov family requires field {req!r}")
        return MarkovMeasure(
            ell=int(doc["ell"]),
            dim=int(doc.get("D", 1)),
            pi=tuple(float(x) for x in doc["pi"]),
            P=tuple(tuple(float(x) for x in row) for row in doc["P"]),
        )
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed {fam} model: {exc}") from exc


def parse_model_file(path: str) -> MeasureModel:
    """Parse and validate a model file (JSON object, strict schema)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read model file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return model_from_dict(doc)


def model_to_dict(model: MeasureModel) -> dict:
    """Round-trippable document for manifests and reports."""
    if isinstance(model, BernoulliProduct):
        return {"family": "bernoulli", "p": model.p}
    if isinstance(model, MultinomialMeasure):
        return {
            "family": "multinomial",
            "ell": model.ell,
            "D": model.dim,
            "weights": list(model.weights),
        }
    if isinstance(model, SelfSimilarMeasure):
        return {
            "family": "selfsimilar",
            "probs": list(model.probs),
            "ratios": list(model.ratios),
        }
    return {
        "family": "markov",
        "ell": model.ell,
        "D": model.dim,
        "pi": list(model.pi),
        "P": [list(r) for r in model.P],
    }


def enumeration_budget(default: int = 2 ** 24) -> int:
    """Word-enumeration budget; override with MFLIL_ENUM_BUDGET."""
    import os

    raw = os.environ.get("MFLIL_ENUM_BUDGET")
    if raw is None:
        return default
    try:
        val = int(raw)
    except ValueError as exc:
        raise ValidationError(f"MFLIL_ENUM_BUDGET must be an integer, got {raw!r}") from exc
    if val < 1:
        raise ValidationError("MFLIL_ENUM_BUDGET must be >= 1")
    return val


def check_enumeration_budget(model: MeasureModel, n: int) -> None:
    k = model.k if isinstance(model, SelfSimilarMeasure) else model.alphabet.k
    budget = enumeration_budget()
    if k ** n > budget:
        raise BudgetError(
            f"enumeration of {k}^{n} words exceeds the budget {budget} "
            "(set MFLIL_ENUM_BUDGET to raise it)"
        )
