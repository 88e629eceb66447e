"""Quasi-Bernoulli constants, partition-sum bounds, and the dichotomy verdict.

A measure on words is quasi-Bernoulli with constant C when
m(I)m(J)/C <= m(IJ) <= C m(I)m(J) over positive-mass word pairs. Product
measures have C = 1 exactly; for a chain started in pi the concatenation
ratio is m(IJ)/(m(I)m(J)) = P(i, j)/pi(j) with i the last symbol of I and j
the first of J, so the sharp constant has a closed form scanned over the
transition matrix.

The constant feeds a two-sided partition-sum bound,

    C^-|q| ell^(n tau(q)) <= sum over positive level-n cylinders of m(I)^q
                          <= C^|q| ell^(n tau(q)),

whose defect log_ell(sum) - n tau(q) must stay inside +/- |q| log_ell C
uniformly in n. Because that absolute corridor is wide at desk-scale n, the
checker also tests that the defect is stationary across the level range: a
wrong tau tilts the defect linearly in n and is caught by the drift test long
before it leaves the corridor.

dichotomy_classify sorts a model into the two possible regimes (dimension
equal to the support dimension, with the measure comparable to the
homogeneous one; or strictly smaller dimension with curvature evidence, where
the measure is singular for the d-dimensional Hausdorff measure yet
absolutely continuous for the packing counterpart) and returns typed evidence
rather than a bare label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import BudgetError, NumericalError, ValidationError
from .models import (
    BernoulliProduct,
    MarkovMeasure,
    MeasureModel,
    MultinomialMeasure,
    SelfSimilarMeasure,
    homogeneous_measure,
    log_symbol_weights,
    path_rng,
    sample_symbols,
    support_info,
)
from .spectrum import (
    chi,
    dimension,
    is_flat,
    log_partition_sum,
    not_flat_check,
    sigma2_scale_free,
    tau_scale_free,
)

_PAIR_BUDGET = 2 ** 20


@dataclass(frozen=True)
class QBReport:
    """Concatenation-ratio constant, with provenance of how it was obtained."""

    C_hat: float
    exact: bool  # True when a closed form exists (products, chains)
    closed_form: Optional[float]
    max_level: int
    pairs_tested: int


def _markov_closed_C(model: MarkovMeasure) -> float:
    pi = np.asarray(model.pi, dtype=float)
    P = np.asarray(model.P, dtype=float)
    k = pi.size
    # states that can end a positive-mass word: reachable closure of supp(pi)
    ends = pi > 0
    for _ in range(k):
        grown = ends | ((P[ends] > 0).any(axis=0))
        if (grown == ends).all():
            break
        ends = grown
    best = 1.0
    found = False
    for i in range(k):
        if not ends[i]:
            continue
        for j in range(k):
            if pi[j] <= 0 or P[i, j] <= 0:
                continue
            r = P[i, j] / pi[j]
            best = max(best, r, 1.0 / r)
            found = True
    if not found:
        raise ValidationError(
            "no positive-mass concatenation exists; the constant is undefined"
        )
    return best


def _markov_word_table(model: MarkovMeasure, level: int):
    """(first, last, log mass) for every positive-mass word of the level."""
    pi = np.asarray(model.pi, dtype=float)
    P = np.asarray(model.P, dtype=float)
    words = [(i, i, math.log(pi[i])) for i in range(pi.size) if pi[i] > 0]
    for _ in range(level - 1):
        nxt = []
        for first, last, lm in words:
            for j in range(pi.size):
                if P[last, j] > 0:
                    nxt.append((first, j, lm + math.log(P[last, j])))
        words = nxt
        if len(words) > _PAIR_BUDGET:
            raise BudgetError(f"word table exceeded {_PAIR_BUDGET} entries")
    return words


def _markov_log_mass_of(model: MarkovMeasure, symbols) -> float:
    pi = np.asarray(model.pi, dtype=float)
    P = np.asarray(model.P, dtype=float)
    if pi[symbols[0]] <= 0:
        return float("-inf")
    lm = math.log(pi[symbols[0]])
    for a, b in zip(symbols[:-1], symbols[1:]):
        if P[a, b] <= 0:
            return float("-inf")
        lm += math.log(P[a, b])
    return lm


def qb_constant(
    model: MeasureModel,
    max_level: int = 8,
    seed: int = 0,
    random_pairs: int = 256,
    random_max_level: int = 16,
) -> QBReport:
    """Estimate (or read off) the concatenation-ratio constant.

    Product families short-circuit to C = 1: masses factor symbol by symbol,
    so every ratio is exactly one. Chains get the closed-form scan plus an
    exhaustive pair enumeration up to max_level total symbols and a seeded
    random-pair sweep at longer words; the enumerated sup must reproduce the
    closed form from below.
    """
    if max_level < 2:
        raise ValidationError(f"max_level must be >= 2, got {max_level}")
    if isinstance(model, (BernoulliProduct, MultinomialMeasure, SelfSimilarMeasure)):
        return QBReport(1.0, True, 1.0, max_level, 0)
    closed = _markov_closed_C(model)
    k = model.alphabet.k
    if k ** max_level > _PAIR_BUDGET:
        raise BudgetError(
            f"k^max_level = {k ** max_level} exceeds the pair budget {_PAIR_BUDGET}"
        )
    pi = np.asarray(model.pi, dtype=float)
    P = np.asarray(model.P, dtype=float)
    tables = {lvl: _markov_word_table(model, lvl) for lvl in range(1, max_level)}
    sup = 1.0
    pairs = 0
    for a in range(1, max_level):
        for b in range(1, max_level - a + 1):
            for _, last_u, lm_u in tables[a]:
                for first_v, _, lm_v in tables[b]:
                    if P[last_u, first_v] <= 0:
                        continue  # null concatenation, excluded from the sup
                    log_ratio = math.log(P[last_u, first_v]) - math.log(pi[first_v])
                    sup = max(sup, math.exp(abs(log_ratio)))
                    pairs += 1
    # seeded long-word sweep: sampled words have positive mass by construction
    rng = path_rng(seed, 0)
    for _ in range(random_pairs):
        la = int(rng.integers(1, random_max_level + 1))
        lb = int(rng.integers(1, random_max_level + 1))
        u = sample_symbols(model, la, rng)
        v = sample_symbols(model, lb, rng)
        lm_u = _markov_log_mass_of(model, u)
        lm_v = _markov_log_mass_of(model, v)
        lm_uv = _markov_log_mass_of(model, list(u) + list(v))
        if not (math.isfinite(lm_u) and math.isfinite(lm_v) and math.isfinite(lm_uv)):
            continue
        sup = max(sup, math.exp(abs(lm_uv - lm_u - lm_v)))
        pairs += 1
    if sup > closed * (1.0 + 1e-12):
        raise NumericalError(
            f"enumerated ratio {sup!r} exceeds the closed-form constant {closed!r}"
        )
    return QBReport(closed, True, closed, max_level, pairs)


# ---------------------------------------------------------------------------
# partition-sum bounds


@dataclass(frozen=True)
class PartitionCell:
    q: float
    n: int
    log_sum: float  # log_ell of the partition sum
    n_tau: float
    defect: float  # log_sum - n_tau, bounded by +/- |q| log_ell C
    bound: float
    holds: bool


@dataclass(frozen=True)
class PartitionBoundReport:
    C: float
    cells: tuple[PartitionCell, ...]
    worst_margin: float  # min over cells of bound - |defect|
    drifts: tuple[tuple[float, float], ...]  # (q, defect change across levels)
    drift_tol: float
    rejected: bool
    reason: Optional[str]


_BOUND_SLACK = 1e-9


def partition_bound_check(
    model: MeasureModel,
    q_list: Sequence[float],
    n_list: Sequence[int],
    drift_tol: float = 0.02,
    tau_shift: float = 0.0,
) -> PartitionBoundReport:
    """Check the two-sided partition-sum bound and the defect's stationarity.

    tau_shift perturbs the exponent (diagnostics: a shifted tau must be
    rejected). The defect drift for each q is defect(n_max) - defect(n_min);
    a correct tau leaves the defect level-stationary while an exponent error
    eps tilts it by eps per level.
    """
    if isinstance(model, SelfSimilarMeasure):
        raise ValidationError("partition bounds need a common grid level")
    ns = sorted(set(int(n) for n in n_list))
    if not ns or ns[0] < 1:
        raise ValidationError("n_list must contain positive levels")
    qs = list(q_list)
    if not qs:
        raise ValidationError("q_list must be non-empty")
    C = qb_constant(model).C_hat
    ln_ell = math.log(model.alphabet.ell)
    log_ell_C = math.log(C) / ln_ell
    cells = []
    drifts = []
    ok = True
    for q in qs:
        tau_q = tau_scale_free(model, q) + tau_shift
        defects = []
        for n in ns:
            ls = log_partition_sum(model, q, n) / ln_ell
            n_tau = n * tau_q
            defect = ls - n_tau
            bound = abs(q) * log_ell_C + _BOUND_SLACK
            holds = abs(defect) <= bound
            ok = ok and holds
            cells.append(PartitionCell(q, n, ls, n_tau, defect, bound, holds))
            defects.append(defect)
        drifts.append((q, defects[-1] - defects[0]))
    worst_margin = min(c.bound - abs(c.defect) for c in cells)
    drift_bad = [f"q={q}: drift {dr:+.4f}" for q, dr in drifts if abs(dr) > drift_tol]
    reason = None
    if not ok:
        reason = "absolute bound violated"
    elif drift_bad:
        reason = "defect drift beyond tolerance (" + "; ".join(drift_bad) + ")"
    return PartitionBoundReport(
        C=C,
        cells=tuple(cells),
        worst_margin=worst_margin,
        drifts=tuple(drifts),
        drift_tol=drift_tol,
        rejected=reason is not None,
        reason=reason,
    )


# ---------------------------------------------------------------------------
# the dichotomy


@dataclass(frozen=True)
class DichotomyResult:
    case: str  # 'equivalent_to_Hdelta' | 'singular_Hd_ac_Pd' | 'inconclusive'
    d: float
    delta: float
    tol_eq: float
    evidence: dict


def _homogeneous_ratio_bounds(model: MeasureModel, levels: int = 6) -> tuple[float, float]:
    """Range of m(I)/m0(I) over positive-mass cylinders up to the level cap.

    m0 is the homogeneous measure on the same support. For product families
    the per-level range is the per-symbol range to the level-th power; chains
    are enumerated directly.
    """
    if isinstance(model, SelfSimilarMeasure):
        # compare against diameter^delta: per-symbol factors p_i / r_i^delta
        delta = tau_scale_free(model, 0.0)
        p = np.asarray(model.probs, dtype=float)
        r = np.asarray(model.ratios, dtype=float)
        f = p / r ** delta
        return float(f.min()) ** levels, float(f.max()) ** levels
    m0 = homogeneous_measure(model)
    lw0 = log_symbol_weights(m0)
    if isinstance(model, MarkovMeasure):
        lo, hi = math.inf, -math.inf
        for _, _, lm in _markov_word_table(model, levels):
            ratio = lm - levels * lw0[np.isfinite(lw0)][0]
            lo, hi = min(lo, ratio), max(hi, ratio)
        return math.exp(lo), math.exp(hi)
    lw = log_symbol_weights(model)
    keep = np.isfinite(lw)
    diff = lw[keep] - lw0[keep]
    return math.exp(levels * float(diff.min())), math.exp(levels * float(diff.max()))


def dichotomy_classify(model: MeasureModel) -> DichotomyResult:
    """Sort the model into one of the two regimes, with recorded evidence.

    Case 'equivalent_to_Hdelta' when the dimension matches the support
    dimension within tol_eq; case 'singular_Hd_ac_Pd' when d is strictly
    below delta and the curvature evidence (positive chi on dyadic grids, on
    both sign branches) holds; 'inconclusive' otherwise, never a guess.
    """
    d = dimension(model)
    if isinstance(model, SelfSimilarMeasure):
        delta = tau_scale_free(model, 0.0)
    else:
        delta = support_info(model).delta
    tol_eq = 1e-5 if isinstance(model, MarkovMeasure) else 1e-9
    evidence: dict = {"tol_eq": tol_eq}
    if abs(d - delta) <= tol_eq:
        lo, hi = _homogeneous_ratio_bounds(model)
        evidence["homogeneous_ratio_range"] = (lo, hi)
        evidence["flat"] = is_flat(model)
        return DichotomyResult("equivalent_to_Hdelta", d, delta, tol_eq, evidence)
    if d > delta + tol_eq:
        raise NumericalError(
            f"dimension {d!r} exceeds the support dimension {delta!r}; "
            "the spectrum evaluation is inconsistent"
        )
    plus = not_flat_check(model, side=1)
    minus = not_flat_check(model, side=-1)
    s2 = sigma2_scale_free(model)
    evidence["sigma2_natural"] = s2.value
    evidence["sigma2_err"] = s2.err
    evidence["chi_half_plus"] = chi(model, 0.5)
    evidence["chi_half_minus"] = chi(model, -0.5)
    evidence["not_flat_plus"] = {"holds": plus.holds, "C": plus.C, "alpha": plus.alpha_lower_bound}
    evidence["not_flat_minus"] = {"holds": minus.holds, "C": minus.C, "alpha": minus.alpha_lower_bound}
    if plus.holds and minus.holds:
        evidence["witness_gauges"] = {
            "hausdorff": {"family": "lil_hausdorff", "d": d, "sigma_natural": math.sqrt(max(s2.value, 0.0))},
            "packing": {"family": "lil_packing", "d": d, "sigma_natural": math.sqrt(max(s2.value, 0.0))},
        }
        return DichotomyResult("singular_Hd_ac_Pd", d, delta, tol_eq, evidence)
    evidence["why"] = "dimension gap present but the curvature evidence is flat"
    return DichotomyResult("inconclusive", d, delta, tol_eq, evidence)
