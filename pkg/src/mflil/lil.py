"""The log-mass process S_n, iterated-logarithm ratios, and ensemble engines.

Along a sampled path x the level-n cylinder mass m(I_n(x)) decays roughly like
(scale)^(-n d); the object of interest is the centered process S_n - n d where
S_n = -log m(I_n(x)), and its second-order fluctuations under the normalizer
sqrt(2 t LL(t)). Everything here is unit-disciplined through a convention
object that fixes, at once, the base of S, the time variable t, the iterated
logarithm LL, and the matching variance constants:

  'base-2'   S in bits, t = n symbols, LL = log2 log2.  Binary grids only.
  'base-ell' S in base-ell units, t = n, LL = log_ell log_ell.  Grid models.
  'natural'  S in nats, t = ln(1/diam), LL = ln ln.  Any model, and the only
             convention for self-similar measures (t = ln(1/R_n) varies by
             path there).

With an all-one-base normalizer the limiting constant of the ratio
(S_n - d t)/sqrt(2 t LL t) is sqrt(sigma2) with sigma2 the natural curvature
tau''(1) in every convention: the base of LL absorbs the unit of S. The CLT
normalization (S - d t)/sqrt(sigma2_clt t) instead uses the per-unit-t
variance of S, which does depend on the convention. Both constants ride on
the convention object so they cannot be mixed up.

Exact small-n machinery (exact_distribution, running_max_tail) does rational
arithmetic on digit-count classes and is the oracle layer for the Monte Carlo
engines.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np
from scipy import stats as _scipy_stats

from .errors import BudgetError, ValidationError
from .models import (
    BernoulliProduct,
    MarkovMeasure,
    MeasureModel,
    MultinomialMeasure,
    SelfSimilarMeasure,
    Word,
    path_rng,
)
from .spectrum import LogBase, dimension, sigma2_scale_free

_DEFAULT_PATH_BUDGET = 2 ** 33
_MARKOV_STEP_BUDGET = 2 ** 26


def path_budget() -> int:
    raw = os.environ.get("MFLIL_PATH_BUDGET")
    if raw is None:
        return _DEFAULT_PATH_BUDGET
    try:
        val = int(raw)
    except ValueError as exc:
        raise ValidationError(f"MFLIL_PATH_BUDGET must be an integer, got {raw!r}") from exc
    if val < 1:
        raise ValidationError(f"MFLIL_PATH_BUDGET must be >= 1, got {val}")
    return val


# ---------------------------------------------------------------------------
# conventions


@dataclass(frozen=True)
class LilConvention:
    """One consistent unit system for (S, t, LL, sigma)."""

    name: str
    log_base: float  # base of S and of both iterated logs; math.e for natural
    t_min: float
    d: float  # drift of S per unit t (the scale-free dimension)
    sigma2: float  # variance constant of the normalized ratio, = tau''(1) natural
    sigma2_clt: float  # variance of S per unit t, in S units squared

    @property
    def sigma(self) -> float:
        return math.sqrt(max(self.sigma2, 0.0))

    def loglog(self, t: float) -> float:
        lb = math.log(self.log_base)
        inner = math.log(t) / lb
        if inner <= 0:
            raise ValidationError(f"iterated log undefined at t={t!r} (convention {self.name})")
        out = math.log(inner) / lb
        if out <= 0:
            raise ValidationError(
                f"iterated log non-positive at t={t!r} (convention {self.name})"
            )
        return out

    def check_time(self, t: float) -> None:
        if t < self.t_min:
            raise ValidationError(
                f"t={t!r} below t_min={self.t_min} for convention {self.name}"
            )
        self.loglog(t)


_CONVENTION_NAMES = ("base-2", "base-ell", "natural")


def lil_convention(model: MeasureModel, name: str = "auto") -> LilConvention:
    """Build the unit system for a model; 'auto' picks base-ell for grids."""
    if name == "auto":
        name = "natural" if isinstance(model, SelfSimilarMeasure) else "base-ell"
    if name not in _CONVENTION_NAMES:
        raise ValidationError(
            f"unknown convention {name!r}; expected one of {_CONVENTION_NAMES} or 'auto'"
        )
    d = dimension(model)
    s2_nat = sigma2_scale_free(model).value
    if name == "natural":
        return LilConvention("natural", math.e, 3.0, d, s2_nat, s2_nat)
    if isinstance(model, SelfSimilarMeasure):
        raise ValidationError(
            "self-similar measures have no grid level; use the 'natural' convention"
        )
    ell = model.alphabet.ell
    if name == "base-2":
        if ell != 2:
            raise ValidationError(
                f"'base-2' convention requires a binary grid, model has ell={ell}"
            )
        return LilConvention("base-2", 2.0, 16.0, d, s2_nat, s2_nat / math.log(2.0))
    return LilConvention("base-ell", float(ell), 16.0, d, s2_nat, s2_nat / math.log(ell))


def lil_ratio(S: float, t: float, d: float, convention: LilConvention) -> float:
    """(S - d t) / sqrt(2 t LL(t)), with LL in the convention's base."""
    convention.check_time(t)
    return (S - d * t) / math.sqrt(2.0 * t * convention.loglog(t))


# ---------------------------------------------------------------------------
# per-symbol increments and path processes


def _log_weights_in_base(model: MeasureModel, base: LogBase) -> np.ndarray:
    """Per-symbol log weights in the requested base (np.log2 kept exact for bits)."""
    if isinstance(model, SelfSimilarMeasure):
        if base is not LogBase.NATURAL:
            raise ValidationError("self-similar masses carry natural units only")
        return np.log(np.asarray(model.probs, dtype=float))
    if isinstance(model, BernoulliProduct):
        w = np.asarray(model.weights, dtype=float)
    elif isinstance(model, MultinomialMeasure):
        w = np.asarray(model.weights, dtype=float)
    else:
        raise ValidationError("per-symbol weights are not defined for Markov chains")
    out = np.full(w.shape, -np.inf)
    pos = w > 0
    if base is LogBase.BASE_2:
        if model.alphabet.ell != 2:
            raise ValidationError("base-2 weight logs need a binary grid")
        out[pos] = np.log2(w[pos])
    elif base is LogBase.BASE_ELL:
        out[pos] = np.log(w[pos]) / math.log(model.alphabet.ell)
    else:
        out[pos] = np.log(w[pos])
    return out


def per_symbol_moments(model: MeasureModel, base: Optional[LogBase] = None) -> tuple[float, float]:
    """(mean, variance) of the one-symbol increment X = -log_b(weight).

    Defined for the independent-increment families; the Markov chain's
    increments are correlated and have no single per-symbol variance.
    """
    if isinstance(model, MarkovMeasure):
        raise ValidationError("per-symbol moments require independent increments")
    if base is None:
        base = LogBase.NATURAL if isinstance(model, SelfSimilarMeasure) else LogBase.BASE_ELL
    if isinstance(model, SelfSimilarMeasure):
        w = np.asarray(model.probs, dtype=float)
    else:
        w = np.asarray(model.weights, dtype=float)
    lw = _log_weights_in_base(model, base)
    keep = w > 0
    w, lw = w[keep], lw[keep]
    mean = float(w @ (-lw))
    var = float(w @ (lw + mean) ** 2)
    return mean, var


def _base_of_convention(model: MeasureModel, convention: LilConvention) -> LogBase:
    if convention.name == "natural":
        return LogBase.NATURAL
    if convention.name == "base-2":
        return LogBase.BASE_2
    return LogBase.BASE_ELL


def s_process(model: MeasureModel, w: Word, base: Union[LogBase, str] = LogBase.NATURAL) -> np.ndarray:
    """S_1..S_n along the word: S_j = -log(mass of the j-prefix), incrementally."""
    if isinstance(base, str):
        base = LogBase.parse(base)
    syms = np.asarray(w.symbols, dtype=np.intp)
    if syms.size == 0:
        return np.zeros(0)
    if isinstance(model, MarkovMeasure):
        if base is LogBase.BASE_2 and model.alphabet.ell != 2:
            raise ValidationError("base-2 process needs a binary grid")
        lb = 1.0 if base is LogBase.NATURAL else math.log(2.0 if base is LogBase.BASE_2 else model.alphabet.ell)
        pi = np.asarray(model.pi, dtype=float)
        P = np.asarray(model.P, dtype=float)
        inc = np.empty(syms.size)
        if pi[syms[0]] <= 0:
            raise ValidationError("word starts in a null state")
        inc[0] = -math.log(pi[syms[0]]) / lb
        trans = P[syms[:-1], syms[1:]]
        if np.any(trans <= 0):
            raise ValidationError("word crosses a null transition")
        inc[1:] = -np.log(trans) / lb
        return np.cumsum(inc)
    lw = _log_weights_in_base(model, base)
    inc = -lw[syms]
    if not np.all(np.isfinite(inc)):
        raise ValidationError("word enters a null cylinder")
    return np.cumsum(inc)


def log_inverse_diameter_process(model: MeasureModel, w: Word) -> np.ndarray:
    """ln(1/diameter) of each prefix: j ln(ell) on grids, -sum ln r_i self-similar."""
    n = w.level
    if isinstance(model, SelfSimilarMeasure):
        lr = np.log(np.asarray(model.ratios, dtype=float))
        return np.cumsum(-lr[np.asarray(w.symbols, dtype=np.intp)])
    return np.arange(1, n + 1, dtype=float) * math.log(model.alphabet.ell)


@dataclass(frozen=True)
class PathStats:
    """Checkpoint values of one sampled path, in one convention's units."""

    seed: int
    path_index: int
    convention: str
    checkpoints: tuple[int, ...]
    S: tuple[float, ...]
    t: tuple[float, ...]  # = checkpoints on grids; ln(1/R_n) for self-similar

    def ratios(self, conv: LilConvention) -> tuple[float, ...]:
        return tuple(lil_ratio(s, t, conv.d, conv) for s, t in zip(self.S, self.t))


def _checkpoint_walk_product(model, checkpoints, rng, lw_conv, lr_nat):
    """Block count draws between checkpoints; exact per-symbol distribution.

    Returns (S in convention units, t natural-or-level) at each checkpoint.
    lr_nat is None on grids (t is the level); for self-similar it holds the
    natural log contraction of each symbol.
    """
    if isinstance(model, BernoulliProduct):
        weights = np.asarray(model.weights, dtype=float)
    else:
        weights = np.asarray(model.probs if isinstance(model, SelfSimilarMeasure) else model.weights, dtype=float)
    active = np.flatnonzero(weights > 0)
    wa = weights[active]
    wa = wa / wa.sum()
    S = np.empty(len(checkpoints))
    t = np.empty(len(checkpoints))
    s_acc = 0.0
    t_acc = 0.0
    prev = 0
    two_sided = active.size == 2
    for j, ck in enumerate(checkpoints):
        gap = ck - prev
        if gap:
            if two_sided:
                c1 = int(rng.binomial(gap, wa[1]))
                counts = np.array([gap - c1, c1])
            else:
                counts = rng.multinomial(gap, wa)
            s_acc += float(counts @ (-lw_conv[active]))
            if lr_nat is not None:
                t_acc += float(counts @ (-lr_nat[active]))
        S[j] = s_acc
        t[j] = t_acc if lr_nat is not None else float(ck)
        prev = ck
    return S, t


def _checkpoint_walk_markov(model, checkpoints, rng, lb):
    pi = np.asarray(model.pi, dtype=float)
    P = np.asarray(model.P, dtype=float)
    cum_pi = np.cumsum(pi)
    cum_P = np.cumsum(P, axis=1)
    n = checkpoints[-1]
    u = rng.random(n)
    state = int(np.searchsorted(cum_pi, u[0] * cum_pi[-1], side="right"))
    state = min(state, pi.size - 1)
    s_acc = -math.log(pi[state]) / lb
    S = np.empty(len(checkpoints))
    pos = 0
    placed = 1
    while pos < len(checkpoints) and checkpoints[pos] == placed:
        S[pos] = s_acc
        pos += 1
    for step in range(1, n):
        row = cum_P[state]
        nxt = int(np.searchsorted(row, u[step] * row[-1], side="right"))
        nxt = min(nxt, pi.size - 1)
        s_acc += -math.log(P[state, nxt]) / lb
        state = nxt
        placed += 1
        while pos < len(checkpoints) and checkpoints[pos] == placed:
            S[pos] = s_acc
            pos += 1
    return S, np.asarray(checkpoints, dtype=float)


_WINDOW_BLOCK = 1 << 16


def _loglog_array(conv, t: np.ndarray) -> np.ndarray:
    """Vectorized conv.loglog; nan where the iterated log is undefined."""
    lb = math.log(conv.log_base)
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = np.log(t) / lb
        out = np.where(inner > 0, np.log(np.where(inner > 0, inner, 1.0)) / lb, np.nan)
    return out


def _window_walk_product(model, checkpoints, rng, lw_conv, lr_nat, conv, w_lo, w_hi):
    """Per-level scan: one symbol draw per level, ratio tracked inside the window.

    Returns (S, t, run_sup, run_inf) at the checkpoints, where run_sup/run_inf
    are the running extremes of the lil ratio over every window level seen so
    far (not only the checkpoints). Falls back to -inf/+inf carry values until
    the window opens.
    """
    if isinstance(model, BernoulliProduct):
        weights = np.asarray(model.weights, dtype=float)
    else:
        weights = np.asarray(
            model.probs if isinstance(model, SelfSimilarMeasure) else model.weights,
            dtype=float,
        )
    active = np.flatnonzero(weights > 0)
    wa = weights[active] / weights[active].sum()
    cw = np.cumsum(wa)
    neg_lw = -lw_conv[active]
    neg_lr = -lr_nat[active] if lr_nat is not None else None

    m = len(checkpoints)
    n = checkpoints[-1]
    S = np.empty(m)
    T = np.empty(m)
    SUP = np.empty(m)
    INF = np.empty(m)
    s_acc = 0.0
    t_acc = 0.0
    sup_carry = -np.inf
    inf_carry = np.inf
    pos = 0
    base = 0
    while base < n:
        b = min(_WINDOW_BLOCK, n - base)
        u = rng.random(b)
        idx = np.minimum(np.searchsorted(cw, u * cw[-1], side="right"), wa.size - 1)
        S_lev = s_acc + np.cumsum(neg_lw[idx])
        levels = np.arange(base + 1, base + b + 1, dtype=float)
        T_lev = t_acc + np.cumsum(neg_lr[idx]) if neg_lr is not None else levels
        LL = _loglog_array(conv, T_lev)
        valid = (levels >= w_lo) & (levels <= w_hi) & (T_lev >= conv.t_min) & (LL > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = (S_lev - conv.d * T_lev) / np.sqrt(2.0 * T_lev * LL)
        run_sup = np.maximum(
            np.maximum.accumulate(np.where(valid, ratio, -np.inf)), sup_carry
        )
        run_inf = np.minimum(
            np.minimum.accumulate(np.where(valid, ratio, np.inf)), inf_carry
        )
        while pos < m and checkpoints[pos] <= base + b:
            j = checkpoints[pos] - base - 1
            S[pos] = S_lev[j]
            T[pos] = T_lev[j]
            SUP[pos] = run_sup[j]
            INF[pos] = run_inf[j]
            pos += 1
        s_acc = float(S_lev[-1])
        t_acc = float(T_lev[-1])
        sup_carry = float(run_sup[-1])
        inf_carry = float(run_inf[-1])
        base += b
    return S, T, SUP, INF


def _window_walk_markov(model, checkpoints, rng, lb, conv, w_lo, w_hi):
    """Stepwise chain walk with the per-level window ratio tracked alongside."""
    pi = np.asarray(model.pi, dtype=float)
    P = np.asarray(model.P, dtype=float)
    cum_pi = np.cumsum(pi)
    cum_P = np.cumsum(P, axis=1)
    n = checkpoints[-1]
    m = len(checkpoints)
    u = rng.random(n)
    state = min(int(np.searchsorted(cum_pi, u[0] * cum_pi[-1], side="right")), pi.size - 1)
    s_acc = -math.log(pi[state]) / lb
    sup_carry = -math.inf
    inf_carry = math.inf
    S = np.empty(m)
    SUP = np.empty(m)
    INF = np.empty(m)
    pos = 0
    placed = 1

    def track(level: int, s_val: float):
        nonlocal sup_carry, inf_carry
        if w_lo <= level <= w_hi and level >= conv.t_min:
            try:
                r = lil_ratio(s_val, float(level), conv.d, conv)
            except ValidationError:
                return
            if r > sup_carry:
                sup_carry = r
            if r < inf_carry:
                inf_carry = r

    track(placed, s_acc)
    while pos < m and checkpoints[pos] == placed:
        S[pos], SUP[pos], INF[pos] = s_acc, sup_carry, inf_carry
        pos += 1
    for step in range(1, n):
        row = cum_P[state]
        nxt = min(int(np.searchsorted(row, u[step] * row[-1], side="right")), pi.size - 1)
        s_acc += -math.log(P[state, nxt]) / lb
        state = nxt
        placed += 1
        track(placed, s_acc)
        while pos < m and checkpoints[pos] == placed:
            S[pos], SUP[pos], INF[pos] = s_acc, sup_carry, inf_carry
            pos += 1
    return S, np.asarray(checkpoints, dtype=float), SUP, INF


def _single_path(model, checkpoints, conv, seed, path_index, lw_conv, lr_nat, lb):
    rng = path_rng(seed, path_index)
    if isinstance(model, MarkovMeasure):
        return _checkpoint_walk_markov(model, checkpoints, rng, lb)
    return _checkpoint_walk_product(model, checkpoints, rng, lw_conv, lr_nat)


def _single_path_window(model, checkpoints, conv, seed, path_index, lw_conv, lr_nat, lb, w_lo, w_hi):
    rng = path_rng(seed, path_index)
    if isinstance(model, MarkovMeasure):
        return _window_walk_markov(model, checkpoints, rng, lb, conv, w_lo, w_hi)
    return _window_walk_product(model, checkpoints, rng, lw_conv, lr_nat, conv, w_lo, w_hi)


def path_stats(
    model: MeasureModel,
    checkpoints: Sequence[int],
    convention: str = "auto",
    seed: int = 0,
    path_index: int = 0,
) -> PathStats:
    conv = lil_convention(model, convention)
    cks = _validated_checkpoints(model, checkpoints, conv)
    lw_conv, lr_nat, lb = _engine_tables(model, conv)
    S, t = _single_path(model, cks, conv, seed, path_index, lw_conv, lr_nat, lb)
    return PathStats(seed, path_index, conv.name, tuple(cks), tuple(map(float, S)), tuple(map(float, t)))


def _validated_checkpoints(model, checkpoints, conv) -> tuple[int, ...]:
    cks = tuple(int(c) for c in checkpoints)
    if not cks or any(c <= 0 for c in cks):
        raise ValidationError("checkpoints must be positive levels")
    if list(cks) != sorted(set(cks)):
        raise ValidationError("checkpoints must be strictly increasing")
    t0 = float(cks[0])
    if isinstance(model, SelfSimilarMeasure):
        # the slowest contraction gives the smallest t at a given level
        t0 = cks[0] * (-math.log(max(model.ratios)))
    conv.check_time(t0)
    return cks


def _engine_tables(model, conv):
    lb = 1.0
    lw_conv = None
    lr_nat = None
    if isinstance(model, MarkovMeasure):
        lb = 1.0 if conv.name == "natural" else math.log(2.0 if conv.name == "base-2" else model.alphabet.ell)
    else:
        base = _base_of_convention(model, conv)
        lw_conv = _log_weights_in_base(model, base)
        if isinstance(model, SelfSimilarMeasure):
            lr_nat = np.log(np.asarray(model.ratios, dtype=float))
    return lw_conv, lr_nat, lb


# ---------------------------------------------------------------------------
# ensembles


@dataclass(frozen=True)
class EnsembleSummary:
    """Fixed-order reductions over N independent paths at common checkpoints.

    Ratio columns are the normalized (S - d t)/sqrt(2 t LL t) statistics;
    z-columns feed the CLT diagnostics. runsup_median tracks, per checkpoint,
    the ensemble median of each path's running sup of the ratio over the
    window seen so far (non-decreasing in the horizon by construction).
    """

    convention: str
    N: int
    seed: int
    checkpoints: tuple[int, ...]
    window: tuple[int, int]
    d: float
    sigma: float
    ratio_mean: tuple[float, ...]
    ratio_var: tuple[float, ...]
    ratio_min: tuple[float, ...]
    ratio_max: tuple[float, ...]
    ks_distance: tuple[float, ...]
    mean_gap: tuple[float, ...]  # |mean(S)/t - d| per checkpoint
    runsup_median: tuple[float, ...]
    path_window_sup: np.ndarray
    path_window_inf: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, EnsembleSummary):
            return NotImplemented
        scalar = all(
            getattr(self, f) == getattr(other, f)
            for f in (
                "convention", "N", "seed", "checkpoints", "window", "d", "sigma",
                "ratio_mean", "ratio_var", "ratio_min", "ratio_max",
                "ks_distance", "mean_gap", "runsup_median",
            )
        )
        return (
            scalar
            and np.array_equal(self.path_window_sup, other.path_window_sup)
            and np.array_equal(self.path_window_inf, other.path_window_inf)
        )


def _ks_normal(z: np.ndarray) -> float:
    return float(_scipy_stats.kstest(z, "norm").statistic)


def run_ensemble(
    model: MeasureModel,
    N: int,
    checkpoints: Sequence[int],
    seed: int = 0,
    convention: str = "auto",
    window: Optional[tuple[int, int]] = None,
    threads: int = 1,
) -> EnsembleSummary:
    """Simulate N paths at the checkpoints and reduce, bit-stably.

    Each path i draws from its own counter-based stream keyed by (seed, i),
    so results are identical for every thread count; threads only partition
    the fill of per-path arrays. Reductions run single-threaded in path order.

    Passing an explicit window switches the walk to one draw per level so the
    running sup/inf of the ratio cover every level of [n_lo, n_hi]; without a
    window the walk jumps between checkpoints with exact block draws and the
    extremes are over the checkpoint grid. Both modes are deterministic in
    (seed, mode), but they consume the per-path stream differently, so S at a
    checkpoint differs between modes for the same seed.
    """
    if N < 1:
        raise ValidationError(f"N must be >= 1, got {N}")
    if threads < 1:
        raise ValidationError(f"threads must be >= 1, got {threads}")
    conv = lil_convention(model, convention)
    cks = _validated_checkpoints(model, checkpoints, conv)
    n_max = cks[-1]
    if N * n_max > path_budget():
        raise BudgetError(
            f"N*n_max = {N * n_max} exceeds the path budget {path_budget()}; "
            "raise MFLIL_PATH_BUDGET to allow it"
        )
    if isinstance(model, MarkovMeasure) and N * n_max > _MARKOV_STEP_BUDGET:
        raise BudgetError(
            f"stepwise chain simulation capped at N*n_max <= {_MARKOV_STEP_BUDGET}"
        )
    per_level = window is not None
    if window is None:
        window = (cks[0], cks[-1])
    w_lo, w_hi = int(window[0]), int(window[1])
    if w_lo > w_hi or w_lo < cks[0] or w_hi > cks[-1]:
        raise ValidationError(f"window {window!r} must sit inside the checkpoint range")
    m = len(cks)
    lw_conv, lr_nat, lb = _engine_tables(model, conv)

    S = np.empty((N, m))
    T = np.empty((N, m))
    # with an explicit window the walk visits every level inside it and keeps
    # running ratio extremes; otherwise extremes are over the checkpoint grid
    SUP = np.empty((N, m)) if per_level else None
    INF = np.empty((N, m)) if per_level else None

    def fill(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            if per_level:
                S[i], T[i], SUP[i], INF[i] = _single_path_window(
                    model, cks, conv, seed, i, lw_conv, lr_nat, lb, w_lo, w_hi
                )
            else:
                S[i], T[i] = _single_path(model, cks, conv, seed, i, lw_conv, lr_nat, lb)

    if threads == 1:
        fill(0, N)
    else:
        chunk = max(1, (N + threads - 1) // threads)
        bounds = [(lo, min(lo + chunk, N)) for lo in range(0, N, chunk)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda b: fill(*b), bounds))

    # loglog depends on the per-path t for self-similar models
    LL = np.empty_like(T)
    for j in range(m):
        col = T[:, j]
        if np.all(col == col[0]):
            LL[:, j] = conv.loglog(float(col[0]))
        else:
            LL[:, j] = [conv.loglog(float(t)) for t in col]
    centered = S - conv.d * T
    ratio = centered / np.sqrt(2.0 * T * LL)
    z = centered / np.sqrt(conv.sigma2_clt * T) if conv.sigma2_clt > 0 else np.zeros_like(centered)

    in_window = [w_lo <= c <= w_hi for c in cks]
    runsup = np.full(N, -np.inf)
    runinf = np.full(N, np.inf)
    runsup_median = []
    ratio_mean, ratio_var, ratio_min, ratio_max = [], [], [], []
    ks_list, mean_gap = [], []
    for j in range(m):
        col = ratio[:, j]
        mu = math.fsum(col.tolist()) / N
        ratio_mean.append(mu)
        ratio_var.append(math.fsum(((col - mu) ** 2).tolist()) / N)
        ratio_min.append(float(col.min()))
        ratio_max.append(float(col.max()))
        ks_list.append(_ks_normal(z[:, j]) if conv.sigma2_clt > 0 else float("nan"))
        s_mean = math.fsum(S[:, j].tolist()) / N
        t_mean = math.fsum(T[:, j].tolist()) / N
        mean_gap.append(abs(s_mean / t_mean - conv.d))
        if per_level:
            runsup = SUP[:, j]
            runinf = INF[:, j]
        elif in_window[j]:
            np.maximum(runsup, col, out=runsup)
            np.minimum(runinf, col, out=runinf)
        runsup_median.append(float(np.median(runsup)) if np.isfinite(runsup).all() else float("nan"))

    return EnsembleSummary(
        convention=conv.name,
        N=N,
        seed=seed,
        checkpoints=cks,
        window=(w_lo, w_hi),
        d=conv.d,
        sigma=conv.sigma,
        ratio_mean=tuple(ratio_mean),
        ratio_var=tuple(ratio_var),
        ratio_min=tuple(ratio_min),
        ratio_max=tuple(ratio_max),
        ks_distance=tuple(ks_list),
        mean_gap=tuple(mean_gap),
        runsup_median=tuple(runsup_median),
        path_window_sup=runsup,
        path_window_inf=runinf,
    )


# ---------------------------------------------------------------------------
# exact small-n oracles (rational arithmetic on digit-count classes)


def _iid_weight_table(model) -> tuple[np.ndarray, list[Fraction]]:
    if isinstance(model, SelfSimilarMeasure):
        w = np.asarray(model.probs, dtype=float)
    elif isinstance(model, (BernoulliProduct, MultinomialMeasure)):
        w = np.asarray(model.weights, dtype=float)
    else:
        raise ValidationError("exact class enumeration needs independent increments")
    active = np.flatnonzero(w > 0)
    fw = [Fraction(float(w[a])) for a in active]
    # float weights summing to 1.0 need not sum to 1 as exact rationals;
    # renormalize in Q so the enumerated law has total mass exactly 1
    total = sum(fw)
    return active, [f / total for f in fw]


def _compositions(n: int, g: int):
    """All count vectors of length g summing to n, lexicographic."""
    if g == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, g - 1):
            yield (first,) + rest


_COMPOSITION_BUDGET = 2 ** 20
_MARKOV_CLASS_BUDGET = 2 ** 20


def exact_distribution(
    model: MeasureModel, n: int, base: Optional[LogBase] = None
) -> list[tuple[float, Fraction]]:
    """The exact law of S_n as (value, probability) pairs, probabilities rational.

    Independent-increment families collapse to digit-count classes (n+1 classes
    for two symbols); the chain walks a dictionary keyed by (last state, exact
    mass). Weight vectors are renormalized inside Q (float entries summing to
    1.0 rarely sum to 1 as exact rationals), so probabilities sum to exactly 1.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if base is None:
        base = LogBase.NATURAL if isinstance(model, SelfSimilarMeasure) else LogBase.BASE_ELL
    if isinstance(model, MarkovMeasure):
        if base is LogBase.BASE_2 and model.alphabet.ell != 2:
            raise ValidationError("base-2 values need a binary grid")
        lb = 1.0 if base is LogBase.NATURAL else math.log(2.0 if base is LogBase.BASE_2 else model.alphabet.ell)
        pi = [Fraction(float(x)) for x in np.asarray(model.pi, dtype=float)]
        pi_total = sum(pi)
        pi = [x / pi_total for x in pi]
        P = []
        for row in np.asarray(model.P, dtype=float):
            fr = [Fraction(float(x)) for x in row]
            row_total = sum(fr)
            P.append([x / row_total for x in fr] if row_total > 0 else fr)
        classes: dict[tuple[int, Fraction], Fraction] = {}
        for i, w in enumerate(pi):
            if w > 0:
                classes[(i, w)] = classes.get((i, w), Fraction(0)) + w
        for _ in range(n - 1):
            nxt: dict[tuple[int, Fraction], Fraction] = {}
            for (i, mass), prob in classes.items():
                for j, pij in enumerate(P[i]):
                    if pij > 0:
                        key = (j, mass * pij)
                        nxt[key] = nxt.get(key, Fraction(0)) + prob * pij
            classes = nxt
            if len(classes) > _MARKOV_CLASS_BUDGET:
                raise BudgetError(
                    f"chain class count exceeded {_MARKOV_CLASS_BUDGET} at level {n}"
                )
        agg: dict[Fraction, Fraction] = {}
        for (_, mass), prob in classes.items():
            agg[mass] = agg.get(mass, Fraction(0)) + prob
        out = [(-math.log(float(mass)) / lb, prob) for mass, prob in agg.items()]
        out.sort(key=lambda vp: vp[0])
        return out
    active, fw = _iid_weight_table(model)
    g = active.size
    if math.comb(n + g - 1, g - 1) > _COMPOSITION_BUDGET:
        raise BudgetError(f"class count at n={n}, {g} symbols exceeds the budget")
    lw = _log_weights_in_base(model, base)[active]
    out = []
    for counts in _compositions(n, g):
        coeff = math.factorial(n)
        for c in counts:
            coeff //= math.factorial(c)
        prob = Fraction(coeff)
        for c, w in zip(counts, fw):
            prob *= w ** c
        value = float(-(np.asarray(counts, dtype=float) @ lw))
        out.append((value, prob))
    out.sort(key=lambda vp: vp[0])
    # merge numerically identical values (relabeled symbols with equal weights)
    merged: list[tuple[float, Fraction]] = []
    for value, prob in out:
        if merged and merged[-1][0] == value:
            merged[-1] = (value, merged[-1][1] + prob)
        else:
            merged.append((value, prob))
    return merged


def exact_moments(model: MeasureModel, n: int, base: Optional[LogBase] = None) -> tuple[float, float]:
    """(E[S_n], Var[S_n]) from the exact distribution."""
    dist = exact_distribution(model, n, base)
    total = sum(p for _, p in dist)
    if abs(float(total) - 1.0) > 1e-12:
        raise ValidationError(f"distribution mass {float(total)!r} is not 1")
    mean = math.fsum(v * float(p) for v, p in dist)
    var = math.fsum((v - mean) ** 2 * float(p) for v, p in dist)
    return mean, var


_TAIL_LEVEL_BUDGET = 64


def running_max_tail(model: MeasureModel, n0: int, n1: int, a: float) -> Fraction:
    """Exact probability that sup over k in [n0, n1] of (S_k - k d) reaches a.

    First-passage dynamic program over digit-count classes with rational
    weights; S and d are in the model's own per-symbol units (base-ell on
    grids, nats for self-similar). Restricted to independent increments.
    """
    if not 1 <= n0 <= n1:
        raise ValidationError(f"need 1 <= n0 <= n1, got ({n0}, {n1})")
    if n1 > _TAIL_LEVEL_BUDGET:
        raise BudgetError(f"n1={n1} above the exact-tail level budget {_TAIL_LEVEL_BUDGET}")
    active, fw = _iid_weight_table(model)
    base = LogBase.NATURAL if isinstance(model, SelfSimilarMeasure) else LogBase.BASE_ELL
    lw = _log_weights_in_base(model, base)[active]
    drift, _ = per_symbol_moments(model, base)
    g = active.size
    alive: dict[tuple[int, ...], Fraction] = {tuple([0] * g): Fraction(1)}
    hit = Fraction(0)
    for k in range(1, n1 + 1):
        nxt: dict[tuple[int, ...], Fraction] = {}
        for counts, prob in alive.items():
            for j in range(g):
                cc = list(counts)
                cc[j] += 1
                key = tuple(cc)
                nxt[key] = nxt.get(key, Fraction(0)) + prob * fw[j]
        alive = nxt
        if k >= n0:
            still: dict[tuple[int, ...], Fraction] = {}
            for counts, prob in alive.items():
                s_val = float(-(np.asarray(counts, dtype=float) @ lw))
                if s_val - k * drift >= a:
                    hit += prob
                else:
                    still[counts] = prob
            alive = still
    return hit
