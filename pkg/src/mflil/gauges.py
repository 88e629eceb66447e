"""Corrected gauge functions and finite-scale mass-vs-gauge statistics.

A gauge here is t^d times a sub-power correction. The correction of interest
is the iterated-logarithm factor Theta, kept in three unit conventions because
the finite-t values genuinely differ even though all three agree to first
order as t -> 0:

  'base-2'   Theta(t) = 2^sqrt(2 v ln ln v),            v = log2(1/t)
  'natural'  theta(t) = e^sqrt(2 u ln ln u),            u = ln(1/t)
  'base-ell' Theta(t) = ell^sqrt(2 w L L w), L = log_ell, w = log_ell(1/t)

(The base-2 variant mixes a natural inner log with base-2 outer units; the
base-ell variant is all one base. Both are kept verbatim.) Everything is
evaluated in the log domain through u = ln(1/t), since interesting t like
2^(-2^16) underflow float64 long before the mathematics gets hard.

The matching sigma for a Theta-corrected gauge depends on the convention:
sqrt(sigma2_natural / ln 2) for 'base-2' and sqrt(sigma2_natural) for the two
all-one-base conventions, where sigma2_natural = tau''(1); see lil_sigma.

Gauge families:

  power          t^d                         (zero correction)
  lil_hausdorff  t^d Theta(t)^(+(sigma +/- eps))
  lil_packing    t^d Theta(t)^(-(sigma -/+ eps))
  sqrt           t^d ell^(a sqrt(log_ell(1/t))),  a != 0, either sign
  theta          t^d ell^(-a theta(log_ell(1/t))),  0 < a < 1, theta from a
                 chi-profile inversion

mass_gauge_fraction estimates, by seeded Monte Carlo over paths, the measure
of the set of points whose level-n cylinder mass is at most the gauge of the
cylinder diameter.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import BudgetError, ValidationError
from .lil import _engine_tables, _single_path, lil_convention, path_budget
from .models import MeasureModel, SelfSimilarMeasure
from .spectrum import ChiProfile, sigma2_scale_free

_THETA_CONVENTIONS = ("base-2", "natural", "base-ell")
_GAUGE_N_MIN = 16


def lil_sigma(model: MeasureModel, convention: str) -> float:
    """The sigma that pairs with a Theta correction in the given convention."""
    s2 = sigma2_scale_free(model).value
    if convention == "base-2":
        return math.sqrt(max(s2, 0.0) / math.log(2.0))
    if convention in ("natural", "base-ell"):
        return math.sqrt(max(s2, 0.0))
    raise ValidationError(f"unknown Theta convention {convention!r}")


@dataclass(frozen=True)
class ThetaCorrection:
    """One convention's Theta, with its domain boundary precomputed.

    u_min is the infimum of admissible u = ln(1/t) (iterated logs positive);
    t_max = exp(-u_min) is the matching supremum of admissible t. The factor
    is strictly increasing in u on the whole domain, verified once on a scan
    grid at construction, so t_monotone equals t_max.
    """

    convention: str
    ell: int
    u_min: float
    t_max: float
    t_monotone: float

    def _scaled(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u <= self.u_min):
            raise ValidationError(
                f"u = ln(1/t) must exceed {self.u_min!r} for convention "
                f"{self.convention!r} (t below {self.t_max!r})"
            )
        if self.convention == "base-2":
            lb = math.log(2.0)
            v = u / lb
            return lb * np.sqrt(2.0 * v * np.log(np.log(v)))
        if self.convention == "natural":
            return np.sqrt(2.0 * u * np.log(np.log(u)))
        lb = math.log(self.ell)
        w = u / lb
        ll = np.log(np.log(w) / lb) / lb
        return lb * np.sqrt(2.0 * w * ll)

    def log_theta_from_u(self, u):
        """Natural log of Theta at t = exp(-u); accepts scalars or arrays."""
        out = self._scaled(u)
        return float(out) if np.ndim(u) == 0 else out

    def log_theta(self, t: float) -> float:
        if not 0.0 < t < self.t_max:
            raise ValidationError(
                f"t={t!r} outside the domain (0, {self.t_max!r}) of convention "
                f"{self.convention!r}"
            )
        return self.log_theta_from_u(math.log(1.0 / t))

    def theta(self, t: float) -> float:
        lv = self.log_theta(t)
        return math.exp(lv) if lv < 709.0 else float("inf")


def theta_correction(convention: str, ell: int = 2) -> ThetaCorrection:
    if convention not in _THETA_CONVENTIONS:
        raise ValidationError(
            f"unknown Theta convention {convention!r}; expected one of {_THETA_CONVENTIONS}"
        )
    if ell < 2:
        raise ValidationError(f"ell must be >= 2, got {ell}")
    if convention == "base-2":
        u_min = math.e * math.log(2.0)
    elif convention == "natural":
        u_min = math.e
    else:
        u_min = ell * math.log(ell)
    tc = ThetaCorrection(convention, ell, u_min, math.exp(-u_min), math.exp(-u_min))
    # monotonicity scan: strictly increasing in u across fifteen orders
    us = u_min * np.exp(np.linspace(1e-6, math.log(1e15), 400))
    vals = tc._scaled(us)
    if not np.all(np.diff(vals) > 0):
        raise ValidationError(
            f"Theta is not monotone on the scan grid for convention {convention!r}"
        )
    return tc


_FAMILIES = ("power", "lil_hausdorff", "lil_packing", "sqrt", "theta")


@dataclass(frozen=True)
class GaugeSpec:
    """A gauge t^d * correction, with every unit pinned down.

    epsilon_sign picks between sigma+epsilon and sigma-epsilon inside the
    exponent; the hausdorff family applies the exponent positively, the
    packing family negatively.
    """

    family: str
    d: float
    sigma: float = 0.0
    epsilon: float = 0.0
    epsilon_sign: int = 1
    a: float = 0.0
    theta: Optional[ThetaCorrection] = None
    ell: int = 2
    chi_profile: Optional[ChiProfile] = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValidationError(f"unknown gauge family {self.family!r}")
        if self.d < 0:
            raise ValidationError(f"d must be >= 0, got {self.d!r}")
        if self.family in ("lil_hausdorff", "lil_packing"):
            if self.epsilon <= 0:
                raise ValidationError("epsilon must be positive for the lil families")
            if self.epsilon_sign not in (1, -1):
                raise ValidationError("epsilon_sign must be +1 or -1")
            if self.theta is None:
                raise ValidationError("lil gauge families need a ThetaCorrection")
            if self.sigma < 0:
                raise ValidationError("sigma must be >= 0")
        elif self.family == "sqrt":
            if self.a == 0.0:
                raise ValidationError("the sqrt family needs a != 0")
            if self.ell < 2:
                raise ValidationError(f"ell must be >= 2, got {self.ell}")
        elif self.family == "theta":
            if not 0.0 < self.a < 1.0:
                raise ValidationError("the theta family needs 0 < a < 1")
            if self.chi_profile is None:
                raise ValidationError("the theta family needs a chi profile")
            if self.ell < 2:
                raise ValidationError(f"ell must be >= 2, got {self.ell}")

    def exponent(self) -> float:
        """Signed Theta exponent for the lil families."""
        if self.family not in ("lil_hausdorff", "lil_packing"):
            raise ValidationError(f"family {self.family!r} has no Theta exponent")
        mag = self.sigma + self.epsilon_sign * self.epsilon
        return mag if self.family == "lil_hausdorff" else -mag

    def describe(self) -> dict:
        doc = {"family": self.family, "d": self.d}
        if self.family in ("lil_hausdorff", "lil_packing"):
            doc.update(
                sigma=self.sigma,
                epsilon=self.epsilon,
                epsilon_sign=self.epsilon_sign,
                exponent=self.exponent(),
                theta_convention=self.theta.convention,
            )
        elif self.family in ("sqrt", "theta"):
            doc.update(a=self.a, ell=self.ell)
        return doc


@dataclass(frozen=True)
class GaugeValue:
    log_value: float
    value: float
    underflowed: bool


def log_gauge_from_u(spec: GaugeSpec, u):
    """Natural log of the gauge at t = exp(-u); scalar or array u."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0):
        raise ValidationError("u = ln(1/t) must be positive")
    base = -spec.d * u_arr
    if spec.family == "power":
        out = base
    elif spec.family in ("lil_hausdorff", "lil_packing"):
        out = base + spec.exponent() * spec.theta._scaled(u_arr)
    elif spec.family == "sqrt":
        out = base + spec.a * np.sqrt(u_arr * math.log(spec.ell))
    else:
        lb = math.log(spec.ell)
        targs = u_arr / lb
        th = np.vectorize(spec.chi_profile.theta, otypes=[float])(targs)
        out = base - spec.a * lb * th
    return float(out) if np.ndim(u) == 0 else out


def gauge_value(spec: GaugeSpec, t: float) -> GaugeValue:
    if not 0.0 < t < 1.0:
        raise ValidationError(f"t must lie in (0, 1), got {t!r}")
    # -log(t) stays finite down to the smallest subnormal; log(1/t) overflows
    lv = log_gauge_from_u(spec, -math.log(t))
    if lv < -700.0:
        return GaugeValue(lv, 0.0, True)
    return GaugeValue(lv, math.exp(lv), False)


# ---------------------------------------------------------------------------
# mass-vs-gauge fractions over sampled paths


@dataclass(frozen=True)
class GaugeTestResult:
    """Per-checkpoint fraction of paths with mass(cylinder) <= gauge(diameter).

    hit_by[j] is the fraction of paths satisfying the inequality at some
    checkpoint up to and including checkpoint j (a cumulative, monotone
    stand-in for the infinitely-often statistic); hit_ever is its last entry.
    """

    checkpoints: tuple[int, ...]
    fractions: tuple[float, ...]
    hit_by: tuple[float, ...]
    hit_ever: float
    N: int
    seed: int
    family: str


def _gauge_checkpoints(checkpoints: Sequence[int]):
    cks = tuple(int(c) for c in checkpoints)
    if not cks or any(c <= 0 for c in cks):
        raise ValidationError("checkpoints must be positive levels")
    if list(cks) != sorted(set(cks)):
        raise ValidationError("checkpoints must be strictly increasing")
    if cks[0] < _GAUGE_N_MIN:
        raise ValidationError(
            f"checkpoint {cks[0]} below n_min={_GAUGE_N_MIN} for gauge tests"
        )
    return cks


def gauge_test(
    model: MeasureModel,
    spec: GaugeSpec,
    checkpoints: Sequence[int],
    N: int,
    seed: int = 0,
    threads: int = 1,
) -> GaugeTestResult:
    """Monte Carlo fractions of m(I_n(x)) <= gauge(|I_n(x)|) at each checkpoint.

    Comparison happens in the natural log domain; each path uses its own
    counter-based stream keyed by (seed, index), so the result is identical
    for every thread count.
    """
    if N < 1:
        raise ValidationError(f"N must be >= 1, got {N}")
    if threads < 1:
        raise ValidationError(f"threads must be >= 1, got {threads}")
    cks = _gauge_checkpoints(checkpoints)
    if N * cks[-1] > path_budget():
        raise BudgetError(
            f"N*n_max = {N * cks[-1]} exceeds the path budget {path_budget()}; "
            "raise MFLIL_PATH_BUDGET to allow it"
        )
    conv = lil_convention(model, "natural")
    lw_conv, lr_nat, lb = _engine_tables(model, conv)
    m = len(cks)
    S = np.empty((N, m))
    T = np.empty((N, m))

    def fill(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            S[i], T[i] = _single_path(model, cks, conv, seed, i, lw_conv, lr_nat, lb)

    if threads == 1:
        fill(0, N)
    else:
        chunk = max(1, (N + threads - 1) // threads)
        bounds = [(lo, min(lo + chunk, N)) for lo in range(0, N, chunk)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda b: fill(*b), bounds))

    # m(I) <= gauge(diam)  <=>  -S_natural <= log gauge  <=>  S_natural >= -log gauge
    if isinstance(model, SelfSimilarMeasure):
        hits = S >= -log_gauge_from_u(spec, T)  # per-path ln(1/diameter)
    else:
        u_row = np.asarray(cks, dtype=float) * math.log(model.alphabet.ell)
        hits = S >= -log_gauge_from_u(spec, u_row)[None, :]
    fractions = tuple(float(np.count_nonzero(hits[:, j])) / N for j in range(m))
    ever = np.zeros(N, dtype=bool)
    hit_by = []
    for j in range(m):
        ever |= hits[:, j]
        hit_by.append(float(np.count_nonzero(ever)) / N)
    return GaugeTestResult(
        checkpoints=cks,
        fractions=fractions,
        hit_by=tuple(hit_by),
        hit_ever=hit_by[-1],
        N=N,
        seed=seed,
        family=spec.family,
    )


def mass_gauge_fraction(
    model: MeasureModel, spec: GaugeSpec, n: int, N: int, seed: int = 0
) -> float:
    return gauge_test(model, spec, [n], N, seed).fractions[0]
