"""
Sampling and detection loopholes.

Combinatorial probabilities are evaluated in natural-log space with log-gamma
so that sample sizes in the tens of thousands neither overflow nor underflow.
The *_exact functions return fractions.Fraction values from big-integer
arithmetic and serve as oracles for small instances.
"""
from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np
from scipy.special import gammaln

from .core import CORRELATION_TOL, CorrelationSet, SettingPair, chsh
from .exceptions import ConstraintViolation, InvalidArgument
from .models import LambdaDensity


@dataclass(frozen=True)
class SampleSpec:
    """N pairs split evenly into classes C1 and C2, of which a fraction phi is detected."""

    n_pairs: int
    detected_fraction: float

    def __post_init__(self):
        n, phi = self.n_pairs, float(self.detected_fraction)
        if n < 2 or n % 2:
            raise InvalidArgument(f'n_pairs must be a positive even integer, got {n}')
        if not 0.0 < phi <= 1.0:
            raise InvalidArgument(f'detected_fraction must lie in (0, 1], got {phi}')
        detected = n * phi
        if abs(detected - round(detected)) > 1e-9 * n or round(detected) % 2:
            raise InvalidArgument(f'N * phi = {detected} must be an even integer')

    @property
    def detected(self):
        return int(round(self.n_pairs * self.detected_fraction))

    @property
    def class_size(self):
        return self.n_pairs // 2


def log_binomial(n, k):
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def equilibrate_sampling_log_prob(spec):
    """ln[ C(N/2, N phi/2)^2 (1/2)^(N phi) ], the balanced-detection formula as printed."""
    k = spec.detected
    return 2.0 * log_binomial(spec.class_size, k // 2) + k * math.log(0.5)


def hypergeometric_balanced_log_prob(spec):
    """ln of the chance that a uniformly random N phi-subset holds N phi/2 pairs of each class."""
    k = spec.detected
    return 2.0 * log_binomial(spec.class_size, k // 2) - log_binomial(spec.n_pairs, k)


def equilibrate_sampling_exact(spec):
    k = spec.detected
    return Fraction(math.comb(spec.class_size, k // 2) ** 2, 2 ** k)


def hypergeometric_balanced_exact(spec):
    k = spec.detected
    return Fraction(math.comb(spec.class_size, k // 2) ** 2, math.comb(spec.n_pairs, k))


@dataclass(frozen=True)
class DeltaQuad:
    d1: float = 1.0
    d2: float = 1.0
    d3: float = 1.0
    d4: float = 1.0

    def as_tuple(self):
        return (self.d1, self.d2, self.d3, self.d4)


@dataclass(frozen=True)
class DeltaRange:
    low: float
    high: float
    witness: DeltaQuad


def check_deltas(corr, deltas):
    # |Delta_i| <= 1/|E_i|, i.e. Delta_i * E_i in [-1, 1]; E_i = 0 admits any Delta_i
    for index, (e, delta) in enumerate(zip(corr.as_tuple(), deltas.as_tuple()), start=1):
        if not math.isfinite(delta):
            raise ConstraintViolation(f'Delta_{index} = {delta} is not finite', index=index)
        if e != 0.0 and abs(delta * e) > 1.0 + CORRELATION_TOL:
            raise ConstraintViolation(
                f'Delta_{index} = {delta} violates |Delta_{index}| <= 1/|E_{index}| = {1.0 / abs(e)}',
                index=index,
            )


def s_delta(corr, deltas):
    check_deltas(corr, deltas)
    return (
        abs(deltas.d1 * corr.e_ab - deltas.d2 * corr.e_ad)
        + abs(deltas.d3 * corr.e_cb + deltas.d4 * corr.e_cd)
    )


def _abs_range(low, high):
    if low <= 0.0 <= high:
        return 0.0, max(-low, high)
    return min(abs(low), abs(high)), max(abs(low), abs(high))


def s_delta_range(corr):
    """
    Attainable [low, high] of s_delta over admissible Deltas, with a witness
    Delta attaining high.

    Each term t_i = Delta_i E_i ranges over [-1, 1], or is pinned to 0 when
    E_i = 0.
    """
    spans = [(-1.0, 1.0) if e != 0.0 else (0.0, 0.0) for e in corr.as_tuple()]
    (lo1, hi1), (lo2, hi2), (lo3, hi3), (lo4, hi4) = spans
    first_low, first_high = _abs_range(lo1 - hi2, hi1 - lo2)
    second_low, second_high = _abs_range(lo3 + lo4, hi3 + hi4)
    # high of |t1 - t2| at t = (hi1, lo2); of |t3 + t4| at (hi3, hi4)
    targets = (hi1, lo2, hi3, hi4)
    witness = DeltaQuad(*(t / e if e != 0.0 else 1.0 for t, e in zip(targets, corr.as_tuple())))
    return DeltaRange(first_low + second_low, first_high + second_high, witness)


@dataclass(frozen=True)
class OverlapSpec:
    n: int
    n_tot: int

    def __post_init__(self):
        if self.n < 1:
            raise InvalidArgument(f'n must be >= 1, got {self.n}')
        if self.n > self.n_tot:
            raise InvalidArgument(
                f'n = {self.n} exceeds N_TOT = {self.n_tot}: the overlap probability is 0 (log = -inf)'
            )


def overlap_log_prob(spec):
    i = np.arange(spec.n, dtype=float)
    terms = np.log(spec.n - i) - np.log(spec.n_tot - i)
    return math.fsum(terms)


def overlap_exact(spec):
    probability = Fraction(1)
    for i in range(spec.n):
        probability *= Fraction(spec.n - i, spec.n_tot - i)
    return probability


def overlap_limit_scan(n, n_tot_values):
    n_tot_values = [int(value) for value in n_tot_values]
    if not n_tot_values:
        raise InvalidArgument('The N_TOT list is empty')
    if any(later <= earlier for earlier, later in zip(n_tot_values, n_tot_values[1:])):
        raise InvalidArgument(f'N_TOT values must be strictly ascending, got {n_tot_values}')
    return [overlap_log_prob(OverlapSpec(n, n_tot)) for n_tot in n_tot_values]


@dataclass(frozen=True)
class MismatchResult:
    correlations: CorrelationSet
    s: float
    subset_sizes: dict
    common_s: float


# The product sign each CHSH term rewards: E(a,b) = E(c,b) = E(c,d) = +1, E(a,d) = -1
TARGET_SIGNS = {SettingPair.AB: 1, SettingPair.AD: -1, SettingPair.CB: 1, SettingPair.CD: 1}


def mismatched_sample_s(model, settings, n_tot):
    """
    S when each setting pair is measured on its own lambda sub-ensemble.

    lambda takes n_tot equispaced values. For every setting pair only the
    lambda values whose outcome product has the sign that pair's term
    rewards are kept, so each sub-ensemble correlation is +-1. common_s is
    the statistic when all pairs share the full ensemble (never above 2).
    """
    lam = LambdaDensity.discrete(n_tot).points()
    sub_correlations = {}
    common = {}
    sizes = {}
    for pair in SettingPair:
        outcome_a, outcome_b = model.outcomes(*settings.angles(pair), lam)
        product = outcome_a.astype(np.int64) * outcome_b
        common[pair] = float(product.mean())
        kept = product[product == TARGET_SIGNS[pair]]
        if kept.size == 0:
            raise InvalidArgument(
                f'No lambda value gives outcome product {TARGET_SIGNS[pair]:+d} at pair {pair.label}'
            )
        sizes[pair] = int(kept.size)
        sub_correlations[pair] = float(kept.mean())
    correlations = CorrelationSet.from_pairs(sub_correlations)
    return MismatchResult(correlations, chsh(correlations), sizes, chsh(CorrelationSet.from_pairs(common)))
