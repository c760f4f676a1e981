"""
Exact probability and correlation arithmetic for a two-wing Bell test.

A joint distribution is the 2x2 table of outcome probabilities for one setting
pair, always ordered (++, +-, -+, --). The correlation of a table is
P++ + P-- - P+- - P-+, and the CHSH statistic combines four correlations as
|E(a,b) - E(a,d)| + |E(c,b) + E(c,d)|.
"""
from dataclasses import dataclass
from enum import Enum, IntEnum
import math

import numpy as np

from .exceptions import (
    InvalidArgument,
    InvalidCorrelation,
    InvalidDistribution,
    NegativeProbability,
    NonNormalized,
)

NORMALIZATION_TOL = 1e-12
CORRELATION_TOL = 1e-12
TWO_PI = 2.0 * math.pi


class Outcome(IntEnum):
    PLUS = 1
    MINUS = -1

    def __neg__(self):
        return Outcome(-self.value)


class SettingPair(Enum):
    """The four analyzer combinations entering the CHSH statistic, in report order."""

    AB = (0, 'a', 'b')
    AD = (1, 'a', 'd')
    CB = (2, 'c', 'b')
    CD = (3, 'c', 'd')

    def __init__(self, index, wing_one, wing_two):
        self.index = index
        self.wing_one = wing_one
        self.wing_two = wing_two

    @property
    def label(self):
        return self.wing_one + self.wing_two

    @classmethod
    def from_label(cls, label):
        for pair in cls:
            if pair.label == label:
                return pair
        raise ValueError(f'unknown setting pair {label!r}')


@dataclass(frozen=True)
class JointDistribution:
    p_pp: float
    p_pm: float
    p_mp: float
    p_mm: float

    def as_tuple(self):
        return (self.p_pp, self.p_pm, self.p_mp, self.p_mm)

    def as_matrix(self):
        """Rows are wing I outcomes (+, -), columns wing II outcomes (+, -)."""
        return np.array([[self.p_pp, self.p_pm], [self.p_mp, self.p_mm]], dtype=float)

    @classmethod
    def from_matrix(cls, matrix):
        return cls(float(matrix[0, 0]), float(matrix[0, 1]), float(matrix[1, 0]), float(matrix[1, 1]))

    @classmethod
    def from_counts(cls, n_pp, n_pm, n_mp, n_mm):
        total = n_pp + n_pm + n_mp + n_mm
        if total <= 0:
            raise InvalidDistribution('Cannot build a distribution from zero counts')
        return cls(n_pp / total, n_pm / total, n_mp / total, n_mm / total)

    def mix(self, other, weight):
        """weight * self + (1 - weight) * other."""
        return JointDistribution(*(
            weight * p + (1.0 - weight) * q for p, q in zip(self.as_tuple(), other.as_tuple())
        ))


@dataclass(frozen=True)
class SettingsQuad:
    """Analyzer angles in radians: a, c on wing I; b, d on wing II."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        for name in ('a', 'b', 'c', 'd'):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidArgument(f'Angle {name} must be finite, got {value}')
            object.__setattr__(self, name, value % TWO_PI)

    @classmethod
    def from_degrees(cls, a, b, c, d):
        return cls(*(math.radians(x) for x in (a, b, c, d)))

    def angles(self, pair):
        return getattr(self, pair.wing_one), getattr(self, pair.wing_two)

    def as_dict(self):
        return {'a': self.a, 'b': self.b, 'c': self.c, 'd': self.d}


@dataclass(frozen=True)
class CorrelationSet:
    e_ab: float
    e_ad: float
    e_cb: float
    e_cd: float

    def __post_init__(self):
        for name, value in zip(('e_ab', 'e_ad', 'e_cb', 'e_cd'), self.as_tuple()):
            if not math.isfinite(value) or abs(value) > 1.0 + CORRELATION_TOL:
                raise InvalidCorrelation(f'{name} = {value} lies outside [-1, 1]')

    def as_tuple(self):
        return (self.e_ab, self.e_ad, self.e_cb, self.e_cd)

    def __getitem__(self, pair):
        return self.as_tuple()[pair.index]

    def negated(self):
        return CorrelationSet(*(-e for e in self.as_tuple()))

    def as_dict(self):
        return {pair.label: self[pair] for pair in SettingPair}

    @classmethod
    def from_pairs(cls, values):
        """Build from a mapping SettingPair -> correlation."""
        return cls(*(values[pair] for pair in SettingPair))


def validate_joint(joint):
    values = joint.as_tuple()
    if not all(math.isfinite(p) for p in values):
        raise InvalidDistribution(f'Distribution {values} has non-finite entries')
    for p in values:
        if p < 0.0:
            raise NegativeProbability(f'Distribution {values} has a negative entry {p}')
    total = math.fsum(values)
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise NonNormalized(f'Distribution {values} sums to {total!r}, not 1')
    return joint


def correlation(joint):
    validate_joint(joint)
    return (joint.p_pp + joint.p_mm) - (joint.p_pm + joint.p_mp)


def chsh(corr):
    """The CHSH statistic as a plain float in [0, 4]."""
    return abs(corr.e_ab - corr.e_ad) + abs(corr.e_cb + corr.e_cd)


def correlations_of(joints):
    """Map SettingPair -> JointDistribution to a CorrelationSet."""
    return CorrelationSet.from_pairs({pair: correlation(joint) for pair, joint in joints.items()})
