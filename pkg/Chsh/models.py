# models.py
# Plain Python source models; nothing here is an ORM table.
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional
import math

import numpy as np

from .core import TWO_PI, JointDistribution, Outcome, SettingPair, SettingsQuad, correlations_of
from .exceptions import InvalidArgument

DEFAULT_RESOLUTION = 100_000


class ModelKind(str, Enum):
    LHV_REFERENCE = 'lhv-ref'
    QM = 'qm'


# HiddenVariable
# A single hidden-variable value lambda in [0, 2pi)
@dataclass(frozen=True)
class HiddenVariable:
    value: float

    def __post_init__(self):
        if not (0.0 <= self.value < TWO_PI):
            raise InvalidArgument(f'Hidden variable {self.value} lies outside [0, 2pi)')


# LambdaDensity
# Uniform-continuous on [0, 2pi) or uniform-discrete on n_tot equispaced points
@dataclass(frozen=True)
class LambdaDensity:
    kind: str = 'continuous'
    n_tot: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ('continuous', 'discrete'):
            raise InvalidArgument(f'Unknown lambda density {self.kind!r}')
        if self.kind == 'discrete' and (self.n_tot is None or self.n_tot < 1):
            raise InvalidArgument('A discrete lambda density needs n_tot >= 1')

    @classmethod
    def discrete(cls, n_tot):
        return cls('discrete', n_tot)

    def points(self):
        """The support of a discrete density, each point carrying weight 1/n_tot."""
        if self.kind != 'discrete':
            raise InvalidArgument('A continuous density has no finite support')
        return TWO_PI * np.arange(self.n_tot, dtype=float) / self.n_tot


def midpoint_grid(resolution):
    if resolution < 1:
        raise InvalidArgument(f'Quadrature resolution must be >= 1, got {resolution}')
    return TWO_PI * (np.arange(resolution, dtype=float) + 0.5) / resolution


# LhvModel
# Deterministic outcome functions A(a, lambda), B(b, lambda) returning +1/-1
# arrays, plus the distribution lambda is drawn from
@dataclass(frozen=True)
class LhvModel:
    outcome_a: Callable[[float, np.ndarray], np.ndarray]
    outcome_b: Callable[[float, np.ndarray], np.ndarray]
    lambda_density: LambdaDensity = LambdaDensity()
    name: str = 'custom'

    def outcome_pair(self, a, b, hidden):
        lam = np.array([hidden.value])
        return (
            Outcome(int(self.outcome_a(a, lam)[0])),
            Outcome(int(self.outcome_b(b, lam)[0])),
        )

    def outcomes(self, a, b, lam):
        return self.outcome_a(a, lam), self.outcome_b(b, lam)


def _cosine_sign(angle, lam):
    # sign(0) resolved to +
    return np.where(np.cos(2.0 * (lam - angle)) >= 0.0, 1, -1).astype(np.int8)


def _reference_a(a, lam):
    return _cosine_sign(a, lam)


def _reference_b(b, lam):
    return -_cosine_sign(b, lam)


def reference_lhv_model():
    return LhvModel(_reference_a, _reference_b, LambdaDensity(), name='lhv-ref')


def reference_lhv_correlation(a, b):
    """Closed form of the reference model: -(1 - 4|delta|/pi), delta = a - b folded to [-pi/2, pi/2)."""
    delta = (a - b + math.pi / 2.0) % math.pi - math.pi / 2.0
    return -(1.0 - 4.0 * abs(delta) / math.pi)


def tally_outcomes(outcome_a, outcome_b):
    """Counts (n_pp, n_pm, n_mp, n_mm) of paired +1/-1 arrays."""
    plus_a = outcome_a > 0
    plus_b = outcome_b > 0
    n_pp = int(np.count_nonzero(plus_a & plus_b))
    n_pm = int(np.count_nonzero(plus_a & ~plus_b))
    n_mp = int(np.count_nonzero(~plus_a & plus_b))
    n_mm = int(outcome_a.size) - n_pp - n_pm - n_mp
    return n_pp, n_pm, n_mp, n_mm


def lhv_joint(model, a, b, resolution=DEFAULT_RESOLUTION):
    lam = midpoint_grid(resolution)
    outcome_a, outcome_b = model.outcomes(a, b, lam)
    return JointDistribution.from_counts(*tally_outcomes(outcome_a, outcome_b))


# QmPairModel
# Polarization-entangled photon pair; the joint depends on a - b only
@dataclass(frozen=True)
class QmPairModel:
    name: str = 'qm'

    def joint(self, a, b):
        return qm_joint(a, b)


def qm_joint(a, b):
    same = 0.5 * math.cos(a - b) ** 2
    differ = 0.5 * math.sin(a - b) ** 2
    return JointDistribution(same, differ, differ, same)


def optimal_qm_settings():
    return SettingsQuad(a=0.0, b=math.pi / 8.0, c=math.pi / 4.0, d=3.0 * math.pi / 8.0)


def ideal_joints(kind, settings, resolution=DEFAULT_RESOLUTION):
    """Noise-free joint per setting pair for the named model."""
    kind = ModelKind(kind)
    if kind is ModelKind.QM:
        model = QmPairModel()
        return {pair: model.joint(*settings.angles(pair)) for pair in SettingPair}
    model = reference_lhv_model()
    return {pair: lhv_joint(model, *settings.angles(pair), resolution=resolution) for pair in SettingPair}


def ideal_correlations(kind, settings, resolution=DEFAULT_RESOLUTION):
    return correlations_of(ideal_joints(kind, settings, resolution))
