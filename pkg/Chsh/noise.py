"""
Channel noise on measurement outcomes.

A binary symmetric channel (BSC) flips an outcome with probability eps in
either direction. Applied to a marginal it gives P(1 - 2eps) + eps; applied to
both wings of a joint it scales the correlation by (1 - 2eps_a)(1 - 2eps_b).
The erasure model for detection loss lives here as well.
"""
from dataclasses import dataclass
import math

import numpy as np

from .core import CorrelationSet, JointDistribution, SettingPair, validate_joint
from .exceptions import InvalidArgument, InvalidCorrelation, NoViolation

IDENTITY = np.eye(2)


def check_probability(value, name='probability'):
    value = float(value)
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise InvalidArgument(f'{name} must lie in [0, 1], got {value}')
    return value


@dataclass(frozen=True)
class BscRate:
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, 'epsilon', check_probability(self.epsilon, 'epsilon'))


@dataclass(frozen=True)
class NoiseQuad:
    """eps1: wing I at a, eps2: wing II at b, eps3: wing I at c, eps4: wing II at d."""

    eps1: float = 0.0
    eps2: float = 0.0
    eps3: float = 0.0
    eps4: float = 0.0

    def __post_init__(self):
        for name in ('eps1', 'eps2', 'eps3', 'eps4'):
            object.__setattr__(self, name, check_probability(float(getattr(self, name)), name))

    @classmethod
    def uniform(cls, eps):
        return cls(eps, eps, eps, eps)

    def rates(self, pair):
        """(wing I rate, wing II rate) for one setting pair."""
        wing_one = {'a': self.eps1, 'c': self.eps3}[pair.wing_one]
        wing_two = {'b': self.eps2, 'd': self.eps4}[pair.wing_two]
        return wing_one, wing_two

    def as_dict(self):
        return {'eps1': self.eps1, 'eps2': self.eps2, 'eps3': self.eps3, 'eps4': self.eps4}


@dataclass(frozen=True)
class ErasureRates:
    delta_a: float = 0.0
    delta_b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'delta_a', check_probability(self.delta_a, 'delta_a'))
        object.__setattr__(self, 'delta_b', check_probability(self.delta_b, 'delta_b'))

    def as_dict(self):
        return {'delta_a': self.delta_a, 'delta_b': self.delta_b}


def bsc_matrix(eps):
    eps = BscRate(eps).epsilon
    return np.array([[1.0 - eps, eps], [eps, 1.0 - eps]])


def z_channel_matrix(eps):
    """+ drops to - with probability eps; - is never corrupted."""
    eps = check_probability(eps, 'epsilon')
    return np.array([[1.0 - eps, eps], [0.0, 1.0]])


def channel_joint(joint, channel_a, channel_b):
    """
    Push a joint through independent per-wing channels.

    Channel matrices are indexed [input, output] over (+, -); the result is
    channel_a^T . P . channel_b.
    """
    validate_joint(joint)
    matrix = channel_a.T @ joint.as_matrix() @ channel_b
    return validate_joint(JointDistribution.from_matrix(matrix))


def bsc_marginal(p, eps):
    p = check_probability(p, 'p')
    eps = BscRate(eps).epsilon
    return p * (1.0 - 2.0 * eps) + eps


def bsc_joint(joint, eps_a, eps_b):
    return channel_joint(joint, bsc_matrix(eps_a), bsc_matrix(eps_b))


def noisy_correlation(e, eps_a, eps_b):
    e = float(e)
    if not math.isfinite(e) or abs(e) > 1.0 + 1e-12:
        raise InvalidCorrelation(f'Correlation {e} lies outside [-1, 1]')
    eps_a = check_probability(eps_a, 'eps_a')
    eps_b = check_probability(eps_b, 'eps_b')
    return (1.0 - 2.0 * eps_a) * (1.0 - 2.0 * eps_b) * e


def noisy_correlation_set(corr, noise):
    return CorrelationSet.from_pairs({
        pair: noisy_correlation(corr[pair], *noise.rates(pair)) for pair in SettingPair
    })


def s_epsilon(corr, noise):
    f1, f2, f3, f4 = (1.0 - 2.0 * eps for eps in (noise.eps1, noise.eps2, noise.eps3, noise.eps4))
    return (
        abs(f1 * (f2 * corr.e_ab - f4 * corr.e_ad))
        + abs(f3 * (f2 * corr.e_cb + f4 * corr.e_cd))
    )


def critical_epsilon(s_ideal):
    """Equal-noise level above which S_eps = (1 - 2eps)^2 s_ideal falls below 2."""
    s_ideal = float(s_ideal)
    if not math.isfinite(s_ideal) or s_ideal > 4.0 + 1e-12:
        raise InvalidArgument(f'A CHSH value must lie in [0, 4], got {s_ideal}')
    if s_ideal <= 2.0:
        raise NoViolation(f'S = {s_ideal} does not exceed 2; there is no noise threshold')
    return (1.0 - math.sqrt(2.0 / s_ideal)) / 2.0


def noise_scan(corr, eps_values):
    """S_eps with all four channels at each equal noise level."""
    return [s_epsilon(corr, NoiseQuad.uniform(eps)) for eps in eps_values]


def joint_detection_prob(rates):
    return (1.0 - rates.delta_a) * (1.0 - rates.delta_b)