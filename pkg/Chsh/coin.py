"""
The coin-cutting apparatus.

A saw cuts a coin; the head half goes to bucket I and the cross half to
bucket II, or the other way round with equal odds. Two cameras watch each
bucket, so the camera signals A(a), A(c), B(b), B(d) are all + or all - in a
trial. Four counter stages L1..L4 tally concordance for (a,b), (a,d), (c,b),
(c,d); every input reaches its stage over its own link. Only the A(a) -> L2
link is faulty: an "on" signal falls to "off" with probability eps (a
Z-channel), which lifts the CHSH sum to 2 + eps without breaking locality.
"""
from dataclasses import dataclass
import logging
import math
import time

import numpy as np

from . import tasks
from .core import CorrelationSet, JointDistribution, SettingPair, chsh, correlation
from .exceptions import InvalidArgument
from .noise import IDENTITY, check_probability, channel_joint, z_channel_matrix
from .rng import COIN_STREAM, shard_bounds, trial_uniforms

logger = logging.getLogger(__name__)

FAULTY_LINK = 'A(a)->L2'
FAULTY_PAIR = SettingPair.AD
STAGES = {SettingPair.AB: 'L1', SettingPair.AD: 'L2', SettingPair.CB: 'L3', SettingPair.CD: 'L4'}


@dataclass(frozen=True)
class FaultSpec:
    epsilon: float = 0.0
    faulty_link: str = FAULTY_LINK

    def __post_init__(self):
        object.__setattr__(self, 'epsilon', check_probability(self.epsilon, 'epsilon'))
        if self.faulty_link != FAULTY_LINK:
            raise InvalidArgument(f'Only the {FAULTY_LINK} link can be faulty')


@dataclass(frozen=True)
class StageTally:
    n_pp: int = 0
    n_pm: int = 0
    n_mp: int = 0
    n_mm: int = 0

    @property
    def total(self):
        return self.n_pp + self.n_pm + self.n_mp + self.n_mm

    def __add__(self, other):
        return StageTally(
            self.n_pp + other.n_pp,
            self.n_pm + other.n_pm,
            self.n_mp + other.n_mp,
            self.n_mm + other.n_mm,
        )

    def joint(self):
        return JointDistribution.from_counts(self.n_pp, self.n_pm, self.n_mp, self.n_mm)

    def correlation(self):
        return correlation(self.joint())

    def standard_error(self):
        e = self.correlation()
        return math.sqrt(max(0.0, 1.0 - e * e) / self.total)

    def as_dict(self):
        return {'n_pp': self.n_pp, 'n_pm': self.n_pm, 'n_mp': self.n_mp, 'n_mm': self.n_mm}


@dataclass(frozen=True)
class CounterTallies:
    """Per-stage tallies, keyed by setting pair (stage L1..L4)."""

    stages: dict
    trials: int

    def __add__(self, other):
        return CounterTallies(
            {pair: self.stages[pair] + other.stages[pair] for pair in SettingPair},
            self.trials + other.trials,
        )

    def correlations(self):
        return CorrelationSet.from_pairs({pair: self.stages[pair].correlation() for pair in SettingPair})

    def s(self):
        return chsh(self.correlations())

    def standard_error_s(self):
        return math.sqrt(sum(self.stages[pair].standard_error() ** 2 for pair in SettingPair))

    def as_dict(self):
        return {
            'trials': self.trials,
            'stages': {pair.label: self.stages[pair].as_dict() for pair in SettingPair},
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            {pair: StageTally(**data['stages'][pair.label]) for pair in SettingPair},
            data['trials'],
        )

    @classmethod
    def empty(cls):
        return cls({pair: StageTally() for pair in SettingPair}, 0)


def camera_joint(pair):
    pair = SettingPair(pair)
    return JointDistribution(0.5, 0.0, 0.0, 0.5)


def counter_joint(pair, fault):
    joint = camera_joint(pair)
    if SettingPair(pair) is not FAULTY_PAIR:
        return joint
    return channel_joint(joint, z_channel_matrix(fault.epsilon), IDENTITY)


def counter_correlations(fault):
    return CorrelationSet.from_pairs({pair: correlation(counter_joint(pair, fault)) for pair in SettingPair})


def coin_s(epsilon):
    return chsh(counter_correlations(FaultSpec(epsilon)))


def coin_trial_log(fault, seed, start, stop):
    """
    Per-trial signals for trials [start, stop).

    orientation is True when the head half lands in bucket I. Wing I signals
    are given per link (A(a) reaches L1 and L2 separately); wing II signals
    depend on orientation only.
    """
    uniforms = trial_uniforms(seed, COIN_STREAM, start, stop)
    orientation = uniforms[:, 0] < 0.5
    signal = np.where(orientation, 1, -1).astype(np.int8)
    dropped = (signal > 0) & (uniforms[:, 1] < fault.epsilon)
    return {
        'orientation': orientation,
        'a_to_l1': signal,
        'a_to_l2': np.where(dropped, -1, signal).astype(np.int8),
        'c': signal,
        'b': signal.copy(),
        'd': signal.copy(),
    }


def wing_two_signal(orientation, setting):
    """Cameras over bucket II see the cross half exactly when the head half is in bucket I."""
    if setting not in ('b', 'd'):
        raise InvalidArgument(f'{setting!r} is not a wing II setting')
    return np.where(orientation, 1, -1).astype(np.int8)


def _stage_tally(outcome_a, outcome_b):
    plus_a = outcome_a > 0
    plus_b = outcome_b > 0
    return StageTally(
        int(np.count_nonzero(plus_a & plus_b)),
        int(np.count_nonzero(plus_a & ~plus_b)),
        int(np.count_nonzero(~plus_a & plus_b)),
        int(np.count_nonzero(~plus_a & ~plus_b)),
    )


def tally_coin_shard(fault, seed, start, stop):
    log = coin_trial_log(fault, seed, start, stop)
    stages = {
        SettingPair.AB: _stage_tally(log['a_to_l1'], log['b']),
        SettingPair.AD: _stage_tally(log['a_to_l2'], log['d']),
        SettingPair.CB: _stage_tally(log['c'], log['b']),
        SettingPair.CD: _stage_tally(log['c'], log['d']),
    }
    return CounterTallies(stages, stop - start)


def simulate_coin(trials, fault, seed, shards=1):
    if trials < 1:
        raise InvalidArgument(f'trials must be >= 1, got {trials}')
    if shards < 1:
        raise InvalidArgument(f'shards must be >= 1, got {shards}')
    started = time.monotonic()
    logger.info('Coin simulation: %d trials, eps=%s, seed=%d, %d shard(s)', trials, fault.epsilon, seed, shards)
    arguments = [(fault.epsilon, seed, start, stop) for start, stop in shard_bounds(trials, shards)]
    tallies = CounterTallies.empty()
    for result in tasks.map_shards(tasks.tally_coin_shard, arguments):
        tallies = tallies + CounterTallies.from_dict(result)
    logger.info('Coin simulation finished in %.2fs', time.monotonic() - started)
    return tallies
