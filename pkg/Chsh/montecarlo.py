"""
Seed-deterministic Monte Carlo engine for CHSH experiments.

Each setting pair receives its own `trials` emitted pairs. A trial draws a
hidden variable (LHV reference model) or a cell of the QM joint, flips each
wing through its BSC with the rate assigned to that wing and setting, and
loses each wing independently with its erasure rate. Only coincidences (both
wings detected) are tallied.

Per-trial randomness is a pure function of (seed, setting pair, trial index),
see rng.py, and shard tallies are integer sums reduced in shard order, so the
result does not depend on the shard count.
"""
from dataclasses import dataclass, field
import logging
import math
import time
from typing import Optional

import numpy as np

from . import tasks
from .core import CorrelationSet, SettingPair, SettingsQuad, chsh
from .exceptions import InvalidArgument
from .models import ModelKind, qm_joint, reference_lhv_model
from .noise import ErasureRates, NoiseQuad, check_probability
from .rng import SELECTION_STREAM_BASE, shard_bounds, trial_uniforms

logger = logging.getLogger(__name__)

# Uniform columns of a trial block
U_SOURCE, U_FLIP_A, U_FLIP_B, U_DETECT_A, U_DETECT_B = range(5)
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class RunConfig:
    trials: int
    seed: int
    settings: SettingsQuad
    model: ModelKind = ModelKind.QM
    shards: int = 1
    noise: Optional[NoiseQuad] = None
    erasure: Optional[ErasureRates] = None

    def __post_init__(self):
        object.__setattr__(self, 'model', ModelKind(self.model))
        if int(self.trials) < 1:
            raise InvalidArgument(f'trials must be >= 1, got {self.trials}')
        if int(self.shards) < 1:
            raise InvalidArgument(f'shards must be >= 1, got {self.shards}')
        if not -(1 << 63) <= int(self.seed) < (1 << 64):
            raise InvalidArgument(f'seed must fit in 64 bits, got {self.seed}')

    @property
    def effective_noise(self):
        return self.noise or NoiseQuad()

    @property
    def effective_erasure(self):
        return self.erasure or ErasureRates()

    def to_payload(self):
        return {
            'trials': self.trials,
            'seed': self.seed,
            'settings': self.settings.as_dict(),
            'model': self.model.value,
            'shards': self.shards,
            'noise': self.noise.as_dict() if self.noise else None,
            'erasure': self.erasure.as_dict() if self.erasure else None,
        }

    @classmethod
    def from_payload(cls, payload):
        return cls(
            trials=payload['trials'],
            seed=payload['seed'],
            settings=SettingsQuad(**payload['settings']),
            model=ModelKind(payload['model']),
            shards=payload['shards'],
            noise=NoiseQuad(**payload['noise']) if payload.get('noise') else None,
            erasure=ErasureRates(**payload['erasure']) if payload.get('erasure') else None,
        )


@dataclass(frozen=True)
class PairTally:
    emitted: int = 0
    n_pp: int = 0
    n_pm: int = 0
    n_mp: int = 0
    n_mm: int = 0
    # coincidences per source class, only filled by selection runs
    by_class: tuple = (0, 0)

    @property
    def detected(self):
        return self.n_pp + self.n_pm + self.n_mp + self.n_mm

    def __add__(self, other):
        return PairTally(
            self.emitted + other.emitted,
            self.n_pp + other.n_pp,
            self.n_pm + other.n_pm,
            self.n_mp + other.n_mp,
            self.n_mm + other.n_mm,
            (self.by_class[0] + other.by_class[0], self.by_class[1] + other.by_class[1]),
        )

    def as_dict(self):
        return {
            'emitted': self.emitted,
            'n_pp': self.n_pp,
            'n_pm': self.n_pm,
            'n_mp': self.n_mp,
            'n_mm': self.n_mm,
            'by_class': list(self.by_class),
        }

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data['by_class'] = tuple(data.get('by_class', (0, 0)))
        return cls(**data)


@dataclass(frozen=True)
class PairStats:
    pair: SettingPair
    tally: PairTally
    correlation: Optional[float]
    standard_error: Optional[float]

    @classmethod
    def from_tally(cls, pair, tally):
        m = tally.detected
        if m == 0:
            return cls(pair, tally, None, None)
        e = ((tally.n_pp + tally.n_mm) - (tally.n_pm + tally.n_mp)) / m
        return cls(pair, tally, e, math.sqrt(max(0.0, 1.0 - e * e) / m))

    def as_dict(self):
        return {
            'emitted': self.tally.emitted,
            'detected': self.tally.detected,
            'counts': [self.tally.n_pp, self.tally.n_pm, self.tally.n_mp, self.tally.n_mm],
            'correlation': self.correlation,
            'standard_error': self.standard_error,
        }


@dataclass(frozen=True)
class RunStats:
    """
    Empirical estimators of a run.

    s and standard_error_s are None when some setting pair recorded no
    coincidence at all.
    """

    pairs: dict
    s: Optional[float] = None
    standard_error_s: Optional[float] = None
    class_detected: Optional[dict] = field(default=None)

    @classmethod
    def from_tallies(cls, tallies, with_classes=False):
        pairs = {pair: PairStats.from_tally(pair, tallies[pair]) for pair in SettingPair}
        s = se = None
        if all(stats.correlation is not None for stats in pairs.values()):
            s = chsh(CorrelationSet.from_pairs({pair: stats.correlation for pair, stats in pairs.items()}))
            se = math.sqrt(sum(stats.standard_error ** 2 for stats in pairs.values()))
        class_detected = None
        if with_classes:
            class_detected = {pair: tallies[pair].by_class for pair in SettingPair}
        return cls(pairs, s, se, class_detected)

    def correlations(self):
        return {pair: stats.correlation for pair, stats in self.pairs.items()}

    def as_dict(self):
        data = {
            'pairs': {pair.label: self.pairs[pair].as_dict() for pair in SettingPair},
            's': self.s,
            'standard_error_s': self.standard_error_s,
        }
        if self.class_detected is not None:
            # even trial indices are C1, odd are C2
            data['class_emitted'] = {
                pair.label: [(stats.tally.emitted + 1) // 2, stats.tally.emitted // 2]
                for pair, stats in self.pairs.items()
            }
            data['class_detected'] = {pair.label: list(self.class_detected[pair]) for pair in SettingPair}
        return data


def _source_outcomes(config, pair, source_uniforms):
    a, b = config.settings.angles(pair)
    if config.model is ModelKind.LHV_REFERENCE:
        lam = TWO_PI * source_uniforms
        return reference_lhv_model().outcomes(a, b, lam)
    joint = qm_joint(a, b)
    edges = np.cumsum(joint.as_tuple()[:3])
    # cells in (++, +-, -+, --) order
    cell = np.searchsorted(edges, source_uniforms, side='right')
    outcome_a = np.where(cell <= 1, 1, -1).astype(np.int8)
    outcome_b = np.where((cell == 0) | (cell == 2), 1, -1).astype(np.int8)
    return outcome_a, outcome_b


def _flip(outcomes, uniforms, eps):
    return np.where(uniforms < eps, -outcomes, outcomes).astype(np.int8)


def _count(outcome_a, outcome_b, emitted, by_class=(0, 0)):
    plus_a = outcome_a > 0
    plus_b = outcome_b > 0
    return PairTally(
        emitted,
        int(np.count_nonzero(plus_a & plus_b)),
        int(np.count_nonzero(plus_a & ~plus_b)),
        int(np.count_nonzero(~plus_a & plus_b)),
        int(np.count_nonzero(~plus_a & ~plus_b)),
        by_class,
    )


def tally_shard(config, pair_label, start, stop):
    pair = SettingPair.from_label(pair_label)
    uniforms = trial_uniforms(config.seed, pair.index, start, stop)
    outcome_a, outcome_b = _source_outcomes(config, pair, uniforms[:, U_SOURCE])
    eps_a, eps_b = config.effective_noise.rates(pair)
    outcome_a = _flip(outcome_a, uniforms[:, U_FLIP_A], eps_a)
    outcome_b = _flip(outcome_b, uniforms[:, U_FLIP_B], eps_b)
    erasure = config.effective_erasure
    detected = (uniforms[:, U_DETECT_A] >= erasure.delta_a) & (uniforms[:, U_DETECT_B] >= erasure.delta_b)
    logger.debug('Shard %s [%d, %d): %d coincidences', pair.label, start, stop, int(detected.sum()))
    return _count(outcome_a[detected], outcome_b[detected], stop - start)


def _collect(task, arguments_for):
    """Dispatch every (pair, shard) and reduce per pair in shard order."""
    labels = []
    arguments = []
    for pair in SettingPair:
        for args in arguments_for(pair):
            labels.append(pair)
            arguments.append(args)
    tallies = {pair: PairTally() for pair in SettingPair}
    for pair, result in zip(labels, tasks.map_shards(task, arguments)):
        tallies[pair] = tallies[pair] + PairTally.from_dict(result)
    return tallies


def run(config):
    started = time.monotonic()
    bounds = shard_bounds(config.trials, config.shards)
    logger.info(
        'Run: model=%s trials=%d seed=%d shards=%d',
        config.model.value, config.trials, config.seed, config.shards,
    )
    payload = config.to_payload()
    tallies = _collect(
        tasks.tally_run_shard,
        lambda pair: [(payload, pair.label, start, stop) for start, stop in bounds],
    )
    stats = RunStats.from_tallies(tallies)
    logger.info('Run finished in %.2fs, S=%s', time.monotonic() - started, stats.s)
    return stats


def check_class_rates(class_rates):
    if len(class_rates) != 2:
        raise InvalidArgument(f'Expected two class detection rates, got {len(class_rates)}')
    return tuple(check_probability(rate, 'class rate') for rate in class_rates)


def tally_selection_shard(config, class_rates, pair_label, start, stop):
    """
    Trials alternate between class C1 (even index: outcomes always agree) and
    C2 (odd index: outcomes always disagree). A pair of class k is registered
    with probability class_rates[k]; wing outcomes are then passed through the
    run's noise channels.
    """
    pair = SettingPair.from_label(pair_label)
    uniforms = trial_uniforms(config.seed, SELECTION_STREAM_BASE + pair.index, start, stop)
    first_class = (np.arange(start, stop) % 2) == 0
    outcome_a = np.where(uniforms[:, U_SOURCE] < 0.5, 1, -1).astype(np.int8)
    outcome_b = np.where(first_class, outcome_a, -outcome_a).astype(np.int8)
    eps_a, eps_b = config.effective_noise.rates(pair)
    outcome_a = _flip(outcome_a, uniforms[:, U_FLIP_A], eps_a)
    outcome_b = _flip(outcome_b, uniforms[:, U_FLIP_B], eps_b)
    rate = np.where(first_class, class_rates[0], class_rates[1])
    detected = uniforms[:, U_DETECT_A] < rate
    by_class = (int(np.count_nonzero(detected & first_class)), int(np.count_nonzero(detected & ~first_class)))
    return _count(outcome_a[detected], outcome_b[detected], stop - start, by_class)


def run_with_selection(config, class_bias):
    class_rates = check_class_rates(class_bias)
    if config.erasure is not None:
        raise InvalidArgument('Class detection rates replace erasure rates; drop the erasure setting')
    started = time.monotonic()
    bounds = shard_bounds(config.trials, config.shards)
    logger.info(
        'Selection run: rates=%s trials=%d seed=%d shards=%d',
        class_rates, config.trials, config.seed, config.shards,
    )
    payload = config.to_payload()
    tallies = _collect(
        tasks.tally_selection_shard,
        lambda pair: [(payload, list(class_rates), pair.label, start, stop) for start, stop in bounds],
    )
    stats = RunStats.from_tallies(tallies, with_classes=True)
    logger.info('Selection run finished in %.2fs', time.monotonic() - started)
    return stats


def expected_selection_correlation(class_rates, noise=None, pair=SettingPair.AB):
    """(r1 - r2) / (r1 + r2), scaled by the pair's noise factors."""
    r1, r2 = check_class_rates(class_rates)
    if r1 + r2 == 0.0:
        raise InvalidArgument('At least one class must be detectable')
    eps_a, eps_b = (noise or NoiseQuad()).rates(pair)
    return (1.0 - 2.0 * eps_a) * (1.0 - 2.0 * eps_b) * (r1 - r2) / (r1 + r2)
