import logging

from Chsh.core import CorrelationSet, SettingPair, chsh
from Chsh.models import ModelKind, ideal_correlations
from Chsh.montecarlo import RunConfig, expected_selection_correlation, run, run_with_selection
from Chsh.noise import noisy_correlation_set
from Chsh.reports import build_report
from Chsh.serializers import SimulateSerializer
from Chsh.utils import (
    BellCommand, SelfCheckFailed, add_erasure_arguments, add_model_arguments, add_noise_arguments, option_or_default,
    z_score,
)

logger = logging.getLogger(__name__)


class Command(BellCommand):
    help = 'Seeded Monte Carlo run of a CHSH experiment, checked against the analytic correlations'

    def add_command_arguments(self, parser):
        add_model_arguments(parser)
        add_noise_arguments(parser)
        add_erasure_arguments(parser)
        parser.add_argument('--trials', type=int, default=None, help='Emitted pairs per setting pair')
        parser.add_argument('--seed', type=int, default=None)
        parser.add_argument('--shards', type=int, default=None)
        parser.add_argument(
            '--class-rates', default=None,
            help='"r1,r2": detection rates of the agreeing and disagreeing source classes',
        )

    def build(self, options):
        defaults = self.defaults()
        data = self.validated(SimulateSerializer, {
            **{key: value for key, value in options.items() if value is not None},
            'trials': option_or_default(options, 'trials', defaults['DEFAULT_TRIALS']),
            'seed': option_or_default(options, 'seed', defaults['DEFAULT_SEED']),
            'shards': option_or_default(options, 'shards', defaults['DEFAULT_SHARDS']),
            'resolution': option_or_default(options, 'resolution', defaults['QUADRATURE_RESOLUTION']),
        })
        config = RunConfig(
            trials=data['trials'],
            seed=data['seed'],
            settings=data['settings'],
            model=ModelKind(data['model']),
            shards=data['shards'],
            noise=data['noise'],
            erasure=data['erasure'],
        )
        class_rates = data.get('class_rates')
        if class_rates is not None:
            stats = run_with_selection(config, class_rates)
            if sum(class_rates) > 0.0:
                expected = CorrelationSet.from_pairs({
                    pair: expected_selection_correlation(class_rates, config.noise, pair) for pair in SettingPair
                })
            else:
                expected = None
        else:
            stats = run(config)
            ideal = ideal_correlations(config.model, config.settings, data['resolution'])
            expected = noisy_correlation_set(ideal, config.effective_noise)

        z_scores = {}
        for pair in SettingPair:
            pair_stats = stats.pairs[pair]
            z_scores[pair.label] = z_score(
                pair_stats.correlation, expected[pair] if expected else None, pair_stats.standard_error,
            )
        s_expected = chsh(expected) if expected else None
        z_s = z_score(stats.s, s_expected, stats.standard_error_s)
        results = {
            **stats.as_dict(),
            'expected_correlations': expected.as_dict() if expected else None,
            's_expected': s_expected,
            'z_scores': z_scores,
            'z_s': z_s,
        }
        inputs = {
            'model': config.model.value,
            'settings': config.settings.as_dict(),
            'trials': config.trials,
            'noise': config.noise.as_dict() if config.noise else None,
            'erasure': config.erasure.as_dict() if config.erasure else None,
            'class_rates': list(class_rates) if class_rates is not None else None,
            'resolution': data['resolution'] if config.model is ModelKind.LHV_REFERENCE else None,
        }
        report = build_report(self.name, inputs, results, seed=config.seed, shards=config.shards)

        limit = defaults['SELF_CHECK_Z']
        failed = [
            label for label, z in z_scores.items()
            if stats.pairs[SettingPair.from_label(label)].correlation is not None and (z is None or z > limit)
        ]
        if stats.s is not None and s_expected is not None and (z_s is None or z_s > limit):
            failed.append('S')
        if failed:
            logger.warning('Self-check failed for %s (limit %s sigma)', ', '.join(failed), limit)
            raise SelfCheckFailed(
                f'Self-check failed: {", ".join(failed)} more than {limit} standard errors from the analytic value',
                self.encode_report(report, options),
            )
        return report
