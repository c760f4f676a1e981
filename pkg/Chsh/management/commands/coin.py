from Chsh.coin import (
    FAULTY_LINK, STAGES, FaultSpec, camera_joint, coin_s, counter_correlations, counter_joint, simulate_coin,
)
from Chsh.core import SettingPair
from Chsh.reports import build_report
from Chsh.serializers import CoinSerializer
from Chsh.utils import BellCommand, option_or_default, z_score


class Command(BellCommand):
    help = 'Coin-cutting apparatus: a local model whose one faulty link lifts S to 2 + eps'

    def add_command_arguments(self, parser):
        parser.add_argument('--eps', type=float, default=None, help='Drop rate of the A(a)->L2 link')
        parser.add_argument('--trials', type=int, default=None, help='Also simulate this many coin cuts')
        parser.add_argument('--seed', type=int, default=None)
        parser.add_argument('--shards', type=int, default=None)

    def build(self, options):
        defaults = self.defaults()
        data = self.validated(CoinSerializer, {
            'eps': option_or_default(options, 'eps', 0.0),
            'trials': options.get('trials'),
            'seed': option_or_default(options, 'seed', defaults['DEFAULT_SEED']),
            'shards': option_or_default(options, 'shards', defaults['DEFAULT_SHARDS']),
        })
        fault = FaultSpec(data['eps'])
        expected = counter_correlations(fault)
        s_expected = coin_s(fault.epsilon)
        results = {
            'faulty_link': FAULTY_LINK,
            'stages': {pair.label: STAGES[pair] for pair in SettingPair},
            'camera_joints': {pair.label: list(camera_joint(pair).as_tuple()) for pair in SettingPair},
            'counter_joints': {pair.label: list(counter_joint(pair, fault).as_tuple()) for pair in SettingPair},
            'correlations': expected.as_dict(),
            's': s_expected,
        }
        trials = data.get('trials')
        seed = shards = None
        if trials:
            seed, shards = data['seed'], data['shards']
            tallies = simulate_coin(trials, fault, seed, shards)
            correlations = tallies.correlations()
            errors = {pair: tallies.stages[pair].standard_error() for pair in SettingPair}
            results['simulation'] = {
                **tallies.as_dict(),
                'correlations': correlations.as_dict(),
                'standard_errors': {pair.label: errors[pair] for pair in SettingPair},
                'z_scores': {
                    pair.label: z_score(correlations[pair], expected[pair], errors[pair]) for pair in SettingPair
                },
                's': tallies.s(),
                'standard_error_s': tallies.standard_error_s(),
                'z_s': z_score(tallies.s(), s_expected, tallies.standard_error_s()),
            }
        inputs = {'eps': fault.epsilon, 'trials': trials}
        return build_report(self.name, inputs, results, seed=seed, shards=shards)
