"""
Analytic checks of the loopholes a CHSH violation can slip through:
sample selection, mismatched sub-ensembles, finite-sample overlap, noise and
detection thresholds.
"""
import math

from Chsh.core import SettingPair
from Chsh.loopholes import (
    DeltaQuad, OverlapSpec, SampleSpec, equilibrate_sampling_exact, equilibrate_sampling_log_prob,
    hypergeometric_balanced_exact, hypergeometric_balanced_log_prob, mismatched_sample_s, overlap_exact,
    overlap_limit_scan, s_delta, s_delta_range,
)
from Chsh.models import reference_lhv_model
from Chsh.noise import ErasureRates, critical_epsilon, joint_detection_prob, noise_scan
from Chsh.reports import build_report
from Chsh.serializers import (
    CorrelationInputSerializer, DetectionSerializer, FairSamplingSerializer, MismatchSerializer,
    NoiseScanSerializer, OverlapSerializer, SDeltaSerializer, ThresholdSerializer,
)
from Chsh.utils import BellCommand, add_settings_arguments

# Sample sizes up to this get exact rational values next to the log-space ones
EXACT_LIMIT = 64


def _given(options, *names):
    return {name: options.get(name) for name in names if options.get(name) is not None}


class Command(BellCommand):
    help = 'Loophole analyses: fair-sampling, s-delta, s-delta-range, overlap, threshold, noise-scan, detection, mismatch'

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest='analysis', required=True)

        def subparser(name, help_text):
            sub = subparsers.add_parser(
                name, help=help_text, called_from_command_line=getattr(parser, 'called_from_command_line', None),
            )
            sub.add_argument('--format', choices=['json', 'csv'], default='json', help='Report format on stdout')
            sub.add_argument('--config', default=None, help='key = value file; flags override its values')
            return sub

        fair = subparser('fair-sampling', 'Chance that a random detection subset is class balanced')
        fair.add_argument('--n', type=int, default=None, help='Emitted pairs N (even)')
        fair.add_argument('--phi', type=float, default=None, help='Detected fraction')

        span = subparser('s-delta-range', 'Attainable range of the rescaled statistic S_delta')
        span.add_argument('--corr', default=None, help='E(a,b),E(a,d),E(c,b),E(c,d)')

        single = subparser('s-delta', 'S_delta at given rescaling factors')
        single.add_argument('--corr', default=None, help='E(a,b),E(a,d),E(c,b),E(c,d)')
        single.add_argument('--deltas', default=None, help='Delta1,Delta2,Delta3,Delta4')

        overlap = subparser('overlap', 'Chance that n draws all land on the same sub-ensemble')
        overlap.add_argument('--n', type=int, default=None)
        overlap.add_argument('--ntot-list', default=None, help='Ascending ensemble sizes, e.g. 100,1000,1e6')

        threshold = subparser('threshold', 'Equal-noise level at which a violation disappears')
        threshold.add_argument('--s-ideal', type=float, default=None)

        scan = subparser('noise-scan', 'S_eps over a list of equal noise levels')
        scan.add_argument('--corr', default=None, help='E(a,b),E(a,d),E(c,b),E(c,d)')
        scan.add_argument('--eps-list', default=None, help='Comma-separated noise levels')

        detection = subparser('detection', 'Coincidence probability under per-wing non-detection')
        detection.add_argument('--delta-a', type=float, default=None)
        detection.add_argument('--delta-b', type=float, default=None)

        mismatch = subparser('mismatch', 'S when each setting pair sees its own LHV sub-ensemble')
        mismatch.add_argument('--n-tot', type=int, default=None, help='Number of equispaced lambda values')
        add_settings_arguments(mismatch)

    def build(self, options):
        analysis = options['analysis']
        builder = getattr(self, 'build_' + analysis.replace('-', '_'))
        inputs, results = builder(options)
        return build_report(f'{self.name} {analysis}', inputs, results)

    def build_fair_sampling(self, options):
        data = self.validated(FairSamplingSerializer, _given(options, 'n', 'phi'))
        spec = SampleSpec(data['n'], data['phi'])
        equilibrate = equilibrate_sampling_log_prob(spec)
        balanced = hypergeometric_balanced_log_prob(spec)
        results = {
            'detected': spec.detected,
            'equilibrate_log_prob': equilibrate,
            'equilibrate_prob': math.exp(equilibrate),
            'balanced_log_prob': balanced,
            'balanced_prob': math.exp(balanced),
        }
        if spec.n_pairs <= EXACT_LIMIT:
            results['equilibrate_exact'] = str(equilibrate_sampling_exact(spec))
            results['balanced_exact'] = str(hypergeometric_balanced_exact(spec))
        return {'n': spec.n_pairs, 'phi': spec.detected_fraction}, results

    def build_s_delta_range(self, options):
        corr = self.validated(CorrelationInputSerializer, _given(options, 'corr'))['corr']
        span = s_delta_range(corr)
        results = {
            'low': span.low,
            'high': span.high,
            'witness': list(span.witness.as_tuple()),
            'witness_s': s_delta(corr, span.witness),
            'exceeds_two': span.high > 2.0,
        }
        return {'corr': list(corr.as_tuple())}, results

    def build_s_delta(self, options):
        data = self.validated(SDeltaSerializer, _given(options, 'corr', 'deltas'))
        corr, deltas = data['corr'], DeltaQuad(*data['deltas'])
        value = s_delta(corr, deltas)
        return (
            {'corr': list(corr.as_tuple()), 'deltas': list(deltas.as_tuple())},
            {'s_delta': value, 'exceeds_two': value > 2.0},
        )

    def build_overlap(self, options):
        data = self.validated(OverlapSerializer, _given(options, 'n', 'ntot_list'))
        n, n_tot_values = data['n'], data['ntot_list']
        log_probs = overlap_limit_scan(n, n_tot_values)
        rows = []
        for n_tot, log_prob in zip(n_tot_values, log_probs):
            row = {'n_tot': n_tot, 'log_prob': log_prob, 'prob': math.exp(log_prob)}
            if n_tot <= EXACT_LIMIT:
                row['exact'] = str(overlap_exact(OverlapSpec(n, n_tot)))
            rows.append(row)
        decreasing = all(later < earlier for earlier, later in zip(log_probs, log_probs[1:]))
        return {'n': n, 'ntot_list': n_tot_values}, {'table': rows, 'strictly_decreasing': decreasing}

    def build_threshold(self, options):
        s_ideal = self.validated(ThresholdSerializer, _given(options, 's_ideal'))['s_ideal']
        return {'s_ideal': s_ideal}, {'critical_epsilon': critical_epsilon(s_ideal)}

    def build_noise_scan(self, options):
        data = self.validated(NoiseScanSerializer, _given(options, 'corr', 'eps_list'))
        corr, eps_values = data['corr'], data['eps_list']
        values = noise_scan(corr, eps_values)
        rows = [{'eps': eps, 's_epsilon': value, 'violates': value > 2.0} for eps, value in zip(eps_values, values)]
        return {'corr': list(corr.as_tuple()), 'eps_list': eps_values}, {'table': rows}

    def build_detection(self, options):
        data = self.validated(DetectionSerializer, _given(options, 'delta_a', 'delta_b'))
        rates = ErasureRates(data['delta_a'], data['delta_b'])
        return rates.as_dict(), {'joint_detection_prob': joint_detection_prob(rates)}

    def build_mismatch(self, options):
        names = ('n_tot', 'optimal') + tuple(
            name + suffix for name in ('a', 'b', 'c', 'd') for suffix in ('', '_deg')
        )
        data = self.validated(MismatchSerializer, _given(options, *names))
        result = mismatched_sample_s(reference_lhv_model(), data['settings'], data['n_tot'])
        results = {
            'correlations': result.correlations.as_dict(),
            's': result.s,
            'subset_sizes': {pair.label: result.subset_sizes[pair] for pair in SettingPair},
            'common_s': result.common_s,
        }
        return {'settings': data['settings'].as_dict(), 'n_tot': data['n_tot']}, results
