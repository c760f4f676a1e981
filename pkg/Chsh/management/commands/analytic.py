from Chsh.core import SettingPair, chsh, correlations_of
from Chsh.models import ModelKind, ideal_joints
from Chsh.noise import bsc_joint, noisy_correlation_set, s_epsilon
from Chsh.reports import build_report
from Chsh.serializers import AnalyticSerializer
from Chsh.utils import BellCommand, add_model_arguments, add_noise_arguments, option_or_default


def joints_dict(joints):
    return {pair.label: list(joints[pair].as_tuple()) for pair in SettingPair}


class Command(BellCommand):
    help = 'Exact joint distributions, correlations and CHSH statistic of a model at four settings'

    def add_command_arguments(self, parser):
        add_model_arguments(parser)
        add_noise_arguments(parser)

    def build(self, options):
        defaults = self.defaults()
        data = self.validated(AnalyticSerializer, {
            **{key: value for key, value in options.items() if value is not None},
            'resolution': option_or_default(options, 'resolution', defaults['QUADRATURE_RESOLUTION']),
        })
        kind = ModelKind(data['model'])
        quad = data['settings']
        noise = data['noise']
        joints = ideal_joints(kind, quad, data['resolution'])
        corr = correlations_of(joints)
        results = {
            'joints': joints_dict(joints),
            'correlations': corr.as_dict(),
            's': chsh(corr),
        }
        if noise is not None:
            noisy = {pair: bsc_joint(joints[pair], *noise.rates(pair)) for pair in SettingPair}
            results['noisy_joints'] = joints_dict(noisy)
            results['noisy_correlations'] = noisy_correlation_set(corr, noise).as_dict()
            results['s_epsilon'] = s_epsilon(corr, noise)
        inputs = {
            'model': kind.value,
            'settings': quad.as_dict(),
            'noise': noise.as_dict() if noise else None,
            'resolution': data['resolution'] if kind is ModelKind.LHV_REFERENCE else None,
        }
        return build_report(self.name, inputs, results)
