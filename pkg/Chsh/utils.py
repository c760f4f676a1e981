from argparse import _StoreTrueAction, _SubParsersAction
import logging

from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError
from dotenv import dotenv_values
from rest_framework import serializers

from .exceptions import BellSimError, InvalidArgument
from .reports import encode

logger = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_SELF_CHECK = 3
TRUE_WORDS = ('1', 'true', 'yes', 'on')


class SelfCheckFailed(Exception):
    """A simulated estimate strayed too far from its analytic value."""

    def __init__(self, message, output):
        super().__init__(message)
        self.output = output


def command_exception_handler(exc, context):
    """
    Translate an exception raised while building a report into a CommandError
    carrying the exit code, or None when it is not ours to handle.
    """
    command = context.get('command', '?')
    if isinstance(exc, serializers.ValidationError):
        return CommandError(f'Invalid arguments for {command}: {exc.detail}', returncode=EXIT_USAGE)
    if isinstance(exc, (BellSimError, ValidationError)):
        return CommandError(f'Invalid arguments for {command}: {"; ".join(exc.messages)}', returncode=EXIT_USAGE)
    if isinstance(exc, SelfCheckFailed):
        return CommandError(str(exc), returncode=EXIT_SELF_CHECK)
    return None


def _collect_actions(parser):
    actions = {}
    for action in parser._actions:
        if isinstance(action, _SubParsersAction):
            for subparser in action.choices.values():
                actions.update(_collect_actions(subparser))
        elif action.option_strings:
            actions[action.dest] = action
    return actions


class BellCommand(BaseCommand):
    """
    Shared plumbing for the toolkit commands: --format and --config options,
    config file merging, exit codes and report output.

    Subclasses implement add_command_arguments() and build(options), which
    returns a report dict.
    """

    requires_system_checks = []
    # long flag names a config file may not set
    reserved_keys = ('config', 'format', 'settings', 'pythonpath', 'traceback', 'verbosity')

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        self._actions_by_dest = _collect_actions(parser)
        return parser

    def add_arguments(self, parser):
        parser.add_argument('--format', choices=['json', 'csv'], default='json', help='Report format on stdout')
        parser.add_argument('--config', default=None, help='key = value file; flags override its values')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        raise NotImplementedError

    def merge_config(self, options):
        """Fill options the command line left unset from the --config file."""
        path = options.get('config')
        if not path:
            return options
        try:
            values = dotenv_values(path)
        except OSError as exc:
            raise InvalidArgument(f'Cannot read config file {path}: {exc}')
        merged = dict(options)
        for key, raw in values.items():
            dest = key.strip().replace('-', '_')
            action = self._actions_by_dest.get(dest)
            if action is None or dest in self.reserved_keys:
                raise InvalidArgument(f'Unknown key {key!r} in config file {path}')
            if merged.get(dest) is not None and merged.get(dest) is not False:
                continue
            merged[dest] = self._coerce(action, key, raw)
        logger.debug('Merged %d value(s) from %s', len(values), path)
        return merged

    def _coerce(self, action, key, raw):
        raw = (raw or '').strip()
        if isinstance(action, _StoreTrueAction):
            return raw.lower() in TRUE_WORDS
        try:
            value = action.type(raw) if action.type else raw
        except (TypeError, ValueError):
            raise InvalidArgument(f'Bad value {raw!r} for {key!r}')
        if action.choices is not None and value not in action.choices:
            raise InvalidArgument(f'{key!r} must be one of {sorted(action.choices)}, got {value!r}')
        return value

    def defaults(self):
        return settings.BELLSIM

    def validated(self, serializer_class, data):
        serializer = serializer_class(data=data)
        serializer.is_valid(raise_exception=True)
        return serializer.validated_data

    def handle(self, *args, **options):
        fmt = options.get('format') or 'json'
        context = {'command': self.name}
        try:
            options = self.merge_config(options)
            report = self.build(options)
            return encode(report, fmt)
        except SelfCheckFailed as exc:
            self.stdout.write(exc.output)
            raise command_exception_handler(exc, context)
        except Exception as exc:
            error = command_exception_handler(exc, context)
            if error is None:
                logger.error('Unhandled exception in %s: %s', self.name, exc, exc_info=True)
                raise
            raise error

    def build(self, options):
        raise NotImplementedError

    def encode_report(self, report, options):
        return encode(report, options.get('format') or 'json')

    @property
    def name(self):
        return self.__module__.rsplit('.', 1)[-1]


def add_settings_arguments(parser):
    for name in ('a', 'b', 'c', 'd'):
        parser.add_argument(f'--{name}', type=float, default=None, help=f'Angle {name} in radians')
        parser.add_argument(f'--{name}-deg', type=float, default=None, help=f'Angle {name} in degrees')
    parser.add_argument(
        '--optimal', action='store_true', default=None,
        help='Use a=0, b=pi/8, c=pi/4, d=3pi/8 (the default when no angle is given)',
    )


def add_model_arguments(parser):
    parser.add_argument('--model', choices=['qm', 'lhv-ref'], default=None)
    parser.add_argument('--resolution', type=int, default=None, help='Quadrature points for the LHV average')
    add_settings_arguments(parser)


def add_noise_arguments(parser):
    parser.add_argument('--eps', type=float, default=None, help='Same BSC flip rate on all four channels')
    for index, channel in enumerate(('wing I at a', 'wing II at b', 'wing I at c', 'wing II at d'), start=1):
        parser.add_argument(f'--eps{index}', type=float, default=None, help=f'BSC flip rate, {channel}')


def add_erasure_arguments(parser):
    parser.add_argument('--delta-a', type=float, default=None, help='Non-detection probability, wing I')
    parser.add_argument('--delta-b', type=float, default=None, help='Non-detection probability, wing II')


def z_score(estimate, expected, standard_error):
    """|estimate - expected| / se; None when undefined (no data, or se = 0 with a mismatch)."""
    if estimate is None or expected is None or standard_error is None:
        return None
    difference = abs(estimate - expected)
    if standard_error == 0.0:
        return 0.0 if difference <= 1e-12 else None
    return difference / standard_error


def option_or_default(options, name, default):
    value = options.get(name)
    return default if value is None else value
