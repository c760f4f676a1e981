"""
Report assembly and encoding.

Every float is written with 17 significant digits so reports round-trip
exactly. CSV carries the same values as JSON, one `key,value` row per leaf,
keys being dotted paths with list positions as integers.
"""
import csv
import io
import json
import math

from django.conf import settings
import numpy as np

from .exceptions import InvalidArgument
from .serializers import ReportSerializer

SCHEMA_VERSION = '1'


def build_report(command, inputs, results, seed=None, shards=None):
    report = {
        'schema_version': SCHEMA_VERSION,
        'command': command,
        'inputs': inputs,
        'results': results,
        'provenance': {
            'seed': seed,
            'shards': shards,
            'build': settings.BELLSIM['BUILD_ID'],
        },
    }
    serializer = ReportSerializer(data=report)
    serializer.is_valid(raise_exception=True)
    return report


def format_float(value):
    value = float(value)
    if not math.isfinite(value):
        raise InvalidArgument(f'Cannot serialize non-finite value {value}')
    text = format(value, '.17g')
    if not any(marker in text for marker in '.en'):
        text += '.0'
    return text


def _scalar(value):
    if value is None or isinstance(value, (bool, np.bool_)):
        return json.dumps(None if value is None else bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if isinstance(value, str):
        return json.dumps(value)
    raise InvalidArgument(f'Cannot serialize {type(value).__name__} in a report')


def _encode(value, level, indent):
    pad = ' ' * (indent * (level + 1))
    closing = ' ' * (indent * level)
    if isinstance(value, dict):
        if not value:
            return '{}'
        items = [f'{pad}{json.dumps(str(key))}: {_encode(item, level + 1, indent)}' for key, item in value.items()]
        return '{\n' + ',\n'.join(items) + '\n' + closing + '}'
    if isinstance(value, (list, tuple)):
        if not value:
            return '[]'
        items = [f'{pad}{_encode(item, level + 1, indent)}' for item in value]
        return '[\n' + ',\n'.join(items) + '\n' + closing + ']'
    return _scalar(value)


def to_json(report, indent=2):
    return _encode(report, 0, indent)


def flatten(value, prefix=''):
    """Yield (dotted key, leaf) pairs in document order."""
    if isinstance(value, dict):
        for key, item in value.items():
            yield from flatten(item, f'{prefix}.{key}' if prefix else str(key))
    elif isinstance(value, (list, tuple)):
        for index, item in enumerate(value):
            yield from flatten(item, f'{prefix}.{index}' if prefix else str(index))
    else:
        yield prefix, value


def _csv_cell(value):
    if value is None:
        return ''
    if isinstance(value, str):
        return value
    return _scalar(value)


def to_csv(report):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(['key', 'value'])
    for key, value in flatten(report):
        writer.writerow([key, _csv_cell(value)])
    return buffer.getvalue().rstrip('\n')


def encode(report, fmt='json'):
    if fmt == 'csv':
        return to_csv(report)
    return to_json(report)


def decode_json(text):
    report = json.loads(text)
    ReportSerializer(data=report).is_valid(raise_exception=True)
    return report


def decode_csv(text):
    """{dotted key: raw string} from CSV report text."""
    reader = csv.reader(io.StringIO(text))
    next(reader)
    return {key: value for key, value in reader}
