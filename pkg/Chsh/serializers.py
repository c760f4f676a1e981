import math

from rest_framework import serializers

from .core import CorrelationSet, SettingsQuad
from .exceptions import BellSimError
from .models import ModelKind, optimal_qm_settings
from .noise import ErasureRates, NoiseQuad

ANGLES = ('a', 'b', 'c', 'd')
SEED_MIN = -(1 << 63)
SEED_MAX = (1 << 64) - 1


def parse_float_list(value, name, length=None):
    """'0.5,-0.5,0.5,0.5' -> [0.5, -0.5, 0.5, 0.5]"""
    if isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [item for item in str(value).split(',') if item.strip()]
    try:
        numbers = [float(item) for item in items]
    except (TypeError, ValueError):
        raise serializers.ValidationError({name: f'Expected comma-separated numbers, got {value!r}'})
    if length is not None and len(numbers) != length:
        raise serializers.ValidationError({name: f'Expected {length} values, got {len(numbers)}'})
    if not all(math.isfinite(number) for number in numbers):
        raise serializers.ValidationError({name: 'Values must be finite'})
    return numbers


class SettingsSerializer(serializers.Serializer):
    """Analyzer angles, given in radians (--a) or degrees (--a-deg), or --optimal."""

    a = serializers.FloatField(required=False, allow_null=True)
    b = serializers.FloatField(required=False, allow_null=True)
    c = serializers.FloatField(required=False, allow_null=True)
    d = serializers.FloatField(required=False, allow_null=True)
    a_deg = serializers.FloatField(required=False, allow_null=True)
    b_deg = serializers.FloatField(required=False, allow_null=True)
    c_deg = serializers.FloatField(required=False, allow_null=True)
    d_deg = serializers.FloatField(required=False, allow_null=True)
    optimal = serializers.BooleanField(required=False, allow_null=True, default=False)

    def validate(self, data):
        radians = {name: data.get(name) for name in ANGLES if data.get(name) is not None}
        degrees = {name: data.get(f'{name}_deg') for name in ANGLES if data.get(f'{name}_deg') is not None}
        if radians and degrees:
            raise serializers.ValidationError('Give angles in radians or in degrees, not both')
        if data.get('optimal') and (radians or degrees):
            raise serializers.ValidationError('--optimal cannot be combined with explicit angles')
        try:
            if degrees:
                data['settings'] = SettingsQuad.from_degrees(*(degrees.get(name, 0.0) for name in ANGLES))
            elif radians:
                data['settings'] = SettingsQuad(*(radians.get(name, 0.0) for name in ANGLES))
            else:
                data['settings'] = optimal_qm_settings()
        except BellSimError as exc:
            raise serializers.ValidationError(exc.messages)
        return data


class NoiseSerializer(serializers.Serializer):
    eps = serializers.FloatField(required=False, allow_null=True, min_value=0.0, max_value=1.0)
    eps1 = serializers.FloatField(required=False, allow_null=True, min_value=0.0, max_value=1.0)
    eps2 = serializers.FloatField(required=False, allow_null=True, min_value=0.0, max_value=1.0)
    eps3 = serializers.FloatField(required=False, allow_null=True, min_value=0.0, max_value=1.0)
    eps4 = serializers.FloatField(required=False, allow_null=True, min_value=0.0, max_value=1.0)

    def validate(self, data):
        channels = {name: data.get(name) for name in ('eps1', 'eps2', 'eps3', 'eps4') if data.get(name) is not None}
        if data.get('eps') is not None and channels:
            raise serializers.ValidationError('--eps sets all four channels; do not combine it with --eps1..--eps4')
        if data.get('eps') is not None:
            data['noise'] = NoiseQuad.uniform(data['eps'])
        elif channels:
            data['noise'] = NoiseQuad(**channels)
        else:
            data['noise'] = None
        return data


class ErasureSerializer(serializers.Serializer):
    delta_a = serializers.FloatField(required=False, allow_null=True, min_value=0.0, max_value=1.0)
    delta_b = serializers.FloatField(required=False, allow_null=True, min_value=0.0, max_value=1.0)

    def validate(self, data):
        if data.get('delta_a') is None and data.get('delta_b') is None:
            data['erasure'] = None
        else:
            data['erasure'] = ErasureRates(data.get('delta_a') or 0.0, data.get('delta_b') or 0.0)
        return data


class AnalyticSerializer(SettingsSerializer, NoiseSerializer):
    model = serializers.ChoiceField(choices=[kind.value for kind in ModelKind], default=ModelKind.QM.value)
    resolution = serializers.IntegerField(min_value=1)

    def validate(self, data):
        data = SettingsSerializer.validate(self, data)
        return NoiseSerializer.validate(self, data)


class SimulateSerializer(SettingsSerializer, NoiseSerializer, ErasureSerializer):
    model = serializers.ChoiceField(choices=[kind.value for kind in ModelKind], default=ModelKind.QM.value)
    trials = serializers.IntegerField(min_value=1)
    seed = serializers.IntegerField(min_value=SEED_MIN, max_value=SEED_MAX)
    shards = serializers.IntegerField(min_value=1)
    resolution = serializers.IntegerField(min_value=1)
    class_rates = serializers.CharField(required=False, allow_null=True)

    def validate(self, data):
        data = SettingsSerializer.validate(self, data)
        data = NoiseSerializer.validate(self, data)
        data = ErasureSerializer.validate(self, data)
        if data.get('class_rates') is not None:
            rates = parse_float_list(data['class_rates'], 'class_rates', length=2)
            if not all(0.0 <= rate <= 1.0 for rate in rates):
                raise serializers.ValidationError({'class_rates': 'Rates must lie in [0, 1]'})
            if data['erasure'] is not None:
                raise serializers.ValidationError('--class-rates replaces --delta-a/--delta-b')
            data['class_rates'] = tuple(rates)
        return data


class CoinSerializer(serializers.Serializer):
    eps = serializers.FloatField(min_value=0.0, max_value=1.0)
    trials = serializers.IntegerField(required=False, allow_null=True, min_value=1)
    seed = serializers.IntegerField(min_value=SEED_MIN, max_value=SEED_MAX)
    shards = serializers.IntegerField(min_value=1)


class CorrelationField(serializers.Field):
    """Four comma-separated correlations E(a,b), E(a,d), E(c,b), E(c,d)."""

    def to_internal_value(self, data):
        values = parse_float_list(data, self.field_name, length=4)
        try:
            return CorrelationSet(*values)
        except BellSimError as exc:
            raise serializers.ValidationError(exc.messages)

    def to_representation(self, value):
        return list(value.as_tuple())


class FairSamplingSerializer(serializers.Serializer):
    n = serializers.IntegerField(min_value=2)
    phi = serializers.FloatField(min_value=0.0, max_value=1.0)


class CorrelationInputSerializer(serializers.Serializer):
    corr = CorrelationField()


class SDeltaSerializer(CorrelationInputSerializer):
    deltas = serializers.CharField()

    def validate_deltas(self, value):
        return parse_float_list(value, 'deltas', length=4)


class NoiseScanSerializer(CorrelationInputSerializer):
    eps_list = serializers.CharField()

    def validate_eps_list(self, value):
        values = parse_float_list(value, 'eps_list')
        if not values:
            raise serializers.ValidationError('At least one noise level is required')
        if not all(0.0 <= eps <= 1.0 for eps in values):
            raise serializers.ValidationError('Noise levels must lie in [0, 1]')
        return values


class OverlapSerializer(serializers.Serializer):
    n = serializers.IntegerField(min_value=1)
    ntot_list = serializers.CharField()

    def validate_ntot_list(self, value):
        items = [item.strip() for item in str(value).split(',') if item.strip()]
        try:
            return [int(float(item)) if 'e' in item.lower() else int(item) for item in items]
        except ValueError:
            raise serializers.ValidationError(f'Expected comma-separated integers, got {value!r}')


class ThresholdSerializer(serializers.Serializer):
    s_ideal = serializers.FloatField(min_value=0.0, max_value=4.0)


class DetectionSerializer(serializers.Serializer):
    delta_a = serializers.FloatField(min_value=0.0, max_value=1.0)
    delta_b = serializers.FloatField(min_value=0.0, max_value=1.0)


class MismatchSerializer(SettingsSerializer):
    n_tot = serializers.IntegerField(min_value=1)


class ReportSerializer(serializers.Serializer):
    schema_version = serializers.CharField()
    command = serializers.CharField()
    inputs = serializers.DictField()
    results = serializers.DictField()
    provenance = serializers.DictField()

    def validate_schema_version(self, value):
        if value != '1':
            raise serializers.ValidationError(f'Unsupported schema version {value!r}')
        return value
