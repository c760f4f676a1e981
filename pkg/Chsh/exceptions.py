from django.core.exceptions import ValidationError


class BellSimError(ValidationError):
    """Base class for every domain error raised by the toolkit."""

    default_code = 'invalid'

    def __init__(self, message, code=None, params=None):
        super().__init__(message, code=code or self.default_code, params=params)

    def __str__(self):
        return '; '.join(self.messages)


class InvalidArgument(BellSimError):
    default_code = 'invalid_argument'


class InvalidDistribution(BellSimError):
    default_code = 'invalid_distribution'


class NonNormalized(InvalidDistribution):
    default_code = 'non_normalized'


class NegativeProbability(InvalidDistribution):
    default_code = 'negative_probability'


class InvalidCorrelation(BellSimError):
    default_code = 'invalid_correlation'


class NoViolation(BellSimError):
    """The ideal statistic does not exceed 2, so no noise threshold exists."""

    default_code = 'no_violation'


class ConstraintViolation(BellSimError):
    default_code = 'constraint_violation'

    def __init__(self, message, index, params=None):
        self.index = index
        super().__init__(message, params=params)
