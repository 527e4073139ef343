"""Exception hierarchy. Every error raised by the package derives from JoinUnionError."""


class JoinUnionError(Exception):
    pass


class IngestionError(JoinUnionError):
    """Malformed CSV input: bad header, wrong arity, missing field."""


class DuplicateRowError(IngestionError):
    pass


class SchemaError(JoinUnionError):
    pass


class PredicateError(JoinUnionError):
    pass


class StatsMissingError(JoinUnionError):
    pass


class StructureError(JoinUnionError):
    """A join declaration is inconsistent (dangling attribute, schema mismatch, not a tree...)."""


class TemplateError(JoinUnionError):
    pass


class NotCyclicError(StructureError):
    pass


class CapacityError(JoinUnionError):
    pass


class EmptyJoinError(JoinUnionError):
    pass


class EstimatorError(JoinUnionError):
    """Bad estimator input or a sampler that exceeded its safety cap."""


class ProbabilityError(JoinUnionError):
    pass


class AlignmentError(JoinUnionError):
    pass


class IncompleteInputError(JoinUnionError):
    pass


class InsufficientSampleError(EstimatorError):
    pass


class ParameterError(JoinUnionError):
    pass


class InstabilityError(JoinUnionError):
    pass


class PoolCorruptionError(JoinUnionError):
    pass


class ConfigError(JoinUnionError):
    pass


class MembershipError(JoinUnionError):
    """A sampled row lies outside the oracle universe."""
