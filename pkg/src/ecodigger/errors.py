"""Exception types shared across the package."""


class EcodiggerError(Exception):
    """Base class for all errors raised by this package."""


class DataError(EcodiggerError):
    """Input data is structurally valid but semantically unusable."""


class StoreError(DataError):
    """The on-disk event store is missing, corrupt, or incompatible."""


class UnknownProjectError(DataError):
    """A project id was requested that is not a node of the graph."""


class UnknownMetricError(DataError):
    """A metric name is not in the registry."""


class UnknownLabelError(DataError):
    """A label reference names neither a known label id nor a known type.

    ``kind`` is "id" or "type" so callers can distinguish the two cases.
    """

    def __init__(self, ref: str, kind: str):
        super().__init__(f"unknown label {kind}: {ref!r}")
        self.ref = ref
        self.kind = kind


class LabelLoadError(DataError):
    """A label file is malformed, duplicated, dangling, or cyclic."""
