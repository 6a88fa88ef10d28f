"""Exception hierarchy."""


class OcdiNetError(Exception):
    """Base class for all package errors."""


class ConfigError(OcdiNetError):
    pass


class ShapeError(OcdiNetError):
    pass


class DataError(OcdiNetError):
    pass


class TrainingError(OcdiNetError):
    pass


class ProtocolError(OcdiNetError):
    pass
