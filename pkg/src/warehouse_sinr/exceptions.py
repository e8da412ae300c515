"""
Error hierarchy for the warehouse SINR lab.

Every error carries an ``exit_code`` used by the CLI:
2 for user/input errors, 1 for internal or numeric failures.
"""


class WarehouseSinrError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(WarehouseSinrError, ValueError):
    """Invalid user input, configuration or geometry."""

    exit_code = 2


# Scene
class InvalidScene(InputError):
    pass


class PlacementExhausted(InputError):
    pass


class EmptySweep(InputError):
    pass


# Oracle / tensors
class InvalidResolution(InputError):
    pass


class DegenerateRange(InputError):
    pass


class ShapeMismatch(InputError):
    pass


# Datasets / evaluation
class EmptySplit(InputError):
    pass


class InsufficientSamples(InputError):
    pass


class ConfigError(InputError):
    pass


# Training
class NonFiniteLoss(WarehouseSinrError):
    """Loss became NaN/inf. Internal failure, exit code 1."""

    exit_code = 1


# Storage
class StorageError(InputError):
    """Unreadable or inconsistent artifact on disk."""


class BadMagic(StorageError):
    pass


class TruncatedFile(StorageError):
    pass


class ManifestMismatch(StorageError):
    pass


class KindMismatch(StorageError):
    pass


class UnknownParameter(StorageError):
    pass
