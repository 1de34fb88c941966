"""Exception hierarchy; each class carries the CLI exit code it maps to."""
from __future__ import annotations


class CourtphaseError(Exception):
    exit_code = 4

    def __init__(self, message: str, module: str | None = None):
        super().__init__(message)
        self.module = module

    def to_dict(self) -> dict:
        return {
            "error": type(self).__name__,
            "module": self.module,
            "message": str(self),
            "exit_code": self.exit_code,
        }


class ConfigError(CourtphaseError, ValueError):
    """Bad arguments, missing inputs, invalid configuration."""

    exit_code = 2


class DataError(CourtphaseError):
    """Input data violates a contract."""

    exit_code = 3


class SchemaError(DataError):
    pass


class IntegrityError(DataError):
    pass


class InfeasibleError(DataError):
    pass


class ConsistencyError(DataError):
    pass
