"""Exception hierarchy shared across the toolkit.

Exit codes mirror the CLI contract: 2 config, 3 data, 4 sampler exhausted.
"""

from __future__ import annotations


class NavPriorError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(NavPriorError):
    """Invalid configuration value or combination."""

    exit_code = 2


class DataError(NavPriorError):
    """Inconsistent or invalid data handed to an operation."""

    exit_code = 3


class FormatError(DataError):
    """Malformed input file (JSON structure, field types, lengths)."""


class SamplerExhaustedError(NavPriorError):
    """No valid sample found within the configured attempt budget."""

    exit_code = 4

    def __init__(self, message: str, *, attempts: int = 0, dead_ends: int = 0,
                 too_close: int = 0, unreachable: int = 0):
        super().__init__(message)
        self.attempts = attempts
        self.dead_ends = dead_ends
        self.too_close = too_close
        self.unreachable = unreachable

    def diagnostics(self) -> dict[str, int]:
        return {
            "attempts": self.attempts,
            "dead_ends": self.dead_ends,
            "too_close": self.too_close,
            "unreachable": self.unreachable,
        }


class SamplerSkippedWarning(UserWarning):
    """An environment was skipped during batch sampling."""
