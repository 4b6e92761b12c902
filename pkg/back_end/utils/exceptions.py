"""
Exceptions levées par les modules Score-life.

Chaque exception porte un code de sortie utilisé par la CLI.
"""

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_FAILURE = 3
EXIT_VERIFICATION_FAILURE = 4


class ScoreLifeError(Exception):
    """Erreur de base du projet."""

    exit_code = EXIT_NUMERICAL_FAILURE


class EncodingUnsupportedError(ScoreLifeError, ValueError):
    """Action set size is not a power of two, or codes are out of range."""


class BaseMismatchError(ScoreLifeError, ValueError):
    """Two life values / action codes with different bases were combined."""


class TruncationError(ScoreLifeError, ValueError):
    """More digits were requested than a life value stores."""


class EnvironmentStateError(ScoreLifeError, ValueError):
    """Non-finite or otherwise invalid environment state."""


class InvalidActionError(ScoreLifeError, ValueError):
    """Action code not valid for the environment."""


class SystemConstructionError(ScoreLifeError, ValueError):
    """Policy life-value system cannot be built exactly."""


class DomainError(ScoreLifeError, ValueError):
    """Argument outside the [0,1) life-value domain."""


class FitError(ScoreLifeError):
    """A representation fit (Faber-Schauder, polynomial, transform) failed."""

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


class ConfigError(ScoreLifeError, ValueError):
    exit_code = EXIT_CONFIG_ERROR


class VerificationError(ScoreLifeError):
    exit_code = EXIT_VERIFICATION_FAILURE
