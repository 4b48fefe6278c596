"""Exception hierarchy shared by every vqa-instruct package.

Each class carries the process exit code the CLI should use when it escapes a command:
2 for user, config or input problems and 1 for internal failures.
"""

from __future__ import annotations


class VQAError(Exception):
    exit_code: int = 1


class ConfigError(VQAError, ValueError):
    exit_code = 2


class DecodeError(VQAError, OSError):
    exit_code = 2


class EmptyVideo(VQAError, ValueError):
    exit_code = 2


class ShapeError(VQAError, ValueError):
    pass


class WidthMismatch(ShapeError):
    pass


class BackendError(VQAError, RuntimeError):
    pass


class DuplicateBackend(VQAError, ValueError):
    exit_code = 2


class UnknownBackend(VQAError, LookupError):
    exit_code = 2


class TokenizeError(VQAError, ValueError):
    exit_code = 2


class ParseError(VQAError, ValueError):
    pass


class GrammarExhausted(VQAError, ValueError):
    exit_code = 2


class TooFewSamples(VQAError, ValueError):
    exit_code = 2


class ManifestError(VQAError, ValueError):
    exit_code = 2


class ManifestMissing(VQAError, FileNotFoundError):
    exit_code = 2


class MissingCache(VQAError, FileNotFoundError):
    exit_code = 2


class MissingTask(VQAError, ValueError):
    exit_code = 2


class DivergenceError(VQAError, ArithmeticError):
    pass


class FreezeViolation(VQAError, RuntimeError):
    pass


class CheckpointMissing(VQAError, FileNotFoundError):
    exit_code = 2


class CheckpointError(VQAError, RuntimeError):
    exit_code = 2


class DegenerateInput(VQAError, ValueError):
    pass


class LockHeld(VQAError, RuntimeError):
    exit_code = 2


class PreprocessFailures(VQAError, RuntimeError):
    """Raised after a preprocess pass in which at least one video failed."""

    def __init__(self, failed: dict[str, str]) -> None:
        self.failed = dict(failed)
        super().__init__(f"{len(self.failed)} video(s) failed preprocessing: {', '.join(sorted(self.failed))}")
