"""
Exception hierarchy shared by every module.

Each error carries a stable diagnostic ``token`` (printed by the command line
surface) and the process ``exit_code`` it maps to.
"""

__all__ = [
    "ReplicatorError",
    "DomainError",
    "MonotoneRegime",
    "CriticalPointSingularity",
    "PreconditionFailed",
    "ConvergenceFailure",
    "CertificateRequired",
    "EscapedSet",
    "NotFound",
    "NotPeriodic",
    "DomainEscape",
    "NotClose",
    "InvalidSpec",
    "SizeError",
    "ConfigError",
]


class ReplicatorError(Exception):
    token = "error"
    exit_code = 1

    def __init__(self, message: str, token: str | None = None):
        super().__init__(message)
        if token:
            self.token = token

    def diagnostic(self) -> str:
        return f"{self.token}: {self}"


class DomainError(ReplicatorError, ValueError):
    token = "domain-error"


class MonotoneRegime(ReplicatorError):
    """ raised where interior critical points are needed but a <= 4 """
    token = "monotone-regime"


class CriticalPointSingularity(ReplicatorError):
    token = "critical-point-singularity"


class PreconditionFailed(ReplicatorError):
    token = "precondition-failed"

    def __init__(self, message: str, token: str | None = None, margin: float | None = None):
        super().__init__(message, token)
        self.margin = margin

    def diagnostic(self) -> str:
        if self.margin is None:
            return super().diagnostic()
        return f"{self.token}, margin={self.margin!r}: {self}"


class ConvergenceFailure(ReplicatorError):
    token = "convergence-failure"
    exit_code = 2


class CertificateRequired(PreconditionFailed):
    token = "certificate-required"


class EscapedSet(ReplicatorError):
    token = "escaped-set"


class NotFound(ReplicatorError):
    token = "not-found"


class NotPeriodic(ReplicatorError):
    token = "not-periodic"


class DomainEscape(ReplicatorError):
    token = "domain-escape"


class NotClose(ReplicatorError):
    token = "not-close"


class InvalidSpec(ReplicatorError, ValueError):
    token = "invalid-spec"


class SizeError(DomainError):
    token = "size-error"


class ConfigError(ReplicatorError):
    token = "config-error"
