"""Exception hierarchy shared across the package."""

from __future__ import annotations


class HcplanError(Exception):
    """Base class for every error raised by hcplan."""


class DocumentError(HcplanError):
    """An environment, ledger, rules or task document is malformed."""


class MutationError(HcplanError):
    """A state mutation names an unknown object or an impossible state."""


class ActionSyntaxError(HcplanError):
    """Text does not match the action grammar."""


class UnknownVerbError(ActionSyntaxError):
    pass


class ArityError(ActionSyntaxError):
    pass


class InapplicableActionError(HcplanError):
    """Raised by ``apply`` when a precondition does not hold."""

    def __init__(self, action, failed: str):
        self.action = action
        self.failed = failed
        super().__init__(f"{action} is not applicable: {failed}")


class ConditionSyntaxError(HcplanError):
    pass


class EvaluationError(HcplanError):
    """A condition references an object name that the environment lacks."""


class GuideParseError(HcplanError):
    pass


class LedgerError(HcplanError):
    """The schema ledger or rule file cannot be compiled."""


class BackendError(HcplanError):
    """Any failure to obtain a completion from a selector backend."""


class TransportError(BackendError):
    pass


class BackendTimeoutError(BackendError):
    pass


class BackendStatusError(BackendError):
    def __init__(self, status: int, body: str = ""):
        self.status = status
        self.body = body
        super().__init__(f"backend returned HTTP {status}: {body[:200]}")


class AuthenticationError(BackendStatusError):
    pass


class CredentialsError(BackendError):
    """No API key was found in the configured environment variable."""


class ConfigError(HcplanError):
    pass


class ResourceLimitError(HcplanError):
    pass
