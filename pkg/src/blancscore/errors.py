"""Exception types shared across the package."""


class BlancError(Exception):
    """Base class for all package-specific errors."""


class ModelLoadError(BlancError):
    """A model bundle is missing, corrupt, or fails its self-test.

    ``component`` names the part of the bundle that failed
    ("vocabulary", "tokenizer-config", "graph", "self-test", ...).
    """

    def __init__(self, component: str, detail: str = ""):
        self.component = component
        self.detail = detail
        msg = component if not detail else f"{component}: {detail}"
        super().__init__(msg)


class InputTooLong(BlancError):
    """A composed model input exceeds the backend's maximum length."""


class SentenceTooLong(InputTooLong):
    """A sentence alone (plus special tokens) exceeds the maximum length."""


class NoMaskableTokens(BlancError):
    """No token of the document is eligible for masking under the policy."""


class DegenerateInput(BlancError):
    """A statistic is undefined for the given series (constant, or too short)."""


class MissingScores(BlancError):
    """Annotated pairs lack a machine score."""


class EmptyInput(BlancError):
    """An aggregate was requested over an empty collection."""


class NoSwappableEntity(BlancError):
    """A summary has no entity that can be swapped against the pool."""
