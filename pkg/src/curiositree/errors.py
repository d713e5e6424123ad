"""Exception types shared across the package."""


class CuriositreeError(Exception):
    """Base class for package-specific failures."""


class AllZeroScores(CuriositreeError):
    """Every raw score fell below the degeneracy threshold."""


class NoAffordableAction(CuriositreeError):
    """Action selection was handed an empty candidate list."""


class BackendError(CuriositreeError):
    """A model, simulator, or judge call failed after exhausting retries."""


class ParseError(CuriositreeError):
    """Constrained-output text did not match the expected grammar."""


class TemplateError(CuriositreeError):
    """A prompt template was rendered with missing or invalid parameters."""


class ImpossibleResponse(CuriositreeError):
    """Observed response has zero marginal probability under the posterior."""


class UnknownIdentifier(CuriositreeError):
    """Disease label or query id not present in the world."""


class EmptyQuery(CuriositreeError):
    """Search query contained no indexable tokens."""


class JudgeError(CuriositreeError):
    """Prediction oracle returned neither terminal marker."""


class WorldFormatError(CuriositreeError):
    """World file violated the schema or its probability constraints."""
