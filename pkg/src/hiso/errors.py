"""Exception hierarchy shared by all modules."""


class HisoError(Exception):
    """Base class for toolkit errors."""


class DimensionError(HisoError, ValueError):
    """Vector lengths do not match the group context."""


class DomainError(HisoError, ValueError):
    """Argument outside the domain where a quantity is defined."""


class CharacteristicPointError(HisoError):
    """The horizontal projection of the normal vanishes."""


class IntegrabilityError(HisoError):
    """An integrand is not integrable near a singular endpoint."""


class QuadratureError(HisoError):
    """Non-finite values met at quadrature nodes."""


class ResonanceError(HisoError):
    """Zero denominator in the Frobenius recurrence."""

    def __init__(self, l: int, message: str | None = None):
        self.l = l
        super().__init__(message or f"indicial resonance at l={l}")


class SupportError(HisoError, ValueError):
    """Test-function support violates a precondition."""


class ConvergenceError(HisoError):
    """A refinement study did not converge."""


class UnsupportedError(HisoError):
    """Operation not available for the requested configuration."""


class ParseError(HisoError, ValueError):
    """Malformed test-function expression; the message carries a caret diagnostic."""

    def __init__(self, text: str, pos: int, reason: str):
        self.text, self.pos, self.reason = text, pos, reason
        super().__init__(f"{reason} at column {pos + 1}\n  {text}\n  {' ' * pos}^")
