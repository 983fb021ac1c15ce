"""Exception hierarchy shared by the whole package."""


class RenewalError(Exception):
    """Base class for all errors raised by renewalsim."""


class MeasureError(RenewalError):
    """Invalid measure data or an unsupported measure operation."""


class SpectralError(RenewalError):
    """Birth-law hypothesis violation or eigenproblem failure."""


class TransportError(RenewalError):
    """Time stepping / snapshot construction failure."""


class EntropyError(RenewalError):
    """Inadmissible integrand or ill-posed entropy evaluation."""


class ScenarioError(RenewalError):
    """Scenario text failed to parse or validate.

    ``errors`` collects every message, not just the first one.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
