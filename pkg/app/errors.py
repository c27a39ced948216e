"""Exception hierarchy shared by the numerical modules and services."""


class QHCError(Exception):
    """Base class for every error raised by the toolkit"""


class ContractError(QHCError, ValueError):
    """A precondition of an operation was violated"""


class DimensionError(ContractError):
    """Site counts or matrix dimensions do not line up"""


class SpectralError(ContractError):
    """Input is not Hermitian or not positive where a spectral routine requires it"""


class EnumerationCapError(QHCError):
    """Exact subset enumeration was requested beyond the configured cap"""


class UnknownCheckError(QHCError, KeyError):
    """No registry entry carries the requested check id"""


class PairFailure(QHCError):
    """A (check, instance) pair raised while being evaluated"""

    def __init__(self, check_id: str, instance_id: str, reason: str):
        super().__init__(check_id, instance_id, reason)
        self.check_id = check_id
        self.instance_id = instance_id
        self.reason = reason

    def __str__(self) -> str:
        return f"{self.check_id} on {self.instance_id or '<no instance>'}: {self.reason}"
