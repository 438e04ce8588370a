"""Exception hierarchy shared across the package."""


class CxpError(Exception):
    """Base class for every error raised by cxp."""


class ChainError(CxpError):
    """Consecutive pathlets do not share an IXP anchor."""


class InvalidPathlet(CxpError):
    def __init__(self, pathlet_id, violations):
        self.pathlet_id = pathlet_id
        self.violations = list(violations)
        super().__init__(f"pathlet {pathlet_id!r}: {', '.join(self.violations)}")


class DuplicatePathletId(CxpError):
    pass


class DuplicateRequest(CxpError):
    pass


class UnknownPathlet(CxpError):
    pass


class UnknownRequest(CxpError):
    pass


class UnknownIxp(CxpError):
    pass


class InsufficientResidual(CxpError):
    """A reservation would drive a pathlet's residual bandwidth below zero."""

    def __init__(self, pathlet_id, residual, demand):
        self.pathlet_id = pathlet_id
        self.residual = residual
        self.demand = demand
        super().__init__(
            f"pathlet {pathlet_id!r} has {float(residual):g} Mbps residual, "
            f"{float(demand):g} Mbps requested"
        )


class MalformedScenario(CxpError):
    pass


class MissingSample(CxpError):
    pass


class DatasetError(CxpError):
    """Input dataset does not match the documented CSV/JSON schema."""


class MalformedPrefix(DatasetError):
    pass
