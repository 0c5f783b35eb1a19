class CotypeLabError(Exception):
    pass


class InvalidInput(CotypeLabError, ValueError):
    pass


class InvalidDescriptor(CotypeLabError, ValueError):
    pass


class CapacityError(CotypeLabError):
    """Raised when an exact method would exceed its enumeration cap."""


class UnsupportedConfiguration(CotypeLabError):
    pass
