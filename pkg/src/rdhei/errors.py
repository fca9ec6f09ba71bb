"""Exception hierarchy shared by the library and the command line tool."""


class RdheiError(Exception):
    """Base class for all library errors."""


class FormatError(RdheiError):
    """Malformed or truncated image file."""


class ParameterError(RdheiError):
    """Invalid key, block geometry, or other caller-supplied parameter."""


class CapacityError(ParameterError):
    """Payload does not fit in the available embedding room."""


class NoRoomError(CapacityError):
    """The image offers no net embedding room at any threshold."""


class CorruptionError(RdheiError):
    """Carrier data is inconsistent: tampering or a wrong key."""
