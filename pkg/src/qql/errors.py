"""Exception types shared across the package.

Everything derives from :class:`QqlError`, which itself derives from
``ValueError`` so callers that do not care about the fine distinctions can
catch the usual builtin.
"""


class QqlError(ValueError):
    """Base class for every error this package raises deliberately."""


class ParameterError(QqlError):
    """A scalar argument is outside its documented range."""


class CapacityError(QqlError):
    """A request exceeds an enumeration or memory guard."""


class ValidationError(QqlError):
    """A composite object violates its construction contract."""


class ModelError(QqlError):
    """Two individually valid objects do not fit together."""
