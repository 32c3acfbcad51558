"""Exception types shared across the package, mapped to wire error codes."""

from __future__ import annotations


class ServiceError(Exception):
    """Base class for faults that have a wire representation.

    ``code`` is one of validation / domain / not_found / internal and is what
    the HTTP layer serializes; ``parameter`` optionally names the offending
    request parameter.
    """

    code = "internal"

    def __init__(self, message: str, parameter: str | None = None):
        super().__init__(message)
        self.message = message
        self.parameter = parameter


class ValidationError(ServiceError):
    """Caller passed a value outside the documented range or shape."""

    code = "validation"


class DomainError(ServiceError):
    """Request is well-formed but outside the served geographic domain."""

    code = "domain"


class NotFoundError(ServiceError):
    """Addressed object does not exist; callers may treat this as a hole."""

    code = "not_found"


class StateError(ServiceError):
    """Operation requires state (e.g. a loaded gazetteer) that is absent."""


class RenderError(ServiceError):
    """A tile fetched during composition could not be decoded."""


class DecodeError(ServiceError):
    """Byte stream is not a decodable image."""


class StoreIOError(ServiceError):
    """Storage operation failed; the store was left unchanged."""
