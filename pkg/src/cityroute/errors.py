"""Exception types shared across the package."""


class CityRouteError(Exception):
    """Base class for every domain error raised by this package."""


class ParseError(CityRouteError):
    """A document (network file, rule, request body) is malformed."""


class ValidationError(CityRouteError):
    """A document parsed fine but violates a semantic constraint."""


class EmptyNetworkError(CityRouteError):
    """An operation needs at least one vertex and the network has none."""


class UnknownVertexError(CityRouteError):
    """A vertex id is not part of the network or snapshot."""


class NoRouteError(CityRouteError):
    """No path exists between the requested endpoints."""


class MixedSegmentsError(CityRouteError):
    """Rules for different segments were passed to a single-segment resolver."""


class InvalidPathError(CityRouteError):
    """A path's arcs do not chain tail-to-head."""


class PathNotInNetworkError(CityRouteError):
    """A path references segments the network does not contain."""


class RasterUnsupportedError(CityRouteError):
    """Raster output is not available in this build."""


class DuplicateUsernameError(CityRouteError):
    """The requested username is already taken."""


class WeakPasswordError(CityRouteError):
    """The password does not meet the minimum length."""


class SessionExpiredError(CityRouteError):
    """The presented session token is unknown or past its expiry."""


class UnknownChannelError(CityRouteError):
    """A notification names a channel with no registered adapter."""


FUTURE_QUERY_REQUIRES_ACCOUNT = "FUTURE_QUERY_REQUIRES_ACCOUNT"
TRIP_REQUIRES_ACCOUNT = "TRIP_REQUIRES_ACCOUNT"
ADMIN_REQUIRED = "ADMIN_REQUIRED"


class ForbiddenError(CityRouteError):
    """The caller's role does not permit the requested action."""

    def __init__(self, code: str, message: str | None = None):
        super().__init__(message or code)
        self.code = code
