"""Exception and warning types shared across the package."""


class UxpropError(Exception):
    """Base class for all package errors."""


class MalformedGeoJsonError(UxpropError):
    """Input file is not parseable GeoJSON or violates the expected schema."""


class EmptySceneError(UxpropError):
    """No valid building was found (load) or retained (crop)."""


class InvalidConfigError(UxpropError):
    """A configuration or request field violates an invariant.

    Carries the offending field name so callers (CLI, HTTP service) can
    report it verbatim.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class DegenerateGeometryError(UxpropError):
    """Roof-vertex projection undefined: building top at or above the transmitter."""


class GridTooLargeError(UxpropError):
    """Requested raster exceeds the configured cell-count cap."""


class NoAccessibleAreaError(UxpropError):
    """Every cell of the map lies inside a building footprint."""


class RouteOutsideMapError(UxpropError):
    """A route sample falls outside the map extent."""


class MissingChannelLayerError(UxpropError):
    """Operation needs per-sample attenuation but the trace carries none."""


class EmptyInputError(UxpropError):
    """Statistical operation received no values."""


class InvalidDistanceError(UxpropError):
    """Path loss evaluated at a non-positive distance."""


class SidecarMismatchError(UxpropError):
    """Grid payload and JSON sidecar disagree on shape or dtype."""


class UnsupportedLayerError(UxpropError):
    """Renderer does not know the requested layer kind."""


class UxpropWarning(UserWarning):
    """Base class for non-fatal conditions."""


class EmptyCropWarning(UxpropWarning):
    """Crop retained zero buildings (legitimate for open terrain)."""


class GridTooSmallWarning(UxpropWarning):
    """Grid too short relative to the decorrelation distance; field statistics unreliable."""
