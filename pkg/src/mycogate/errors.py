"""Exception types shared across the package."""


class MycogateError(Exception):
    """Base class for all package-specific errors."""


class ImageFormatError(MycogateError):
    """The file is not in a supported raster format."""


class ImageDataError(MycogateError):
    """The file claims a supported format but its payload is corrupt."""


class ConfigError(MycogateError):
    """An experiment configuration is malformed or inconsistent."""


class DivergenceError(MycogateError):
    """A field value became non-finite during integration.

    Carries the iteration index at which the value was produced and the
    (x, y) coordinates of the first offending node in row-major order.
    """

    def __init__(self, step: int, node: tuple[int, int], field: str):
        self.step = step
        self.node = node
        self.field = field
        super().__init__(
            f"non-finite {field} at node (x={node[0]}, y={node[1]}) on iteration {step}"
        )
