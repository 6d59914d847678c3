class VlcError(Exception):
    """
    Base class for every error raised by the VLC core
    """


class SceneError(VlcError, ValueError):
    """
    Scene geometry or declared counts are inconsistent
    """


class GeometryError(SceneError):
    """
    A link has zero length (coincident endpoints)
    """


class DimensionError(VlcError, ValueError):
    """
    Matrix or vector shapes do not agree
    """


class AssignmentError(VlcError, ValueError):
    """
    An IRS assignment violates its row or binary constraints
    """

    def __init__(self, violations: list) -> None:
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class InfeasibleBudgetError(VlcError):
    """
    The power budget cannot host the DC bias (p_total < r^T r)
    """


class RankDeficientChannelError(VlcError):
    """
    The channel cannot support the requested number of streams
    """

    def __init__(self, rank: int, n_streams: int, shape: tuple) -> None:
        self.rank = rank
        self.n_streams = n_streams
        self.shape = shape
        super().__init__(
            f"Channel of shape {shape} has rank {rank} < {n_streams} streams"
        )


class SingularSystemError(VlcError):
    """
    The detector system matrix is singular (noise-free and rank deficient)
    """


class NonnegativityViolationError(VlcError):
    """
    A transmitted LED intensity went negative
    """

    def __init__(self, led: int, value: float) -> None:
        self.led = led
        self.value = value
        super().__init__(f"LED {led} intensity {value:.6g} is negative")


class ConfigError(VlcError, ValueError):
    """
    Experiment configuration is invalid
    """

    def __init__(self, errors: list) -> None:
        self.errors = list(errors)
        super().__init__("\n - " + "\n - ".join(self.errors))
