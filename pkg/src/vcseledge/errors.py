"""Exception hierarchy for the vcseledge package."""


class VcselEdgeError(Exception):
    """Base class for all package-specific errors."""


class InvalidParamsError(VcselEdgeError, ValueError):
    """A parameter set violates its documented invariants."""


class NonFiniteError(VcselEdgeError):
    """Integration produced a NaN or Inf state component.

    Usually signals a step size too large for the stiffest rate in the
    parameter set.  `time_ns` is the simulation time at which the failure
    was detected.
    """

    def __init__(self, message: str, time_ns: float | None = None):
        super().__init__(message)
        self.time_ns = time_ns


class NotLockedError(VcselEdgeError):
    """No injection-locked fixed point was reached within the search window."""


class EmptyImageError(VcselEdgeError, ValueError):
    """An image operation received an empty image."""


class ImageTooSmallError(VcselEdgeError, ValueError):
    """The source image is smaller than the kernel footprint."""


class UnknownKernelIdError(VcselEdgeError, ValueError):
    """Requested built-in kernel id is outside 1..8."""


class DimensionMismatchError(VcselEdgeError, ValueError):
    """Two maps that must share dimensions do not."""


class EmptyMapError(VcselEdgeError, ValueError):
    """The value map to encode has no cells."""


class EmptyWaveformError(VcselEdgeError, ValueError):
    """The injection waveform has zero duration."""


class OutOfRangeError(VcselEdgeError, ValueError):
    """A time lookup fell outside the waveform's domain."""


class ThresholdInsideNoiseBandError(VcselEdgeError, ValueError):
    """Spike threshold sits below the locked baseline's noise band."""


class SpikeOutOfRangeError(VcselEdgeError, ValueError):
    """A spike time cannot be attributed to any pixel slot."""


class NotASpikeError(VcselEdgeError, ValueError):
    """No intensity excursion above baseline at the requested time."""


class CalibrationFailedError(VcselEdgeError):
    """Calibration could not complete; `stage` names the failing step."""

    def __init__(self, message: str, stage: str):
        super().__init__(message)
        self.stage = stage
