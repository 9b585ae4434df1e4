"""Spiking VCSEL-neuron simulator for convolutional image edge detection.

Pipeline: binarize an image, convolve with a 2x2 kernel (or combine a
rotation pair into a gradient magnitude), serialize the value map onto a
time-multiplexed optical injection waveform, integrate the laser's
polarization-resolved rate equations, detect the excitable spikes the
drops fire, and bin them back into an edge map.
"""

from .encoding import EncodingParams, InjectionWaveform, encode
from .errors import (
    CalibrationFailedError,
    DimensionMismatchError,
    EmptyImageError,
    EmptyMapError,
    EmptyWaveformError,
    ImageTooSmallError,
    InvalidParamsError,
    NonFiniteError,
    NotASpikeError,
    NotLockedError,
    OutOfRangeError,
    SpikeOutOfRangeError,
    ThresholdInsideNoiseBandError,
    UnknownKernelIdError,
    VcselEdgeError,
)
from .imaging import (
    Kernel2x2,
    SignedImage,
    ValueMap,
    binarize,
    builtin_kernel,
    convolve2x2,
    gradient_magnitude,
    load_kernel_file,
)
from .pgm import read_pgm, write_pgm
from .pipeline import (
    CalibrationReport,
    RunConfig,
    calibrate,
    load_image,
    make_test_images,
    run_gradient,
    run_single_kernel,
    write_test_images,
)
from .sfm import (
    ConstantWaveform,
    NeuronState,
    SfmParams,
    Trajectory,
    corotating_derivative,
    detuning_angular,
    deterministic_derivative,
    find_locked_state,
    free_running_state,
    noise_increment,
    run,
    step,
)
from .spikes import ReconstructionMap, SpikeRaster, bin_spikes, detect, width_of

__version__ = "0.1.0"

__all__ = [
    "CalibrationFailedError", "CalibrationReport", "ConstantWaveform",
    "DimensionMismatchError", "EmptyImageError", "EmptyMapError",
    "EmptyWaveformError", "EncodingParams", "ImageTooSmallError",
    "InjectionWaveform", "InvalidParamsError", "Kernel2x2", "NeuronState",
    "NonFiniteError", "NotASpikeError", "NotLockedError", "OutOfRangeError",
    "ReconstructionMap", "RunConfig", "SfmParams", "SignedImage",
    "SpikeOutOfRangeError", "SpikeRaster", "ThresholdInsideNoiseBandError",
    "Trajectory", "UnknownKernelIdError", "ValueMap", "VcselEdgeError",
    "binarize", "bin_spikes", "builtin_kernel", "calibrate", "convolve2x2",
    "corotating_derivative", "detect", "detuning_angular",
    "deterministic_derivative", "encode", "find_locked_state",
    "free_running_state", "gradient_magnitude", "load_image", "load_kernel_file",
    "make_test_images", "noise_increment", "read_pgm", "run", "run_gradient",
    "run_single_kernel", "step", "width_of", "write_pgm", "write_test_images",
]
