"""Signed-image conversion, 2x2 kernel convolution and gradient magnitude.

Images are matrices over {+1, -1} (+1 black, -1 white).  Convolution with
a 2x2 kernel shrinks each axis by one (no padding).  For +/-1 images and
+/-1-entry kernels the result alphabet is {0, +/-2, +/-4}; magnitudes of
rotation-paired kernel outputs land in {0, 2*sqrt(2), 4}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyImageError,
    ImageTooSmallError,
    InvalidParamsError,
    UnknownKernelIdError,
)


@dataclass(frozen=True)
class SignedImage:
    """Binary image with entries exactly +1 (black) or -1 (white)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2 or v.size == 0:
            raise EmptyImageError("image must be a non-empty 2-d matrix")
        if not np.isin(v, (-1, 1)).all():
            raise InvalidParamsError("image entries must be +1 or -1")
        object.__setattr__(self, "values", v.astype(np.int64))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def inverted(self) -> "SignedImage":
        return SignedImage(-self.values)


@dataclass(frozen=True)
class Kernel2x2:
    """2x2 integer convolution kernel, optionally one of the built-in ids."""

    values: np.ndarray
    id: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (2, 2):
            raise InvalidParamsError("kernel must be exactly 2x2")
        object.__setattr__(self, "values", v.astype(np.int64))

    def negated(self) -> "Kernel2x2":
        return Kernel2x2(-self.values)


@dataclass(frozen=True)
class ValueMap:
    """Convolution output grid; `kind` is 'kernel' or 'gradient'."""

    values: np.ndarray
    kind: str = "kernel"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.size == 0:
            raise EmptyImageError("value map must be a non-empty 2-d matrix")
        if self.kind not in ("kernel", "gradient"):
            raise InvalidParamsError(f"unknown map kind {self.kind!r}")
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


# Vertical edge detectors (1: white->black, 2: black->white), their 90 deg
# rotations (3, 4), and the Roberts-style diagonal pairs (5..8).
_BUILTIN = {
    1: np.array([[-1, 1], [-1, 1]]),
    2: np.array([[1, -1], [1, -1]]),
    3: np.array([[-1, -1], [1, 1]]),
    4: np.array([[1, 1], [-1, -1]]),
    5: np.array([[1, 0], [0, -1]]),
    6: np.array([[0, 1], [-1, 0]]),
    7: np.array([[-1, 0], [0, 1]]),
    8: np.array([[0, -1], [1, 0]]),
}

#: kernel pairs whose members are 90 degree rotations of one another,
#: usable for gradient magnitude
ROTATION_PAIRS = {(1, 3), (3, 1), (2, 4), (4, 2), (5, 6), (6, 5), (7, 8), (8, 7)}


def builtin_kernel(kid: int) -> Kernel2x2:
    """Return built-in kernel 1..8."""
    if kid not in _BUILTIN:
        raise UnknownKernelIdError(f"kernel id must be 1..8, got {kid!r}")
    return Kernel2x2(_BUILTIN[kid].copy(), id=kid)


def load_kernel_file(path) -> Kernel2x2:
    """Load a 2x2 kernel from a whitespace-separated text file."""
    try:
        v = np.loadtxt(path, dtype=np.int64, ndmin=2)
    except ValueError as exc:
        raise InvalidParamsError(f"unreadable kernel file {path}: {exc}") from exc
    if v.shape != (2, 2):
        raise InvalidParamsError(
            f"kernel file {path} must hold a 2x2 matrix, got shape {v.shape}")
    return Kernel2x2(v)


def binarize(gray: np.ndarray, threshold: float | None = None,
             max_level: int = 255) -> SignedImage:
    """Threshold a grayscale image to {+1 black, -1 white}.

    Levels strictly below `threshold` (default: midpoint of [0, max_level])
    map to +1, the rest to -1.
    """
    g = np.asarray(gray)
    if g.ndim != 2 or g.size == 0:
        raise EmptyImageError("grayscale input must be a non-empty 2-d matrix")
    if max_level <= 0:
        raise InvalidParamsError("max_level must be positive")
    if threshold is None:
        threshold = max_level / 2.0
    if not 0 <= threshold <= max_level:
        raise InvalidParamsError(
            f"threshold {threshold} outside level range [0, {max_level}]")
    return SignedImage(np.where(g < threshold, 1, -1))


def convolve2x2(img: SignedImage, kernel: Kernel2x2) -> ValueMap:
    """Valid-mode 2x2 convolution: out[p,q] = sum_mn img[p+m,q+n]*K[m,n]."""
    f = img.values
    if f.shape[0] < 2 or f.shape[1] < 2:
        raise ImageTooSmallError(
            f"image {f.shape} smaller than the 2x2 kernel footprint")
    k = kernel.values
    out = (k[0, 0] * f[:-1, :-1] + k[0, 1] * f[:-1, 1:]
           + k[1, 0] * f[1:, :-1] + k[1, 1] * f[1:, 1:])
    return ValueMap(out.astype(np.float64), kind="kernel")


def gradient_magnitude(gx: ValueMap, gy: ValueMap) -> ValueMap:
    """Element-wise sqrt(gx^2 + gy^2) of two equally shaped maps."""
    if gx.values.shape != gy.values.shape:
        raise DimensionMismatchError(
            f"map shapes differ: {gx.values.shape} vs {gy.values.shape}")
    return ValueMap(np.hypot(gx.values, gy.values), kind="gradient")
