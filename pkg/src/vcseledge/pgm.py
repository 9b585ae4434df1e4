"""Minimal portable graymap (PGM) reader and writer, P2 and P5 variants."""

from __future__ import annotations

import numpy as np

from .errors import InvalidParamsError


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Read a P2 (ASCII) or P5 (binary) PGM file.

    Returns (pixels, max_level) with pixels shaped (height, width).
    """
    with open(path, "rb") as fh:
        data = fh.read()

    def tokens():
        i = 0
        n = len(data)
        while i < n:
            c = data[i:i + 1]
            if c.isspace():
                i += 1
            elif c == b"#":
                while i < n and data[i:i + 1] != b"\n":
                    i += 1
            else:
                j = i
                while j < n and not data[j:j + 1].isspace():
                    j += 1
                yield i, data[i:j]
                i = j

    it = tokens()
    try:
        _, magic = next(it)
        head = [next(it) for _ in range(3)]
    except StopIteration:
        raise InvalidParamsError(f"{path}: truncated PGM header") from None
    if magic not in (b"P2", b"P5"):
        raise InvalidParamsError(f"{path}: not a PGM file (magic {magic!r})")
    width, height, maxval = (int(tok) for _, tok in head)
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise InvalidParamsError(f"{path}: bad PGM dimensions or maxval")

    count = width * height
    if magic == b"P2":
        vals = []
        for _, tok in it:
            vals.append(int(tok))
            if len(vals) == count:
                break
        if len(vals) != count:
            raise InvalidParamsError(f"{path}: expected {count} samples")
        img = np.array(vals, dtype=np.int64)
    else:
        # raster starts one whitespace byte after maxval
        pos = head[2][0] + len(head[2][1]) + 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raster = data[pos:pos + count * dtype.itemsize]
        if len(raster) != count * dtype.itemsize:
            raise InvalidParamsError(f"{path}: truncated P5 raster")
        img = np.frombuffer(raster, dtype=dtype).astype(np.int64)

    if img.min() < 0 or img.max() > maxval:
        raise InvalidParamsError(f"{path}: sample outside [0, {maxval}]")
    return img.reshape(height, width), maxval


def write_pgm(path, pixels: np.ndarray, max_level: int = 255,
              binary: bool = True) -> None:
    """Write integer pixels in [0, max_level] as P5 (or P2 if binary=False)."""
    img = np.asarray(pixels)
    if img.ndim != 2 or img.size == 0:
        raise InvalidParamsError("pixels must be a non-empty 2-d matrix")
    if not 0 < max_level < 65536:
        raise InvalidParamsError("max_level must be in 1..65535")
    if img.min() < 0 or img.max() > max_level:
        raise InvalidParamsError(f"pixel values outside [0, {max_level}]")
    h, w = img.shape
    if binary:
        dtype = np.dtype(">u2") if max_level > 255 else np.dtype("u1")
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n{max_level}\n".encode())
            fh.write(img.astype(dtype).tobytes())
    else:
        with open(path, "w") as fh:
            fh.write(f"P2\n{w} {h}\n{max_level}\n")
            for row in img:
                fh.write(" ".join(str(int(v)) for v in row) + "\n")
