"""Spike detection, slot binning and pulse-width measurement.

A spike is an upward crossing of the detection threshold; crossings
within the refractory window of the previous accepted spike are ignored.
Spike times map back to pixel slots purely by slot arithmetic: the
excitable response peaks well inside its own 1.5 ns slot (latency is
checked at calibration time), so no cross-slot latency shift is applied.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .encoding import InjectionWaveform
from .errors import (
    InvalidParamsError,
    NotASpikeError,
    OutOfRangeError,
    SpikeOutOfRangeError,
    ThresholdInsideNoiseBandError,
)
from .pgm import write_pgm
from .sfm import Trajectory

#: default refractory window, ns: shorter than the 1.5 ns slot rate (so
#: back-to-back targets are kept) but longer than post-spike ringing
DEFAULT_REFRACTORY = 1.2


@dataclass(frozen=True)
class SpikeRaster:
    """Sorted spike times plus the detection settings that produced them."""

    times: np.ndarray
    threshold: float
    refractory: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        if t.ndim != 1:
            raise InvalidParamsError("spike times must be a 1-d array")
        if t.size > 1:
            gaps = np.diff(t)
            if (gaps <= 0).any():
                raise InvalidParamsError("spike times must be strictly increasing")
            if (gaps < self.refractory - 1e-12).any():
                raise InvalidParamsError(
                    "spike spacing below the refractory window")
        object.__setattr__(self, "times", t)

    def __len__(self) -> int:
        return self.times.size

    def to_csv(self, path) -> None:
        np.savetxt(path, self.times[:, None], fmt="%.9g",
                   header="spike_t_ns", comments="")


@dataclass(frozen=True)
class ReconstructionMap:
    """Per-pixel spike counts over the value-map grid."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.size == 0:
            raise InvalidParamsError("counts must be a non-empty 2-d matrix")
        if (c < 0).any():
            raise InvalidParamsError("counts must be non-negative")
        object.__setattr__(self, "counts", c.astype(np.int64))

    @property
    def height(self) -> int:
        return self.counts.shape[0]

    @property
    def width(self) -> int:
        return self.counts.shape[1]

    def total(self) -> int:
        return int(self.counts.sum())

    def to_pgm(self, path) -> None:
        """Counts scaled onto [0, 255] (max count maps to 255)."""
        peak = self.counts.max()
        img = (self.counts * 255) // peak if peak > 0 else self.counts
        write_pgm(path, img, max_level=255)

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump({"height": self.height, "width": self.width,
                       "counts": self.counts.tolist()}, fh, indent=1)


def detect(traj: Trajectory, threshold: float, refractory: float = DEFAULT_REFRACTORY,
           observable: str = "total",
           baseline_window_ns: float | None = None) -> SpikeRaster:
    """Find threshold crossings in a trajectory.

    The spike time is the first sample at or above threshold of each
    upward crossing.  When `baseline_window_ns` is given, the threshold
    is validated against the 99.9th percentile of the observable over
    that initial window (it must sit above the locked noise band).
    """
    if refractory <= 0.0:
        raise InvalidParamsError("refractory must be > 0")
    sig = traj.observable(observable)
    t = traj.times
    if baseline_window_ns is not None:
        lead = sig[t < baseline_window_ns]
        if lead.size == 0:
            raise InvalidParamsError("baseline window contains no samples")
        band = float(np.percentile(lead, 99.9))
        if threshold <= band:
            raise ThresholdInsideNoiseBandError(
                f"threshold {threshold:.6g} is inside the locked noise band "
                f"(99.9th percentile {band:.6g})")

    above = sig >= threshold
    crossings = np.flatnonzero(above[1:] & ~above[:-1]) + 1
    kept = []
    last = -np.inf
    for i in crossings:
        if t[i] - last >= refractory:
            kept.append(t[i])
            last = t[i]
    return SpikeRaster(np.asarray(kept, dtype=np.float64),
                       threshold=threshold, refractory=refractory)


def bin_spikes(raster: SpikeRaster, wf: InjectionWaveform) -> ReconstructionMap:
    """Attribute each spike to the pixel slot containing its time."""
    counts = np.zeros(wf.shape, dtype=np.int64)
    for ts in raster.times:
        try:
            row, col, _ = wf.slot_of(float(ts))
        except OutOfRangeError as exc:
            raise SpikeOutOfRangeError(
                f"spike at {ts} ns falls outside the pixel slots") from exc
        counts[row, col] += 1
    return ReconstructionMap(counts)


def width_of(traj: Trajectory, spike_time: float, observable: str = "total",
             baseline: float | None = None) -> float:
    """Full width at half maximum of the excursion around `spike_time`.

    The peak is located within [spike_time − 0.3, spike_time + 0.7] ns
    (detection marks the rising edge, so the peak sits slightly later);
    half-level crossing times are linearly interpolated on both flanks.
    `baseline` defaults to the trace median.
    """
    sig = traj.observable(observable)
    t = traj.times
    if not t[0] <= spike_time <= t[-1]:
        raise NotASpikeError(f"time {spike_time} ns outside the trajectory")
    if baseline is None:
        baseline = float(np.median(sig))

    win = (t >= spike_time - 0.3) & (t <= spike_time + 0.7)
    idx = np.flatnonzero(win)
    ip = idx[np.argmax(sig[idx])]
    peak = sig[ip]
    if peak <= baseline:
        raise NotASpikeError(
            f"no excursion above baseline {baseline:.6g} near {spike_time} ns")
    half = baseline + 0.5 * (peak - baseline)

    i = ip
    while i > 0 and sig[i] >= half:
        i -= 1
    if sig[i] >= half:
        raise NotASpikeError("excursion does not fall to half level on the left")
    t_left = t[i] + (t[i + 1] - t[i]) * (half - sig[i]) / (sig[i + 1] - sig[i])

    j = ip
    n = sig.size
    while j < n - 1 and sig[j] >= half:
        j += 1
    if sig[j] >= half:
        raise NotASpikeError("excursion does not fall to half level on the right")
    t_right = t[j - 1] + (t[j] - t[j - 1]) * (half - sig[j - 1]) / (sig[j] - sig[j - 1])
    return float(t_right - t_left)
