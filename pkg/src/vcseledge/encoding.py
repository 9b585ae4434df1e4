"""Time-division-multiplexed injection waveform construction.

Each value-map cell occupies one `pixel_period` slot, serialized row-major
after a `lead_in` of plain baseline.  A slot starts with a held amplitude
``baseline * (1 - mod_depth * v / v_max)``, clamped to [0, 2*baseline],
for `pulse_hold` ns, then returns to baseline for the slot remainder
(return-to-zero scheme).  Positive values lower the injected amplitude
(which is what can break locking and fire a spike); negative values raise
it and deepen the lock.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyMapError, InvalidParamsError, OutOfRangeError
from .imaging import ValueMap


@dataclass(frozen=True)
class EncodingParams:
    """Waveform timing and modulation constants (times in ns)."""

    baseline: complex
    pixel_period: float = 1.5
    pulse_hold: float = 0.25
    mod_depth: float = 1.0
    v_max: float = 4.0
    lead_in: float = 20.0

    def __post_init__(self):
        if abs(self.baseline) == 0.0:
            raise InvalidParamsError("baseline amplitude must be nonzero")
        if self.pixel_period <= 0.0:
            raise InvalidParamsError("pixel_period must be > 0")
        if not 0.0 < self.pulse_hold < self.pixel_period:
            raise InvalidParamsError(
                "pulse_hold must lie strictly inside (0, pixel_period)")
        if not 0.0 <= self.mod_depth <= 1.0:
            raise InvalidParamsError("mod_depth must be in [0, 1]")
        if self.v_max <= 0.0:
            raise InvalidParamsError("v_max must be > 0")
        if self.lead_in < 0.0:
            raise InvalidParamsError("lead_in must be >= 0")


@dataclass(frozen=True)
class InjectionWaveform:
    """Piecewise-constant injected amplitude over [0, duration) ns.

    `seg_t0`/`seg_amp` list the segment start times and amplitudes
    (contiguous, covering the full span); `held` stores each slot's pulse
    amplitude for O(1) lookup.  Slot k covers
    [lead_in + k*pixel_period, lead_in + (k+1)*pixel_period).
    """

    ep: EncodingParams
    shape: tuple[int, int]
    held: np.ndarray
    seg_t0: np.ndarray = field(repr=False)
    seg_amp: np.ndarray = field(repr=False)
    duration: float

    @property
    def n_slots(self) -> int:
        return self.shape[0] * self.shape[1]

    def sample(self, t: float) -> complex:
        """Amplitude at time t in [0, duration)."""
        if not 0.0 <= t < self.duration:
            raise OutOfRangeError(
                f"t={t} outside the waveform span [0, {self.duration})")
        ep = self.ep
        if t < ep.lead_in:
            return complex(ep.baseline)
        k = int(math.floor((t - ep.lead_in) / ep.pixel_period))
        k = min(k, self.n_slots - 1)
        if t - (ep.lead_in + k * ep.pixel_period) < ep.pulse_hold:
            return complex(self.held[k])
        return complex(ep.baseline)

    def slot_of(self, t: float) -> tuple[int, int, int]:
        """(row, col, slot index) of the pixel slot containing time t."""
        if not self.ep.lead_in <= t < self.duration:
            raise OutOfRangeError(
                f"t={t} outside the pixel span "
                f"[{self.ep.lead_in}, {self.duration})")
        k = int(math.floor((t - self.ep.lead_in) / self.ep.pixel_period))
        k = min(k, self.n_slots - 1)
        return k // self.shape[1], k % self.shape[1], k

    def slot_start(self, k: int) -> float:
        if not 0 <= k < self.n_slots:
            raise OutOfRangeError(f"slot {k} outside 0..{self.n_slots - 1}")
        return self.ep.lead_in + k * self.ep.pixel_period

    def to_csv(self, path) -> None:
        """Write segment starts as (t_ns, amplitude magnitude) rows."""
        t = np.append(self.seg_t0, self.duration)
        a = np.abs(np.append(self.seg_amp, self.seg_amp[-1]))
        np.savetxt(path, np.column_stack([t, a]), fmt="%.9g", delimiter=",",
                   header="t_ns,amplitude_abs", comments="")


def encode(vmap: ValueMap, ep: EncodingParams) -> InjectionWaveform:
    """Serialize a value map into the injected-amplitude waveform."""
    vals = np.asarray(vmap.values, dtype=np.float64)
    if vals.size == 0:
        raise EmptyMapError("cannot encode an empty value map")
    flat = vals.ravel()
    base = complex(ep.baseline)
    factor = np.clip(1.0 - ep.mod_depth * flat / ep.v_max, 0.0, 2.0)
    held = base * factor

    # segment boundaries only where the amplitude actually changes
    t0 = [0.0]
    amp = [base]
    for k, h in enumerate(held):
        if h == base:
            continue
        start = ep.lead_in + k * ep.pixel_period
        t0 += [start, start + ep.pulse_hold]
        amp += [h, base]
    duration = ep.lead_in + flat.size * ep.pixel_period
    return InjectionWaveform(
        ep=ep, shape=vals.shape, held=held,
        seg_t0=np.asarray(t0), seg_amp=np.asarray(amp, dtype=np.complex128),
        duration=duration)
