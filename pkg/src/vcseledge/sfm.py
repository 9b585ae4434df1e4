"""Polarization-resolved rate-equation model of an injection-locked VCSEL neuron.

Four dynamical variables: the complex field amplitudes of the two
linear-orthogonally polarised cavity modes (`e_x` subsidiary, `e_y`
solitary), the total carrier inversion `n_total` and the spin inversion
difference `n_spin`.  An external optical field injected into the x mode
with angular detuning ``domega_x = 2*pi*delta_f + alpha*gamma_a - gamma_p``
locks the laser; sufficiently deep drops of the injected amplitude break
the lock and fire a short excitable intensity spike.

Two equivalent formulations appear here:

* :func:`deterministic_derivative` — the equations in the frame centred on
  the mean of the two mode frequencies, where the injection term carries
  the explicit ``exp(i*domega_x*t)`` phase factor.
* :func:`corotating_derivative` — the same equations referenced to the
  injected field (substitute ``E -> E*exp(-i*domega_x*t)``), which makes a
  locked state a genuine fixed point and is what the integrator advances.

All states handled by :func:`step`, :func:`run` and
:func:`find_locked_state` are co-rotating-frame states; mode intensities
are identical in both frames.

Integration: classical RK4 for the deterministic part plus one
Euler-Maruyama spontaneous-emission increment per step (sqrt(dt) scaling,
radicands evaluated at the pre-step carriers).  With `beta_sp = 0` the
scheme reduces to pure RK4.

Units: time in ns, rates in 1/ns, detuning `delta_f` in GHz (numerically
equal to 1/ns), fields dimensionless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from ._integrator import BLOCK_STEPS, STATUS_OK, rk4_block
from .errors import (
    EmptyWaveformError,
    InvalidParamsError,
    NonFiniteError,
    NotLockedError,
)

#: default integrator step, ns (0.1 ps); also the default step-size guard
DEFAULT_DT = 1e-4


@dataclass(frozen=True)
class SfmParams:
    """Laser, injection and noise constants.

    Defaults are the operating point used throughout: gain anisotropy
    2/ns, birefringence 128/ns, carrier decay 0.5/ns, spin-flip 110/ns,
    field decay 185/ns, linewidth enhancement 2, injection strength
    15/ns, spontaneous-emission strength 1e-5, detuning -4.58 GHz from
    the subsidiary mode, and a pump of 2.2 times threshold (the
    experimental bias ratio).
    """

    gamma_a: float = 2.0
    gamma_p: float = 128.0
    gamma_n: float = 0.5
    gamma_s: float = 110.0
    kappa: float = 185.0
    alpha: float = 2.0
    mu: float = 2.2
    k_inj: float = 15.0
    beta_sp: float = 1e-5
    delta_f: float = -4.58

    def __post_init__(self):
        for name in ("gamma_a", "gamma_p", "gamma_n", "gamma_s", "kappa", "k_inj"):
            if getattr(self, name) <= 0.0:
                raise InvalidParamsError(f"{name} must be strictly positive")
        if self.beta_sp < 0.0:
            raise InvalidParamsError("beta_sp must be >= 0")
        if self.mu <= 0.0:
            raise InvalidParamsError("mu must be > 0")

    def without_noise(self) -> "SfmParams":
        return replace(self, beta_sp=0.0)


@dataclass(frozen=True)
class NeuronState:
    """Instantaneous dynamical state (fields in the co-rotating frame)."""

    e_x: complex
    e_y: complex
    n_total: float
    n_spin: float

    @property
    def intensity_x(self) -> float:
        return abs(self.e_x) ** 2

    @property
    def intensity_y(self) -> float:
        return abs(self.e_y) ** 2

    def is_finite(self) -> bool:
        return all(np.isfinite(v) for v in
                   (self.e_x.real, self.e_x.imag, self.e_y.real,
                    self.e_y.imag, self.n_total, self.n_spin))


class StateDerivative(NamedTuple):
    """Time derivative of (e_x, e_y, n_total, n_spin)."""

    e_x: complex
    e_y: complex
    n_total: float
    n_spin: float


@dataclass(frozen=True)
class ConstantWaveform:
    """Constant injected amplitude over [0, duration) ns."""

    amplitude: complex
    duration: float
    seg_t0: np.ndarray = field(init=False, repr=False)
    seg_amp: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "seg_t0", np.zeros(1))
        object.__setattr__(self, "seg_amp",
                           np.array([self.amplitude], dtype=np.complex128))


@dataclass
class Trajectory:
    """Uniformly sampled mode-intensity time series.

    `times` are strictly increasing multiples of `sample_interval`;
    total intensity is the per-sample sum of the two mode intensities.
    `noise_clamps` counts spontaneous-emission radicands clamped at zero.
    """

    times: np.ndarray
    intensity_x: np.ndarray
    intensity_y: np.ndarray
    sample_interval: float
    duration: float
    carriers_total: np.ndarray | None = None
    carriers_spin: np.ndarray | None = None
    noise_clamps: int = 0
    final_state: "NeuronState | None" = None

    @property
    def total_intensity(self) -> np.ndarray:
        return self.intensity_x + self.intensity_y

    def observable(self, name: str = "total") -> np.ndarray:
        if name == "total":
            return self.total_intensity
        if name == "x":
            return self.intensity_x
        if name == "y":
            return self.intensity_y
        raise InvalidParamsError(f"unknown observable {name!r}")

    def to_csv(self, path) -> None:
        data = np.column_stack(
            [self.times, self.intensity_x, self.intensity_y, self.total_intensity])
        np.savetxt(path, data, fmt="%.9g", delimiter=",",
                   header="t_ns,intensity_x,intensity_y,intensity_total",
                   comments="")


def detuning_angular(params: SfmParams) -> float:
    """Angular detuning of the injected field from the frame centre, rad/ns."""
    return 2.0 * math.pi * params.delta_f + params.alpha * params.gamma_a - params.gamma_p


def free_running_state(params: SfmParams) -> NeuronState:
    """Analytic solitary-laser operating point (y mode lasing, x off).

    The y-mode phasor of this state rotates in either field frame; its
    intensity is stationary.
    """
    n0 = 1.0 - params.gamma_a / params.kappa
    iy = max(params.mu / n0 - 1.0, 0.0)
    return NeuronState(e_x=0.0 + 0.0j, e_y=complex(math.sqrt(iy), 0.0),
                       n_total=n0 if iy > 0.0 else params.mu, n_spin=0.0)


def deterministic_derivative(state: NeuronState, e_inj: complex, t: float,
                             params: SfmParams) -> StateDerivative:
    """Noise-free derivative in the frame centred between the two modes.

    The injected field enters the x-mode equation only, as
    ``k_inj * e_inj * exp(i*domega_x*t)``.
    """
    ga, gp = params.gamma_a, params.gamma_p
    gn, gs = params.gamma_n, params.gamma_s
    k, al = params.kappa, params.alpha
    ex, ey = state.e_x, state.e_y
    cn, cs = state.n_total, state.n_spin
    domega = detuning_angular(params)

    ix = abs(ex) ** 2
    iy = abs(ey) ** 2
    cross_im = (ey * np.conj(ex)).imag
    kca = k * (1.0 + 1j * al)

    dex = (-(k + ga) * ex - 1j * (k * al + gp) * ex
           + kca * (cn * ex + 1j * cs * ey)
           + params.k_inj * e_inj * np.exp(1j * domega * t))
    dey = (-(k - ga) * ey - 1j * (k * al - gp) * ey
           + kca * (cn * ey - 1j * cs * ex))
    dcn = -gn * (cn * (1.0 + ix + iy) - params.mu - 2.0 * cs * cross_im)
    dcs = -gs * cs - gn * (cs * (ix + iy) - 2.0 * cn * cross_im)
    return StateDerivative(dex, dey, dcn, dcs)


def corotating_derivative(state: NeuronState, e_inj: complex,
                          params: SfmParams) -> StateDerivative:
    """Noise-free derivative with fields referenced to the injected field.

    Equal to the centred-frame derivative conjugated by the phase
    rotation ``exp(-i*domega_x*t)`` plus ``-i*domega_x`` on each field;
    autonomous for constant `e_inj`.
    """
    domega = detuning_angular(params)
    dex, dey, dcn, dcs = deterministic_derivative(state, 0.0, 0.0, params)
    return StateDerivative(dex - 1j * domega * state.e_x + params.k_inj * e_inj,
                           dey - 1j * domega * state.e_y,
                           dcn, dcs)


def noise_increment(state: NeuronState, params: SfmParams, dt: float, rng,
                    size: int | None = None, diag: dict | None = None):
    """Spontaneous-emission field increments for one Euler-Maruyama step.

    Draws two independent complex Gaussians of unit variance per sample
    (four standard normals, consumed in the integrator's stream order)
    and returns (d e_x, d e_y) scaled by sqrt(dt).  Negative radicands
    N +/- n are clamped to zero and counted in ``diag['clamped']``.

    With `size` given, returns arrays of `size` independent increments.
    """
    if dt <= 0.0:
        raise InvalidParamsError("dt must be > 0")
    rng = as_rng(rng)
    if params.beta_sp == 0.0:
        if size is None:
            return 0.0 + 0.0j, 0.0 + 0.0j
        zeros = np.zeros(size, dtype=np.complex128)
        return zeros, zeros.copy()

    rp = state.n_total + state.n_spin
    rm = state.n_total - state.n_spin
    clamped = int(rp < 0.0) + int(rm < 0.0)
    if clamped and diag is not None:
        diag["clamped"] = diag.get("clamped", 0) + clamped
    sp = math.sqrt(max(rp, 0.0))
    sm = math.sqrt(max(rm, 0.0))
    amp = math.sqrt(params.beta_sp * params.gamma_n * 0.5 * dt) / math.sqrt(2.0)

    g = rng.standard_normal((1 if size is None else size, 4))
    xi1 = g[:, 0] + 1j * g[:, 1]
    xi2 = g[:, 2] + 1j * g[:, 3]
    fx = amp * (sp * xi1 + sm * xi2)
    fy = -1j * amp * (sp * xi1 - sm * xi2)
    if size is None:
        return complex(fx[0]), complex(fy[0])
    return fx, fy


def as_rng(rng) -> np.random.Generator:
    """Accept a Generator, a seed, or None (fresh unseeded generator)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _params_vector(params: SfmParams) -> np.ndarray:
    return np.array([params.gamma_a, params.gamma_p, params.gamma_n,
                     params.gamma_s, params.kappa, params.alpha, params.mu,
                     params.k_inj, params.beta_sp, detuning_angular(params)])


_EMPTY_NOISE = np.zeros((0, 4))
_EMPTY_REC = np.zeros(0)


def step(state: NeuronState, waveform, t: float, dt: float, params: SfmParams,
         rng=None, dt_max: float = DEFAULT_DT) -> NeuronState:
    """Advance one RK4 + noise step from time `t`.

    The waveform is sampled at t, t+dt/2 and t+dt.  Raises NonFiniteError
    if the step leaves the finite range (dt too large).
    """
    if dt <= 0.0:
        raise InvalidParamsError("dt must be > 0")
    if dt > dt_max:
        raise InvalidParamsError(f"dt={dt} exceeds dt_max={dt_max}")
    if params.beta_sp > 0.0:
        if rng is None:
            raise InvalidParamsError("a seeded rng is required when beta_sp > 0")
        noise = as_rng(rng).standard_normal((1, 4))
    else:
        noise = _EMPTY_NOISE

    seg_idx = int(np.searchsorted(waveform.seg_t0, t, side="right") - 1)
    seg_idx = max(seg_idx, 0)
    # t enters the kernel through gstep0=0 with a time offset folded into
    # the segment table; constant-in-segment sampling only needs seg_idx
    # hints relative to t, so shift the table instead of the clock.
    seg_t0 = waveform.seg_t0 - t
    ex, ey, cn, cs, _, _, status, _ = rk4_block(
        complex(state.e_x), complex(state.e_y),
        float(state.n_total), float(state.n_spin),
        0, 1, float(dt), seg_t0, waveform.seg_amp, seg_idx,
        _params_vector(params), noise,
        _EMPTY_REC, _EMPTY_REC, _EMPTY_REC, _EMPTY_REC, 2)
    out = NeuronState(ex, ey, cn, cs)
    if status != STATUS_OK or not out.is_finite():
        raise NonFiniteError("state left the finite range after one step "
                             "(dt too large)", time_ns=t + dt)
    return out


def run(initial: NeuronState, waveform, params: SfmParams, dt: float = DEFAULT_DT,
        sample_every: int = 50, rng=None, *, record_carriers: bool = False,
        dt_max: float = DEFAULT_DT) -> Trajectory:
    """Integrate over the full waveform and record every `sample_every`-th step.

    Identical seeds and inputs give bit-identical trajectories; noise is
    consumed in fixed blocks so the block size never affects results.
    """
    duration = float(waveform.duration)
    if duration <= 0.0:
        raise EmptyWaveformError("waveform duration must be > 0")
    if dt <= 0.0:
        raise InvalidParamsError("dt must be > 0")
    if dt > dt_max:
        raise InvalidParamsError(f"dt={dt} exceeds dt_max={dt_max}")
    if sample_every < 1:
        raise InvalidParamsError("sample_every must be >= 1")

    total = int(round(duration / dt))
    if total == 0:
        raise EmptyWaveformError("waveform shorter than one step")
    use_noise = params.beta_sp > 0.0
    if use_noise and rng is None:
        raise InvalidParamsError("a seeded rng is required when beta_sp > 0")
    rng = as_rng(rng)

    nsamp = total // sample_every + 1
    rec_ix = np.empty(nsamp)
    rec_iy = np.empty(nsamp)
    rec_cn = np.empty(nsamp) if record_carriers else _EMPTY_REC
    rec_cs = np.empty(nsamp) if record_carriers else _EMPTY_REC

    pvec = _params_vector(params)
    seg_t0 = np.ascontiguousarray(waveform.seg_t0, dtype=np.float64)
    seg_amp = np.ascontiguousarray(waveform.seg_amp, dtype=np.complex128)

    ex, ey = complex(initial.e_x), complex(initial.e_y)
    cn, cs = float(initial.n_total), float(initial.n_spin)
    seg_idx = 0
    clamps = 0
    gstep = 0
    while gstep < total:
        n = min(BLOCK_STEPS, total - gstep)
        noise = rng.standard_normal((n, 4)) if use_noise else _EMPTY_NOISE
        ex, ey, cn, cs, seg_idx, c, status, fail = rk4_block(
            ex, ey, cn, cs, gstep, n, float(dt), seg_t0, seg_amp, seg_idx,
            pvec, noise, rec_ix, rec_iy, rec_cn, rec_cs, sample_every)
        clamps += c
        if status != STATUS_OK:
            raise NonFiniteError(
                "integration diverged (dt too large for the stiffest rate)",
                time_ns=fail * dt)
        gstep += n

    if total % sample_every == 0:
        rec_ix[-1] = abs(ex) ** 2
        rec_iy[-1] = abs(ey) ** 2
        if record_carriers:
            rec_cn[-1] = cn
            rec_cs[-1] = cs
    final = NeuronState(ex, ey, cn, cs)
    if not final.is_finite():
        raise NonFiniteError("final state not finite", time_ns=duration)

    traj = Trajectory(
        times=np.arange(nsamp) * (sample_every * dt),
        intensity_x=rec_ix, intensity_y=rec_iy,
        sample_interval=sample_every * dt, duration=total * dt,
        carriers_total=rec_cn if record_carriers else None,
        carriers_spin=rec_cs if record_carriers else None,
        noise_clamps=int(clamps), final_state=final)
    return traj


def find_locked_state(params: SfmParams, baseline: complex, *,
                      dt: float = DEFAULT_DT, max_ns: float = 200.0,
                      drift_tol: float = 1e-10) -> NeuronState:
    """Relax to the injection-locked fixed point under constant injection.

    Integrates the noise-free equations from the free-running state until
    the state change per ns (the co-rotating derivative, max-norm) falls
    below `drift_tol`.  Raises NotLockedError if that never happens within
    `max_ns`, or if the converged point is not x-mode dominant.
    """
    quiet = params.without_noise()
    pvec = _params_vector(quiet)
    wf = ConstantWaveform(complex(baseline), max_ns)
    chunk = max(int(round(1.0 / dt)), 1)
    total = int(round(max_ns / dt))

    state = free_running_state(params)
    ex, ey = complex(state.e_x), complex(state.e_y)
    cn, cs = state.n_total, state.n_spin
    gstep = 0
    while gstep < total:
        n = min(chunk, total - gstep)
        ex, ey, cn, cs, _, _, status, fail = rk4_block(
            ex, ey, cn, cs, gstep, n, float(dt), wf.seg_t0, wf.seg_amp, 0,
            pvec, _EMPTY_NOISE, _EMPTY_REC, _EMPTY_REC, _EMPTY_REC,
            _EMPTY_REC, total + 1)
        if status != STATUS_OK:
            raise NonFiniteError("relaxation diverged", time_ns=fail * dt)
        gstep += n
        cand = NeuronState(ex, ey, cn, cs)
        d = corotating_derivative(cand, baseline, quiet)
        drift = max(abs(d.e_x), abs(d.e_y), abs(d.n_total), abs(d.n_spin))
        if drift < drift_tol:
            if cand.intensity_x > cand.intensity_y:
                return cand
            raise NotLockedError(
                "converged to a fixed point without x-mode dominance")
    raise NotLockedError(
        f"no fixed point within {max_ns} ns (baseline outside locking range)")
