import numpy as np
import pytest

from vcseledge import (
    EmptyMapError,
    EncodingParams,
    InvalidParamsError,
    OutOfRangeError,
    ValueMap,
    encode,
)

BASE = 3.0


def ep(**kw):
    return EncodingParams(baseline=BASE, **kw)


@pytest.mark.parametrize("bad", [
    dict(pulse_hold=0.0), dict(pulse_hold=1.5), dict(pulse_hold=2.0),
    dict(pixel_period=0.0), dict(mod_depth=-0.1), dict(mod_depth=1.5),
    dict(v_max=0.0), dict(lead_in=-1.0),
])
def test_params_validation(bad):
    with pytest.raises(InvalidParamsError):
        ep(**bad)


def test_zero_baseline_rejected():
    with pytest.raises(InvalidParamsError):
        EncodingParams(baseline=0.0)


def test_zero_map_gives_constant_baseline():
    wf = encode(ValueMap(np.zeros((3, 4))), ep())
    assert wf.duration == pytest.approx(20.0 + 12 * 1.5)
    for t in (0.0, 10.0, 20.1, 25.0, wf.duration - 1e-9):
        assert wf.sample(t) == BASE
    assert wf.seg_t0.size == 1  # no amplitude changes at all


def test_full_drop_pixel():
    wf = encode(ValueMap(np.array([[4.0]])), ep())
    assert wf.sample(20.0) == 0.0
    assert wf.sample(20.2499) == 0.0
    assert wf.sample(20.25) == BASE
    assert wf.sample(19.999) == BASE
    assert wf.duration == pytest.approx(21.5)


def test_28x28_source_duration():
    # a 28x28 source gives a 27x27 map
    wf = encode(ValueMap(np.zeros((27, 27))), ep())
    assert wf.duration == pytest.approx(20.0 + 729 * 1.5)
    assert wf.n_slots == 729


def test_modulation_formula_and_clamps():
    vals = np.array([[4.0, 2.0, 0.0, -2.0, -4.0, 8.0]])
    wf = encode(ValueMap(vals), ep())
    starts = [20.0 + 1.5 * k for k in range(6)]
    expect = [0.0, BASE * 0.5, BASE, BASE * 1.5, BASE * 2.0, 0.0]
    for s, e in zip(starts, expect):
        assert wf.sample(s + 0.1) == pytest.approx(e)
        assert wf.sample(s + 0.25) == BASE  # RZ return

    half = encode(ValueMap(vals), ep(mod_depth=0.5))
    assert half.sample(starts[0] + 0.1) == pytest.approx(BASE * 0.5)
    assert half.sample(starts[4] + 0.1) == pytest.approx(BASE * 1.5)


def test_monotone_mapping():
    vs = np.array([[0.0, 1.0, 2.0, 3.0, 4.0]])
    wf = encode(ValueMap(vs), ep())
    held = [abs(wf.sample(20.0 + 1.5 * k + 0.01)) for k in range(5)]
    assert all(a >= b for a, b in zip(held, held[1:]))


def test_slot_roundtrip_and_mapping():
    rng = np.random.default_rng(0)
    wf = encode(ValueMap(rng.integers(-4, 5, size=(5, 7)).astype(float)), ep())
    assert wf.slot_of(20.0) == (0, 0, 0)
    for k in (0, 3, 17, 34):
        for eps in (0.0, 0.2, 1.4999):
            row, col, slot = wf.slot_of(20.0 + 1.5 * k + eps)
            assert slot == k
            assert (row, col) == (k // 7, k % 7)
        assert wf.slot_start(k) == pytest.approx(20.0 + 1.5 * k)


def test_rz_property_every_slot():
    rng = np.random.default_rng(1)
    wf = encode(ValueMap(rng.integers(-4, 5, size=(4, 4)).astype(float)), ep())
    for k in range(wf.n_slots):
        s = wf.slot_start(k)
        for eps in (0.0, 0.3, 1.24):
            assert wf.sample(s + 0.25 + eps) == BASE


def test_out_of_range_lookups():
    wf = encode(ValueMap(np.zeros((2, 2))), ep())
    with pytest.raises(OutOfRangeError):
        wf.sample(-0.001)
    with pytest.raises(OutOfRangeError):
        wf.sample(wf.duration)
    with pytest.raises(OutOfRangeError):
        wf.slot_of(19.999)  # inside lead-in
    with pytest.raises(OutOfRangeError):
        wf.slot_of(wf.duration)
    with pytest.raises(OutOfRangeError):
        wf.slot_start(4)


def test_empty_map_rejected():
    class Stub:
        values = np.zeros((0, 3))

    with pytest.raises(EmptyMapError):
        encode(Stub(), ep())


def test_segments_cover_span_contiguously():
    vals = np.array([[4.0, 0.0, -2.0]])
    wf = encode(ValueMap(vals), ep())
    assert wf.seg_t0[0] == 0.0
    assert np.all(np.diff(wf.seg_t0) > 0)
    assert wf.seg_t0[-1] < wf.duration
    # piecewise lookup agrees with sample() on a fine grid
    ts = np.arange(0.0, wf.duration, 0.01)
    idx = np.searchsorted(wf.seg_t0, ts, side="right") - 1
    assert all(wf.sample(t) == wf.seg_amp[i] for t, i in zip(ts, idx))


def test_waveform_csv(tmp_path):
    wf = encode(ValueMap(np.array([[4.0, -4.0]])), ep())
    path = tmp_path / "wf.csv"
    wf.to_csv(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape[1] == 2
    assert data[0, 0] == 0.0
    assert data[-1, 0] == pytest.approx(wf.duration)
    assert data[:, 1].min() == 0.0 and data[:, 1].max() == pytest.approx(2 * BASE)
