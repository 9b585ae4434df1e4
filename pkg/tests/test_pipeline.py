import dataclasses
import json
import math

import numpy as np
import pytest

from vcseledge import (
    CalibrationFailedError,
    CalibrationReport,
    InvalidParamsError,
    RunConfig,
    SfmParams,
    SignedImage,
    builtin_kernel,
    calibrate,
    convolve2x2,
    gradient_magnitude,
    load_image,
    make_test_images,
    run_gradient,
    run_single_kernel,
    write_pgm,
)
from vcseledge.cli import main as cli_main
from vcseledge.imaging import ROTATION_PAIRS

SQRT8 = math.sqrt(8.0)


def write_signed_pgm(path, values):
    # +1 (foreground) maps to level 0, matching the fixture convention
    write_pgm(path, np.where(values > 0, 0, 255), max_level=255)


def split_image_6x6():
    vals = -np.ones((6, 6), dtype=np.int64)
    vals[:, 3:] = 1
    return vals


# ------------------------------------------------------------- RunConfig

def test_runconfig_defaults_to_gradient_mode():
    assert RunConfig(image="x.pgm").gradient == (1, 3)


def test_runconfig_rejects_multiple_selections():
    with pytest.raises(InvalidParamsError):
        RunConfig(image="x.pgm", kernel_id=1, gradient=(1, 3))
    with pytest.raises(InvalidParamsError):
        RunConfig(image="x.pgm", kernel_id=1, kernel_file="k.txt")


def test_runconfig_rejects_non_rotation_pair():
    with pytest.raises(InvalidParamsError):
        RunConfig(image="x.pgm", gradient=(1, 4))


def test_runconfig_accepts_every_rotation_pair():
    for pair in sorted(ROTATION_PAIRS):
        assert RunConfig(image="x.pgm", gradient=pair).gradient == pair


def test_run_mode_guards():
    with pytest.raises(InvalidParamsError):
        run_single_kernel(RunConfig(image="x.pgm"))
    with pytest.raises(InvalidParamsError):
        run_gradient(RunConfig(image="x.pgm", kernel_id=1))


# ----------------------------------------------------- CalibrationReport

def synthetic_report():
    return CalibrationReport(
        params=SfmParams(), scan_amplitudes=[0.1, 1.0, 10.0],
        scan_locked=[False, True, True],
        scan_intensity=[float("nan"), 1.5, 14.0], locking_edge=0.95,
        baseline=3.1, mod_depth=1.0, threshold=4.8, latency_ns=0.3,
        fwhm_ns=0.08, passed=True, probe_peaks={"4.0": [6.5, 6.4]},
        seeds=[0, 1], dt=1e-4, fire_min=5.1, silent_max=4.6,
        trigger_value=2.41)


def test_report_json_roundtrip(tmp_path):
    rep = synthetic_report()
    path = tmp_path / "cal.json"
    rep.save(path)
    back = CalibrationReport.load(path)
    assert back.params == rep.params
    a, b = dataclasses.asdict(rep), dataclasses.asdict(back)
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_report_encoding_params():
    ep = synthetic_report().encoding_params()
    assert ep.baseline == complex(3.1)
    assert ep.mod_depth == 1.0
    assert (ep.pixel_period, ep.pulse_hold, ep.lead_in, ep.v_max) == (1.5, 0.25, 20.0, 4.0)


def test_calibrated_operating_point(report):
    assert report.passed
    assert report.silent_max < report.threshold < report.fire_min
    assert report.fire_min > 1.02 * report.silent_max
    assert 2.0 < report.trigger_value < SQRT8
    assert report.locking_edge <= report.baseline <= 10.0
    assert 0.0 < report.latency_ns < report.pixel_period - report.pulse_hold
    assert 0.0 < report.fwhm_ns < 0.15
    assert set(report.probe_peaks) == {"4.0", str(SQRT8), "2.0", "-2.0", "-4.0"}
    assert len(report.seeds) == 10


def test_calibration_scan_shows_contiguous_plateau(report):
    n = len(report.scan_amplitudes)
    assert len(report.scan_locked) == n and len(report.scan_intensity) == n
    # unlocked below the edge, locked from there up to the scan top
    assert report.scan_locked == sorted(report.scan_locked)
    assert any(report.scan_locked)
    for amp, ok, inten in zip(report.scan_amplitudes, report.scan_locked,
                              report.scan_intensity):
        if ok:
            assert amp >= report.locking_edge * 0.999
            assert inten > 0
        else:
            assert math.isnan(inten)


def test_noiseless_calibration_is_seed_independent():
    rep = calibrate(SfmParams(beta_sp=0.0), seeds=(0, 1), n_scan=5)
    assert rep.passed
    for peaks in rep.probe_peaks.values():
        assert peaks[0] == peaks[1]


def test_calibration_fails_at_locking_stage_when_far_detuned():
    with pytest.raises(CalibrationFailedError) as ei:
        calibrate(SfmParams(delta_f=-40.0), seeds=(0,), n_scan=5)
    assert ei.value.stage == "locking"


def test_calibration_fails_when_injection_too_weak():
    with pytest.raises(CalibrationFailedError) as ei:
        calibrate(seeds=(0,), amp_min=1e-6, amp_max=1e-4, n_scan=2)
    assert ei.value.stage == "locking"


# ------------------------------------------------------------- fixtures

def test_fixture_images_shapes_and_binarity():
    imgs = make_test_images()
    assert imgs["cross"].values.shape == (28, 28)
    assert imgs["saltire"].values.shape == (28, 28)
    assert imgs["rings50"].values.shape == (50, 50)
    for img in imgs.values():
        assert set(np.unique(img.values)) == {-1, 1}


def test_cross_fixture_four_fold_symmetry():
    cross = make_test_images()["cross"].values
    assert np.array_equal(cross, np.rot90(cross))


def test_saltire_fixture_diagonal_mirror_symmetry():
    sal = make_test_images()["saltire"].values
    assert np.array_equal(sal, sal.T)
    assert np.array_equal(sal, np.rot90(sal))


def test_fixture_pgm_roundtrip(fixture_paths):
    imgs = make_test_images()
    assert set(fixture_paths) == set(imgs)
    for name, path in fixture_paths.items():
        assert np.array_equal(load_image(path).values, imgs[name].values)


# ------------------------------------------------------------ end-to-end

def test_blank_image_yields_no_spikes(report, tmp_path):
    path = tmp_path / "blank.pgm"
    write_pgm(path, np.full((6, 6), 255), max_level=255)
    traj, raster, rmap = run_single_kernel(
        RunConfig(image=path, kernel_id=1, seed=3), report)
    assert len(raster) == 0
    assert rmap.total() == 0
    assert rmap.counts.shape == (5, 5)
    assert traj.duration == pytest.approx(20.0 + 25 * 1.5)


def test_end_to_end_matches_convolution_oracle(report, tmp_path):
    """Master property: spikes land exactly where the encoded value
    reaches the calibrated trigger level, with no slot firing twice."""
    rng = np.random.default_rng(2026)
    modes = [1, 2, 3, 4, 5, 6, 7, 8, (1, 3), (2, 4), (5, 6), (7, 8)]
    for i in range(20):
        img_vals = rng.choice([-1, 1], size=(10, 10))
        path = tmp_path / f"img{i}.pgm"
        write_signed_pgm(path, img_vals)
        mode = modes[i % len(modes)]
        img = SignedImage(img_vals)
        if isinstance(mode, tuple):
            vals = gradient_magnitude(
                convolve2x2(img, builtin_kernel(mode[0])),
                convolve2x2(img, builtin_kernel(mode[1]))).values
            _, raster, rmap = run_gradient(
                RunConfig(image=path, gradient=mode, seed=100 + i), report)
        else:
            vals = convolve2x2(img, builtin_kernel(mode)).values
            _, raster, rmap = run_single_kernel(
                RunConfig(image=path, kernel_id=mode, seed=100 + i), report)
        want = (vals >= report.trigger_value).astype(np.int64)
        assert np.array_equal(rmap.counts, want), f"image {i}, mode {mode}"
        assert rmap.counts.max() <= 1
        assert rmap.total() == len(raster)


def test_manifest_rerun_is_bit_identical(report, tmp_path):
    img_path = tmp_path / "split.pgm"
    write_signed_pgm(img_path, split_image_6x6())
    out1 = tmp_path / "run1"
    cfg = RunConfig(image=img_path, kernel_id=1, seed=7, outdir=out1)
    _, raster1, rmap1 = run_single_kernel(cfg, report)
    assert len(raster1) == 5  # one white-to-black column edge per row

    for name in ("trace.csv", "spikes.csv", "waveform.csv", "map.pgm",
                 "map.json", "manifest.json"):
        assert (out1 / name).exists()

    with open(out1 / "manifest.json") as fh:
        man = json.load(fh)
    assert man["status"] == "ok"
    assert man["mode"] == "single"
    assert man["n_spikes"] == len(raster1)
    assert man["threshold"] == report.threshold

    out2 = tmp_path / "run2"
    cfg2 = RunConfig(
        image=man["image"], kernel_id=man["kernel_id"],
        kernel_file=man["kernel_file"],
        gradient=tuple(man["gradient"]) if man["gradient"] else None,
        params=SfmParams(**man["params"]), pixel_period=man["pixel_period"],
        pulse_hold=man["pulse_hold"], lead_in=man["lead_in"], dt=man["dt"],
        sample_every=man["sample_every"], seed=man["seed"], outdir=out2)
    _, raster2, rmap2 = run_single_kernel(cfg2, report)

    assert np.array_equal(raster1.times, raster2.times)
    assert np.array_equal(rmap1.counts, rmap2.counts)
    for name in ("trace.csv", "spikes.csv", "waveform.csv", "map.pgm", "map.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_manifest_written_on_failure(report, tmp_path):
    out = tmp_path / "bad"
    cfg = RunConfig(image=tmp_path / "missing.pgm", kernel_id=1, outdir=out)
    with pytest.raises(Exception):
        run_single_kernel(cfg, report)
    with open(out / "manifest.json") as fh:
        man = json.load(fh)
    assert man["status"] == "error"
    assert man["error"]


# -------------------------------------------------------------------- CLI

def test_cli_fixtures(tmp_path):
    fx = tmp_path / "fx"
    assert cli_main(["fixtures", "--out", str(fx)]) == 0
    for name in ("cross", "saltire", "rings50"):
        assert (fx / f"{name}.pgm").exists()


def test_cli_run_and_trace(report, tmp_path, capsys):
    cal = tmp_path / "cal.json"
    report.save(cal)
    img = tmp_path / "small.pgm"
    write_signed_pgm(img, split_image_6x6())

    out = tmp_path / "cliout"
    rc = cli_main(["run", "--image", str(img), "--kernel", "1",
                   "--calibration", str(cal), "--seed", "2", "--out", str(out)])
    assert rc == 0
    assert (out / "map.pgm").exists() and (out / "manifest.json").exists()
    assert "spikes" in capsys.readouterr().out

    png = tmp_path / "trace.png"
    rc = cli_main(["trace", "--in", str(out), "--window", "20,30",
                   "--out", str(png)])
    assert rc == 0
    assert png.stat().st_size > 0


def test_cli_gradient_and_kernel_file(report, tmp_path):
    cal = tmp_path / "cal.json"
    report.save(cal)
    img = tmp_path / "small.pgm"
    write_signed_pgm(img, split_image_6x6())

    rc = cli_main(["run", "--image", str(img), "--gradient", "1,3",
                   "--calibration", str(cal), "--out", str(tmp_path / "g")])
    assert rc == 0
    with open(tmp_path / "g" / "manifest.json") as fh:
        assert json.load(fh)["mode"] == "gradient"

    kfile = tmp_path / "k.txt"
    kfile.write_text("-1 1\n-1 1\n")
    rc = cli_main(["run", "--image", str(img), "--kernel", str(kfile),
                   "--calibration", str(cal), "--out", str(tmp_path / "kf")])
    assert rc == 0
    with open(tmp_path / "kf" / "manifest.json") as fh:
        man = json.load(fh)
    assert man["kernel_values"] == [[-1, 1], [-1, 1]]


def test_cli_rejects_conflicting_kernel_flags(capsys):
    rc = cli_main(["run", "--image", "x.pgm", "--kernel", "1",
                   "--gradient", "1,3"])
    assert rc == 2
    assert "error" in capsys.readouterr().err


def test_cli_calibrate_writes_report(tmp_path, capsys):
    out = tmp_path / "cal.json"
    rc = cli_main(["calibrate", "--seeds", "1", "--out", str(out)])
    assert rc == 0
    assert CalibrationReport.load(out).passed
    assert "threshold" in capsys.readouterr().out
