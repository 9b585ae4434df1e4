import time

import pytest

from vcseledge import calibrate, write_test_images


@pytest.fixture(scope="session")
def calibration():
    """Default calibration, run once; (report, wall seconds)."""
    t0 = time.time()
    report = calibrate()
    return report, time.time() - t0


@pytest.fixture(scope="session")
def report(calibration):
    return calibration[0]


@pytest.fixture(scope="session")
def fixture_paths(tmp_path_factory):
    """Test images written as PGM files; name -> path."""
    return write_test_images(tmp_path_factory.mktemp("fixtures"))
