import pytest

from hmimo.geometry import Aperture, enumerate_modes
from hmimo.spectrum import mode_variances

_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def iso10():
    """Isotropic variances for the 10 x 10 wavelength aperture at half-wavelength spacing."""
    ap = Aperture.square(10, 0.5)
    return mode_variances(ap, enumerate_modes(ap))


@pytest.fixture(scope="session")
def iso2():
    ap = Aperture.square(2, 0.5)
    return mode_variances(ap, enumerate_modes(ap))
