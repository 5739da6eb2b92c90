import numpy as np
import pytest

from szfdpc import ScenarioConfig, effective_channels, generate_channels


def random_psd(rng, d, scale=1.0):
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    S = A @ A.conj().T
    return scale * S / np.trace(S).real


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def instance():
    cfg = ScenarioConfig(6, 2, 2, 1.0, seed=11)
    chans = generate_channels(cfg)
    return cfg, chans, effective_channels(chans)


# acceptance results, printed once at the end of the session
ACCEPTANCE = {}


def record(criterion, ok, detail):
    line = f"criterion {criterion:>2} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
