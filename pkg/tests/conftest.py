import math

import numpy as np
import pytest

from ushr.core import AcquisitionConfig
from ushr.synthfe import SynthConfig, generate_recording, synthesize_adc

ACCEPTANCE_LINES = []

HR_SUITE = (45, 60, 72, 90, 110)
SNR_SUITE = (math.inf, 20, 10)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acq():
    return AcquisitionConfig()


@pytest.fixture(scope="session")
def suite(acq):
    """Synthetic HR suite: raw RF and enveloped ADC counts per (hr, snr)."""
    out = {}
    for snr in SNR_SUITE:
        for hr in HR_SUITE:
            cfg = SynthConfig(hr_bpm=hr, snr_db=snr, duration_s=60.0, seed=hr * 7 + 1)
            raw, truth = generate_recording(cfg, acq)
            counts, _ = synthesize_adc(cfg, acq)
            out[(hr, snr)] = {"cfg": cfg, "raw": raw, "counts": counts, "truth": truth}
    return out


@pytest.fixture(scope="session")
def rec72(acq):
    counts, truth = synthesize_adc(SynthConfig(hr_bpm=72, duration_s=60.0, seed=3), acq)
    return counts, truth


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
