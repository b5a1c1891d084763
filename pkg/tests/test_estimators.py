import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import Pipeline

from ushr.core import AcquisitionConfig, ConfigError
from ushr.estimators import EnvelopeDetector, HeartRateEstimator
from ushr.synthfe import SynthConfig, generate_recording, synthesize_adc


def test_params_round_trip():
    est = HeartRateEstimator(window_s=10.0, numeric_mode="fixed")
    params = est.get_params()
    assert params["window_s"] == 10.0 and params["numeric_mode"] == "fixed"
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(stride_s=4.0)
    assert est.stride_s == 4.0


def test_unfitted_raises():
    with pytest.raises(NotFittedError):
        HeartRateEstimator().predict(np.zeros((10, 50), np.int16))
    with pytest.raises(NotFittedError):
        EnvelopeDetector().transform(np.zeros((2, 1000)))


def test_fit_validates_config():
    with pytest.raises(ConfigError):
        HeartRateEstimator(band_hi_hz=20.0).fit()
    est = HeartRateEstimator().fit()
    assert est.resources_.total_bytes == 136216
    assert HeartRateEstimator(numeric_mode="fixed").fit().resources_.total_bytes == 68108


def test_input_validation():
    est = HeartRateEstimator().fit()
    with pytest.raises(ValueError):
        est.predict(np.zeros((10, 49), np.int16))
    with pytest.raises(ValueError):
        est.predict(np.zeros(50, np.int16))
    bad = np.zeros((10, 50))
    bad[3, 4] = np.nan
    with pytest.raises(ValueError):
        est.predict(bad)


def test_predict_and_transform_shapes(rec72):
    counts, truth = rec72
    est = HeartRateEstimator(full_window_only=True).fit(counts)
    bpm = est.predict(counts)
    assert bpm.shape == (21,)
    assert np.all(np.abs(bpm - truth) <= 3)
    assert est.transform(counts).shape == (21, 30)
    assert est.score(counts, truth) >= -3


def test_sklearn_pipeline_matches_manual():
    cfg = SynthConfig(hr_bpm=80, duration_s=24.0, snr_db=20.0, seed=5)
    raw, _ = generate_recording(cfg, AcquisitionConfig())
    pipe = Pipeline([("env", EnvelopeDetector()), ("hr", HeartRateEstimator())])
    got = pipe.fit(raw).predict(raw)
    counts, _ = synthesize_adc(cfg, AcquisitionConfig())
    np.testing.assert_array_equal(got, HeartRateEstimator().fit().predict(counts))
    assert abs(got[-1] - 80) <= 3


def test_envelope_detector_output():
    raw, _ = generate_recording(SynthConfig(duration_s=1.0), AcquisitionConfig())
    counts = EnvelopeDetector().fit_transform(raw)
    assert counts.dtype == np.int16 and counts.shape == (25, 50)
    with pytest.raises(ValueError):
        EnvelopeDetector(full_scale=0).fit()
