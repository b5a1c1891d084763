"""scikit-learn compatible wrappers.

``EnvelopeDetector`` turns high-rate RF frames into ADC counts at the embedded
sampling rate and ``HeartRateEstimator`` maps a frame matrix to heart-rate
estimates, so the two chain in a :class:`sklearn.pipeline.Pipeline`::

    Pipeline([("env", EnvelopeDetector()), ("hr", HeartRateEstimator())])
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_frames, check_positive
from .core import AcquisitionConfig, PipelineConfig, validate_config
from .pipeline import HrEstimate, HrPipeline, frames_from_array
from .resources import resource_model
from .synthfe import EnvelopeParams, circuit_envelope, decimate, digitize


class HeartRateEstimator(BaseEstimator):
    """Spectral heart-rate extractor over M-mode frame matrices.

    ``fit`` only validates the configuration; the estimator learns nothing from
    data. ``predict`` streams the rows of ``X`` (one frame per row, in pulse
    order) and returns one bpm value per stride.

    Parameters
    ----------
    prf_hz, fs_hz, samples_per_frame, adc_bits
        Acquisition settings, see :class:`ushr.core.AcquisitionConfig`.
    window_s, stride_s, band_lo_hz, band_hi_hz, diff_axis, numeric_mode
        Pipeline settings, see :class:`ushr.core.PipelineConfig`.
    full_window_only : bool
        Drop warm-up estimates made before the window has filled.
    """

    def __init__(
        self,
        prf_hz=25.0,
        fs_hz=4e6,
        samples_per_frame=50,
        adc_bits=12,
        window_s=20.0,
        stride_s=2.0,
        band_lo_hz=0.5,
        band_hi_hz=2.0,
        diff_axis="slow",
        numeric_mode="float",
        full_window_only=False,
    ):
        self.prf_hz = prf_hz
        self.fs_hz = fs_hz
        self.samples_per_frame = samples_per_frame
        self.adc_bits = adc_bits
        self.window_s = window_s
        self.stride_s = stride_s
        self.band_lo_hz = band_lo_hz
        self.band_hi_hz = band_hi_hz
        self.diff_axis = diff_axis
        self.numeric_mode = numeric_mode
        self.full_window_only = full_window_only

    def _configs(self):
        acq = AcquisitionConfig(self.prf_hz, self.fs_hz, self.samples_per_frame, self.adc_bits)
        pipe = PipelineConfig(
            self.window_s,
            self.stride_s,
            self.band_lo_hz,
            self.band_hi_hz,
            self.diff_axis,
            self.numeric_mode,
        )
        return acq, pipe

    def fit(self, X=None, y=None):
        self.acq_, self.pipe_ = self._configs()
        self.sizes_ = validate_config(self.acq_, self.pipe_)
        self.resources_ = resource_model(self.sizes_, self.pipe_.numeric_mode)
        if X is not None:
            check_frames(X, self.samples_per_frame)
        return self

    def estimates(self, X) -> list[HrEstimate]:
        check_is_fitted(self, "sizes_")
        X = check_frames(X, self.samples_per_frame)
        out = list(HrPipeline(self.acq_, self.pipe_).stream(frames_from_array(X, self.prf_hz)))
        if self.full_window_only:
            out = [e for e in out if e.window_fill >= 1.0]
        return out

    def predict(self, X) -> np.ndarray:
        return np.array([e.bpm for e in self.estimates(X)])

    def transform(self, X) -> np.ndarray:
        """Accumulated band spectra, one row per estimate."""
        est = self.estimates(X)
        if not est:
            return np.zeros((0, self.sizes_.n_band_bins))
        return np.vstack([e.band_spectrum for e in est])

    def fit_predict(self, X, y=None):
        return self.fit(X).predict(X)

    def score(self, X, y) -> float:
        """Negative mean absolute error in bpm against a scalar or per-estimate truth."""
        pred = self.predict(X)
        return -float(np.mean(np.abs(pred - np.broadcast_to(y, pred.shape))))


class EnvelopeDetector(TransformerMixin, BaseEstimator):
    """Analog envelope front end followed by decimation and digitisation."""

    def __init__(
        self,
        fs_in_hz=8e7,
        fs_out_hz=4e6,
        adc_bits=12,
        full_scale=1.0,
        hpf_fc_hz=1e6,
        gain1=2.0,
        gain2=2.0,
        gain3=0.45,
        rect_attack_s=5e-8,
        rect_decay_s=4e-7,
        lpf_fc_hz=1.5e6,
    ):
        self.fs_in_hz = fs_in_hz
        self.fs_out_hz = fs_out_hz
        self.adc_bits = adc_bits
        self.full_scale = full_scale
        self.hpf_fc_hz = hpf_fc_hz
        self.gain1 = gain1
        self.gain2 = gain2
        self.gain3 = gain3
        self.rect_attack_s = rect_attack_s
        self.rect_decay_s = rect_decay_s
        self.lpf_fc_hz = lpf_fc_hz

    def fit(self, X=None, y=None):
        check_positive("full_scale", self.full_scale)
        self.params_ = EnvelopeParams(
            self.hpf_fc_hz,
            self.gain1,
            self.gain2,
            self.gain3,
            self.rect_attack_s,
            self.rect_decay_s,
            self.lpf_fc_hz,
        )
        self.params_.validate(self.fs_out_hz)
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        X = check_frames(X, allow_int=False)
        env = circuit_envelope(X, self.params_, self.fs_in_hz)
        low = decimate(env, self.fs_in_hz, self.fs_out_hz)
        return digitize(low, self.adc_bits, self.full_scale)
