"""Streaming heart-rate extraction from M-mode frames.

Every pushed frame is transformed along fast time once and its half spectrum
is kept in a FIFO (the collection buffer). A DSP event differentiates the
cached spectra along slow time, runs one complex FFT per fast-time bin,
accumulates the in-band magnitudes and picks the peak.

Differentiating the cached spectra instead of the raw rows is exact because
the DFT is linear, and it lets spectra be reused across overlapping windows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from . import fxp
from .core import (
    AcquisitionConfig,
    DerivedSizes,
    DiffAxis,
    NumericMode,
    PipelineConfig,
    UshrError,
    bin_to_bpm,
    validate_config,
)

_TS_TOL = 1e-9


class PipelineError(UshrError, ValueError):
    pass


class FrameLengthMismatch(PipelineError):
    pass


class FrameOrderError(PipelineError):
    pass


class InsufficientFill(PipelineError):
    pass


@dataclass(frozen=True)
class Frame:
    """One A-mode echo.

    ``samples`` holds signed ADC counts (integer dtype) or real values in
    [-1, 1) (floating dtype).
    """

    samples: np.ndarray
    timestamp_s: float


def frames_from_array(X, prf_hz: float, t0: float = 0.0) -> list[Frame]:
    """Wrap the rows of a (n_frames, n_samples) array as frames at ``prf_hz``."""
    X = np.asarray(X)
    return [Frame(X[i], t0 + i / prf_hz) for i in range(X.shape[0])]


@dataclass
class HrEstimate:
    bpm: float
    peak_bin: int
    peak_value: float
    band_spectrum: np.ndarray
    window_fill: float
    timestamp_s: float

    @property
    def degenerate(self) -> bool:
        """True when the accumulated band spectrum is identically zero."""
        return self.peak_value == 0


@dataclass
class CollectionBuffer:
    """Circular store of fast-time half spectra, one row per pushed frame.

    Fixed mode stores interleaved int16 rows, float mode complex128 rows.
    """

    capacity: int
    n_bins: int
    fixed: bool
    rows: np.ndarray = field(init=False, repr=False)
    head: int = 0
    fill: int = 0

    def __post_init__(self):
        if self.fixed:
            self.rows = np.zeros((self.capacity, 2 * self.n_bins), dtype=np.int16)
        else:
            self.rows = np.zeros((self.capacity, self.n_bins), dtype=np.complex128)

    def write(self, row: np.ndarray) -> None:
        self.rows[self.head] = row
        self.head = (self.head + 1) % self.capacity
        self.fill = min(self.fill + 1, self.capacity)

    def chronological(self) -> np.ndarray:
        """Stored rows, oldest first."""
        if self.fill < self.capacity:
            return self.rows[: self.fill]
        return np.concatenate([self.rows[self.head :], self.rows[: self.head]])

    def clear(self) -> None:
        self.rows[...] = 0
        self.head = 0
        self.fill = 0


class HrPipeline:
    """Stateful extractor for a single stream of frames.

    Not thread-safe; use one instance per recording.
    """

    def __init__(self, acq: AcquisitionConfig | None = None, pipe: PipelineConfig | None = None):
        self.acq = acq or AcquisitionConfig()
        self.pipe = pipe or PipelineConfig()
        self.sizes: DerivedSizes = validate_config(self.acq, self.pipe)
        self.fixed = self.pipe.numeric_mode is NumericMode.FIXED_Q15
        self.buffer = CollectionBuffer(
            self.sizes.n_pulses, self.sizes.n_fast_bins, self.fixed
        )
        self._last_ts: float | None = None
        self._since_dsp = 0

    # -- ingestion ---------------------------------------------------------

    def _expand(self, samples: np.ndarray) -> np.ndarray:
        """Bring a frame to the working representation (q15 or float)."""
        bits = self.acq.adc_bits
        integer = np.issubdtype(samples.dtype, np.integer)
        if self.fixed:
            if integer:
                lim = 1 << (bits - 1)
                counts = np.clip(samples, -lim, lim - 1).astype(np.int16)
                return fxp.shift_sat(counts, 16 - bits)
            return fxp.float_to_q15(samples)
        if integer:
            return samples.astype(np.float64) / (1 << (bits - 1))
        return samples.astype(np.float64)

    def _fast_spectrum(self, x: np.ndarray) -> np.ndarray:
        nfft = self.sizes.nfft_fast
        if self.pipe.diff_axis is DiffAxis.FAST_TIME:
            x = fxp.sub_sat(x[1:], x[:-1]) if self.fixed else np.diff(x)
        if self.fixed:
            return fxp.rfft_q15(x, nfft)
        return fxp.rfft_float(x, nfft)

    def push_frame(self, frame: Frame) -> None:
        samples = np.asarray(frame.samples)
        if samples.ndim != 1 or samples.shape[0] != self.acq.samples_per_frame:
            raise FrameLengthMismatch(
                f"frame has shape {samples.shape}, expected ({self.acq.samples_per_frame},)"
            )
        if self._last_ts is not None:
            step = frame.timestamp_s - self._last_ts
            if abs(step - 1.0 / self.acq.prf_hz) > _TS_TOL:
                raise FrameOrderError(
                    f"timestamp step {step!r} s, expected {1.0 / self.acq.prf_hz!r} s"
                )
        self.buffer.write(self._fast_spectrum(self._expand(samples)))
        self._last_ts = frame.timestamp_s
        self._since_dsp += 1

    # -- DSP event ---------------------------------------------------------

    def _slow_time_rows(self) -> np.ndarray:
        rows = self.buffer.chronological()
        if self.pipe.diff_axis is DiffAxis.FAST_TIME:
            return rows
        if self.fixed:
            return fxp.sub_sat(rows[1:], rows[:-1])
        return rows[1:] - rows[:-1]

    def run_dsp(self) -> HrEstimate:
        if self.buffer.fill < 2:
            raise InsufficientFill(f"need at least 2 frames, have {self.buffer.fill}")
        sz = self.sizes
        rows = self._slow_time_rows()
        n_rows = rows.shape[0]
        lo, hi = sz.band_bin_lo, sz.band_bin_hi + 1
        if self.fixed:
            # columns as interleaved complex sequences: (n_fast_bins, 2 * nfft_slow)
            cols = np.zeros((sz.n_fast_bins, 2 * sz.nfft_slow), dtype=np.int16)
            cols[:, 0 : 2 * n_rows : 2] = rows[:, 0::2].T
            cols[:, 1 : 2 * n_rows : 2] = rows[:, 1::2].T
            spec = fxp.cfft_q15(cols, sz.nfft_slow)
            mags = fxp.cmplx_mag(spec[:, 2 * lo : 2 * hi])
            acc = np.zeros(sz.n_band_bins, dtype=np.int16)
            for col in mags:
                acc = fxp.add_sat(acc, col)
        else:
            cols = np.zeros((sz.n_fast_bins, sz.nfft_slow), dtype=np.complex128)
            cols[:, :n_rows] = rows.T
            spec = fxp.cfft_float(cols, sz.nfft_slow)
            mags = fxp.cmplx_mag_float(spec[:, lo:hi])
            acc = np.zeros(sz.n_band_bins, dtype=np.float64)
            for col in mags:
                acc += col
        idx, value = fxp.argmax(acc)
        peak_bin = lo + idx
        return HrEstimate(
            bpm=bin_to_bpm(peak_bin, sz),
            peak_bin=peak_bin,
            peak_value=value,
            band_spectrum=acc,
            window_fill=self.buffer.fill / sz.n_pulses,
            timestamp_s=self._last_ts if self._last_ts is not None else 0.0,
        )

    # -- driving -----------------------------------------------------------

    def stream(self, frames: Iterable[Frame]) -> Iterator[HrEstimate]:
        """Push frames and yield an estimate after every ``n_stride`` frames."""
        for frame in frames:
            self.push_frame(frame)
            if self._since_dsp >= self.sizes.n_stride and self.buffer.fill >= 2:
                self._since_dsp = 0
                yield self.run_dsp()

    def reset(self) -> None:
        self.buffer.clear()
        self._last_ts = None
        self._since_dsp = 0


def estimate_window(frames, acq=None, pipe=None) -> HrEstimate:
    """Run one DSP event on a window built from scratch (no stream history)."""
    p = HrPipeline(acq, pipe)
    frames = list(frames)
    for frame in frames[-p.sizes.n_pulses :]:
        p.push_frame(frame)
    return p.run_dsp()


def extract(frames, acq=None, pipe=None) -> list[HrEstimate]:
    return list(HrPipeline(acq, pipe).stream(frames))
