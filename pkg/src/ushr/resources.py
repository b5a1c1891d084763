"""Analytical memory, operation-count and power model of the embedded pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import DerivedSizes, NumericMode

# energy of one fixed-point DSP event at window 20 s / stride 2 s
E_DSP_FIXED_J = 1.21e-3


@dataclass(frozen=True)
class ResourceModel:
    bytes_per_sample: int
    collection_bytes: int
    fft_scratch_bytes: int
    accumulation_bytes: int
    dsp_op_count: int

    @property
    def total_bytes(self) -> int:
        return self.collection_bytes + self.fft_scratch_bytes + self.accumulation_bytes


def dsp_op_count(sizes: DerivedSizes) -> int:
    """Operations of one DSP event on a full window.

    Counts the slow-time differentiation, the column FFT butterflies, and the
    magnitude, accumulation and peak search over the band. Per-frame work
    (bit expansion and fast-time FFT) happens at acquisition time and is not
    part of the event.
    """
    n_bins = sizes.n_fast_bins
    diff = (sizes.n_pulses - 1) * n_bins
    butterflies = n_bins * (sizes.nfft_slow // 2) * int(math.log2(sizes.nfft_slow))
    band = n_bins * sizes.n_band_bins
    magnitude, accumulate = band, band
    peak = sizes.n_band_bins
    return diff + butterflies + magnitude + accumulate + peak


def per_frame_op_count(sizes: DerivedSizes) -> int:
    """Operations spent on each incoming frame (shift + fast-time FFT)."""
    fft = (sizes.nfft_fast // 2) * int(math.log2(sizes.nfft_fast))
    return sizes.samples_per_frame + fft


def resource_model(sizes: DerivedSizes, mode: NumericMode | str) -> ResourceModel:
    mode = NumericMode(mode)
    bps = 2 if mode is NumericMode.FIXED_Q15 else 4
    return ResourceModel(
        bytes_per_sample=bps,
        collection_bytes=sizes.n_pulses * 2 * sizes.n_fast_bins * bps,
        fft_scratch_bytes=2 * sizes.nfft_slow * bps,
        accumulation_bytes=sizes.n_band_bins * bps,
        dsp_op_count=dsp_op_count(sizes),
    )


@dataclass(frozen=True)
class EnergyModel:
    stride_s: float = 2.0
    prf_hz: float = 25.0
    e_dsp_j: float = E_DSP_FIXED_J
    e_pulse_j: float = 0.0
    p_sleep_w: float = 0.0

    def __post_init__(self):
        for name in ("e_dsp_j", "e_pulse_j", "p_sleep_w"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not (self.stride_s > 0 and self.prf_hz > 0):
            raise ValueError("stride_s and prf_hz must be > 0")


def eval_energy(model: EnergyModel) -> float:
    """Average power in watts: sleep floor + pulse acquisitions + DSP events."""
    return model.p_sleep_w + model.prf_hz * model.e_pulse_j + model.e_dsp_j / model.stride_s
