"""Pulse-echo scene synthesis and an envelope front-end digital twin.

The synthesizer renders, for every pulse, the echo of a handful of point
scatterers. Pulsatile scatterers oscillate in depth at the heart rate, which is
the only slow-time periodicity in the scene, so the recording carries its own
ground truth.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .core import AcquisitionConfig, ConfigError, UshrError

__all__ = [
    "Scatterer",
    "SynthConfig",
    "EnvelopeParams",
    "generate_recording",
    "wall_waveform",
    "circuit_envelope",
    "hilbert_envelope",
    "decimate",
    "digitize",
    "occupied_band",
    "measure_bandwidth",
    "energy_above",
    "synthesize_adc",
]


class SceneOutOfDepthWindow(ConfigError):
    pass


class NonIntegerRatio(UshrError, ValueError):
    pass


class EmptyInput(UshrError, ValueError):
    pass


@dataclass(frozen=True)
class Scatterer:
    depth_m: float
    reflectivity: float
    pulsatile: bool = False


def default_scene() -> tuple[Scatterer, ...]:
    # gel/skin interface, both walls of a superficial artery, deeper tissue
    return (
        Scatterer(1.5e-3, 0.35, False),
        Scatterer(3.2e-3, 0.8, True),
        Scatterer(5.4e-3, 0.6, True),
        Scatterer(7.5e-3, 0.3, False),
    )


@dataclass(frozen=True)
class SynthConfig:
    """Physical scene and transmit settings of a synthetic recording.

    ``pulse_shape`` selects the wall-motion waveform: ``"sine"`` or
    ``"raised_cosine"`` (a sum of ``n_harmonics`` raised-cosine harmonics with
    1/h^2 weights). ``burst`` selects the transmit waveform, ``"sine"`` or
    ``"square"``. ``snr_db=inf`` disables noise.
    """

    hr_bpm: float = 72.0
    duration_s: float = 60.0
    f_carrier_hz: float = 1e7
    n_cycles: int = 5
    fs_sim_hz: float = 8e7
    c_m_s: float = 1540.0
    scatterers: tuple[Scatterer, ...] = field(default_factory=default_scene)
    wall_amp_m: float = 1.5e-4
    pulse_shape: str = "raised_cosine"
    n_harmonics: int = 3
    burst: str = "sine"
    snr_db: float = math.inf
    seed: int = 0

    def validate(self, acq: AcquisitionConfig) -> None:
        if self.fs_sim_hz < 4 * self.f_carrier_hz:
            raise ConfigError("fs_sim_hz must be at least 4x the carrier frequency")
        ratio = self.fs_sim_hz / acq.fs_hz
        if abs(ratio - round(ratio)) > 1e-9:
            raise NonIntegerRatio(
                f"fs_sim_hz {self.fs_sim_hz:g} is not a multiple of fs_hz {acq.fs_hz:g}"
            )
        if self.pulse_shape not in ("sine", "raised_cosine"):
            raise ConfigError(f"unknown pulse_shape {self.pulse_shape!r}")
        if self.burst not in ("sine", "square"):
            raise ConfigError(f"unknown burst {self.burst!r}")
        if not (self.hr_bpm > 0 and self.duration_s > 0 and self.n_cycles > 0):
            raise ConfigError("hr_bpm, duration_s and n_cycles must be positive")
        k = self.n_harmonics if self.pulse_shape == "raised_cosine" else 1
        if self.hr_bpm * (1 + k) / 60 >= acq.prf_hz / 2:
            raise ConfigError("wall-motion harmonics alias in slow time")
        max_depth = self.c_m_s * (acq.samples_per_frame / acq.fs_hz) / 2
        burst_depth = self.c_m_s * (self.n_cycles / self.f_carrier_hz) / 2
        for s in self.scatterers:
            reach = self.wall_amp_m if s.pulsatile else 0.0
            if s.depth_m - reach < 0 or s.depth_m + reach + burst_depth > max_depth:
                raise SceneOutOfDepthWindow(
                    f"scatterer at {s.depth_m * 1e3:.2f} mm leaves the "
                    f"{max_depth * 1e3:.2f} mm depth window"
                )


@dataclass(frozen=True)
class EnvelopeParams:
    """Component-level settings of the analog envelope chain (time constants in s)."""

    hpf_fc_hz: float = 1e6
    gain1: float = 2.0
    gain2: float = 2.0
    gain3: float = 0.45
    rect_attack_s: float = 5e-8
    rect_decay_s: float = 4e-7
    lpf_fc_hz: float = 1.5e6

    def validate(self, fs_out_hz: float | None = None) -> None:
        for name, value in vars(self).items():
            if not value > 0:
                raise ConfigError(f"{name} must be > 0, got {value}")
        if fs_out_hz is not None and self.lpf_fc_hz >= fs_out_hz / 2:
            raise ConfigError("lpf_fc_hz must stay below the output Nyquist rate")


# ---------------------------------------------------------------------------
# scene
# ---------------------------------------------------------------------------

def wall_waveform(phase, shape: str = "raised_cosine", n_harmonics: int = 3) -> np.ndarray:
    """Normalised wall displacement in [-1, 1] (sine) or [0, 1] (raised cosine)."""
    phase = np.asarray(phase, dtype=np.float64)
    if shape == "sine":
        return np.sin(phase)
    return _raised_cosine_sum(phase, n_harmonics) / _raised_cosine_peak(n_harmonics)


def _raised_cosine_sum(phase: np.ndarray, n_harmonics: int) -> np.ndarray:
    h = np.arange(1, n_harmonics + 1)
    terms = (1 - np.cos(np.multiply.outer(phase, h))) / (2 * h**2)
    return terms.sum(axis=-1)


@functools.lru_cache(maxsize=None)
def _raised_cosine_peak(n_harmonics: int) -> float:
    # even harmonics vanish at phase = pi, so the peak is found numerically
    grid = np.linspace(0, 2 * np.pi, 1 << 16, endpoint=False)
    return float(_raised_cosine_sum(grid, n_harmonics).max())


def _burst(t: np.ndarray, cfg: SynthConfig) -> np.ndarray:
    duration = cfg.n_cycles / cfg.f_carrier_hz
    carrier = np.sin(2 * np.pi * cfg.f_carrier_hz * t)
    if cfg.burst == "square":
        carrier = np.sign(carrier)
    return np.where((t >= 0) & (t < duration), carrier, 0.0)


def generate_recording(cfg: SynthConfig, acq: AcquisitionConfig | None = None):
    """Render a recording at ``cfg.fs_sim_hz``.

    Returns
    -------
    frames : ndarray, shape (n_frames, samples_per_frame * fs_sim_hz / fs_hz)
        One high-rate RF echo per pulse; pulse ``p`` fires at ``p / prf_hz``.
    truth_bpm : float
    """
    acq = acq or AcquisitionConfig()
    acq.validate()
    cfg.validate(acq)
    ratio = int(round(cfg.fs_sim_hz / acq.fs_hz))
    n_samples = acq.samples_per_frame * ratio
    n_frames = int(round(cfg.duration_s * acq.prf_hz))
    t_pulse = np.arange(n_frames) / acq.prf_hz
    t_fast = np.arange(n_samples) / cfg.fs_sim_hz

    motion = cfg.wall_amp_m * wall_waveform(
        2 * np.pi * cfg.hr_bpm / 60.0 * t_pulse, cfg.pulse_shape, cfg.n_harmonics
    )
    frames = np.zeros((n_frames, n_samples))
    for s in cfg.scatterers:
        depth = s.depth_m + (motion if s.pulsatile else np.zeros(n_frames))
        delay = 2 * depth / cfg.c_m_s
        frames += s.reflectivity * _burst(t_fast[None, :] - delay[:, None], cfg)

    if np.isfinite(cfg.snr_db):
        rng = np.random.default_rng(cfg.seed)
        p_signal = np.mean(frames**2)
        sigma = math.sqrt(p_signal / 10 ** (cfg.snr_db / 10))
        frames = frames + rng.normal(0.0, sigma, frames.shape)
    return frames, float(cfg.hr_bpm)


# ---------------------------------------------------------------------------
# front end
# ---------------------------------------------------------------------------

def _alpha(tau: float, dt: float) -> float:
    return dt / (tau + dt)


def _one_pole_lowpass(x: np.ndarray, alpha: float) -> np.ndarray:
    # y[n] = y[n-1] + alpha * (x[n] - y[n-1]), starting from rest
    return signal.lfilter([alpha], [1.0, alpha - 1.0], x, axis=-1)


def circuit_envelope(frame, p: EnvelopeParams | None = None, fs: float = 8e7) -> np.ndarray:
    """Digital twin of the HPF, two gain stages, diode/RC detector, LPF and
    output gain, applied along the last axis. Each frame starts at rest."""
    p = p or EnvelopeParams()
    x = np.asarray(frame, dtype=np.float64)
    dt = 1.0 / fs
    tau_hp = 1.0 / (2 * np.pi * p.hpf_fc_hz)
    tau_lp = 1.0 / (2 * np.pi * p.lpf_fc_hz)

    x = x - _one_pole_lowpass(x, _alpha(tau_hp, dt))
    x = x * (p.gain1 * p.gain2)

    a_att = _alpha(p.rect_attack_s, dt)
    a_dec = _alpha(p.rect_decay_s, dt)
    cap = np.zeros(x.shape[:-1])
    rect = np.empty_like(x)
    for n in range(x.shape[-1]):
        xn = x[..., n]
        charging = xn > cap
        # the diode conducts only while the input exceeds the capacitor voltage;
        # otherwise the capacitor discharges towards ground
        cap = np.where(charging, cap + a_att * (xn - cap), cap - a_dec * cap)
        rect[..., n] = cap

    return _one_pole_lowpass(rect, _alpha(tau_lp, dt)) * p.gain3


def hilbert_envelope(frame) -> np.ndarray:
    x = np.asarray(frame, dtype=np.float64)
    if x.shape[-1] < 8:
        raise ValueError("hilbert_envelope needs at least 8 samples")
    return np.abs(signal.hilbert(x, axis=-1))


_DECIM_TAPS = 161


def decimate(frame, fs_in: float, fs_out: float) -> np.ndarray:
    """Zero-phase anti-alias low-pass at 0.45 * fs_out, then keep every
    ``fs_in / fs_out``-th sample along the last axis."""
    ratio = fs_in / fs_out
    if ratio < 1 or abs(ratio - round(ratio)) > 1e-9:
        raise NonIntegerRatio(f"fs_in {fs_in:g} is not a multiple of fs_out {fs_out:g}")
    ratio = int(round(ratio))
    x = np.asarray(frame, dtype=np.float64)
    if ratio == 1:
        return x.copy()
    taps = signal.firwin(_DECIM_TAPS, 0.45 * fs_out, fs=fs_in)
    padlen = min(3 * _DECIM_TAPS, x.shape[-1] - 1)
    y = signal.filtfilt(taps, [1.0], x, axis=-1, padtype="constant", padlen=padlen)
    return y[..., ::ratio]


def digitize(x, adc_bits: int = 12, full_scale: float = 1.0) -> np.ndarray:
    """Map real values in [-full_scale, full_scale) to signed ADC counts."""
    lim = 1 << (adc_bits - 1)
    counts = np.floor(np.asarray(x) / full_scale * lim + 0.5)
    return np.clip(counts, -lim, lim - 1).astype(np.int16)


def synthesize_adc(
    cfg: SynthConfig,
    acq: AcquisitionConfig | None = None,
    env: EnvelopeParams | None = None,
    full_scale: float = 1.0,
):
    """Render, envelope, decimate and digitise a recording.

    Returns ``(counts, truth_bpm)`` with counts shaped (n_frames, samples_per_frame).
    """
    acq = acq or AcquisitionConfig()
    raw, truth = generate_recording(cfg, acq)
    enveloped = circuit_envelope(raw, env, cfg.fs_sim_hz)
    low = decimate(enveloped, cfg.fs_sim_hz, acq.fs_hz)
    return digitize(low, acq.adc_bits, full_scale), truth


# ---------------------------------------------------------------------------
# bandwidth
# ---------------------------------------------------------------------------

def _energy_spectrum(frames, fs: float):
    x = np.asarray(frames, dtype=np.float64).ravel()
    if x.size == 0:
        raise EmptyInput("no samples to analyse")
    power = np.abs(np.fft.rfft(x)) ** 2
    freqs = np.fft.rfftfreq(x.size, 1.0 / fs)
    return freqs[1:], power[1:]


def occupied_band(frames, fs: float, fraction: float = 0.99) -> tuple[float, float]:
    """Edges of the band holding ``fraction`` of the non-DC energy of the
    concatenated frames, with equal shares cut from each tail."""
    freqs, power = _energy_spectrum(frames, fs)
    total = power.sum()
    if total == 0:
        return 0.0, 0.0
    cum = np.cumsum(power) / total
    tail = (1 - fraction) / 2
    lo = freqs[np.searchsorted(cum, tail)]
    hi = freqs[min(np.searchsorted(cum, 1 - tail), freqs.size - 1)]
    return float(lo), float(hi)


def measure_bandwidth(frames, fs: float) -> float:
    """99 % occupied bandwidth in Hz."""
    lo, hi = occupied_band(frames, fs)
    return hi - lo


def energy_above(frames, fs: float, f_cut: float) -> float:
    """Fraction of non-DC energy above ``f_cut``."""
    freqs, power = _energy_spectrum(frames, fs)
    total = power.sum()
    return float(power[freqs > f_cut].sum() / total) if total else 0.0
