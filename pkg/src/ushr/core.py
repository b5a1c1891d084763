"""Configuration types, validation and derived buffer sizes."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path


class UshrError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(UshrError, ValueError):
    pass


class NonPositiveParameter(ConfigError):
    pass


class BandOutOfRange(ConfigError):
    pass


class WindowTooShort(ConfigError):
    pass


class IndexOutOfRange(UshrError, IndexError):
    pass


class DiffAxis(str, enum.Enum):
    SLOW_TIME = "slow"
    FAST_TIME = "fast"


class NumericMode(str, enum.Enum):
    FLOAT = "float"
    FIXED_Q15 = "fixed"


@dataclass(frozen=True)
class AcquisitionConfig:
    """Acquisition front-end parameters.

    Parameters
    ----------
    prf_hz : float
        Pulse-repetition frequency, i.e. the slow-time sampling rate.
    fs_hz : float
        Fast-time ADC sampling rate.
    samples_per_frame : int
        Number of ADC samples recorded after each pulse.
    adc_bits : int
        ADC resolution. Samples are signed two's complement counts.
    """

    prf_hz: float = 25.0
    fs_hz: float = 4_000_000.0
    samples_per_frame: int = 50
    adc_bits: int = 12

    def validate(self) -> None:
        if not self.prf_hz > 0:
            raise NonPositiveParameter(f"prf_hz must be > 0, got {self.prf_hz}")
        if not self.fs_hz > 0:
            raise NonPositiveParameter(f"fs_hz must be > 0, got {self.fs_hz}")
        if self.samples_per_frame < 2:
            raise NonPositiveParameter(
                f"samples_per_frame must be >= 2, got {self.samples_per_frame}"
            )
        if not 1 <= self.adc_bits <= 16:
            raise ConfigError(f"adc_bits must be in [1, 16], got {self.adc_bits}")
        depth_window_s = self.samples_per_frame / self.fs_hz
        if depth_window_s * self.prf_hz >= 1:
            raise ConfigError(
                "echo window does not fit in one pulse-repetition interval "
                f"({depth_window_s:g} s at {self.prf_hz:g} Hz)"
            )


@dataclass(frozen=True)
class PipelineConfig:
    """Windowing, band and numeric options of the heart-rate extractor."""

    window_s: float = 20.0
    stride_s: float = 2.0
    band_lo_hz: float = 0.5
    band_hi_hz: float = 2.0
    diff_axis: DiffAxis = DiffAxis.SLOW_TIME
    numeric_mode: NumericMode = NumericMode.FLOAT

    def __post_init__(self):
        # accept plain strings from CLI / config files
        object.__setattr__(self, "diff_axis", DiffAxis(self.diff_axis))
        object.__setattr__(self, "numeric_mode", NumericMode(self.numeric_mode))


@dataclass(frozen=True)
class DerivedSizes:
    prf_hz: float
    samples_per_frame: int
    n_pulses: int
    n_stride: int
    nfft_fast: int
    nfft_slow: int
    band_bin_lo: int
    band_bin_hi: int

    @property
    def n_band_bins(self) -> int:
        return self.band_bin_hi - self.band_bin_lo + 1

    @property
    def bin_width_hz(self) -> float:
        return self.prf_hz / self.nfft_slow

    @property
    def n_fast_bins(self) -> int:
        return self.nfft_fast // 2 + 1


def next_pow2(n: int) -> int:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return 1 << (int(n) - 1).bit_length()


def validate_config(acq: AcquisitionConfig, pipe: PipelineConfig) -> DerivedSizes:
    """Check both configs and compute every buffer size the pipeline needs.

    Raises
    ------
    NonPositiveParameter, BandOutOfRange, WindowTooShort, ConfigError
    """
    acq.validate()
    for name in ("window_s", "stride_s", "band_lo_hz", "band_hi_hz"):
        value = getattr(pipe, name)
        if not value > 0:
            raise NonPositiveParameter(f"{name} must be > 0, got {value}")
    if pipe.stride_s > pipe.window_s:
        raise ConfigError(
            f"stride_s ({pipe.stride_s}) must not exceed window_s ({pipe.window_s})"
        )
    if pipe.window_s * acq.prf_hz < 4:
        raise WindowTooShort(
            f"window of {pipe.window_s} s holds fewer than 4 pulses at {acq.prf_hz} Hz"
        )
    if pipe.band_hi_hz > acq.prf_hz / 2:
        raise BandOutOfRange(
            f"band_hi_hz {pipe.band_hi_hz} exceeds slow-time Nyquist {acq.prf_hz / 2}"
        )
    if pipe.band_lo_hz >= pipe.band_hi_hz:
        raise BandOutOfRange(
            f"band_lo_hz {pipe.band_lo_hz} must be below band_hi_hz {pipe.band_hi_hz}"
        )

    # round() guards against float noise such as 20 * 25 = 499.99999
    n_pulses = int(round(pipe.window_s * acq.prf_hz))
    n_stride = max(1, int(round(pipe.stride_s * acq.prf_hz)))
    nfft_fast = next_pow2(acq.samples_per_frame)
    nfft_slow = next_pow2(n_pulses)
    bin_lo = math.ceil(pipe.band_lo_hz * nfft_slow / acq.prf_hz)
    bin_hi = math.floor(pipe.band_hi_hz * nfft_slow / acq.prf_hz)
    if bin_lo > bin_hi:
        raise BandOutOfRange(
            f"band [{pipe.band_lo_hz}, {pipe.band_hi_hz}] Hz contains no slow-time bin "
            f"at resolution {acq.prf_hz / nfft_slow:g} Hz"
        )
    return DerivedSizes(
        prf_hz=acq.prf_hz,
        samples_per_frame=acq.samples_per_frame,
        n_pulses=n_pulses,
        n_stride=n_stride,
        nfft_fast=nfft_fast,
        nfft_slow=nfft_slow,
        band_bin_lo=bin_lo,
        band_bin_hi=bin_hi,
    )


def bin_to_bpm(bin: int, sizes: DerivedSizes) -> float:
    if not 0 <= bin < sizes.nfft_slow:
        raise IndexOutOfRange(f"bin {bin} outside [0, {sizes.nfft_slow})")
    return bin * sizes.prf_hz / sizes.nfft_slow * 60.0


# ---------------------------------------------------------------------------
# key = value config files
# ---------------------------------------------------------------------------

_ACQ_KEYS = {f.name: f.type for f in fields(AcquisitionConfig)}
_PIPE_KEYS = {f.name: f.type for f in fields(PipelineConfig)}
_CASTS = {"float": float, "int": int, "DiffAxis": DiffAxis, "NumericMode": NumericMode}


def _to_text(value) -> str:
    if isinstance(value, enum.Enum):
        return value.value
    return repr(value) if isinstance(value, float) else str(value)


def dumps_config(acq: AcquisitionConfig, pipe: PipelineConfig) -> str:
    lines = [f"{f.name} = {_to_text(getattr(acq, f.name))}" for f in fields(acq)]
    lines += [f"{f.name} = {_to_text(getattr(pipe, f.name))}" for f in fields(pipe)]
    return "\n".join(lines) + "\n"


def parse_kv(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def loads_config(
    text: str,
    acq: AcquisitionConfig | None = None,
    pipe: PipelineConfig | None = None,
) -> tuple[AcquisitionConfig, PipelineConfig]:
    """Overlay the keys found in ``text`` onto ``acq``/``pipe`` (defaults if None)."""
    acq = acq or AcquisitionConfig()
    pipe = pipe or PipelineConfig()
    acq_kw, pipe_kw = {}, {}
    for key, value in parse_kv(text).items():
        if key in _ACQ_KEYS:
            target, typ = acq_kw, _ACQ_KEYS[key]
        elif key in _PIPE_KEYS:
            target, typ = pipe_kw, _PIPE_KEYS[key]
        else:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            target[key] = _CASTS[typ](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return replace(acq, **acq_kw), replace(pipe, **pipe_kw)


def load_config(path, acq=None, pipe=None):
    return loads_config(Path(path).read_text(), acq, pipe)
