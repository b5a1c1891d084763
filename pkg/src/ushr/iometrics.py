"""Recording container, HR series CSV and agreement statistics.

Container layout (all little-endian)::

    offset  size  field
    0       8     magic  b"USHR0001"
    8       8     prf_hz             float64
    16      8     fs_hz              float64
    24      4     samples_per_frame  uint32
    28      4     n_frames           uint32
    32      1     sample_format      uint8 (0 = i16le, 1 = f32le)
    33      8     truth_bpm          float64 (NaN when absent)
    41      16    position_label     ASCII, NUL padded (empty when absent)
    57      ...   n_frames * samples_per_frame samples, frame-major
"""

from __future__ import annotations

import csv
import enum
import json
import math
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .core import UshrError

MAGIC = b"USHR0001"
_HEADER = struct.Struct("<8sddIIBd16s")
HEADER_SIZE = _HEADER.size
POSITIONS = ("lateral", "central", "medial")


class FormatError(UshrError, ValueError):
    pass


class BadMagic(FormatError):
    pass


class TruncatedFile(FormatError):
    pass


class FormatMismatch(FormatError):
    pass


class DataError(UshrError, ValueError):
    pass


class NoOverlap(DataError):
    pass


class DegenerateVariance(DataError):
    pass


class TooFewSamples(DataError):
    pass


class SampleFormat(enum.IntEnum):
    I16LE = 0
    F32LE = 1

    @property
    def dtype(self) -> np.dtype:
        return np.dtype("<i2") if self is SampleFormat.I16LE else np.dtype("<f4")


@dataclass(frozen=True)
class RecordingHeader:
    prf_hz: float
    fs_hz: float
    samples_per_frame: int
    n_frames: int
    sample_format: SampleFormat = SampleFormat.I16LE
    truth_bpm: float | None = None
    position_label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "sample_format", SampleFormat(self.sample_format))
        if self.position_label is not None and self.position_label not in POSITIONS:
            raise FormatMismatch(f"unknown position label {self.position_label!r}")

    def pack(self) -> bytes:
        truth = math.nan if self.truth_bpm is None else float(self.truth_bpm)
        label = (self.position_label or "").encode("ascii")
        return _HEADER.pack(
            MAGIC,
            float(self.prf_hz),
            float(self.fs_hz),
            self.samples_per_frame,
            self.n_frames,
            int(self.sample_format),
            truth,
            label,
        )

    @classmethod
    def unpack(cls, raw: bytes) -> "RecordingHeader":
        if len(raw) < 8 or raw[:8] != MAGIC:
            raise BadMagic(f"not a recording: magic {raw[:8]!r}")
        if len(raw) < HEADER_SIZE:
            raise TruncatedFile(f"header has {len(raw)} of {HEADER_SIZE} bytes")
        _, prf, fs, spf, n, fmt, truth, label = _HEADER.unpack(raw[:HEADER_SIZE])
        try:
            fmt = SampleFormat(fmt)
        except ValueError as exc:
            raise FormatMismatch(f"unknown sample format code {fmt}") from exc
        label = label.rstrip(b"\0").decode("ascii") or None
        return cls(prf, fs, spf, n, fmt, None if math.isnan(truth) else truth, label)


def write_recording(path, header: RecordingHeader, frames) -> None:
    frames = np.asarray(frames)
    expected = (header.n_frames, header.samples_per_frame)
    if frames.shape != expected:
        raise FormatMismatch(f"frames shape {frames.shape} != header {expected}")
    dtype = header.sample_format.dtype
    if header.sample_format is SampleFormat.I16LE:
        if not np.issubdtype(frames.dtype, np.integer):
            raise FormatMismatch("i16le recordings need integer samples")
        if frames.size and (frames.min() < -32768 or frames.max() > 32767):
            raise FormatMismatch("samples exceed the int16 range")
    with open(path, "wb") as fh:
        fh.write(header.pack())
        fh.write(frames.astype(dtype).tobytes())


def read_recording(path) -> tuple[RecordingHeader, np.ndarray]:
    raw = Path(path).read_bytes()
    header = RecordingHeader.unpack(raw)
    dtype = header.sample_format.dtype
    count = header.n_frames * header.samples_per_frame
    payload = raw[HEADER_SIZE:]
    if len(payload) < count * dtype.itemsize:
        raise TruncatedFile(
            f"payload has {len(payload)} bytes, header promises {count * dtype.itemsize}"
        )
    if len(payload) > count * dtype.itemsize:
        raise FormatMismatch("trailing bytes after the last frame")
    frames = np.frombuffer(payload, dtype=dtype, count=count)
    frames = frames.reshape(header.n_frames, header.samples_per_frame)
    return header, frames.astype(dtype.newbyteorder("="))


# ---------------------------------------------------------------------------
# HR series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HrSeries:
    timestamp_s: np.ndarray
    bpm: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.timestamp_s, dtype=np.float64)
        b = np.asarray(self.bpm, dtype=np.float64)
        if t.shape != b.shape or t.ndim != 1:
            raise DataError("timestamps and bpm must be 1-D arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise DataError("timestamps must be strictly increasing")
        if np.any((b <= 0) | (b >= 300)):
            raise DataError("bpm values must lie in (0, 300)")
        object.__setattr__(self, "timestamp_s", t)
        object.__setattr__(self, "bpm", b)

    def __len__(self):
        return self.timestamp_s.size


def write_hr_csv(path_or_file, series: HrSeries, extra: dict | None = None) -> None:
    """Write ``timestamp_s,bpm`` (plus optional extra columns of equal length)."""
    extra = extra or {}
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(["timestamp_s", "bpm", *extra])
        for i in range(len(series)):
            row = [repr(float(series.timestamp_s[i])), repr(float(series.bpm[i]))]
            w.writerow(row + [v[i] for v in extra.values()])
    finally:
        if own:
            fh.close()


def read_hr_csv(path) -> HrSeries:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "timestamp_s" not in rows[0] or "bpm" not in rows[0]:
        raise FormatMismatch(f"{path}: expected columns timestamp_s,bpm")
    return HrSeries(
        np.array([float(r["timestamp_s"]) for r in rows]),
        np.array([float(r["bpm"]) for r in rows]),
    )


@dataclass(frozen=True)
class Pairs:
    est: np.ndarray
    ref: np.ndarray
    timestamp_s: np.ndarray
    n_dropped: int

    def __len__(self):
        return self.est.size


def align(est: HrSeries, ref: HrSeries, tolerance_s: float) -> Pairs:
    """Pair each estimate with the nearest-in-time reference value.

    Estimates without a reference within ``tolerance_s`` are dropped; ties go
    to the earlier reference sample.
    """
    if len(est) == 0 or len(ref) == 0:
        raise NoOverlap("empty series")
    t_ref = ref.timestamp_s
    pos = np.searchsorted(t_ref, est.timestamp_s)
    left = np.clip(pos - 1, 0, t_ref.size - 1)
    right = np.clip(pos, 0, t_ref.size - 1)
    d_left = np.abs(est.timestamp_s - t_ref[left])
    d_right = np.abs(t_ref[right] - est.timestamp_s)
    nearest = np.where(d_right < d_left, right, left)
    dist = np.minimum(d_left, d_right)
    keep = dist <= tolerance_s
    if not keep.any():
        raise NoOverlap("no estimate has a reference sample within tolerance")
    return Pairs(
        est=est.bpm[keep],
        ref=ref.bpm[nearest[keep]],
        timestamp_s=est.timestamp_s[keep],
        n_dropped=int((~keep).sum()),
    )


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AgreementStats:
    n: int
    pearson_r: float
    mean_err_bpm: float
    sd_err_bpm: float
    loa_lo_bpm: float
    loa_hi_bpm: float

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _unzip(pairs):
    if isinstance(pairs, Pairs):
        return pairs.est.astype(np.float64), pairs.ref.astype(np.float64)
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DataError("pairs must be a sequence of (est, ref)")
    return arr[:, 0], arr[:, 1]


def pearson(pairs) -> float:
    x, y = _unzip(pairs)
    if x.size < 3:
        raise TooFewSamples(f"pearson needs n >= 3, got {x.size}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = np.dot(dx, dx)
    syy = np.dot(dy, dy)
    if sxx == 0 or syy == 0:
        raise DegenerateVariance("one of the series is constant")
    r = np.dot(dx, dy) / math.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def bland_altman(pairs) -> AgreementStats:
    """Bias, sample SD and 95 % limits of agreement of ``est - ref``.

    ``pearson_r`` is NaN when the correlation is undefined (n < 3 or a
    constant series).
    """
    x, y = _unzip(pairs)
    if x.size < 2:
        raise TooFewSamples(f"bland_altman needs n >= 2, got {x.size}")
    err = x - y
    mean = float(err.mean())
    sd = float(err.std(ddof=1))
    try:
        r = pearson(pairs)
    except (TooFewSamples, DegenerateVariance):
        r = math.nan
    return AgreementStats(
        n=int(x.size),
        pearson_r=r,
        mean_err_bpm=mean,
        sd_err_bpm=sd,
        loa_lo_bpm=mean - 1.96 * sd,
        loa_hi_bpm=mean + 1.96 * sd,
    )


def agreement(pairs) -> AgreementStats:
    """Like :func:`bland_altman` but raises when the correlation is undefined."""
    r = pearson(pairs)
    stats = bland_altman(pairs)
    return AgreementStats(**{**asdict(stats), "pearson_r": r})


def convert_public_dataset(src, dst):
    """Convert a recording from the published open dataset.

    The dataset layout has not been inspected yet, so there is nothing to map.
    """
    raise NotImplementedError(
        "dataset layout not yet inspected; convert to the USHR0001 container manually"
    )
