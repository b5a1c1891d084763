"""Saturating q1.15 kernels with floating-point counterparts.

Q15 buffers are ``numpy.int16`` arrays; a raw value ``r`` represents ``r / 32768``.
Complex buffers interleave ``(re, im)`` pairs along the last axis, so a buffer of
``n`` complex values has ``2 * n`` int16 entries. Every kernel accepts leading
batch dimensions and operates along the last axis.

Overflow policy of the FFTs: each radix-2 stage halves its output, so the total
gain is ``1 / nfft`` and no stage can overflow. Narrowing always rounds half
away from zero.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .core import UshrError

Q15_MIN = -32768
Q15_MAX = 32767
Q15_ONE = 32768

# twiddles are held with 30 fractional bits so that their quantisation is
# negligible next to the per-stage rounding
_TW_BITS = 30


class KernelError(UshrError, ValueError):
    pass


class ShiftTooLarge(KernelError):
    pass


class LengthMismatch(KernelError):
    pass


class NotPowerOfTwo(KernelError):
    pass


class EmptyBuffer(KernelError):
    pass


def _as_q15(buf) -> np.ndarray:
    arr = np.asarray(buf)
    if arr.dtype != np.int16:
        if not np.issubdtype(arr.dtype, np.integer):
            raise TypeError(f"q15 buffers must be integer arrays, got {arr.dtype}")
        if arr.size and (arr.min() < Q15_MIN or arr.max() > Q15_MAX):
            raise ValueError("values outside the int16 range")
        arr = arr.astype(np.int16)
    return arr


def saturate(x) -> np.ndarray:
    """Clamp a wide integer array to int16."""
    return np.clip(x, Q15_MIN, Q15_MAX).astype(np.int16)


def round_shift(x: np.ndarray, bits: int) -> np.ndarray:
    """Divide an int64 array by ``2**bits``, rounding half away from zero."""
    if bits <= 0:
        return x << -bits
    half = np.int64(1) << (bits - 1)
    mag = (np.abs(x) + half) >> bits
    return np.where(x < 0, -mag, mag)


def float_to_q15(x) -> np.ndarray:
    """Quantise real values (nominally in [-1, 1)) to q1.15 with saturation."""
    scaled = np.asarray(x, dtype=np.float64) * Q15_ONE
    return saturate(np.sign(scaled) * np.floor(np.abs(scaled) + 0.5))


def q15_to_float(buf) -> np.ndarray:
    return np.asarray(buf, dtype=np.float64) / Q15_ONE


def to_complex(buf) -> np.ndarray:
    """Interleaved int16 (..., 2n) -> complex128 (..., n) in raw LSB units."""
    arr = np.asarray(buf, dtype=np.float64)
    return arr[..., 0::2] + 1j * arr[..., 1::2]


def from_complex(z) -> np.ndarray:
    """complex (..., n) -> interleaved int16 (..., 2n), rounded and saturated."""
    z = np.asarray(z)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],), dtype=np.float64)
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return saturate(np.sign(out) * np.floor(np.abs(out) + 0.5))


# ---------------------------------------------------------------------------
# element-wise kernels
# ---------------------------------------------------------------------------

def shift_sat(buf, bits: int) -> np.ndarray:
    """Multiply by ``2**bits`` with saturation; negative ``bits`` shift right
    arithmetically (floor)."""
    if abs(bits) > 15:
        raise ShiftTooLarge(f"|bits| must be <= 15, got {bits}")
    x = _as_q15(buf).astype(np.int32)
    if bits >= 0:
        return saturate(x << bits)
    return (x >> -bits).astype(np.int16)


def _binary(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = _as_q15(a)
    b = _as_q15(b)
    if a.shape != b.shape:
        raise LengthMismatch(f"shape {a.shape} != {b.shape}")
    return a.astype(np.int32), b.astype(np.int32)


def add_sat(acc, x) -> np.ndarray:
    a, b = _binary(acc, x)
    return saturate(a + b)


def sub_sat(a, b) -> np.ndarray:
    a, b = _binary(a, b)
    return saturate(a - b)


def cmplx_mag(buf) -> np.ndarray:
    """Magnitude of an interleaved complex q15 buffer, returned as ``|z| / 2``.

    The halving keeps ``|z|`` up to sqrt(2) representable.
    """
    arr = _as_q15(buf).astype(np.int64)
    if arr.shape[-1] % 2:
        raise LengthMismatch("interleaved complex buffer has odd length")
    power = arr[..., 0::2] ** 2 + arr[..., 1::2] ** 2
    half_mag = np.sqrt(power.astype(np.float64)) / 2.0
    return saturate(np.floor(half_mag + 0.5))


def argmax(buf) -> tuple[int, int]:
    """Return ``(index, value)`` of the first maximum."""
    arr = np.asarray(buf)
    if arr.ndim != 1:
        raise ValueError("argmax expects a 1-D buffer")
    if arr.size == 0:
        raise EmptyBuffer("argmax of an empty buffer")
    idx = int(np.argmax(arr))
    return idx, arr[idx].item()


# ---------------------------------------------------------------------------
# FFTs
# ---------------------------------------------------------------------------

def _check_pow2(nfft: int) -> None:
    if nfft < 2 or nfft & (nfft - 1):
        raise NotPowerOfTwo(f"nfft must be a power of two >= 2, got {nfft}")


@lru_cache(maxsize=None)
def _bitrev(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


@lru_cache(maxsize=None)
def _twiddles(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Rounded ``exp(-2j*pi*k/m)`` for k < m/2, in Q30."""
    k = np.arange(m // 2)
    angle = -2.0 * np.pi * k / m
    scale = float(1 << _TW_BITS)
    wr = np.round(np.cos(angle) * scale).astype(np.int64)
    wi = np.round(np.sin(angle) * scale).astype(np.int64)
    return wr, wi


def _fft_int(re: np.ndarray, im: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Radix-2 DIT over the last axis of int64 arrays, halving at every stage."""
    n = re.shape[-1]
    rev = _bitrev(n)
    re = re[..., rev]
    im = im[..., rev]
    lead = re.shape[:-1]
    m = 2
    while m <= n:
        half = m // 2
        wr, wi = _twiddles(m)
        re = re.reshape(lead + (n // m, m))
        im = im.reshape(lead + (n // m, m))
        ar, ai = re[..., :half] << _TW_BITS, im[..., :half] << _TW_BITS
        br, bi = re[..., half:], im[..., half:]
        tr = br * wr - bi * wi
        ti = br * wi + bi * wr
        top_r = np.clip(round_shift(ar + tr, _TW_BITS + 1), Q15_MIN, Q15_MAX)
        top_i = np.clip(round_shift(ai + ti, _TW_BITS + 1), Q15_MIN, Q15_MAX)
        bot_r = np.clip(round_shift(ar - tr, _TW_BITS + 1), Q15_MIN, Q15_MAX)
        bot_i = np.clip(round_shift(ai - ti, _TW_BITS + 1), Q15_MIN, Q15_MAX)
        re = np.concatenate([top_r, bot_r], axis=-1).reshape(lead + (n,))
        im = np.concatenate([top_i, bot_i], axis=-1).reshape(lead + (n,))
        m *= 2
    return re, im


def _interleave(re: np.ndarray, im: np.ndarray) -> np.ndarray:
    out = np.empty(re.shape[:-1] + (2 * re.shape[-1],), dtype=np.int16)
    out[..., 0::2] = re
    out[..., 1::2] = im
    return out


def rfft_q15(buf, nfft: int) -> np.ndarray:
    """Real-input FFT returning ``nfft // 2 + 1`` interleaved complex bins.

    Input shorter than ``nfft`` is zero padded. Output bin ``k`` approximates
    ``DFT(x)[k] / nfft``.
    """
    _check_pow2(nfft)
    x = _as_q15(buf)
    n = x.shape[-1]
    if n == 0:
        raise EmptyBuffer("rfft of an empty buffer")
    if n > nfft:
        raise LengthMismatch(f"buffer length {n} exceeds nfft {nfft}")
    re = np.zeros(x.shape[:-1] + (nfft,), dtype=np.int64)
    re[..., :n] = x
    im = np.zeros_like(re)
    re, im = _fft_int(re, im)
    keep = nfft // 2 + 1
    return _interleave(re[..., :keep], im[..., :keep])


def cfft_q15(buf, nfft: int) -> np.ndarray:
    """Complex FFT of an interleaved buffer holding exactly ``nfft`` values.

    Same ``1 / nfft`` scaling contract as :func:`rfft_q15`.
    """
    _check_pow2(nfft)
    x = _as_q15(buf)
    if x.shape[-1] != 2 * nfft:
        raise LengthMismatch(
            f"complex buffer holds {x.shape[-1] / 2:g} values, expected {nfft}"
        )
    re, im = _fft_int(x[..., 0::2].astype(np.int64), x[..., 1::2].astype(np.int64))
    return _interleave(re, im)


# ---------------------------------------------------------------------------
# floating-point counterparts (same 1/nfft contract, unscaled magnitude)
# ---------------------------------------------------------------------------

def rfft_float(x, nfft: int) -> np.ndarray:
    _check_pow2(nfft)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] > nfft:
        raise LengthMismatch(f"buffer length {x.shape[-1]} exceeds nfft {nfft}")
    return np.fft.rfft(x, n=nfft, norm="forward")


def cfft_float(z, nfft: int) -> np.ndarray:
    _check_pow2(nfft)
    z = np.asarray(z, dtype=np.complex128)
    if z.shape[-1] != nfft:
        raise LengthMismatch(f"complex buffer holds {z.shape[-1]} values, expected {nfft}")
    return np.fft.fft(z, norm="forward")


def cmplx_mag_float(z) -> np.ndarray:
    return np.abs(z)


def dft_oracle(x, n: int | None = None) -> np.ndarray:
    """Unscaled O(n^2) DFT evaluated directly in double precision."""
    x = np.asarray(x, dtype=np.complex128)
    if n is None:
        n = x.shape[-1]
    if x.shape[-1] != n:
        raise LengthMismatch(f"length {x.shape[-1]} != n {n}")
    k = np.arange(n)
    # reduce k*j mod n before the trig call to keep the phase exact
    phase = (np.outer(k, k) % n) * (-2.0 * np.pi / n)
    return x @ np.exp(1j * phase).T
