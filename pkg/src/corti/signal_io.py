"""Audio signals: WAV input/output, synthetic test signals and additive noise."""

from dataclasses import dataclass
import logging
import struct

import numpy as np

from .errors import DomainError, FormatError

log = logging.getLogger(__name__)

#: Name of the bit generator used by :func:`add_noise`; recorded in reports.
NOISE_RNG = "numpy.random.PCG64"

_FORMAT_NAMES = {
    0x0001: "PCM",
    0x0002: "MS-ADPCM",
    0x0003: "IEEE float",
    0x0006: "A-law",
    0x0007: "mu-law",
    0x0011: "IMA-ADPCM",
    0x0031: "GSM 6.10",
    0x0050: "MPEG",
    0x0055: "MPEG Layer 3",
    0xFFFE: "WAVE_FORMAT_EXTENSIBLE",
}


@dataclass(frozen=True, eq=False)
class Signal:
    """A mono sampled waveform.

    Attributes:
        samples: 1-D float64 array, read-only.
        sample_rate: samples per second (Hz).
    """

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise DomainError(f"samples must be 1-D, got shape {samples.shape}", "signal_io")
        if not self.sample_rate > 0:
            raise DomainError(f"sample_rate must be positive, got {self.sample_rate}", "signal_io")
        bad = np.count_nonzero(~np.isfinite(samples))
        if bad:
            raise DomainError(f"{bad} non-finite samples", "signal_io")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self):
        return self.samples.size / self.sample_rate

    def with_samples(self, samples):
        """Return a new Signal at the same rate."""
        return Signal(samples, self.sample_rate)


# --------------------------------------------------------------------- WAV

def _format_name(tag, bits):
    name = _FORMAT_NAMES.get(tag, f"format tag 0x{tag:04X}")
    return f"{name} {bits}-bit"


def read_wav(path):
    """Read a RIFF/WAVE file into a mono :class:`Signal`.

    Supports PCM 16/24-bit and IEEE float-32, including the
    WAVE_FORMAT_EXTENSIBLE wrapper. Channels are averaged; integer codes are
    divided by ``2**(bits-1)``.
    """
    with open(path, "rb") as fh:
        data = fh.read()

    if len(data) < 12:
        raise FormatError(f"{path}: truncated RIFF header at byte offset {len(data)}", "signal_io")
    if data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file", "signal_io")

    fmt = None
    payload = None
    offset = 12
    while offset < len(data):
        if offset + 8 > len(data):
            raise FormatError(f"{path}: truncated chunk header at byte offset {offset}", "signal_io")
        chunk_id = data[offset:offset + 4]
        (size,) = struct.unpack_from("<I", data, offset + 4)
        body = offset + 8
        if body + size > len(data):
            if chunk_id == b"data" and fmt is not None:
                raise FormatError(
                    f"{path}: truncated data chunk at byte offset {len(data)} "
                    f"(expected {size} bytes from offset {body})", "signal_io")
            raise FormatError(
                f"{path}: truncated '{chunk_id.decode('latin-1')}' chunk at byte offset {len(data)}",
                "signal_io")
        if chunk_id == b"fmt ":
            if size < 16:
                raise FormatError(f"{path}: fmt chunk too short at byte offset {body}", "signal_io")
            tag, channels, rate, _, block_align, bits = struct.unpack_from("<HHIIHH", data, body)
            if tag == 0xFFFE and size >= 40:
                (tag,) = struct.unpack_from("<H", data, body + 24)
            fmt = (tag, channels, rate, block_align, bits)
        elif chunk_id == b"data":
            payload = (body, size)
        offset = body + size + (size & 1)

    if fmt is None:
        raise FormatError(f"{path}: missing fmt chunk", "signal_io")
    if payload is None:
        raise FormatError(f"{path}: missing data chunk", "signal_io")

    tag, channels, rate, block_align, bits = fmt
    if channels < 1:
        raise FormatError(f"{path}: invalid channel count {channels}", "signal_io")
    start, size = payload
    raw = data[start:start + size]
    width = bits // 8
    n_frames = size // (width * channels) if width else 0

    if tag == 0x0001 and bits == 16:
        codes = np.frombuffer(raw, dtype="<i2", count=n_frames * channels).astype(np.float64)
        values = codes / 2.0**15
    elif tag == 0x0001 and bits == 24:
        b = np.frombuffer(raw, dtype=np.uint8, count=n_frames * channels * 3).reshape(-1, 3)
        codes = b[:, 0].astype(np.int32) | (b[:, 1].astype(np.int32) << 8) | (b[:, 2].astype(np.int32) << 16)
        codes = np.where(codes & 0x800000, codes - (1 << 24), codes)
        values = codes.astype(np.float64) / 2.0**23
    elif tag == 0x0003 and bits == 32:
        values = np.frombuffer(raw, dtype="<f4", count=n_frames * channels).astype(np.float64)
    else:
        raise FormatError(f"{path}: unsupported format {_format_name(tag, bits)}", "signal_io")

    values = values.reshape(n_frames, channels).mean(axis=1)
    return Signal(values, float(rate))


def write_wav(signal, path, bit_depth=16):
    """Write ``signal`` as a mono WAV file.

    Args:
        bit_depth: 16, 24 or ``"f32"``.

    Returns:
        Number of samples outside [-1, 1] that were clipped (always 0 for f32).
    """
    x = signal.samples
    clipped = int(np.count_nonzero(np.abs(x) > 1.0))
    if bit_depth in ("f32", "float32", 32):
        tag, bits = 0x0003, 32
        payload = x.astype("<f4").tobytes()
        clipped = 0
    elif bit_depth in (16, 24, "16", "24"):
        bits = int(bit_depth)
        tag = 0x0001
        full = 2 ** (bits - 1)
        codes = np.clip(np.round(x * full), -full, full - 1).astype(np.int32)
        if bits == 16:
            payload = codes.astype("<i2").tobytes()
        else:
            u = (codes & 0xFFFFFF).astype("<u4")
            payload = u.view(np.uint8).reshape(-1, 4)[:, :3].tobytes()
    else:
        raise DomainError(f"unsupported bit depth {bit_depth!r}; use 16, 24 or f32", "signal_io")

    if clipped:
        log.warning("write_wav: clipped %d samples to [-1, 1]", clipped)

    rate = int(round(signal.sample_rate))
    block_align = bits // 8
    header = struct.pack("<4sI4s", b"RIFF", 36 + len(payload) + (len(payload) & 1), b"WAVE")
    fmt = struct.pack("<4sIHHIIHH", b"fmt ", 16, tag, 1, rate, rate * block_align, block_align, bits)
    chunk = struct.pack("<4sI", b"data", len(payload))
    pad = b"\x00" if len(payload) & 1 else b""
    try:
        with open(path, "wb") as fh:
            fh.write(header + fmt + chunk + payload + pad)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return clipped


# --------------------------------------------------------------- synthesis

def _n_samples(duration, sample_rate):
    if duration <= 0:
        raise DomainError(f"duration must be positive, got {duration}", "signal_io")
    if sample_rate <= 0:
        raise DomainError(f"sample_rate must be positive, got {sample_rate}", "signal_io")
    return int(round(duration * sample_rate))


def gen_sine(freq, duration, sample_rate, amplitude=1.0):
    """``amplitude * sin(2 pi freq n / sample_rate)``."""
    n = _n_samples(duration, sample_rate)
    if not 0 < freq < sample_rate / 2:
        raise DomainError(f"frequency {freq} Hz outside (0, {sample_rate / 2}) Hz", "signal_io")
    t = np.arange(n) / sample_rate
    return Signal(amplitude * np.sin(2 * np.pi * freq * t), sample_rate)


def gen_chirp(f0, rate, duration, sample_rate, amplitude=1.0):
    """Linear chirp with instantaneous frequency ``f0 + rate * t``."""
    n = _n_samples(duration, sample_rate)
    nyq = sample_rate / 2
    f_end = f0 + rate * duration
    if not (0 < f0 < nyq and 0 < f_end < nyq):
        raise DomainError(
            f"instantaneous frequency {f0}..{f_end} Hz leaves (0, {nyq}) Hz", "signal_io")
    t = np.arange(n) / sample_rate
    return Signal(amplitude * np.sin(2 * np.pi * (f0 * t + 0.5 * rate * t * t)), sample_rate)


def gen_vowel(f0=150.0, duration=2.0, sample_rate=8000, vibrato_rate=5.0,
              vibrato_depth=0.03, harmonics=(1.0, 0.6, 0.35), amplitude=0.5):
    """Harmonic tone with sinusoidal vibrato, a crude sustained vowel.

    ``vibrato_depth`` is the relative frequency excursion.
    """
    n = _n_samples(duration, sample_rate)
    if (len(harmonics) * f0 * (1 + vibrato_depth)) >= sample_rate / 2:
        raise DomainError("highest harmonic exceeds the Nyquist frequency", "signal_io")
    t = np.arange(n) / sample_rate
    # phase of f0 * (1 + depth * sin(2 pi r t))
    phase = 2 * np.pi * f0 * (t - vibrato_depth * np.cos(2 * np.pi * vibrato_rate * t)
                              / (2 * np.pi * vibrato_rate))
    x = sum(a * np.sin(k * phase) for k, a in enumerate(harmonics, start=1))
    x = amplitude * x / np.max(np.abs(x))
    return Signal(x, sample_rate)


def add_noise(signal, eps, seed):
    """Add i.i.d. N(0, eps**2) noise drawn from PCG64 seeded with ``seed``."""
    if not eps >= 0:
        raise DomainError(f"noise level must be non-negative, got {eps}", "signal_io")
    if eps == 0:
        return signal
    rng = np.random.Generator(np.random.PCG64(seed))
    return signal.with_samples(signal.samples + eps * rng.standard_normal(len(signal)))
