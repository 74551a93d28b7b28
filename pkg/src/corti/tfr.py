"""Short-time Fourier analysis and weighted overlap-add synthesis.

Frame ``i`` covers samples ``[i*hop, i*hop + window_size)``; the signal tail
is zero-padded so that every sample lies in at least one frame. The phase
reference is absolute time,

    S[i, j] = sum_n s[n] w[n - i*hop] exp(-2 pi i n j / window_size),

which is the complex conjugate of the ``exp(+2 pi i t w)`` form (only |S|
enters the lift, so the sign is immaterial there). Only the non-negative
half spectrum is stored; synthesis uses ``irfft`` and is therefore real.
"""

from dataclasses import dataclass, field
import csv
import math
import struct

import numpy as np

from .errors import ConfigError, DomainError
from .signal_io import Signal

WINDOW_KINDS = ("hann", "hamming", "blackman")


def _window_terms(kind):
    # generalized cosine windows: w(m) = sum_k (-1)^k a_k cos(2 pi k m / N)
    if kind == "hann":
        return (0.5, 0.5)
    if kind == "hamming":
        return (0.54, 0.46)
    if kind == "blackman":
        return (0.42, 0.5, 0.08)
    raise ConfigError(f"unknown window kind {kind!r}; choose from {WINDOW_KINDS}", "tfr")


def make_window(kind, size):
    """Periodic window of ``size`` samples with values in [0, 1]."""
    m = np.arange(size)
    w = np.zeros(size)
    for k, a in enumerate(_window_terms(kind)):
        w += (-1) ** k * a * np.cos(2 * np.pi * k * m / size)
    return np.clip(w, 0.0, 1.0)


def window_derivative(kind, size):
    """Derivative of :func:`make_window` with respect to the sample index."""
    m = np.arange(size)
    dw = np.zeros(size)
    for k, a in enumerate(_window_terms(kind)):
        dw -= (-1) ** k * a * (2 * np.pi * k / size) * np.sin(2 * np.pi * k * m / size)
    return dw


@dataclass(frozen=True)
class StftConfig:
    window_size: int
    hop: int
    window_kind: str = "hann"

    def __post_init__(self):
        if self.window_size < 4 or self.window_size % 2:
            raise ConfigError(f"window_size must be an even integer >= 4, got {self.window_size}", "tfr")
        if not 0 < self.hop <= self.window_size:
            raise ConfigError(f"hop must satisfy 0 < hop <= window_size, got {self.hop}", "tfr")
        w = self.window
        if w.min() < 0 or w.max() > 1:
            raise ConfigError("window values must lie in [0, 1]", "tfr")
        # canonical dual window: analysis * synthesis overlap-adds to exactly 1
        norm = self.overlap_norm
        if norm.min() <= 1e-10 * norm.max():
            raise ConfigError(
                f"{self.window_kind} window with hop {self.hop} does not overlap-add "
                "to a positive envelope", "tfr")
        dual = w / np.tile(norm, self.window_size // self.hop + 1)[:self.window_size]
        total = self._periodic_sum(w * dual)
        if np.max(np.abs(total - 1.0)) > 1e-10:
            raise ConfigError("analysis/synthesis pair fails the overlap-add check", "tfr")

    @property
    def window(self):
        return make_window(self.window_kind, self.window_size)

    def _periodic_sum(self, values):
        out = np.zeros(self.hop)
        for start in range(0, self.window_size, self.hop):
            chunk = values[start:start + self.hop]
            out[:chunk.size] += chunk
        return out

    @property
    def overlap_norm(self):
        """Steady-state sum of squared shifted windows, one value per hop phase."""
        return self._periodic_sum(self.window ** 2)

    def to_dict(self):
        return {"window_size": self.window_size, "hop": self.hop, "window_kind": self.window_kind}


def default_config(sample_rate, frame_ms=23.0, window_kind="hann"):
    """Window of ``frame_ms`` rounded up to a power of two; hop of a quarter window."""
    size = 2 ** math.ceil(math.log2(frame_ms * 1e-3 * sample_rate))
    size = max(size, 16)
    return StftConfig(window_size=size, hop=size // 4, window_kind=window_kind)


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Half-spectrum STFT, ``values[frame, bin]``."""

    values: np.ndarray
    frame_times: np.ndarray
    bin_freqs: np.ndarray
    config: StftConfig
    sample_rate: float
    n_samples: int
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise DomainError("spectrogram contains non-finite values", "tfr")

    @property
    def shape(self):
        return self.values.shape

    @property
    def hop_time(self):
        return self.config.hop / self.sample_rate

    @property
    def bin_width(self):
        return self.sample_rate / self.config.window_size

    def with_values(self, values, **provenance):
        return Spectrogram(np.asarray(values, dtype=np.complex128), self.frame_times,
                           self.bin_freqs, self.config, self.sample_rate, self.n_samples,
                           {**self.provenance, **provenance})

    def _phase(self, sign):
        i = np.arange(self.shape[0])[:, None]
        j = np.arange(self.shape[1])[None, :]
        ph = (i * self.config.hop * j) % self.config.window_size
        return np.exp(sign * 2j * np.pi * ph / self.config.window_size)

    def local_frames(self):
        """Windowed time-domain frames recovered from the stored spectrum."""
        return np.fft.irfft(self.values * self._phase(+1), n=self.config.window_size, axis=1)

    def check_axes(self):
        n_frames, n_bins = self.shape
        cfg = self.config
        if n_bins != cfg.window_size // 2 + 1 or self.bin_freqs.size != n_bins:
            raise DomainError(f"expected {cfg.window_size // 2 + 1} frequency bins, got {n_bins}", "tfr")
        if self.frame_times.size != n_frames:
            raise DomainError("frame_times length does not match the number of frames", "tfr")
        expect_f = np.arange(n_bins) * self.bin_width
        if not np.allclose(self.bin_freqs, expect_f, rtol=1e-12, atol=0):
            raise DomainError("bin_freqs inconsistent with sample_rate/window_size", "tfr")
        expect_t = np.arange(n_frames) * self.hop_time
        if not np.allclose(self.frame_times, expect_t, rtol=1e-12, atol=1e-15):
            raise DomainError("frame_times inconsistent with hop/sample_rate", "tfr")


def n_frames_for(n_samples, config):
    if n_samples < config.window_size:
        raise DomainError(
            f"signal of {n_samples} samples is shorter than one window ({config.window_size})", "tfr")
    return 1 + -(-(n_samples - config.window_size) // config.hop)


def stft(signal, config):
    """Half-spectrum STFT of ``signal`` (see module docstring for conventions)."""
    W, hop = config.window_size, config.hop
    n_frames = n_frames_for(len(signal), config)
    padded = np.zeros((n_frames - 1) * hop + W)
    padded[:len(signal)] = signal.samples
    frames = np.lib.stride_tricks.sliding_window_view(padded, W)[::hop][:n_frames]
    local = np.fft.rfft(frames * config.window, axis=1)
    spec = Spectrogram(local, np.arange(n_frames) * hop / signal.sample_rate,
                       np.arange(W // 2 + 1) * signal.sample_rate / W,
                       config, float(signal.sample_rate), len(signal))
    return spec.with_values(local * spec._phase(-1))


def istft(spec):
    """Weighted overlap-add inverse of :func:`stft`, exact on the fully
    overlapped interior."""
    spec.check_axes()
    cfg = spec.config
    W, hop = cfg.window_size, cfg.hop
    w = cfg.window
    frames = spec.local_frames()
    n_frames = frames.shape[0]
    total = (n_frames - 1) * hop + W
    acc = np.zeros(total)
    norm = np.zeros(total)
    idx = np.arange(n_frames)[:, None] * hop + np.arange(W)[None, :]
    np.add.at(acc, idx.ravel(), (frames * w).ravel())
    np.add.at(norm, idx.ravel(), np.broadcast_to(w * w, frames.shape).ravel())
    # Near the ends fewer frames overlap and the exact least-squares divisor
    # tends to w**2 -> 0, which would amplify any inconsistency of a processed
    # spectrogram without bound; flooring at the steady-state minimum leaves
    # the fully overlapped interior exact and fades the ends instead.
    out = acc / np.maximum(norm, cfg.overlap_norm.min())
    n = spec.n_samples
    if total >= n:
        out = out[:n]
    else:
        out = np.concatenate([out, np.zeros(n - total)])
    return Signal(out, spec.sample_rate)


# ------------------------------------------------------------------ dumps

_DUMP_MAGIC = b"CSPC"


def dump_csv(spec, path):
    """Write ``frame_time,bin_freq,re,im`` rows, frame-major."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame_time", "bin_freq", "re", "im"])
        for i, t in enumerate(spec.frame_times):
            for j, f in enumerate(spec.bin_freqs):
                z = spec.values[i, j]
                w.writerow([repr(float(t)), repr(float(f)), repr(float(z.real)), repr(float(z.imag))])


def dump_binary(spec, path):
    """Binary layout: ``b"CSPC"``, u32 version=1, u32 n_frames, u32 n_bins,
    f64 sample_rate, u32 window_size, u32 hop, then complex128 (little-endian,
    row-major ``[frame][bin]``)."""
    n_frames, n_bins = spec.shape
    header = struct.pack("<4sIIIdII", _DUMP_MAGIC, 1, n_frames, n_bins, spec.sample_rate,
                         spec.config.window_size, spec.config.hop)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(spec.values, dtype="<c16").tobytes())


def load_binary(path):
    """Read a file written by :func:`dump_binary`; returns (values, sample_rate, window_size, hop)."""
    with open(path, "rb") as fh:
        data = fh.read()
    size = struct.calcsize("<4sIIIdII")
    magic, version, n_frames, n_bins, rate, W, hop = struct.unpack_from("<4sIIIdII", data)
    if magic != _DUMP_MAGIC or version != 1:
        raise DomainError(f"{path}: not a spectrogram dump", "tfr")
    values = np.frombuffer(data, dtype="<c16", offset=size).reshape(n_frames, n_bins)
    return values, rate, W, hop
