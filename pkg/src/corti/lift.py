"""Chirpiness field, Cauchy-truncated chirpiness grid, lift and projection.

The chirpiness ``nu`` at a time-frequency point is the slope of the level
line of ``|S|`` through it, ``nu * d|S|/domega + d|S|/dtau = 0``. Both
partial derivatives are evaluated exactly from the spectrogram with
derivative windows (each windowed frame is recovered by an inverse FFT), so
a linear chirp of rate ``r`` yields ``nu == r`` along its ridge. Entries
where ``d|S|/domega`` vanishes have unbounded chirpiness and are masked.

The lift places the complex value ``S(tau, omega)`` into the single
chirpiness slot nearest to ``nu(tau, omega)``. Out-of-range values go to the
boundary slot and masked values to the central slot, so the projection
(a plain sum over chirpiness) inverts the lift exactly.
"""

from dataclasses import dataclass, field
import csv

import numpy as np

from .chirpstats import fit_cauchy
from .errors import DomainError
from .tfr import Spectrogram, window_derivative

DEFAULT_ETA = 1e-8
DEFAULT_P = 0.95
DEFAULT_N_NU = 41


@dataclass(frozen=True, eq=False)
class ChirpinessField:
    """Chirpiness in Hz/s on the spectrogram grid; ``nu`` is NaN where masked."""

    nu: np.ndarray
    mask: np.ndarray
    grad_tau: np.ndarray
    grad_omega: np.ndarray
    frame_times: np.ndarray
    bin_freqs: np.ndarray

    def samples(self):
        """Unmasked chirpiness values, frame-major."""
        return self.nu[~self.mask]

    @property
    def n_unmasked(self):
        return int(np.count_nonzero(~self.mask))


def magnitude_gradients(spec):
    """Exact ``(d|S|/dtau, d|S|/domega)`` in units of 1/s and 1/Hz.

    With frame-local transforms ``S(tau, f) = sum_m x(tau + m/sr) w(m) e^{-2 pi i f m / sr}``:
    ``dS/df`` uses the window ``-2 pi i m w(m) / sr`` and, after integrating
    by parts, ``d|S|/dtau = -Re(conj(S) S_w') / |S|`` with ``S_w'`` the
    transform under the window derivative ``dw/dt``.
    """
    cfg = spec.config
    sr = spec.sample_rate
    W = cfg.window_size
    frames = spec.local_frames()                     # x(tau + m/sr) * w(m)
    m = np.arange(W)
    w = cfg.window
    dw = window_derivative(cfg.window_kind, W) * sr  # per second
    ratio = np.zeros(W)
    nz = w > 1e-12
    ratio[nz] = dw[nz] / w[nz]

    S = np.fft.rfft(frames, axis=1)
    dS_df = (-2j * np.pi / sr) * np.fft.rfft(frames * m, axis=1)
    S_dw = np.fft.rfft(frames * ratio, axis=1)

    mag = np.abs(S)
    safe = np.where(mag > 0, mag, 1.0)
    grad_omega = np.where(mag > 0, np.real(np.conj(S) * dS_df) / safe, 0.0)
    grad_tau = np.where(mag > 0, -np.real(np.conj(S) * S_dw) / safe, 0.0)
    return grad_tau, grad_omega


def chirpiness_field(spec, eta=DEFAULT_ETA):
    """Chirpiness ``-grad_tau / grad_omega``, masked where
    ``|grad_omega| <= eta * max|grad_omega|``."""
    n_frames, n_bins = spec.shape
    if n_frames < 3 or n_bins < 3:
        raise DomainError(f"need >= 3 frames and >= 3 bins, got {spec.shape}", "lift")
    grad_tau, grad_omega = magnitude_gradients(spec)
    scale = np.max(np.abs(grad_omega))
    mask = np.abs(grad_omega) <= eta * scale
    nu = np.full(spec.shape, np.nan)
    nu[~mask] = -grad_tau[~mask] / grad_omega[~mask]
    return ChirpinessField(nu, mask, grad_tau, grad_omega, spec.frame_times, spec.bin_freqs)


@dataclass(frozen=True, eq=False)
class NuGrid:
    centers: np.ndarray
    half_width: float
    p_value: float
    fit: object

    @property
    def spacing(self):
        return 2 * self.half_width / (self.centers.size - 1)

    @property
    def center_index(self):
        return (self.centers.size - 1) // 2

    def to_dict(self):
        return {"n_nu": int(self.centers.size), "half_width": self.half_width,
                "spacing": self.spacing, "p_value": self.p_value,
                "x0": self.fit.x0, "gamma": self.fit.gamma, "n_samples": self.fit.n}


def chirpiness_resolution(spec):
    """Smallest chirpiness the analysis window can tell apart from zero: one
    frequency bin per window duration, ``sr**2 / window_size**2`` Hz/s."""
    return spec.sample_rate ** 2 / spec.config.window_size ** 2


def build_nu_grid(field, p=DEFAULT_P, n_nu=DEFAULT_N_NU, min_samples=100, min_half_width=0.0):
    """Uniform grid of ``n_nu`` points spanning the Cauchy interval of level ``p``.

    The half width is at least ``min_half_width``: stationary tones otherwise
    give a grid as narrow as the floating-point round-off in their chirpiness.
    A fitted scale of exactly zero is still an error.
    """
    if not 0 < p < 1:
        raise DomainError(f"confidence level must be in (0, 1), got {p}", "lift")
    if n_nu < 3 or n_nu % 2 == 0:
        raise DomainError(f"n_nu must be odd and >= 3, got {n_nu}", "lift")
    values = field.samples() if isinstance(field, ChirpinessField) else np.asarray(field, float)
    if values.size < min_samples:
        raise DomainError(
            f"only {values.size} unmasked chirpiness values (need {min_samples}); "
            "use a longer signal", "lift")
    fit = fit_cauchy(values)
    if not fit.gamma > 0:
        raise DomainError(
            "degenerate scale: chirpiness interquartile range is zero "
            "(is the input a pure stationary tone?)", "lift")
    half = max(fit.gamma * np.tan(p * np.pi / 2), float(min_half_width))
    c = (n_nu - 1) / 2
    u = (np.arange(n_nu) - c) / c
    return NuGrid(fit.x0 + half * u, float(half), p, fit)


@dataclass(frozen=True, eq=False)
class LiftedImage:
    """Complex tensor ``values[frame, bin, nu_slot]``.

    ``mode`` is ``"mass"`` when slots hold assigned spectrogram values (plain
    sum projects back) or ``"density"`` when they hold a density in nu
    (projection multiplies by the grid spacing).
    """

    values: np.ndarray
    nu_centers: np.ndarray
    source: Spectrogram
    mode: str = "mass"
    provenance: dict = field(default_factory=dict)

    @property
    def frame_times(self):
        return self.source.frame_times

    @property
    def bin_freqs(self):
        return self.source.bin_freqs

    @property
    def nu_spacing(self):
        return float(self.nu_centers[1] - self.nu_centers[0])

    def with_values(self, values, mode=None, **provenance):
        return LiftedImage(values, self.nu_centers, self.source, mode or self.mode,
                           {**self.provenance, **provenance})


def slot_indices(field, grid):
    """Chirpiness slot of every (frame, bin); masked entries map to the centre."""
    lo = grid.centers[0]
    q = np.full(field.nu.shape, grid.center_index, dtype=np.intp)
    live = ~field.mask
    q[live] = np.clip(np.rint((field.nu[live] - lo) / grid.spacing), 0, grid.centers.size - 1)
    return q


def lift(spec, field, grid):
    """Dirac lift of ``spec`` onto the chirpiness grid."""
    if field.nu.shape != spec.shape:
        raise DomainError("chirpiness field and spectrogram shapes differ", "lift")
    q = slot_indices(field, grid)
    values = np.zeros(spec.shape + (grid.centers.size,), dtype=np.complex128)
    i, j = np.indices(spec.shape)
    values[i, j, q] = spec.values
    return LiftedImage(values, grid.centers.copy(), spec, "mass",
                       {"n_masked": int(np.count_nonzero(field.mask))})


def project(img):
    """Integrate ``img`` over chirpiness back to a spectrogram."""
    total = img.values.sum(axis=2)
    if img.mode == "density":
        total = total * img.nu_spacing
    return img.source.with_values(total, projected_from=img.mode)


def dump_chirpiness_csv(field, path):
    """``frame_time,bin_freq,nu,masked`` rows; masked rows leave ``nu`` empty."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame_time", "bin_freq", "nu", "masked"])
        for i, t in enumerate(field.frame_times):
            for j, f in enumerate(field.bin_freqs):
                masked = bool(field.mask[i, j])
                w.writerow([repr(float(t)), repr(float(f)),
                            "" if masked else repr(float(field.nu[i, j])), int(masked)])
