"""Transition density of the Kolmogorov diffusion on (frequency, chirpiness).

A neuron at ``(omega', nu')`` spreads its excitation along

    d omega = nu dt,    d nu = sqrt(2 b) dW,

whose law at time ``delta`` is Gaussian with mean ``(omega' + nu' delta, nu')``
and covariance ``[[2 b delta^3 / 3, b delta^2], [b delta^2, 2 b delta]]``. The
density solves ``d_t k = -nu d_omega k + b d_nu^2 k``.
"""

from dataclasses import dataclass, field
from functools import cached_property
import csv
import math

import numpy as np
from scipy import sparse
from scipy.special import ndtr

from .errors import DomainError

TRUNCATE_SIGMAS = 6.0
ESCAPE_THRESHOLD = 0.5
FFT_MIN_MASS = 1e-6


@dataclass(frozen=True)
class KernelParams:
    delta: float
    b: float

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError(f"kernel time delta must be positive, got {self.delta}", "kernel")
        if not self.b > 0:
            raise DomainError(f"diffusion strength b must be positive, got {self.b}", "kernel")

    @property
    def covariance(self):
        d, b = self.delta, self.b
        return np.array([[2 * b * d**3 / 3, b * d**2], [b * d**2, 2 * b * d]])


def kolmogorov_density(dst, src, params):
    """Density at ``dst = (omega, nu)`` of the process started at ``src`` (broadcasts)."""
    omega, nu = (np.asarray(v, dtype=np.float64) for v in dst)
    omega0, nu0 = (np.asarray(v, dtype=np.float64) for v in src)
    d, b = params.delta, params.b
    zw = omega - omega0 - nu0 * d
    zn = nu - nu0
    q = 3 * zw**2 / (b * d**3) - 3 * zw * zn / (b * d**2) + zn**2 / (b * d)
    return math.sqrt(3) / (2 * math.pi * b * d**2) * np.exp(-q)


def _uniform_step(axis, name):
    axis = np.asarray(axis, dtype=np.float64)
    if axis.ndim != 1 or axis.size < 3:
        raise DomainError(f"{name} axis needs at least 3 points", "kernel")
    steps = np.diff(axis)
    h = steps.mean()
    if not h > 0 or np.max(np.abs(steps - h)) > 1e-9 * abs(h):
        raise DomainError(f"{name} axis must be uniform and increasing", "kernel")
    return axis, float(h)


@dataclass(frozen=True, eq=False)
class KernelOperator:
    """Row-normalized discrete kernel on an ``(n_omega, n_nu)`` grid.

    ``stencils[p]`` holds ``(slots, offsets, weights[q, k])``: the raw mass
    sent by a source in chirpiness slot ``p`` to slot ``slots[q]`` and
    ``offsets[k]`` frequency bins away (the same for every source frequency). ``raw_row_sums[i, p]`` is the in-grid raw mass of source
    ``(i, p)``; dividing by it makes every row sum to one. ``matrix`` maps a
    raveled field (omega-major) to its image.
    """

    params: KernelParams
    omega_axis: np.ndarray
    nu_axis: np.ndarray
    stencils: list
    raw_row_sums: np.ndarray
    matrix: sparse.csr_matrix
    diagnostics: dict = field(default_factory=dict)

    @property
    def shape(self):
        return (self.omega_axis.size, self.nu_axis.size)

    @cached_property
    def spectral(self):
        """Frequency-domain stencils for FFT convolution along omega.

        Returns ``(kernel_hat[f, p, q], n_fft, inv_mass[i, p], residual)``.
        Sources whose in-grid raw mass is below ``FFT_MIN_MASS`` would amplify
        FFT round-off by ``1/mass``; they are excluded from the convolution
        and applied through ``residual``, a sparse matrix over their columns.
        """
        n_w, n_n = self.shape
        lo = min(int(off[0]) for _, off, _ in self.stencils)
        hi = max(int(off[-1]) for _, off, _ in self.stencils)
        n_fft = 1 << (n_w + hi - lo - 1).bit_length()
        dense = np.zeros((n_n, n_n, n_fft))
        for p, (q_idx, offsets, weights) in enumerate(self.stencils):
            dense[p][np.ix_(q_idx, offsets % n_fft)] = weights
        kernel_hat = np.ascontiguousarray(np.fft.fft(dense, axis=2).transpose(2, 0, 1))
        weak = self.raw_row_sums < FFT_MIN_MASS
        inv_mass = np.divide(1.0, self.raw_row_sums, out=np.zeros_like(self.raw_row_sums),
                             where=~weak)
        cols = np.flatnonzero(weak.ravel())
        residual = (cols, self.matrix[:, cols].tocsr()) if cols.size else None
        return kernel_hat, n_fft, inv_mass, residual

    def row(self, i, p):
        """Normalized destination weights of source ``(omega_axis[i], nu_axis[p])``."""
        col = self.matrix[:, i * self.shape[1] + p].toarray().ravel()
        return col.reshape(self.shape)


def _stencil(p, nu_axis, d_omega, d_nu, params):
    d, b = params.delta, params.b
    nu0 = nu_axis[p]
    s_nu = math.sqrt(2 * b * d)
    s_cond = math.sqrt(b * d**3 / 6)       # std of omega given nu
    zn = nu_axis - nu0
    keep = np.abs(zn) <= TRUNCATE_SIGMAS * s_nu
    keep[p] = True
    q_idx = np.flatnonzero(keep)
    zn = zn[q_idx]
    p_nu = np.exp(-0.5 * (zn / s_nu) ** 2) / (math.sqrt(2 * math.pi) * s_nu) * d_nu
    mean = nu0 * d + 0.5 * d * zn              # conditional omega shift
    lo = math.floor((mean.min() - TRUNCATE_SIGMAS * s_cond) / d_omega) - 1
    hi = math.ceil((mean.max() + TRUNCATE_SIGMAS * s_cond) / d_omega) + 1
    offsets = np.arange(lo, hi + 1)
    edges_hi = (offsets[None, :] + 0.5) * d_omega - mean[:, None]
    edges_lo = (offsets[None, :] - 0.5) * d_omega - mean[:, None]
    # omega is integrated over each bin; nu is sampled at the grid point
    p_omega = ndtr(edges_hi / s_cond) - ndtr(edges_lo / s_cond)
    return q_idx, offsets, p_nu[:, None] * p_omega


def discretize(omega_axis, nu_axis, params):
    """Build the row-normalized :class:`KernelOperator` on the given grids.

    The destination weight is the kernel integrated over the frequency bin
    and sampled at the chirpiness grid point (times the chirpiness step), then
    every source row is rescaled to unit mass. Rows whose raw in-grid mass is
    below ``ESCAPE_THRESHOLD`` are counted in ``diagnostics``.
    """
    omega_axis, d_omega = _uniform_step(omega_axis, "omega")
    nu_axis, d_nu = _uniform_step(nu_axis, "nu")
    n_w, n_n = omega_axis.size, nu_axis.size

    stencils = []
    raw = np.zeros((n_w, n_n))
    rows, cols, data = [], [], []
    src_i = np.arange(n_w)
    for p in range(n_n):
        q_idx, offsets, weights = _stencil(p, nu_axis, d_omega, d_nu, params)
        stencils.append((q_idx, offsets, weights))
        per_offset = weights.sum(axis=0)
        dst_i = src_i[:, None] + offsets[None, :]
        inside = (dst_i >= 0) & (dst_i < n_w)
        raw[:, p] = (per_offset[None, :] * inside).sum(axis=1)

        nz_q, nz_k = np.nonzero(weights > 0)
        di = dst_i[:, nz_k]                                     # (n_w, nnz)
        ok = (di >= 0) & (di < n_w)
        src_rows = np.broadcast_to(src_i[:, None], di.shape)[ok]
        rows.append(di[ok] * n_n + np.broadcast_to(q_idx[nz_q], di.shape)[ok])
        cols.append(src_rows * n_n + p)
        data.append(np.broadcast_to(weights[nz_q, nz_k], di.shape)[ok] / raw[src_rows, p])

    n = n_w * n_n
    empty = np.flatnonzero(raw.ravel() == 0)
    if empty.size:
        # all mass left the grid: keep the source in place
        rows.append(empty)
        cols.append(empty)
        data.append(np.ones(empty.size))
    matrix = sparse.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    matrix.sum_duplicates()
    flagged = raw < ESCAPE_THRESHOLD
    diagnostics = {
        "rows_flagged_mass_escape": int(np.count_nonzero(flagged)),
        "rows_without_mass": int(empty.size),
        "min_raw_row_sum": float(raw.min()),
        "max_raw_row_sum": float(raw.max()),
        "nnz": int(matrix.nnz),
        "d_omega": d_omega,
        "d_nu": d_nu,
    }
    return KernelOperator(params, omega_axis, nu_axis, stencils, raw, matrix, diagnostics)


def _apply_fft(op, field):
    kernel_hat, n_fft, inv_mass, residual = op.spectral
    n_w = op.shape[0]
    g = field * inv_mass
    g_hat = np.fft.fft(g, n=n_fft, axis=-2)                  # (B, f, p)
    out_hat = np.matmul(g_hat.transpose(1, 0, 2), kernel_hat)  # (f, B, q)
    out = np.fft.ifft(out_hat, axis=0)[:n_w].transpose(1, 0, 2)
    if not np.iscomplexobj(field):
        out = out.real
    if residual is not None:
        cols, sub = residual
        flat = field.reshape(field.shape[0], -1)[:, cols]
        extra = sub @ np.ascontiguousarray(flat.T)
        out = out + np.ascontiguousarray(extra.T).reshape(out.shape)
    return out


def apply(op, field, method="auto"):
    """Push ``field[..., omega, nu]`` through the kernel; leading axes are batched.

    ``method`` is ``"sparse"`` (exact sparse product), ``"fft"`` (per
    chirpiness-pair convolution along omega, exact up to FFT round-off) or
    ``"auto"``, which picks the cheaper one.
    """
    field = np.asarray(field)
    if field.shape[-2:] != op.shape:
        raise DomainError(f"field shape {field.shape[-2:]} does not match kernel grid {op.shape}",
                          "kernel")
    lead = field.shape[:-2]
    if method == "auto":
        n_n = op.shape[1]
        method = "fft" if op.matrix.nnz > 2 * n_n * n_n * op.shape[0] else "sparse"
    if method == "fft":
        return _apply_fft(op, field.reshape((-1,) + op.shape)).reshape(lead + op.shape)
    if method != "sparse":
        raise DomainError(f"unknown kernel apply method {method!r}", "kernel")
    flat = field.reshape(-1, op.shape[0] * op.shape[1])
    # csr_matvecs wants the batch axis contiguous
    out = op.matrix @ np.ascontiguousarray(flat.T)
    return np.ascontiguousarray(out.T).reshape(lead + op.shape)


@dataclass(frozen=True)
class MomentEstimate:
    mean: np.ndarray
    cov: np.ndarray
    n_paths: int


def mc_oracle(src, params, n_paths=100_000, n_steps=200, seed=0):
    """Sample moments of ``(omega, nu)`` at time ``delta`` by path simulation.

    The chirpiness increment is the Euler-Maruyama step ``sqrt(2 b dt) xi``;
    frequency integrates chirpiness with the trapezoid rule, which keeps the
    frequency mean exact and its variance bias at ``O(dt^2)``.
    """
    if n_paths < 10_000 or n_steps < 100:
        raise DomainError("mc_oracle needs n_paths >= 1e4 and n_steps >= 100", "kernel")
    rng = np.random.Generator(np.random.PCG64(seed))
    dt = params.delta / n_steps
    amp = math.sqrt(2 * params.b * dt)
    omega = np.full(n_paths, float(src[0]))
    nu = np.full(n_paths, float(src[1]))
    for _ in range(n_steps):
        nu_next = nu + amp * rng.standard_normal(n_paths)
        omega += 0.5 * (nu + nu_next) * dt
        nu = nu_next
    samples = np.stack([omega, nu])
    return MomentEstimate(samples.mean(axis=1), np.cov(samples, bias=True), n_paths)


def dump_row_csv(op, i, p, path):
    """Write the normalized kernel row of source ``(i, p)`` as
    ``omega,nu,weight`` (non-zero weights only)."""
    weights = op.row(i, p)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["omega", "nu", "weight"])
        for a, b_ in zip(*np.nonzero(weights)):
            w.writerow([repr(float(op.omega_axis[a])), repr(float(op.nu_axis[b_])),
                        repr(float(weights[a, b_]))])
