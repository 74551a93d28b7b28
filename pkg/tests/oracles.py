"""Independent reference computations used by the tests.

Nothing here imports the package's numerical code paths it is checking.
"""

import math

import numpy as np


def fokker_planck_rk4(p0, omega, nu, b, t_end, dt):
    """Integrate ``dp/dt = -nu dp/domega + b d2p/dnu2`` with RK4 in time and
    second-order central differences in space (zero outside the grid).

    ``p0[i, j]`` lives at ``(omega[i], nu[j])``.
    """
    h_w = omega[1] - omega[0]
    h_n = nu[1] - nu[0]
    nu_col = nu[None, :]

    def rhs(p):
        pad = np.pad(p, 1)
        dp_dw = (pad[2:, 1:-1] - pad[:-2, 1:-1]) / (2 * h_w)
        d2p_dn2 = (pad[1:-1, 2:] - 2 * p + pad[1:-1, :-2]) / h_n**2
        return -nu_col * dp_dw + b * d2p_dn2

    n_steps = int(math.ceil(t_end / dt - 1e-12))
    dt = t_end / n_steps
    p = p0.copy()
    for _ in range(n_steps):
        k1 = rhs(p)
        k2 = rhs(p + 0.5 * dt * k1)
        k3 = rhs(p + 0.5 * dt * k2)
        k4 = rhs(p + dt * k3)
        p = p + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return p


def gaussian_2d(x, y, mean, cov):
    """Bivariate normal density evaluated on broadcast arrays ``x``, ``y``."""
    inv = np.linalg.inv(cov)
    dx, dy = x - mean[0], y - mean[1]
    q = inv[0, 0] * dx * dx + 2 * inv[0, 1] * dx * dy + inv[1, 1] * dy * dy
    return np.exp(-0.5 * q) / (2 * math.pi * math.sqrt(np.linalg.det(cov)))


def kolmogorov_moments(src, delta, b):
    """Mean and covariance of ``(omega, nu)`` after time ``delta`` from the
    SDE ``d omega = nu dt, d nu = sqrt(2 b) dW``, by direct integration:
    ``nu(t) = nu0 + sqrt(2b) W(t)``, ``omega(t) = omega0 + nu0 t + sqrt(2b) int_0^t W``.
    """
    w0, n0 = src
    t = delta
    var_w = 2 * b * t**3 / 3      # Var(int W) = t^3 / 3
    cov_wn = 2 * b * t**2 / 2     # Cov(int W, W(t)) = t^2 / 2
    var_n = 2 * b * t
    return np.array([w0 + n0 * t, n0]), np.array([[var_w, cov_wn], [cov_wn, var_n]])


def ks_brute_force(samples, cdf, n_grid=2_000_001):
    """Supremum of |F_n - F| over a dense grid plus both one-sided limits at
    every sample, evaluated without sorting tricks."""
    x = np.asarray(samples, dtype=float)
    lo, hi = x.min() - 10.0, x.max() + 10.0
    grid = np.concatenate([np.linspace(lo, hi, n_grid), x, np.nextafter(x, -np.inf)])
    grid.sort()
    emp = np.searchsorted(np.sort(x), grid, side="right") / x.size
    return float(np.max(np.abs(emp - cdf(grid))))


def wc_linear_closed_form(t, alpha, beta, c):
    """Solution of ``a' = -alpha a + beta c`` with ``a(0) = 0``."""
    return beta / alpha * c * (1 - np.exp(-alpha * t))


def instantaneous_chirp_rate(rate):
    """A linear chirp ``sin(2 pi (f0 t + rate t^2 / 2))`` has instantaneous
    frequency ``f0 + rate t`` and therefore chirpiness ``rate`` everywhere."""
    return float(rate)
