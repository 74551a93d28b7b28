"""Delayed Wilson-Cowan dynamics on the lifted image.

    da/dt = -alpha a + beta I + gamma K[sigma(a(t - delta))]

integrated with explicit Euler, ``substeps`` steps per STFT frame. The input
of frame ``i`` is held constant over ``[i, i+1)`` hops and the activation
reported for frame ``i`` is the state at the end of that interval. Past
states live in a ring buffer at step resolution; ``a`` is zero for ``t <= 0``.
"""

from dataclasses import dataclass, asdict

import numpy as np

from .errors import ConfigError, DomainError
from .kernel import apply


@dataclass(frozen=True)
class WCParams:
    alpha: float = 20.0
    beta: float = 1.0
    gamma_wc: float = 15.0
    kappa: float = 1.0          # keeps gamma_wc * kappa < alpha: zero state stable
    delta: float | None = None      # None: one STFT hop
    substeps: int = 8

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}", "wc_solver")
        if not self.beta > 0:
            raise ConfigError(f"beta must be positive, got {self.beta}", "wc_solver")
        if not self.gamma_wc >= 0:
            raise ConfigError(f"gamma_wc must be non-negative, got {self.gamma_wc}", "wc_solver")
        if not self.kappa >= 0:
            raise ConfigError(f"kappa must be non-negative, got {self.kappa}", "wc_solver")
        if self.delta is not None and not self.delta > 0:
            raise ConfigError(f"delay must be positive, got {self.delta}", "wc_solver")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ConfigError(f"substeps must be an integer >= 1, got {self.substeps}", "wc_solver")

    def resolved_delta(self, hop_time):
        return hop_time if self.delta is None else self.delta

    def to_dict(self):
        return asdict(self)


def sigmoid(z, kappa):
    """Clamp the modulus to ``min(1, max(0, kappa |z|))``, keep the phase."""
    z = np.asarray(z, dtype=np.complex128)
    rho = np.abs(z)
    gain = np.divide(np.clip(kappa * rho, 0.0, 1.0), rho, out=np.zeros_like(rho), where=rho > 0)
    return z * gain


def delay_steps(params, hop_time):
    """Delay in Euler steps; the delay must be a whole number of hops."""
    delta = params.resolved_delta(hop_time)
    hops = delta / hop_time
    if round(hops) < 1 or abs(hops - round(hops)) > 1e-9 * max(1.0, hops):
        raise ConfigError(
            f"delay {delta} s is not a positive multiple of the hop time {hop_time} s", "wc_solver")
    return int(round(hops)) * int(params.substeps)


def solve(lifted, params, op, trace=None):
    """Integrate the dynamics driven by ``lifted`` and return the activation.

    Args:
        lifted: LiftedImage input ``I``.
        op: KernelOperator on the (frequency, chirpiness) grid of ``lifted``.
        trace: optional list that receives ``(t, sum |a|^2)`` per frame.
    """
    I = lifted.values
    n_frames, n_w, n_n = I.shape
    if op.shape != (n_w, n_n):
        raise DomainError(f"kernel grid {op.shape} does not match lifted image {(n_w, n_n)}",
                          "wc_solver")
    hop_time = lifted.source.hop_time
    S = int(params.substeps)
    dt = hop_time / S
    if params.alpha * dt >= 2:
        raise ConfigError(
            f"unstable explicit step: alpha*dt = {params.alpha * dt:.3g} >= 2; "
            "increase substeps", "wc_solver")
    D = delay_steps(params, hop_time)

    ring = np.zeros((D + 1, n_w, n_n), dtype=np.complex128)   # a_n at slot n % (D+1)
    a = np.zeros((n_w, n_n), dtype=np.complex128)
    out = np.empty_like(I, dtype=np.complex128)
    decay = 1.0 - params.alpha * dt
    interacting = params.gamma_wc > 0 and params.kappa > 0

    for i in range(n_frames):
        n0 = i * S
        drive = (dt * params.beta) * I[i]
        if interacting:
            slots = [(n0 + m - D) % (D + 1) for m in range(S)]
            delayed = ring[slots]
            coupling = (dt * params.gamma_wc) * apply(op, sigmoid(delayed, params.kappa))
        for m in range(S):
            a = decay * a + drive
            if interacting:
                a += coupling[m]
            ring[(n0 + m + 1) % (D + 1)] = a
        out[i] = a
        if trace is not None:
            trace.append(((i + 1) * hop_time, float(np.sum(np.abs(a) ** 2))))

    return lifted.with_values(out, mode="mass", stage="wilson_cowan",
                              dt=dt, delay_steps=D)

