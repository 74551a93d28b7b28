import numpy as np
import pytest

from corti import (ConfigError, DomainError, KernelParams, LiftedImage, Signal, StftConfig,
                   WCParams, discretize, sigmoid, solve, stft)
from corti.wilson_cowan import delay_steps


def _setup(n_nu=5, seed=0, samples=120):
    spec = stft(Signal(np.zeros(samples), 160.0), StftConfig(8, 2))  # hop 12.5 ms, 5 bins
    nu = np.linspace(-40.0, 40.0, n_nu)
    rng = np.random.Generator(np.random.PCG64(seed))
    shape = spec.shape + (n_nu,)
    values = 0.8 * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    op = discretize(spec.bin_freqs, nu, KernelParams(spec.hop_time, 2000.0))
    return LiftedImage(values, nu, spec), op


def _reference(img, params, op):
    # one explicit Euler step at a time with the full history kept
    I = img.values
    n_frames = I.shape[0]
    S = params.substeps
    hop = img.source.hop_time
    dt = hop / S
    D = int(round(params.resolved_delta(hop) / hop)) * S
    K = op.matrix.toarray()
    hist = [np.zeros(I.shape[1:], complex)]
    for n in range(n_frames * S):
        a = hist[-1]
        delayed = hist[n - D] if n - D >= 0 else np.zeros_like(a)
        coupling = (K @ sigmoid(delayed, params.kappa).ravel()).reshape(a.shape)
        hist.append(a + dt * (-params.alpha * a + params.beta * I[n // S]
                              + params.gamma_wc * coupling))
    return np.array([hist[(i + 1) * S] for i in range(n_frames)])


@pytest.mark.parametrize("delay_hops,substeps", [(1, 1), (1, 4), (3, 2), (2, 8)])
def test_matches_naive_reference(delay_hops, substeps):
    img, op = _setup()
    params = WCParams(alpha=20.0, beta=1.5, gamma_wc=15.0, kappa=2.0,
                      delta=delay_hops * img.source.hop_time, substeps=substeps)
    out = solve(img, params, op)
    np.testing.assert_allclose(out.values, _reference(img, params, op), rtol=1e-12, atol=1e-12)
    assert out.provenance["delay_steps"] == delay_hops * substeps


def test_linear_when_gamma_zero():
    img, op = _setup()
    params = WCParams(gamma_wc=0.0, substeps=4)
    a = solve(img, params, op).values
    b = solve(img.with_values(2.0 * img.values), params, op).values
    np.testing.assert_allclose(b, 2.0 * a, rtol=1e-13)


def test_zero_input_stays_zero():
    img, op = _setup()
    out = solve(img.with_values(np.zeros_like(img.values)), WCParams(), op)
    assert not np.any(out.values)


def test_energy_trace():
    img, op = _setup()
    trace = []
    out = solve(img, WCParams(), op, trace=trace)
    assert len(trace) == img.values.shape[0]
    t, e = trace[-1]
    assert t == pytest.approx(img.values.shape[0] * img.source.hop_time)
    assert e == pytest.approx(np.sum(np.abs(out.values[-1]) ** 2))


def test_sigmoid():
    z = np.array([0.0, 0.3 + 0.4j, -3.0, 2j])
    out = sigmoid(z, 2.0)
    np.testing.assert_allclose(np.abs(out), [0.0, 1.0, 1.0, 1.0])
    np.testing.assert_allclose(sigmoid(np.array([0.1j]), 2.0), [0.2j])
    np.testing.assert_allclose(np.angle(out[1:]), np.angle(z[1:]))
    assert not np.any(sigmoid(z, 0.0))


def test_parameter_validation():
    for bad in ({"alpha": 0}, {"beta": -1}, {"gamma_wc": -1}, {"kappa": -1},
                {"delta": 0.0}, {"substeps": 0}, {"substeps": 1.5}):
        with pytest.raises(ConfigError):
            WCParams(**bad)


def test_delay_must_be_whole_hops():
    with pytest.raises(ConfigError, match="multiple of the hop"):
        delay_steps(WCParams(delta=0.015), 0.01)
    with pytest.raises(ConfigError):
        delay_steps(WCParams(delta=0.004), 0.01)
    assert delay_steps(WCParams(delta=0.03, substeps=4), 0.01) == 12


def test_unstable_step_rejected():
    img, op = _setup()
    with pytest.raises(ConfigError, match="unstable"):
        solve(img, WCParams(alpha=200.0, substeps=1), op)


def test_grid_mismatch():
    img, _ = _setup()
    other = discretize(np.arange(7.0), np.linspace(-1, 1, 3), KernelParams(0.01, 1.0))
    with pytest.raises(DomainError):
        solve(img, WCParams(), other)
