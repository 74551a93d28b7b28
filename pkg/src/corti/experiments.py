"""Denoising protocol: add Gaussian noise of increasing level, process, and
compare distances before and after processing."""

from dataclasses import dataclass, field
import csv
import logging

import numpy as np

from .errors import DomainError
from .pipeline import run as run_pipeline, process
from .signal_io import NOISE_RNG, add_noise

log = logging.getLogger(__name__)

DEFAULT_EPS_GRID = tuple(float(e) for e in np.geomspace(1e-3, 0.3, 12))

SWEEP_COLUMNS = (
    "eps", "seed",
    "metric_l1_before", "metric_l1_after",
    "metric_std_before", "metric_std_after",
    "metric_l1_after_vs_original", "metric_std_after_vs_original",
    "gain_estimate",
)


def _pair(a, b):
    x = np.asarray(getattr(a, "samples", a), dtype=np.float64)
    y = np.asarray(getattr(b, "samples", b), dtype=np.float64)
    if x.shape != y.shape:
        raise DomainError(f"signal lengths differ: {x.shape} vs {y.shape}", "experiments")
    return x, y


def metric_l1(a, b):
    """Mean absolute difference, ``||a - b||_1 / N``."""
    x, y = _pair(a, b)
    return float(np.mean(np.abs(x - y)))


def metric_std(a, b):
    """Population standard deviation of ``a - b``."""
    x, y = _pair(a, b)
    if x.size < 2:
        raise DomainError("metric_std needs at least 2 samples", "experiments")
    return float(np.std(x - y))


@dataclass
class SweepResult:
    rows: list
    config: dict = field(default_factory=dict)

    def column(self, name):
        return np.array([r[name] for r in self.rows])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SWEEP_COLUMNS)
            for r in self.rows:
                w.writerow([r[c] if isinstance(r[c], int) else repr(float(r[c]))
                            for c in SWEEP_COLUMNS])


def denoise_sweep(signal, eps_grid=DEFAULT_EPS_GRID, config=None, seed=0):
    """Run the noise sweep; row ``k`` draws its noise with seed ``seed + k``.

    ``after`` compares the processed noisy signal with the processed clean
    one; ``after_vs_original`` compares it with the clean input.
    """
    eps = np.asarray(list(eps_grid), dtype=np.float64)
    if eps.size == 0:
        raise DomainError("eps grid is empty", "experiments")
    if np.any(eps < 0):
        raise DomainError("noise levels must be non-negative", "experiments")
    if np.any(np.diff(eps) <= 0):
        raise DomainError("eps grid must be strictly increasing", "experiments")

    clean_run = run_pipeline(signal, config)
    clean_hat = clean_run.output
    rows = []
    for k, e in enumerate(eps):
        row_seed = int(seed) + k
        noisy = add_noise(signal, float(e), row_seed)
        noisy_hat = process(noisy, config)
        ref = float(np.dot(signal.samples, signal.samples))
        rows.append({
            "eps": float(e),
            "seed": row_seed,
            "metric_l1_before": metric_l1(noisy, signal),
            "metric_l1_after": metric_l1(noisy_hat, clean_hat),
            "metric_std_before": metric_std(noisy, signal),
            "metric_std_after": metric_std(noisy_hat, clean_hat),
            "metric_l1_after_vs_original": metric_l1(noisy_hat, signal),
            "metric_std_after_vs_original": metric_std(noisy_hat, signal),
            "gain_estimate": float(np.dot(noisy_hat.samples, signal.samples) / ref) if ref else 0.0,
        })
        log.info("eps=%.4g std %.4g -> %.4g", e, rows[-1]["metric_std_before"],
                 rows[-1]["metric_std_after"])
    snapshot = {"base_seed": int(seed), "noise_rng": NOISE_RNG,
                "clean_run": clean_run.report}
    return SweepResult(rows, snapshot)


def improvement_fraction(result):
    """Fraction of rows where both metrics decrease after processing."""
    ok = [(r["metric_std_after"] < r["metric_std_before"]) and
          (r["metric_l1_after"] < r["metric_l1_before"]) for r in result.rows]
    return float(np.mean(ok)) if ok else 0.0
