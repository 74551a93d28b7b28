"""Figures written next to the CSV outputs.

All figures go through :func:`save`, which strips the PNG software tag so
repeated runs produce identical files.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
}

BEFORE = "tab:blue"
AFTER = "tab:red"


def figsize(scale=1.0, ratio=None):
    width = 6.4 * scale
    ratio = (np.sqrt(5.0) - 1.0) / 2.0 if ratio is None else ratio
    return (width, width * ratio)


def save(fig, path):
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_sweep(result, path):
    """Before/after distances against the noise level, one panel per metric."""
    eps = result.column("eps")
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 2, figsize=figsize(1.2, 0.4), constrained_layout=True)
        for ax, metric, label in ((axes[0], "std", "standard deviation"),
                                  (axes[1], "l1", r"$\|\cdot\|_1/N$")):
            ax.plot(eps, result.column(f"metric_{metric}_before"), "o-", color=BEFORE,
                    label="before")
            ax.plot(eps, result.column(f"metric_{metric}_after"), "s-", color=AFTER,
                    label="after")
            ax.set_xlabel(r"noise level $\varepsilon$")
            ax.set_ylabel(label)
            if np.all(eps > 0):
                ax.set_xscale("log")
            ax.legend(frameon=False)
        return save(fig, path)


def plot_chirpiness(samples, fit, path, p=0.95, bins=200):
    """Histogram of chirpiness inside the level-``p`` interval against the fitted density."""
    lo, hi = fit.interval(p)
    x = np.asarray(samples)
    x = x[(x >= lo) & (x <= hi)]
    grid = np.linspace(lo, hi, 400)
    # density renormalized to the truncated interval
    pdf = fit.gamma / (np.pi * ((grid - fit.x0) ** 2 + fit.gamma ** 2)) / p
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize(0.8), constrained_layout=True)
        ax.hist(x, bins=bins, density=True, color="0.7", label="chirpiness")
        ax.plot(grid, pdf, color=AFTER, label=f"Cauchy({fit.x0:.3g}, {fit.gamma:.3g})")
        ax.set_xlabel("chirpiness (Hz/s)")
        ax.set_ylabel("density")
        ax.legend(frameon=False)
        return save(fig, path)


def plot_corpus(rows, path):
    """Box plots of the per-file KS statistic and interval coverage."""
    ok = [r for r in rows if not r.get("error")]
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 2, figsize=figsize(0.8, 0.6), constrained_layout=True)
        if ok:
            axes[0].boxplot([[r["D_n"] for r in ok]])
            axes[1].boxplot([[100 * r["coverage_95"] for r in ok]])
        axes[0].set_ylabel(r"KS statistic $D_n$")
        axes[1].set_ylabel(r"% inside $I_{0.95}$")
        for ax in axes:
            ax.set_xticks([])
        return save(fig, path)


def plot_spectrograms(before, after, path, floor_db=-80.0):
    """Magnitude spectrograms of the input and processed signal, in dB."""
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 2, figsize=figsize(1.2, 0.4), sharey=True,
                                 constrained_layout=True)
        for ax, spec, title in ((axes[0], before, "input"), (axes[1], after, "processed")):
            mag = np.abs(spec.values)
            db = 20 * np.log10(np.maximum(mag / max(mag.max(), 1e-300), 10 ** (floor_db / 20)))
            extent = (spec.frame_times[0], spec.frame_times[-1], spec.bin_freqs[0],
                      spec.bin_freqs[-1])
            ax.imshow(db.T, origin="lower", aspect="auto", extent=extent, cmap="magma",
                      vmin=floor_db, vmax=0)
            ax.set_title(title)
            ax.set_xlabel("time (s)")
        axes[0].set_ylabel("frequency (Hz)")
        return save(fig, path)
