"""Command-line interface.

Exit status: 0 on success, 1 on usage or configuration errors, 2 on data or
processing errors. Every subcommand writes a JSON report of the effective
parameters next to its main output.
"""

import argparse
import logging
import os
from pathlib import Path
import sys

import numpy as np

from . import __version__
from .chirpstats import corpus_summary, write_summary_csv
from .config import config_to_dict, load_config, override, write_json
from .errors import ConfigError, CortiError
from .experiments import DEFAULT_EPS_GRID, denoise_sweep, improvement_fraction
from .kernel import KernelParams, discretize, dump_row_csv
from .lift import build_nu_grid, chirpiness_field, chirpiness_resolution, dump_chirpiness_csv
from .pipeline import DEFAULT_NU_SPREAD_STEPS, PipelineConfig, run
from .signal_io import NOISE_RNG, add_noise, gen_chirp, gen_sine, gen_vowel, read_wav, write_wav
from .tfr import WINDOW_KINDS, default_config, dump_binary, dump_csv, stft

log = logging.getLogger("corti")

SEED_ENV = "CORTI_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_pipeline_flags(p):
    g = p.add_argument_group(
        "pipeline parameters (override --config; unset values use the defaults shown)")
    g.add_argument("--config", type=Path, help="JSON configuration file")
    g.add_argument("--window-size", type=int,
                   help="STFT window in samples (default: 23 ms rounded up to a power of two)")
    g.add_argument("--hop", type=int, help="STFT hop in samples (default: window/4)")
    g.add_argument("--window", choices=WINDOW_KINDS, help="analysis window (default: hann)")
    g.add_argument("--eta", type=float, help="chirpiness mask threshold, relative (default: 1e-8)")
    g.add_argument("--p-value", type=float,
                   help="Cauchy interval level for the chirpiness grid (default: 0.95)")
    g.add_argument("--n-nu", type=int, help="chirpiness grid size, odd (default: 41)")
    g.add_argument("--kernel-delta", type=float,
                   help="kernel time in s (default: the Wilson-Cowan delay)")
    g.add_argument("--b", type=float,
                   help="chirpiness diffusion strength (default: sqrt(2 b delta) = "
                        f"{DEFAULT_NU_SPREAD_STEPS:g} chirpiness steps)")
    g.add_argument("--alpha", type=float, help="decay rate 1/s (default: 20)")
    g.add_argument("--beta", type=float, help="input gain 1/s (default: 1)")
    g.add_argument("--gamma-wc", type=float, help="interaction gain 1/s (default: 15)")
    g.add_argument("--kappa", type=float, help="sigmoid slope (default: 1)")
    g.add_argument("--delay", type=float,
                   help="interaction delay in s, a multiple of the hop (default: one hop)")
    g.add_argument("--substeps", type=int, help="Euler steps per STFT frame (default: 8)")
    g.add_argument("--mix", type=float,
                   help="0 = analysis/synthesis only, 1 = fully processed (default: 1)")


def _pipeline_config(args):
    if args.config is not None:
        if not args.config.exists():
            raise ConfigError(f"config file not found: {args.config}", "cli")
        config, experiments = load_config(args.config)
    else:
        config, experiments = PipelineConfig(), {}
    config = override(
        config,
        stft={"window_size": args.window_size, "hop": args.hop, "window_kind": args.window},
        lift={"eta": args.eta, "p_value": args.p_value, "n_nu": args.n_nu},
        kernel={"delta": args.kernel_delta, "b": args.b},
        wc={"alpha": args.alpha, "beta": args.beta, "gamma_wc": args.gamma_wc,
            "kappa": args.kappa, "delta": args.delay, "substeps": args.substeps},
        mix=args.mix,
    )
    return config, experiments


def _seed(args, experiments=None):
    if getattr(args, "seed", None) is not None:
        return args.seed
    if os.environ.get(SEED_ENV):
        try:
            return int(os.environ[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer", "cli")
    if experiments and "seed" in experiments:
        return int(experiments["seed"])
    return 0


def _report_path(out):
    return Path(out).with_suffix(".json")


def _read(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    return read_wav(path)


# ----------------------------------------------------------------- commands

def cmd_process(args):
    config, _ = _pipeline_config(args)
    signal = _read(args.inp)
    if args.out is None:
        args.out = args.inp.with_name(args.inp.stem + "_out.wav")
    result = run(signal, config)
    clipped = write_wav(result.output, args.out, args.bit_depth)
    report = {"command": "process", "input": str(args.inp), "output": str(args.out),
              "bit_depth": args.bit_depth, "clipped_samples": clipped,
              "config": config_to_dict(config), "effective": result.report}
    if args.dump_spec:
        path = Path(args.dump_spec)
        (dump_binary if path.suffix == ".bin" else dump_csv)(result.spectrogram, path)
        report["dump_spec"] = str(path)
    if args.dump_chirpiness and result.chirpiness is not None:
        dump_chirpiness_csv(result.chirpiness, args.dump_chirpiness)
        report["dump_chirpiness"] = str(args.dump_chirpiness)
    if args.trace_energy:
        with open(args.trace_energy, "w") as fh:
            fh.write("t,energy\n")
            for t, e in result.energy_trace:
                fh.write(f"{t!r},{e!r}\n")
        report["trace_energy"] = str(args.trace_energy)
    if args.figure:
        from .plotting import plot_spectrograms
        fig = Path(args.out).with_suffix(".png")
        plot_spectrograms(result.spectrogram, result.processed or result.spectrogram, fig)
        report["figure"] = str(fig)
    write_json(report, args.report or _report_path(args.out))
    return 0


def cmd_denoise_sweep(args):
    config, experiments = _pipeline_config(args)
    signal = _read(args.inp)
    eps = args.eps if args.eps is not None else experiments.get("eps", DEFAULT_EPS_GRID)
    seed = _seed(args, experiments)
    result = denoise_sweep(signal, eps, config, seed)
    result.write_csv(args.out)
    report = {"command": "denoise-sweep", "input": str(args.inp), "output": str(args.out),
              "eps": list(eps), "seed": seed, "noise_rng": NOISE_RNG,
              "config": config_to_dict(config), "improvement_fraction": improvement_fraction(result),
              **result.config}
    if args.figure:
        from .plotting import plot_sweep
        fig = Path(args.out).with_suffix(".png")
        plot_sweep(result, fig)
        report["figure"] = str(fig)
    write_json(report, args.json or _report_path(args.out))
    return 0


def cmd_chirpiness(args):
    stft_cfg = None
    if args.window_size:
        from .tfr import StftConfig
        stft_cfg = StftConfig(args.window_size, args.hop or args.window_size // 4,
                              args.window or "hann")
    rows = corpus_summary(args.paths, stft_cfg, args.eta)
    write_summary_csv(rows, args.out)
    report = {"command": "chirpiness", "files": [str(p) for p in args.paths],
              "output": str(args.out), "stft": stft_cfg.to_dict() if stft_cfg else None,
              "eta": args.eta, "quantile_method": "linear (type 7)",
              "failed": [r["path"] for r in rows if r["error"]]}
    if args.figure:
        from .plotting import plot_corpus
        fig = Path(args.out).with_suffix(".png")
        plot_corpus(rows, fig)
        report["figure"] = str(fig)
    write_json(report, _report_path(args.out))
    return 0


def cmd_kernel_dump(args):
    if args.inp is not None:
        config, _ = _pipeline_config(args)
        signal = _read(args.inp)
        cfg = config.stft or default_config(signal.sample_rate)
        spec = stft(signal, cfg)
        grid = build_nu_grid(chirpiness_field(spec, config.lift.eta), config.lift.p_value,
                             config.lift.n_nu, min_half_width=chirpiness_resolution(spec))
        omega, nu = spec.bin_freqs, grid.centers
        delta = args.delta or config.kernel.delta or config.wc.resolved_delta(spec.hop_time)
        b = args.b_value or config.kernel.b or \
            (DEFAULT_NU_SPREAD_STEPS * grid.spacing) ** 2 / (2 * delta)
    else:
        omega = np.arange(args.n_omega) * args.d_omega
        nu = np.linspace(-args.nu_max, args.nu_max, args.n_nu_grid)
        delta = args.delta or 0.008
        b = args.b_value or (DEFAULT_NU_SPREAD_STEPS * (nu[1] - nu[0])) ** 2 / (2 * delta)
    op = discretize(omega, nu, KernelParams(delta, b))
    i = args.src_omega if args.src_omega is not None else omega.size // 2
    p = args.src_nu if args.src_nu is not None else nu.size // 2
    if not (0 <= i < omega.size and 0 <= p < nu.size):
        raise ConfigError(f"source index ({i}, {p}) outside the grid {op.shape}", "cli")
    dump_row_csv(op, i, p, args.out)
    write_json({"command": "kernel-dump", "output": str(args.out), "delta": delta, "b": b,
                "source": {"omega_index": i, "nu_index": p, "omega": omega[i], "nu": nu[p]},
                "grid": {"n_omega": omega.size, "n_nu": nu.size},
                "diagnostics": op.diagnostics}, _report_path(args.out))
    return 0


def cmd_synth(args):
    kinds = [k for k in ("sine", "chirp", "vowel") if getattr(args, k) is not None]
    if len(kinds) != 1:
        raise UsageError("synth: choose exactly one of --sine, --chirp, --vowel")
    if args.sine is not None:
        sig = gen_sine(args.sine, args.dur, args.sr, args.amp)
        spec = {"kind": "sine", "freq": args.sine}
    elif args.chirp is not None:
        f0, rate = args.chirp
        sig = gen_chirp(f0, rate, args.dur, args.sr, args.amp)
        spec = {"kind": "chirp", "f0": f0, "rate": rate}
    else:
        sig = gen_vowel(args.vowel, args.dur, args.sr, amplitude=args.amp)
        spec = {"kind": "vowel", "f0": args.vowel}
    seed = _seed(args)
    if args.noise:
        sig = add_noise(sig, args.noise, seed)
    clipped = write_wav(sig, args.out, args.bit_depth)
    write_json({"command": "synth", "output": str(args.out), "signal": spec,
                "duration": args.dur, "sample_rate": args.sr, "amplitude": args.amp,
                "noise": args.noise, "seed": seed, "noise_rng": NOISE_RNG,
                "bit_depth": args.bit_depth, "clipped_samples": clipped},
               _report_path(args.out))
    return 0


# ------------------------------------------------------------------- parser

def build_parser():
    parser = _Parser(prog="corti", description=(
        "Lift sounds to (time, frequency, chirpiness), process them with delayed "
        "Wilson-Cowan dynamics and project back. Multi-channel WAV input is averaged "
        "to mono."))
    parser.add_argument("--version", action="version", version=f"corti {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("process", help="process one WAV file")
    p.add_argument("--in", dest="inp", type=Path, required=True)
    p.add_argument("--out", type=Path, help="output WAV (default: <in stem>_out.wav)")
    p.add_argument("--bit-depth", default="f32", choices=["16", "24", "f32"])
    p.add_argument("--report", type=Path, help="run report path (default: OUT with .json)")
    p.add_argument("--dump-spec", type=Path,
                   help="write the input spectrogram (.bin: binary, otherwise CSV)")
    p.add_argument("--dump-chirpiness", type=Path, help="write the chirpiness field as CSV")
    p.add_argument("--trace-energy", type=Path, help="write per-frame activation energy CSV")
    p.add_argument("--figure", action="store_true", help="render spectrograms to OUT.png")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("denoise-sweep", help="noise sweep with before/after distances")
    p.add_argument("--in", dest="inp", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="CSV output")
    p.add_argument("--eps", type=_float_list,
                   help="comma-separated noise levels (default: 12 log-spaced in [1e-3, 0.3])")
    p.add_argument("--seed", type=int, help=f"base seed (fallback: ${SEED_ENV}, then 0)")
    p.add_argument("--json", type=Path, help="report path (default: OUT with .json)")
    p.add_argument("--figure", action="store_true", help="render the sweep to OUT.png")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_denoise_sweep)

    p = sub.add_parser("chirpiness", help="Cauchy fit of chirpiness for WAV files")
    p.add_argument("paths", nargs="*", type=Path)
    p.add_argument("--out", type=Path, required=True, help="CSV output")
    p.add_argument("--window-size", type=int)
    p.add_argument("--hop", type=int)
    p.add_argument("--window", choices=WINDOW_KINDS)
    p.add_argument("--eta", type=float, default=1e-8)
    p.add_argument("--figure", action="store_true", help="render box plots to OUT.png")
    p.set_defaults(func=cmd_chirpiness)

    p = sub.add_parser("kernel-dump", help="write one row of the discrete kernel as CSV")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--in", dest="inp", type=Path,
                   help="derive the grids from this file as `process` would")
    p.add_argument("--n-omega", type=int, default=129)
    p.add_argument("--d-omega", type=float, default=31.25, help="frequency step (Hz)")
    p.add_argument("--nu-max", type=float, default=20000.0, help="chirpiness half-range (Hz/s)")
    p.add_argument("--n-nu-grid", type=int, default=41)
    p.add_argument("--delta", type=float, help="kernel time in s (default: 0.008 or one hop)")
    p.add_argument("--b-value", type=float, help="diffusion strength")
    p.add_argument("--src-omega", type=int, help="source frequency index (default: middle)")
    p.add_argument("--src-nu", type=int, help="source chirpiness index (default: middle)")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_kernel_dump)

    p = sub.add_parser("synth", help="write a synthetic test signal")
    p.add_argument("--sine", type=float, metavar="FREQ")
    p.add_argument("--chirp", type=float, nargs=2, metavar=("F0", "RATE"))
    p.add_argument("--vowel", type=float, metavar="F0")
    p.add_argument("--dur", type=float, default=1.0)
    p.add_argument("--sr", type=float, default=8000.0)
    p.add_argument("--amp", type=float, default=0.5)
    p.add_argument("--noise", type=float, default=0.0, help="Gaussian noise std")
    p.add_argument("--seed", type=int)
    p.add_argument("--bit-depth", default="f32", choices=["16", "24", "f32"])
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("corti: a subcommand is required (see --help)")
        logging.basicConfig(level=logging.WARNING - 10 * args.verbose,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"configuration error {exc}", file=sys.stderr)
        return 1
    except (CortiError, ValueError) as exc:
        print(f"error {exc}" if isinstance(exc, CortiError) else f"error [corti] {exc}",
              file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error [io] {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
