"""Strict JSON configuration: one top-level object per stage.

    {
      "stft":     {"window_size": 256, "hop": 64, "window_kind": "hann"},
      "lift":     {"eta": 1e-8, "p_value": 0.95, "n_nu": 41},
      "kernel":   {"delta": null, "b": null},
      "wc":       {"alpha": 20, "beta": 1, "gamma_wc": 15, "kappa": 1,
                   "delta": null, "substeps": 8},
      "pipeline": {"mix": 1.0},
      "experiments": {"eps": [...], "seed": 0}
    }

Unknown sections or keys raise :class:`ConfigError`. ``stft`` may be omitted
or null to derive the analysis window from each file's sample rate.
"""

from dataclasses import asdict, fields, replace
import json

import numpy as np

from .errors import ConfigError
from .pipeline import KernelConfig, LiftConfig, PipelineConfig
from .tfr import StftConfig
from .wilson_cowan import WCParams

SECTIONS = ("stft", "lift", "kernel", "wc", "pipeline", "experiments")
EXPERIMENT_KEYS = ("eps", "seed")


def _check_keys(section, data, allowed):
    if not isinstance(data, dict):
        raise ConfigError(f"section {section!r} must be an object", "cli")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {section!r}: {', '.join(unknown)}", "cli")


def _names(cls):
    return [f.name for f in fields(cls)]


def parse_config(doc):
    """Return ``(PipelineConfig, experiments_dict)`` from a parsed JSON object."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object", "cli")
    unknown = sorted(set(doc) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}", "cli")

    stft_cfg = None
    if doc.get("stft") is not None:
        s = doc["stft"]
        _check_keys("stft", s, _names(StftConfig))
        if "window_size" not in s:
            raise ConfigError("stft.window_size is required when the stft section is given", "cli")
        stft_cfg = StftConfig(int(s["window_size"]), int(s.get("hop", int(s["window_size"]) // 4)),
                              s.get("window_kind", "hann"))
    sections = {}
    for name, cls in (("lift", LiftConfig), ("kernel", KernelConfig), ("wc", WCParams)):
        data = doc.get(name) or {}
        _check_keys(name, data, _names(cls))
        try:
            sections[name] = cls(**data)
        except TypeError as exc:
            raise ConfigError(f"section {name!r}: {exc}", "cli") from exc
    pipe = doc.get("pipeline") or {}
    _check_keys("pipeline", pipe, ("mix",))
    experiments = doc.get("experiments") or {}
    _check_keys("experiments", experiments, EXPERIMENT_KEYS)
    config = PipelineConfig(stft_cfg, sections["lift"], sections["kernel"], sections["wc"],
                            float(pipe.get("mix", 1.0)))
    return config, dict(experiments)


def load_config(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})", "cli") from exc
    return parse_config(doc)


def config_to_dict(config):
    return {
        "stft": config.stft.to_dict() if config.stft else None,
        "lift": asdict(config.lift),
        "kernel": asdict(config.kernel),
        "wc": config.wc.to_dict(),
        "pipeline": {"mix": config.mix},
    }


def override(config, stft=None, lift=None, kernel=None, wc=None, mix=None):
    """Apply non-None overrides section by section (flags win over file values)."""
    def clean(d):
        return {k: v for k, v in (d or {}).items() if v is not None}

    stft_over = clean(stft)
    stft_cfg = config.stft
    if stft_over:
        base = stft_cfg.to_dict() if stft_cfg else {}
        merged = {**base, **stft_over}
        if "window_size" not in merged:
            raise ConfigError("--hop/--window need --window-size (or a config stft section)", "cli")
        if "window_size" in stft_over and "hop" not in stft_over:
            merged["hop"] = merged["window_size"] // 4
        stft_cfg = StftConfig(int(merged["window_size"]), int(merged["hop"]),
                              merged.get("window_kind", "hann"))
    return PipelineConfig(
        stft_cfg,
        replace(config.lift, **clean(lift)),
        replace(config.kernel, **clean(kernel)),
        replace(config.wc, **clean(wc)),
        config.mix if mix is None else mix,
    )


def jsonable(obj):
    """Convert numpy scalars/arrays and tuples for ``json.dump``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_json(data, path):
    with open(path, "w") as fh:
        json.dump(jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")
