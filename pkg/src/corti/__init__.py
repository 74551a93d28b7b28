"""Auditory-cortex-inspired sound processing on the (time, frequency,
chirpiness) space."""

__version__ = "0.1.0"

from .errors import ConfigError, CortiError, DomainError, FormatError
from .signal_io import Signal, add_noise, gen_chirp, gen_sine, gen_vowel, read_wav, write_wav
from .tfr import Spectrogram, StftConfig, default_config, istft, stft
from .lift import ChirpinessField, LiftedImage, NuGrid, build_nu_grid, chirpiness_field, lift, project
from .chirpstats import CauchyFit, cauchy_cdf, coverage, fit_cauchy, ks_statistic
from .kernel import KernelOperator, KernelParams, apply, discretize, kolmogorov_density, mc_oracle
from .wilson_cowan import WCParams, sigmoid, solve
from .pipeline import PipelineConfig, process, run
from .experiments import denoise_sweep, metric_l1, metric_std
