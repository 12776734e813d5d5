"""Temperature-spectrum presets.

Accepted forms (microscopic convention, O(1) entries):

    uniform(a)        constant spectrum, e.g. the single-Matsubara model
    matsubara(T)      uniform (pi T)^2
    logspace(lo,hi)   N log-spaced values in [lo, hi]
    linspace(lo,hi)   N linearly spaced values
    0.1,0.2,0.35      explicit comma-separated values (N inferred)

Uniform spectra are valid for the phase analysis and the sampler; the kernel
machinery requires pairwise-distinct entries and rejects them at use time.
"""

from __future__ import annotations

import math
import re

import numpy as np

from ..errors import ConfigError
from ..phase import TemperatureSpectrum

_PRESET_RE = re.compile(r"^\s*(uniform|matsubara|logspace|linspace)\s*\(([^)]*)\)\s*$")


def parse_spectrum(text: str, n: int) -> TemperatureSpectrum:
    match = _PRESET_RE.match(text)
    if match:
        name, argtext = match.group(1), match.group(2)
        try:
            args = [float(v) for v in argtext.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad preset arguments in {text!r}: {exc}") from None
        if name == "uniform":
            _need(args, 1, text)
            return TemperatureSpectrum([args[0]] * n)
        if name == "matsubara":
            _need(args, 1, text)
            return TemperatureSpectrum([(math.pi * args[0]) ** 2] * n)
        if name == "logspace":
            _need(args, 2, text)
            return TemperatureSpectrum(np.geomspace(args[0], args[1], n))
        _need(args, 2, text)
        return TemperatureSpectrum(np.linspace(args[0], args[1], n))
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(
            f"spectrum {text!r} is neither a preset nor a list of numbers"
        ) from None
    if not values:
        raise ConfigError("empty spectrum specification")
    if len(values) != n:
        raise ConfigError(f"explicit spectrum has {len(values)} entries but N = {n}")
    return TemperatureSpectrum(values)


def _need(args, count, text):
    if len(args) != count:
        raise ConfigError(f"preset {text!r} needs exactly {count} argument(s)")
