"""Run configuration: INI sections with units in the key names.

Every key has a default (see ``DEFAULTS``); unknown sections or keys are
rejected with a suggestion and the line they appear on.
"""
from __future__ import annotations

import configparser
import difflib
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .potentials import PRESETS, SystemModel
from .propagator import Numerics, ScanSpec
from .pulses import PhaseMaskTerm, PulseSequence, SpectralPulse
from .units import convert

# section -> key -> (default, description)
DEFAULTS = {
    "model": {
        "preset": ("benzene", "named preset; other keys override its parameters"),
        "displacement": ("1.0", "excited-state minimum, ground-mode dimensionless units"),
        "ground_frequency_cm": ("993.0", "ground-state mode frequency"),
        "excited_frequency_cm": ("925.0", "excited-state mode frequency"),
        "gap_thz": ("1172.0", "vertical gap at the ground-state minimum"),
        "ionization_potential_ev": ("9.24", "ion surface offset"),
        "continuum_bins": ("16", "number of continuum channels"),
        "epsilon_min_ev": ("0.05", "lowest photoelectron energy"),
        "epsilon_max_ev": ("1.0", "highest photoelectron energy"),
        "mu_ge": ("1.0", "ground-excited transition dipole"),
        "mu_ec": ("1.0", "excited-continuum dipole (per sqrt eV)"),
    },
    "pulse": {
        "wavelength_nm": ("", "central wavelength; empty means resonant with gap_thz"),
        "duration_fs": ("15.0", "transform-limited intensity FWHM"),
        "field_amplitude": ("0.0025", "peak field, eV per dipole unit"),
        "probe_to_pump_ratio": ("1.0", "probe field amplitude relative to the pump"),
        "pump_chirp_fs2": ("0.0", "group-delay dispersion applied to the pump"),
        "pump_pi_step": ("false", "pi phase jump at the pump's central frequency"),
    },
    "scan": {
        "delay_start_fs": ("60.0", "first delay"),
        "delay_stop_fs": ("100.0", "last delay (inclusive)"),
        "delay_step_fs": ("0.1", "delay step"),
        "phases": ("0, pi", "relative phases; accepts pi expressions"),
    },
    "numerics": {
        "grid_points": ("256", "spatial grid points (power of two)"),
        "x_min": ("-8.0", "grid start, dimensionless"),
        "x_max": ("8.0", "grid end, dimensionless"),
        "dt_fs": ("0.005", "propagation step"),
        "support_threshold": ("1e-3", "field envelope level defining each pulse's support"),
        "flush_min_delay_fs": ("45.0", "delays from which the continuum is harvested between pulses"),
        "absorbing_mask": ("false", "cos^8 mask on the outer 10% of the grid"),
        "method": ("split", "scan method: split or direct"),
        "workers": ("1", "worker processes (overridden by ATTOSCOPE_WORKERS, then by --workers)"),
    },
    "output": {
        "directory": ("out", "output directory"),
        "prefix": ("trace", "file name prefix"),
    },
}

NYQUIST_STEP_FS = 0.4


def parse_phase(text: str) -> float:
    """``'pi'``, ``'3pi/2'``, ``'pi/4'``, ``'-0.5*pi'`` or a plain number (rad)."""
    t = text.strip().lower().replace(" ", "")
    m = re.fullmatch(r"([+-]?(?:\d+\.?\d*|\.\d+)?)\*?pi(?:/([+-]?\d+\.?\d*))?", t)
    if m:
        coef = m.group(1)
        value = math.pi * (float(coef) if coef not in ("", "+", "-") else (-1.0 if coef == "-" else 1.0))
        if m.group(2):
            value /= float(m.group(2))
        return value
    try:
        return float(t)
    except ValueError:
        raise ConfigurationError(f"cannot parse phase {text!r}") from None


def parse_phases(text: str):
    return tuple(parse_phase(p) for p in text.split(",") if p.strip())


def parse_range(text: str):
    """``start:stop:step`` (fs, stop inclusive) -> delay tuple."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigurationError(f"delay range {text!r} must be start:stop:step")
    start, stop, step = (float(p) for p in parts)
    return delay_grid(start, stop, step)


def delay_grid(start, stop, step):
    if not step > 0:
        raise ConfigurationError("delay step must be positive")
    if stop < start:
        raise ConfigurationError("delay stop must not precede start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(float(v) for v in np.round(start + step * np.arange(n), 10))


def _suggest(name, choices):
    close = difflib.get_close_matches(name, choices, n=3, cutoff=0.6)
    if close:
        return close
    stems = sorted({c.split("_")[0] for c in choices})
    stem = difflib.get_close_matches(name.split("_")[0], stems, n=1, cutoff=0.6)
    if stem:
        return [stem[0]] + [c for c in choices if c.startswith(stem[0] + "_")]
    return []


def _line_of(text, section, key):
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
            if current == section and not key:
                return i
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return i
    return None


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: {s: {k: v[0] for k, v in keys.items()} for s, keys in DEFAULTS.items()})
    source: str | None = None
    sections_present: tuple = ()
    workers_override: int | None = None

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            text = fh.read()
        return cls.from_string(text, source=str(path))

    @classmethod
    def from_string(cls, text, source="<string>") -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
        try:
            parser.read_string(text, source=source)
        except configparser.Error as exc:
            raise ConfigurationError(f"{source}: {exc}") from None
        cfg = cls(source=source)
        problems = []
        for section in parser.sections():
            if section not in DEFAULTS:
                hint = _suggest(section, list(DEFAULTS))
                problems.append(
                    f"{source}:{_line_of(text, section, '') or '?'}: unknown section [{section}]"
                    + (f"; did you mean {', '.join(hint)}?" if hint else "")
                )
                continue
            for key, value in parser.items(section):
                if key not in DEFAULTS[section]:
                    hint = _suggest(key, list(DEFAULTS[section]))
                    line = _line_of(text, section, key)
                    problems.append(
                        f"{source}:{line or '?'}: unknown key '{key}' in [{section}]"
                        + (f"; did you mean {', '.join(hint)}?" if hint else "")
                    )
                    continue
                cfg.values[section][key] = value.strip()
        if problems:
            raise ConfigurationError("\n".join(problems))
        cfg.sections_present = tuple(parser.sections())
        cfg.validate()
        return cfg

    def set(self, dotted: str, value) -> None:
        section, _, key = dotted.partition(".")
        if section not in DEFAULTS:
            hint = _suggest(section, list(DEFAULTS))
            raise ConfigurationError(f"unknown section {section!r}" + (f"; did you mean {', '.join(hint)}?" if hint else ""))
        if key not in DEFAULTS[section]:
            hint = _suggest(key, list(DEFAULTS[section]))
            raise ConfigurationError(
                f"unknown key {key!r} in [{section}]" + (f"; did you mean {', '.join(hint)}?" if hint else "")
            )
        self.values[section][key] = str(value)

    def get(self, section, key) -> str:
        return self.values[section][key]

    def _float(self, section, key):
        raw = self.values[section][key]
        try:
            return float(raw)
        except ValueError:
            raise ConfigurationError(f"[{section}] {key} = {raw!r} is not a number") from None

    def _int(self, section, key):
        raw = self.values[section][key]
        try:
            return int(raw)
        except ValueError:
            raise ConfigurationError(f"[{section}] {key} = {raw!r} is not an integer") from None

    def _bool(self, section, key):
        raw = self.values[section][key].lower()
        if raw in ("1", "true", "yes", "on"):
            return True
        if raw in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"[{section}] {key} = {raw!r} is not a boolean")

    def validate(self):
        self.build_model()
        self.build_pulses()
        self.delays()
        self.phases()
        self.build_numerics()

    def build_model(self) -> SystemModel:
        preset = self.get("model", "preset")
        if preset not in PRESETS:
            hint = _suggest(preset, list(PRESETS))
            raise ConfigurationError(
                f"[model] unknown preset {preset!r}" + (f"; did you mean {', '.join(hint)}?" if hint else "")
            )
        return PRESETS[preset](
            displacement=self._float("model", "displacement"),
            ground_frequency=self._float("model", "ground_frequency_cm"),
            excited_frequency=self._float("model", "excited_frequency_cm"),
            gap_thz=self._float("model", "gap_thz"),
            ionization_potential=self._float("model", "ionization_potential_ev"),
            n_bins=self._int("model", "continuum_bins"),
            epsilon_min=self._float("model", "epsilon_min_ev"),
            epsilon_max=self._float("model", "epsilon_max_ev"),
            mu_ge=self._float("model", "mu_ge"),
            mu_ec=self._float("model", "mu_ec"),
        )

    def build_pulses(self) -> PulseSequence:
        wl = self.get("pulse", "wavelength_nm")
        wavelength = float(wl) if wl else convert(self._float("model", "gap_thz"), "THz", "nm")
        duration = self._float("pulse", "duration_fs")
        amp = self._float("pulse", "field_amplitude")
        if not duration > 0:
            raise ConfigurationError("[pulse] duration_fs must be positive")
        pump = SpectralPulse.from_wavelength(wavelength, duration, amp)
        probe = SpectralPulse.from_wavelength(wavelength, duration, amp * self._float("pulse", "probe_to_pump_ratio"))
        chirp = self._float("pulse", "pump_chirp_fs2")
        if chirp:
            pump = pump.with_mask(PhaseMaskTerm.chirp(chirp))
        if self._bool("pulse", "pump_pi_step"):
            pump = pump.with_mask(PhaseMaskTerm.pi_step(pump.central_frequency))
        return PulseSequence(pump, probe)

    def delays(self):
        return delay_grid(
            self._float("scan", "delay_start_fs"), self._float("scan", "delay_stop_fs"), self._float("scan", "delay_step_fs")
        )

    def phases(self):
        phases = parse_phases(self.get("scan", "phases"))
        if not phases:
            raise ConfigurationError("[scan] phases must list at least one phase")
        return phases

    def workers(self) -> int:
        """Worker count: command-line flag, then ATTOSCOPE_WORKERS, then the config file."""
        import os

        env = os.environ.get("ATTOSCOPE_WORKERS")
        if self.workers_override is not None:
            n = int(self.workers_override)
        elif env:
            try:
                n = int(env)
            except ValueError:
                raise ConfigurationError(f"ATTOSCOPE_WORKERS={env!r} is not an integer") from None
        else:
            n = self._int("numerics", "workers")
        if n < 1:
            raise ConfigurationError("worker count must be >= 1")
        return n

    def build_numerics(self) -> Numerics:
        num = Numerics(
            n_points=self._int("numerics", "grid_points"),
            x_min=self._float("numerics", "x_min"),
            x_max=self._float("numerics", "x_max"),
            dt=self._float("numerics", "dt_fs"),
            support_threshold=self._float("numerics", "support_threshold"),
            flush_min_delay=self._float("numerics", "flush_min_delay_fs"),
            absorbing_mask=self._bool("numerics", "absorbing_mask"),
        )
        num.grid  # raises on a bad grid
        if not 0 < num.support_threshold < 1:
            raise ConfigurationError("[numerics] support_threshold must lie in (0, 1)")
        if self.get("numerics", "method") not in ("split", "direct"):
            raise ConfigurationError("[numerics] method must be 'split' or 'direct'")
        return num

    def scan_spec(self) -> ScanSpec:
        return ScanSpec(
            self.delays(),
            self.phases(),
            self.build_model(),
            self.build_pulses(),
            self.build_numerics(),
            self.get("numerics", "method"),
            self.workers(),
        )

    def warnings(self):
        out = []
        step = self._float("scan", "delay_step_fs")
        if step > NYQUIST_STEP_FS:
            out.append(
                f"delay step {step} fs exceeds {NYQUIST_STEP_FS} fs; the carrier is under-sampled for beat analysis"
            )
        return out

    def resolved(self) -> dict:
        out = {s: dict(v) for s, v in self.values.items()}
        if "numerics" in out:
            out["numerics"]["workers"] = str(self.workers())
        return out

    def to_ini(self) -> str:
        lines = []
        for s, keys in self.values.items():
            lines.append(f"[{s}]")
            lines += [f"{k} = {v}" for k, v in keys.items()]
            lines.append("")
        return "\n".join(lines)
