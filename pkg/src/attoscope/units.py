"""Unit conversions between spectroscopic frequency, energy and period scales.

Internal convention: energy in eV, time in fs, angular frequency in rad/fs.
Every conversion goes through the ordinary frequency nu in 1/fs (PHz), so all
pairs are mutually consistent and round trips are exact up to rounding.
"""
import math

import numpy as np

HBAR = 0.6582119569509066  # eV fs
PLANCK = 2.0 * math.pi * HBAR  # eV fs
C_CM_PER_FS = 2.99792458e-5
HC_EV_NM = PLANCK * 2.99792458e2  # eV nm (c = 299.792458 nm/fs)

# unit -> (kind, scale); "freq" units are nu = value * scale, "inverse" units
# are nu = scale / value.
_UNITS = {
    "cm-1": ("freq", C_CM_PER_FS),
    "THz": ("freq", 1e-3),
    "PHz": ("freq", 1.0),
    "rad/fs": ("freq", 1.0 / (2.0 * math.pi)),
    "eV": ("freq", 1.0 / PLANCK),
    "nm": ("inverse", 2.99792458e2),
    "fs": ("inverse", 1.0),
    "as": ("inverse", 1e3),
}

UNITS = tuple(_UNITS)


def _to_nu(value, unit):
    try:
        kind, scale = _UNITS[unit]
    except KeyError:
        raise ValueError(f"unknown unit {unit!r}; expected one of {UNITS}") from None
    value = np.asarray(value, dtype=float)
    return value * scale if kind == "freq" else scale / value


def _from_nu(nu, unit):
    try:
        kind, scale = _UNITS[unit]
    except KeyError:
        raise ValueError(f"unknown unit {unit!r}; expected one of {UNITS}") from None
    return nu / scale if kind == "freq" else scale / nu


def convert(value, from_unit, to_unit):
    """Convert a frequency-like quantity between units.

    Wavelength (``nm``) and period (``fs``, ``as``) units are converted through
    their inverse, so ``convert(925, "cm-1", "fs")`` is the vibrational period.

    >>> round(float(convert(925.0, "cm-1", "fs")), 3)
    36.06
    """
    out = _from_nu(_to_nu(value, from_unit), to_unit)
    return float(out) if np.ndim(out) == 0 else out


def wavenumber_to_ev(wn):
    return convert(wn, "cm-1", "eV")


def ev_to_angular(energy):
    return np.asarray(energy) / HBAR if np.ndim(energy) else energy / HBAR


def angular_to_ev(omega):
    return np.asarray(omega) * HBAR if np.ndim(omega) else omega * HBAR
