"""Named initial profiles."""

import numpy as np

from .errors import ParameterError
from .spectral import RealField

PROFILES = ("gaussian", "sech", "cosine", "random-bandlimited")


def gaussian(grid, amplitude=1.0, width=1.0):
    return RealField(grid, amplitude * np.exp(-0.5 * (grid.x / width) ** 2))


def sech(grid, amplitude=1.0, width=1.0):
    return RealField(grid, amplitude / np.cosh(grid.x / width))


def cosine(grid, amplitude=1.0, mode=1):
    return RealField(grid, amplitude * np.cos(2 * np.pi * mode * grid.x / grid.L))


def random_bandlimited(grid, amplitude=1.0, band=(0.0, 2.0), seed=0):
    """Random real field with spectrum supported in ``band[0] <= |ξ| <= band[1]``.

    Normalised so that ``max |u| = amplitude``.
    """
    lo, hi = band
    if hi > grid.xi_max:
        raise ParameterError(f"band edge {hi} exceeds the grid's largest frequency {grid.xi_max:.4g}")
    rng = np.random.default_rng(seed)
    xi = grid.xi_r
    sel = (xi >= lo) & (xi <= hi) & (xi > 0)
    v = np.zeros(xi.size, dtype=complex)
    v[sel] = rng.standard_normal(sel.sum()) + 1j * rng.standard_normal(sel.sum())
    u = np.fft.irfft(v, n=grid.N)
    peak = np.max(np.abs(u))
    if peak == 0:
        return RealField(grid, u)
    return RealField(grid, amplitude * u / peak)


def make_profile(grid, name, amplitude=1.0, width=1.0, mode=1, band=(0.0, 2.0), seed=0):
    if name == "gaussian":
        return gaussian(grid, amplitude, width)
    if name == "sech":
        return sech(grid, amplitude, width)
    if name == "cosine":
        return cosine(grid, amplitude, mode)
    if name == "random-bandlimited":
        return random_bandlimited(grid, amplitude, band, seed)
    raise ParameterError(f"unknown profile {name!r}; choose from {', '.join(PROFILES)}")
