"""Periodic grids, Fourier transforms, multipliers and the linear propagators.

Fourier convention: ``û(ξ) = ∫ e^{-ixξ} u(x) dx`` discretised as a Δx-weighted
sum over the sample points ``x_i = -L/2 + iΔx``. Norms carry the matching
``1/L`` factor so that ``σ = 0`` reproduces the physical L² norm.

Coefficient arrays are stored in FFT order (``numpy.fft.fftfreq``), so index
``N/2`` is the unpaired Nyquist mode ``ξ = -πN/L``.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import DataError, ParameterError

ROUND_TRIP_TOL = 1e-10
ASYMMETRY_TOL = 1e-6


@dataclass(frozen=True)
class PeriodicGrid:
    L: float
    N: int

    def __post_init__(self):
        if not np.isfinite(self.L) or self.L <= 0:
            raise ParameterError(f"grid length must be positive, got L={self.L}")
        if int(self.N) != self.N or self.N % 2 or self.N < 8:
            raise ParameterError(f"N must be an even integer >= 8, got N={self.N}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))

    @property
    def dx(self):
        return self.L / self.N

    @cached_property
    def x(self):
        x = -self.L / 2 + self.dx * np.arange(self.N)
        x.setflags(write=False)
        return x

    @cached_property
    def modes(self):
        m = np.fft.fftfreq(self.N, d=1.0 / self.N).round().astype(int)
        m.setflags(write=False)
        return m

    @cached_property
    def xi(self):
        xi = 2 * np.pi * self.modes / self.L
        xi.setflags(write=False)
        return xi

    @cached_property
    def xi_r(self):
        """Non-negative frequencies in ``numpy.fft.rfft`` order."""
        xi = 2 * np.pi * np.arange(self.N // 2 + 1) / self.L
        xi.setflags(write=False)
        return xi

    @property
    def xi_max(self):
        """Largest paired frequency; the Nyquist mode itself is excluded."""
        return 2 * np.pi * (self.N // 2 - 1) / self.L

    @cached_property
    def _phase(self):
        # e^{-iξ x_0} with x_0 = -L/2
        ph = np.exp(1j * self.xi * self.L / 2)
        ph.setflags(write=False)
        return ph


def make_grid(L, N):
    return PeriodicGrid(L, N)


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RealField:
    grid: PeriodicGrid
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples)
        if np.iscomplexobj(s):
            raise DataError("RealField samples must be real")
        s = s.astype(float)
        if s.shape != (self.grid.N,):
            raise DataError(f"expected {self.grid.N} samples, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise DataError("RealField samples contain NaN or Inf")
        object.__setattr__(self, "samples", _frozen(s))

    @classmethod
    def from_function(cls, grid, f):
        return cls(grid, f(np.asarray(grid.x)))

    def __add__(self, other):
        return RealField(self.grid, self.samples + other.samples)

    def __sub__(self, other):
        return RealField(self.grid, self.samples - other.samples)

    def __mul__(self, c):
        return RealField(self.grid, self.samples * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class SpectralField:
    grid: PeriodicGrid
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.shape != (self.grid.N,):
            raise DataError(f"expected {self.grid.N} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise DataError("SpectralField coefficients contain NaN or Inf")
        object.__setattr__(self, "coefficients", _frozen(c))

    def __add__(self, other):
        return SpectralField(self.grid, self.coefficients + other.coefficients)

    def __sub__(self, other):
        return SpectralField(self.grid, self.coefficients - other.coefficients)

    def __mul__(self, c):
        return SpectralField(self.grid, self.coefficients * c)

    __rmul__ = __mul__

    def hermitian_defect(self):
        """Max |û(ξ) - conj(û(-ξ))| over paired modes, relative to max |û|."""
        c = self.coefficients
        scale = np.max(np.abs(c))
        if scale == 0:
            return 0.0
        N = self.grid.N
        idx = np.arange(1, N // 2)
        d = np.abs(c[idx] - np.conj(c[N - idx]))
        d0 = abs(c[0].imag)
        return float(max(d.max(initial=0.0), d0) / scale)


@dataclass(frozen=True)
class MultiplierSymbol:
    """A Fourier multiplier ``ξ ↦ m(ξ)`` evaluated lazily on a grid."""

    name: str
    func: Callable[[np.ndarray], np.ndarray] = field(compare=False)

    def on(self, grid):
        m = np.broadcast_to(np.asarray(self.func(np.asarray(grid.xi)), dtype=complex), (grid.N,))
        if not np.all(np.isfinite(m)):
            raise DataError(f"symbol {self.name!r} is not finite on the lattice")
        return m


def abs_power(xi, p):
    """``|ξ|^p`` evaluated as ``exp(p log|ξ|)`` with value 0 at ``ξ = 0``."""
    xi = np.abs(np.asarray(xi, dtype=float))
    out = np.zeros_like(xi)
    nz = xi > 0
    out[nz] = np.exp(p * np.log(xi[nz]))
    return out


def forward_transform(u):
    f = np.fft.fft(u.samples) * u.grid.dx * u.grid._phase
    return SpectralField(u.grid, f)


def inverse_transform(s):
    defect = s.hermitian_defect()
    if defect > ASYMMETRY_TOL:
        raise DataError(
            f"coefficients are not Hermitian (relative defect {defect:.3g}); "
            "an upstream operation broke reality"
        )
    grid = s.grid
    raw = np.fft.ifft(s.coefficients / grid._phase) / grid.dx
    # real part is the Hermitian symmetrisation of the coefficients
    return RealField(grid, raw.real)


def derivative_symbol(order=1):
    return MultiplierSymbol(f"derivative^{order}", lambda xi: (1j * xi) ** order)


def fractional_symbol(sigma):
    """``|∂_x|^σ``."""
    return MultiplierSymbol(f"fractional-derivative {sigma}", lambda xi: abs_power(xi, sigma))


def airy_symbol(t):
    return MultiplierSymbol(f"airy t={t}", lambda xi: np.exp(1j * xi**3 * t))


def dissipative_symbol(t, epsilon, alpha):
    # |t| extends the semigroup to negative times
    return MultiplierSymbol(
        f"dissipative t={t} eps={epsilon} alpha={alpha}",
        lambda xi: np.exp(-epsilon * abs_power(xi, 2 * alpha) * abs(t) + 1j * xi**3 * t),
    )


def apply_multiplier(s, m):
    c = s.coefficients * m.on(s.grid)
    c[s.grid.N // 2] = 0.0
    return SpectralField(s.grid, c)


def airy_evolve(s, t):
    return apply_multiplier(s, airy_symbol(t))


def check_dissipation_params(epsilon, alpha):
    if not (0.0 <= epsilon <= 1.0):
        raise ParameterError(f"epsilon must lie in [0, 1], got {epsilon}")
    if not (0.0 < alpha <= 1.0):
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")


def dissipative_evolve(s, t, epsilon, alpha):
    check_dissipation_params(epsilon, alpha)
    return apply_multiplier(s, dissipative_symbol(t, epsilon, alpha))


def _weighted_norm(s, weight):
    c = s.coefficients
    return float(np.sqrt(np.sum(weight * np.abs(c) ** 2) / s.grid.L))


def sobolev_norm(s, sigma):
    if not (-2.0 <= sigma <= 4.0):
        raise ParameterError(f"Sobolev index must lie in [-2, 4], got {sigma}")
    xi = s.grid.xi
    return _weighted_norm(s, (1.0 + xi**2) ** sigma)


def homogeneous_seminorm(s, sigma):
    if sigma < 0:
        raise ParameterError("homogeneous seminorm undefined for negative order")
    if sigma > 4:
        raise ParameterError(f"homogeneous order must lie in [0, 4], got {sigma}")
    xi = s.grid.xi
    w = abs_power(xi, 2 * sigma)
    # σ = 0 still drops the mean: the seminorm is blind to the zero mode
    w[xi == 0] = 0.0
    return _weighted_norm(s, w)


def l2_norm(u):
    return float(np.sqrt(np.sum(u.samples**2) * u.grid.dx))


def interpolate(s, x):
    """Evaluate the trigonometric interpolant of ``s`` at arbitrary points."""
    x = np.asarray(x, dtype=float)
    c = np.array(s.coefficients)
    c[s.grid.N // 2] = 0.0
    vals = np.exp(1j * np.multiply.outer(x, s.grid.xi)) @ c
    return vals.real / s.grid.L


def upsample(u, factor=2):
    """Spectrally interpolate ``u`` onto a grid ``factor`` times finer."""
    grid = u.grid
    fine = PeriodicGrid(grid.L, grid.N * factor)
    v = np.fft.rfft(u.samples)
    vp = np.zeros(fine.N // 2 + 1, dtype=complex)
    vp[: grid.N // 2] = v[: grid.N // 2]
    vp[grid.N // 2] = v[grid.N // 2] / 2
    # sample points share x_0 = -L/2, so raw rfft coefficients transfer directly
    return RealField(fine, np.fft.irfft(vp, n=fine.N) * factor)
