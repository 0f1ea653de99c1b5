"""Littlewood-Paley cutoffs and the dyadic space-time norms X_k, F^s, N^s.

The space-time transform is evaluated on the characteristic-adapted lattice
``τ = ξ³ + θ`` with ``θ`` on the uniform lattice ``2πm/T_w``. Working in the
modulation variable ``θ = τ - ξ³`` keeps the dispersive oscillation out of the
temporal FFT, so only the modulation bandwidth has to be resolved.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import DataError, ParameterError
from ..spectral import (
    PeriodicGrid,
    RealField,
    SpectralField,
    abs_power,
    forward_transform,
    sobolev_norm,
)

PLATEAU = 5 / 4
SUPPORT = 8 / 5


def smooth_step(x):
    """C^∞ transition: 0 for x <= 0, 1 for x >= 1, built from e^{-1/x}."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def eta0(xi):
    """Even bump: 1 on [-5/4, 5/4], 0 outside (-8/5, 8/5)."""
    r = np.abs(np.asarray(xi, dtype=float))
    return 1.0 - smooth_step((r - PLATEAU) / (SUPPORT - PLATEAU))


def chi(k, xi):
    """Homogeneous shell ``η₀(ξ/2^k) - η₀(ξ/2^{k-1})``, k ∈ ℤ."""
    xi = np.asarray(xi, dtype=float)
    return eta0(xi / 2.0**k) - eta0(xi / 2.0 ** (k - 1))


def eta(k, xi):
    """Inhomogeneous family: ``η₀`` at k = 0, ``χ_k`` for k >= 1."""
    if k < 0:
        raise ParameterError("inhomogeneous cutoffs need k >= 0")
    return eta0(xi) if k == 0 else chi(k, xi)


def psi(t):
    """Time window: 1 on [-1, 1], supported in [-2, 2]."""
    r = np.abs(np.asarray(t, dtype=float))
    return 1.0 - smooth_step(r - 1.0)


def in_shell(k, xi):
    """Indicator of ``I_k = {2^{k-1} <= |ξ| <= 2^{k+1}}``."""
    r = np.abs(np.asarray(xi, dtype=float))
    return (r >= 2.0 ** (k - 1)) & (r <= 2.0 ** (k + 1))


def _top_shell(xi_max):
    # largest k whose cutoff is not identically zero below xi_max
    k = 0
    while 0.8 * 2.0 ** (k + 1) < xi_max:
        k += 1
    return k


def project_Pk(s, k):
    if k < 0:
        raise ParameterError("P_k is defined for k >= 0")
    c = s.coefficients * eta(k, s.grid.xi)
    return SpectralField(s.grid, c)


@dataclass(frozen=True)
class SpaceTimeField:
    """Spatial Fourier coefficients ``û(ξ, t_n)`` on ``t_n = t0 + nΔt``, n < M."""

    grid: PeriodicGrid
    t0: float
    dt: float
    coefficients: np.ndarray
    taper_loss: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.ndim != 2 or c.shape[1] != self.grid.N:
            raise DataError(f"expected (M, {self.grid.N}) coefficients, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise DataError("space-time coefficients contain NaN or Inf")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def M(self):
        return self.coefficients.shape[0]

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.M)

    @property
    def window(self):
        return self.M * self.dt

    @property
    def theta(self):
        return 2 * np.pi * np.fft.fftfreq(self.M, d=self.dt)

    @classmethod
    def from_samples(cls, grid, t0, dt, values, taper=None):
        """Build from physical samples ``values[n, i] = u(x_i, t_n)``."""
        values = np.asarray(values)
        times = t0 + dt * np.arange(values.shape[0])
        loss = 0.0
        if taper is not None:
            w = np.asarray(taper(times), dtype=float)[:, None]
            before = np.sum(np.abs(values) ** 2)
            values = values * w
            after = np.sum(np.abs(values) ** 2)
            loss = float(1 - after / before) if before > 0 else 0.0
        c = np.fft.fft(values, axis=1) * grid.dx * grid._phase
        return cls(grid, t0, dt, c, loss)

    def to_samples(self):
        g = self.grid
        return np.fft.ifft(self.coefficients / g._phase, axis=1) / g.dx

    def modulation_spectrum(self):
        """``f(ξ, ξ³ + θ_m)`` as an (M, N) array indexed by (θ_m, ξ)."""
        xi = self.grid.xi
        g = self.coefficients * np.exp(-1j * np.outer(self.times, xi**3))
        F = np.fft.fft(g, axis=0) * self.dt
        return F * np.exp(-1j * self.theta * self.t0)[:, None]

    @classmethod
    def from_modulation_spectrum(cls, grid, t0, dt, F):
        M = F.shape[0]
        theta = 2 * np.pi * np.fft.fftfreq(M, d=dt)
        times = t0 + dt * np.arange(M)
        g = np.fft.ifft(F * np.exp(1j * theta * t0)[:, None], axis=0) / dt
        return cls(grid, t0, dt, g * np.exp(1j * np.outer(times, grid.xi**3)))

    def l2_norm(self):
        return float(np.sqrt(np.sum(np.abs(self.to_samples()) ** 2) * self.grid.dx * self.dt))


def spectral_l2(F, grid, window):
    return float(np.sqrt(np.sum(np.abs(F) ** 2) / (grid.L * window)))


@dataclass(frozen=True)
class XkProfile:
    terms: np.ndarray
    j_max: int
    tail: float

    @property
    def norm(self):
        return float(np.sum(self.terms))


def _j_count(theta_max):
    j = 0
    while 0.8 * 2.0**j < theta_max:
        j += 1
    return max(j, 1)


def _xk_terms(F, field, k, weight=None):
    grid = field.grid
    if k < 0 or 0.8 * 2.0**k >= grid.xi_max:
        raise ParameterError(f"shell k={k} lies beyond the spatial Nyquist frequency")
    theta = field.theta
    G = F * eta(k, grid.xi)[None, :]
    if weight is not None:
        G = G * weight
    nj = _j_count(np.max(np.abs(theta)))
    terms = np.array(
        [2.0 ** (j / 2) * spectral_l2(G * eta(j, theta)[:, None], grid, field.window) for j in range(nj)]
    )
    total = spectral_l2(G, grid, field.window)
    top = spectral_l2(G * eta(nj - 1, theta)[:, None], grid, field.window) if nj > 1 else 0.0
    tail = (top / total) ** 2 if total > 0 else 0.0
    return XkProfile(terms, nj - 1, float(tail))


def xk_profile(field, k):
    return _xk_terms(field.modulation_spectrum(), field, k)


def xk_block_norm(field, k):
    """``Σ_j 2^{j/2} ‖η_j(τ - ξ³) η_k(ξ) f‖_{L²}``, truncated at the temporal Nyquist."""
    return xk_profile(field, k).norm


def _shells(field):
    return range(_top_shell(field.grid.xi_max) + 1)


def _dyadic_sum(field, s, weight):
    if not (0 <= s <= 2):
        raise ParameterError(f"F^s / N^s index must lie in [0, 2], got {s}")
    F = field.modulation_spectrum()
    total = 0.0
    for k in _shells(field):
        total += 2.0 ** (2 * s * k) * _xk_terms(F, field, k, weight).norm ** 2
    return float(np.sqrt(total))


def fs_norm(field, s):
    return _dyadic_sum(field, s, None)


def ns_norm(field, s):
    w = 1.0 / np.abs(1j + field.theta)[:, None]
    return _dyadic_sum(field, s, w)


def free_evolution_field(phi, epsilon, alpha, window=8.0, M=256, cutoff=psi):
    """``ψ(t) W_ε^α(t) φ`` sampled on ``[-window/2, window/2)``."""
    dt = window / M
    t0 = -window / 2
    times = t0 + dt * np.arange(M)
    xi = phi.grid.xi
    decay = np.exp(-epsilon * np.outer(np.abs(times), abs_power(xi, 2 * alpha)))
    c = cutoff(times)[:, None] * decay * np.exp(1j * np.outer(times, xi**3)) * phi.coefficients
    c[:, phi.grid.N // 2] = 0.0
    return SpaceTimeField(phi.grid, t0, dt, c)


@dataclass
class LinearBoundTable:
    epsilons: list
    ratios: list
    s: float
    alpha: float
    spread: float | None
    flagged: bool


def check_linear_fs_bound(phi, eps_list, alpha, s, window=8.0, M=256):
    """``‖ψ W_ε^α φ‖_{F^s} / ‖φ‖_{H^s}`` per ε; flagged when max/min exceeds 10."""
    if window < 4.0 or window / M > 1 / 8:
        raise ParameterError(
            f"time grid (window={window}, M={M}) is too coarse for the cutoff ψ; "
            "need window >= 4 and window/M <= 1/8"
        )
    grid = phi.grid
    c = phi.coefficients
    total = np.sum(np.abs(c) ** 2)
    high = np.sum(np.abs(c[np.abs(grid.xi) > grid.xi_max / 2]) ** 2)
    if total > 0 and high > 1e-16 * total:
        raise ParameterError("data must be band-limited below half the spatial Nyquist frequency")
    hs = sobolev_norm(phi, s)
    ratios = []
    for eps in eps_list:
        if hs == 0:
            ratios.append(None)
            continue
        field = free_evolution_field(phi, eps, alpha, window, M)
        ratios.append(fs_norm(field, s) / hs)
    vals = [r for r in ratios if r is not None]
    spread = max(vals) / min(vals) if vals and min(vals) > 0 else None
    return LinearBoundTable(list(eps_list), ratios, s, alpha, spread, bool(spread is not None and spread > 10))


def _l6_pad(grid, band):
    factor = 1
    while factor * grid.xi_max <= 3 * band:
        factor *= 2
    return factor


def airy_l6_ratio(k, f, window=4.0, M=64):
    """``2^{k/6} ‖W₀(t) P_k f‖_{L⁶([0, T_w] × torus)} / ‖f‖₂``; ``None`` for f = 0."""
    grid = f.grid
    if k < 0 or 2.0 ** (k + 1) > grid.xi_max:
        raise ParameterError(f"shell k={k} exceeds half the spatial Nyquist frequency")
    norm = sobolev_norm(f, 0)
    if norm == 0:
        return None
    pk = project_Pk(f, k)
    # raw rfft layout of the projected data; the sample phase is irrelevant to L⁶
    raw = np.fft.rfft(np.fft.ifft(pk.coefficients / grid._phase).real / grid.dx)
    factor = _l6_pad(grid, SUPPORT * 2.0**k)
    n_fine = grid.N * factor
    xi = grid.xi_r
    dt = window / M
    acc = 0.0
    for n in range(M):
        v = raw * np.exp(1j * xi**3 * (n * dt))
        vp = np.zeros(n_fine // 2 + 1, dtype=complex)
        vp[: grid.N // 2] = v[: grid.N // 2]
        u = np.fft.irfft(vp, n=n_fine) * factor
        acc += np.sum(u**6)
    l6 = (acc * (grid.L / n_fine) * dt) ** (1 / 6)
    return float(2.0 ** (k / 6) * l6 / norm)


def random_shell_data(grid, k, seed=0):
    """Random real data with spectrum inside ``I_k``."""
    rng = np.random.default_rng(seed)
    xi = grid.xi_r
    sel = in_shell(k, xi) & (xi > 0)
    sel[-1] = False
    v = np.zeros(xi.size, dtype=complex)
    v[sel] = rng.standard_normal(sel.sum()) + 1j * rng.standard_normal(sel.sum())
    return forward_transform(RealField(grid, np.fft.irfft(v, n=grid.N)))
