"""Conserved and dissipated quantities, Gagliardo-Nirenberg ratios, Miura map.

Integrals over the torus stand in for integrals over the line. Powers such as
u⁴ and u⁶ are formed on a 2x spectrally upsampled grid so that diagnostic
aliasing stays below solver error.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DiagnosticError
from .evolution import Family, Trajectory
from .spectral import RealField, upsample

PAD = 2
EDGE_FRACTION = 0.05


def _deriv(u, order=1):
    grid = u.grid
    v = np.fft.rfft(u.samples) * (1j * grid.xi_r) ** order
    v[-1] = 0.0
    return np.fft.irfft(v, n=grid.N)


def _integral(f, grid):
    return float(np.sum(f) * grid.dx)


def _padded(u):
    return upsample(u, PAD)


def _dx2_integral(u):
    # ∫ u_x² by Parseval on the raw rfft coefficients
    grid = u.grid
    v = np.fft.rfft(u.samples)
    w = np.full(v.size, 2.0)
    w[0] = 1.0
    w[-1] = 0.0
    return float(np.sum(w * grid.xi_r**2 * np.abs(v) ** 2) * grid.dx**2 / grid.L)


def h1_mkdv(u, quartic_sign=1.0):
    """``∫ u_x² + s u⁴ + u² dx``; conserved by the MKdV flow for ``s = +1``.

    ``quartic_sign=-1`` gives the variant with ``-u⁴``, which is conserved by
    the opposite-sign (focusing) equation instead.
    """
    up = _padded(u)
    s = up.samples
    return _dx2_integral(u) + quartic_sign * _integral(s**4, up.grid) + _integral(s**2, up.grid)


def h1_kdv(u):
    """``∫ u_x² + 2u³ dx``."""
    up = _padded(u)
    return _dx2_integral(u) + 2 * _integral(up.samples**3, up.grid)


def h2_mkdv(u):
    """``∫ u_xx² + 10 u² u_x² + 2u⁶ dx``."""
    up = _padded(u)
    s = up.samples
    ux = _deriv(up)
    uxx = _deriv(up, 2)
    return _integral(uxx**2 + 10 * s**2 * ux**2 + 2 * s**6, up.grid)


def h2p_mkdv(u):
    up = _padded(u)
    return h2_mkdv(u) + _integral(up.samples**2, up.grid)


def l2_squared(u):
    return _integral(u.samples**2, u.grid)


def boundary_decay(u):
    """Max |u| within the outer 5% of the box at each end."""
    x = u.grid.x
    edge = np.abs(x) >= (0.5 - EDGE_FRACTION) * u.grid.L
    return float(np.max(np.abs(u.samples[edge])))


@dataclass
class FunctionalReport:
    name: str
    times: np.ndarray
    values: np.ndarray
    drift: float
    budget_residual: float | None = None
    boundary_decay: float = 0.0


FUNCTIONALS = {
    "l2": lambda u: np.sqrt(l2_squared(u)),
    "h1_mkdv": h1_mkdv,
    "h1_kdv": h1_kdv,
    "h2_mkdv": h2_mkdv,
    "h2p_mkdv": h2p_mkdv,
}


def functional_report(traj, name):
    fn = FUNCTIONALS[name]
    fields = traj.fields
    vals = np.array([fn(u) for u in fields])
    drift = float(np.max(np.abs(vals - vals[0])) / (1 + abs(vals[0])))
    budget = None
    if name == "l2" and traj.equation.family.dissipative:
        from .evolution import l2_balance_residual

        budget = l2_balance_residual(traj)
    decay = max(boundary_decay(u) for u in fields)
    return FunctionalReport(name, np.array(traj.times), vals, drift, budget, decay)


def dissipation_budget(traj, sigma):
    """``ε^{1/2} (∫_0^T ‖Λ^σ u‖² dτ)^{1/2}`` from the per-step samples."""
    samples = None
    for key, vals in traj.dissipation_samples.items():
        if abs(key - sigma) < 1e-12:
            samples = vals
    if samples is None:
        raise DiagnosticError(
            f"trajectory has no dissipation samples at order {sigma}; "
            f"available: {sorted(traj.dissipation_samples)}"
        )
    eps = traj.equation.epsilon
    if eps == 0:
        return 0.0
    integral = np.trapezoid(samples, traj.step_times)
    return float(np.sqrt(eps * max(integral, 0.0)))


def gn_ratios(u):
    """Gagliardo-Nirenberg ratios ``‖u‖₆⁶/(‖u‖₂⁴‖u_x‖₂²)`` and ``‖u‖₄⁴/(‖u‖₂³‖u_x‖₂)``."""
    up = _padded(u)
    s = up.samples
    l2 = _integral(s**2, up.grid)
    dx2 = _dx2_integral(u)
    if l2 == 0 or dx2 == 0:
        raise DiagnosticError("Gagliardo-Nirenberg ratios are undefined for zero or constant fields")
    r6 = _integral(s**6, up.grid) / (l2**2 * dx2)
    r4 = _integral(s**4, up.grid) / (l2**1.5 * np.sqrt(dx2))
    return float(r6), float(r4)


def miura_transform(v):
    """``v_x + v²``; the square is formed on the padded grid and truncated back."""
    grid = v.grid
    vp = _padded(v)
    sq = np.fft.rfft(vp.samples**2)[: grid.N // 2 + 1] / PAD
    sq[-1] = 0.0
    return RealField(grid, _deriv(v) + np.fft.irfft(sq, n=grid.N))


def kdv_residual(w_prev, w_next, w_mid, h):
    """``‖∂_t w + w_xxx - 3(w²)_x‖₂`` with a centered difference in time."""
    up = _padded(w_mid)
    sq = RealField(up.grid, up.samples**2)
    flux = _deriv(sq)
    res = (w_next.samples - w_prev.samples) / (2 * h)
    res_p = upsample(RealField(w_mid.grid, res), PAD).samples + _deriv(up, 3) - 3 * flux
    return float(np.sqrt(_integral(res_p**2, up.grid)))


def miura_consistency(traj):
    """Max over interior snapshots of the KdV residual of ``M v`` along an MKdV run."""
    if len(traj.times) < 3:
        raise DiagnosticError("Miura consistency needs at least 3 snapshots")
    if traj.equation.family != Family.MKDV:
        raise DiagnosticError("Miura consistency is defined for non-dissipative MKdV trajectories")
    steps = np.diff(traj.times)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, steps[0]):
        raise DiagnosticError("snapshots must be uniformly spaced in time")
    h = steps[0]
    w = [miura_transform(u) for u in traj.fields]
    return max(kdv_residual(w[i - 1], w[i + 1], w[i], h) for i in range(1, len(w) - 1))
