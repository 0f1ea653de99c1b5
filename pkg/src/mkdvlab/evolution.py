"""Time integration of the KdV / MKdV family with optional fractional dissipation.

All four equations share the form

    u_t + u_xxx + ε|∂_x|^{2α} u = N(u)

with ``N(u) = 3(u²)_x`` (KdV), ``2(u²)_x`` (KdV-B) or ``2(u³)_x`` (MKdV, MKdV-B).
The linear part is integrated exactly by the symbol ``exp[(iξ³ - ε|ξ|^{2α}) t]``;
only ``N`` is stepped explicitly (integrating-factor RK4).
"""

import enum
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BlowUpError, DiagnosticError, ParameterError, SweepError
from .spectral import (
    PeriodicGrid,
    RealField,
    abs_power,
    check_dissipation_params,
    forward_transform,
    interpolate,
    sobolev_norm,
)

logger = logging.getLogger(__name__)

BLOWUP_FACTOR = 1e6
WORKERS_ENV = "MKDVLAB_WORKERS"


class Family(str, enum.Enum):
    KDV = "kdv"
    KDV_B = "kdv-b"
    MKDV = "mkdv"
    MKDV_B = "mkdv-b"

    @property
    def dissipative(self):
        return self in (Family.KDV_B, Family.MKDV_B)

    @property
    def cubic(self):
        return self in (Family.MKDV, Family.MKDV_B)


# (power p, coefficient c) in N(u) = c (u^p)_x
_NONLINEARITY = {
    Family.KDV: (2, 3.0),
    Family.KDV_B: (2, 2.0),
    Family.MKDV: (3, 2.0),
    Family.MKDV_B: (3, 2.0),
}


@dataclass(frozen=True)
class EquationSpec:
    family: Family
    epsilon: float = 0.0
    alpha: float = 1.0

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        eps, alpha = float(self.epsilon), float(self.alpha)
        if fam.dissipative:
            if not (0.0 < eps <= 1.0):
                raise ParameterError(f"{fam.value} needs epsilon in (0, 1], got {eps}")
            check_dissipation_params(eps, alpha)
        else:
            if eps != 0.0:
                raise ParameterError(
                    f"{fam.value} is non-dissipative and needs epsilon = 0 "
                    f"(got {eps}); use {fam.value}-b for a dissipative run"
                )
            alpha = 1.0
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def mkdv(cls, epsilon=0.0, alpha=1.0):
        if epsilon == 0:
            return cls(Family.MKDV)
        return cls(Family.MKDV_B, epsilon, alpha)


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    dealias_fraction: float | None = None
    record_every: int = 1
    order2: bool = False

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if self.dealias_fraction is not None and not (0 < self.dealias_fraction <= 1):
            raise ParameterError(f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ParameterError(f"record_every must be a positive integer, got {self.record_every}")

    def fraction_for(self, family):
        if self.dealias_fraction is not None:
            return self.dealias_fraction
        # cubic products alias unless only half the modes are kept
        return 0.5 if Family(family).cubic else 2.0 / 3.0

    def dissipation_orders(self, eq):
        orders = [eq.alpha]
        if self.order2:
            orders += [2 * eq.alpha, 2 * eq.alpha + 1]
        return tuple(dict.fromkeys(orders))


@dataclass(frozen=True)
class Trajectory:
    equation: EquationSpec
    grid: PeriodicGrid
    times: np.ndarray
    samples: np.ndarray
    step_times: np.ndarray
    dissipation_samples: dict = field(default_factory=dict)
    dt: float = 0.0

    @property
    def fields(self):
        return [RealField(self.grid, row) for row in self.samples]

    @property
    def steps(self):
        return len(self.step_times) - 1

    def __len__(self):
        return len(self.times)


def default_dt(phi, eq):
    """Step-size heuristic ``0.5 Δx / (1 + max|u|)^p`` with p = 2 for cubic families."""
    peak = float(np.max(np.abs(phi.samples)))
    power = 2 if eq.family.cubic else 1
    return 0.5 * phi.grid.dx / (1.0 + peak) ** power


class _Integrator:
    """Precomputed symbols for fixed (grid, equation, dt). Works on raw rfft data."""

    def __init__(self, grid, eq, dt, dealias_fraction):
        self.grid = grid
        self.dt = dt
        xi = grid.xi_r
        m = np.arange(xi.size)
        keep = m < dealias_fraction * grid.N / 2
        if keep.sum() < 4:
            raise ParameterError("dealiasing keeps fewer than 4 modes; refine the grid")
        keep[grid.N // 2] = False
        self.mask = keep
        self.power, coef = _NONLINEARITY[eq.family]
        self.nl_symbol = coef * 1j * xi * keep
        lin = 1j * xi**3 - eq.epsilon * abs_power(xi, 2 * eq.alpha)
        self.E = np.exp(lin * dt)
        self.E2 = np.exp(lin * dt / 2)
        # odd symbols are ill-defined on the unpaired Nyquist mode
        self.E[-1] = self.E2[-1] = 0.0
        # multiplicity of each rfft coefficient in the full spectrum
        w = np.full(xi.size, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        self._parseval = w * grid.dx**2 / grid.L
        self.xi = xi

    def nonlinear(self, v):
        u = np.fft.irfft(v * self.mask, n=self.grid.N)
        return self.nl_symbol * np.fft.rfft(u**self.power)

    def step(self, v):
        h, E, E2 = self.dt, self.E, self.E2
        k1 = self.nonlinear(v)
        k2 = self.nonlinear(E2 * (v + 0.5 * h * k1))
        k3 = self.nonlinear(E2 * v + 0.5 * h * k2)
        k4 = self.nonlinear(E * v + h * E2 * k3)
        return E * v + (h / 6.0) * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)

    def seminorm_sq(self, v, sigma):
        wt = abs_power(self.xi, 2 * sigma)
        wt[0] = 0.0
        return float(np.sum(self._parseval * wt * np.abs(v) ** 2))


def nonlinear_rhs(u, eq):
    grid = u.grid
    integ = _Integrator(grid, eq, 1.0, SolverConfig(1.0).fraction_for(eq.family))
    n = np.fft.irfft(integ.nonlinear(np.fft.rfft(u.samples)), n=grid.N)
    return RealField(grid, n)


def step(u, eq, cfg):
    integ = _Integrator(u.grid, eq, cfg.dt, cfg.fraction_for(eq.family))
    v = integ.step(np.fft.rfft(u.samples))
    out = np.fft.irfft(v, n=u.grid.N)
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite values after one step", cfg.dt)
    return RealField(u.grid, out)


def evolve(phi, eq, T, cfg):
    """Integrate from ``phi`` to time ``T``; ``dt`` is shrunk so ``T/dt`` is an integer."""
    if T < 0 or not math.isfinite(T):
        raise ParameterError(f"T must be non-negative, got {T}")
    grid = phi.grid
    nsteps = 0 if T == 0 else max(1, math.ceil(T / cfg.dt - 1e-9))
    dt = T / nsteps if nsteps else cfg.dt
    integ = _Integrator(grid, eq, dt, cfg.fraction_for(eq.family))
    orders = cfg.dissipation_orders(eq)

    v = np.fft.rfft(phi.samples)
    times, snaps = [0.0], [np.array(phi.samples)]
    step_times = [0.0]
    diss = {s: [integ.seminorm_sq(v, s)] for s in orders}
    limit = BLOWUP_FACTOR * max(float(np.max(np.abs(phi.samples))), 1e-300)

    def partial():
        return _pack(eq, grid, times, snaps, step_times, diss, dt)

    for n in range(1, nsteps + 1):
        v = integ.step(v)
        t = T if n == nsteps else n * dt
        u = np.fft.irfft(v, n=grid.N)
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > limit:
            raise BlowUpError(f"solution blew up at t={t:.6g} ({eq.family.value})", t, partial())
        step_times.append(t)
        for s in orders:
            diss[s].append(integ.seminorm_sq(v, s))
        if n % cfg.record_every == 0 or n == nsteps:
            times.append(t)
            snaps.append(u)
    return partial()


def _pack(eq, grid, times, snaps, step_times, diss, dt):
    def frozen(a):
        a = np.array(a, dtype=float)
        a.setflags(write=False)
        return a

    return Trajectory(
        equation=eq,
        grid=grid,
        times=frozen(times),
        samples=frozen(snaps),
        step_times=frozen(step_times),
        dissipation_samples={s: frozen(vals) for s, vals in diss.items()},
        dt=dt,
    )


def l2_balance_residual(traj):
    """``|‖u(T)‖² - ‖φ‖² + 2ε∫‖Λ^α u‖²| / ‖φ‖²`` with a trapezoid time integral."""
    eq = traj.equation
    dx = traj.grid.dx
    m0 = np.sum(traj.samples[0] ** 2) * dx
    m1 = np.sum(traj.samples[-1] ** 2) * dx
    if m0 == 0:
        return 0.0
    integral = np.trapezoid(traj.dissipation_samples[eq.alpha], traj.step_times)
    return float(abs(m1 - m0 + 2 * eq.epsilon * integral) / m0)


def evolve_balanced(phi, eq, T, cfg, tol=1e-6, max_halvings=8):
    """Evolve, halving ``dt`` until the L² balance residual drops below ``tol``."""
    for _ in range(max_halvings + 1):
        traj = evolve(phi, eq, T, cfg)
        res = l2_balance_residual(traj)
        if res < tol:
            return traj
        logger.info("L2 balance residual %.3g at dt=%.3g; halving", res, cfg.dt)
        cfg = replace(cfg, dt=cfg.dt / 2)
    warnings.warn(f"L2 balance residual {res:.3g} still above {tol} after {max_halvings} halvings")
    return traj


def scaling_check(phi, lam, epsilon, alpha, T, cfg, n_scaled=None, exponent=None):
    """Sup-in-time L² gap between the solved rescaled problem and the rescaled solution.

    The rescaling is ``u ↦ λ u(λx, λ³t)`` with data ``λ φ(λx)`` and dissipation
    ``ε λ^{exponent}``; by default ``exponent = 3 - 2α``, the value that leaves
    the equation invariant. The scaled problem lives on a grid of length ``L/λ``.
    """
    if not (0 < lam <= 1):
        raise ParameterError(f"lambda must lie in (0, 1], got {lam}")
    grid = phi.grid
    n_scaled = grid.N if n_scaled is None else n_scaled
    if n_scaled < grid.N:
        raise ParameterError(
            f"scaled grid with N={n_scaled} cannot resolve the unit-scale spectrum (N={grid.N})"
        )
    try:
        sgrid = PeriodicGrid(grid.L / lam, n_scaled)
    except ParameterError as exc:
        raise ParameterError(f"incompatible scaled grid: {exc}") from None
    if exponent is None:
        exponent = 3 - 2 * alpha
    eq = EquationSpec.mkdv(epsilon, alpha)
    eq_s = EquationSpec.mkdv(epsilon * lam**exponent, alpha)

    nsteps = max(1, math.ceil(T / cfg.dt - 1e-9))
    unit = evolve(phi, eq, T, replace(cfg, dt=T / nsteps))
    Ts = T / lam**3
    xs = lam * np.asarray(sgrid.x)
    same_points = n_scaled == grid.N

    def rescale(samples):
        if same_points:
            return lam * samples
        return lam * interpolate(forward_transform(RealField(grid, samples)), xs)

    phi_s = RealField(sgrid, rescale(phi.samples))
    scaled = evolve(phi_s, eq_s, Ts, replace(cfg, dt=Ts / nsteps))
    gaps = [
        np.sqrt(np.sum((scaled.samples[i] - rescale(unit.samples[i])) ** 2) * sgrid.dx)
        for i in range(len(unit.times))
    ]
    return float(max(gaps))


@dataclass
class SweepReport:
    epsilons: list
    errors: list
    s: float
    alpha: float
    T: float
    slope: float | None
    monotone: bool
    failed: list = field(default_factory=list)
    dropped: int = 0
    notes: list = field(default_factory=list)


def _sweep_member(args):
    phi, eps, alpha, s, T, cfg, ref_samples = args
    traj = evolve(phi, EquationSpec(Family.MKDV_B, eps, alpha), T, cfg)
    grid = phi.grid
    return max(
        sobolev_norm(forward_transform(RealField(grid, a - b)), s)
        for a, b in zip(traj.samples, ref_samples)
    )


def _workers():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def fit_slope(eps, errs):
    x, y = np.log(np.asarray(eps)), np.log(np.asarray(errs))
    return float(np.polyfit(x, y, 1)[0])


def inviscid_limit_sweep(phi, eps_list, alpha, s, T, cfg, drop_largest=0, on_error="raise"):
    """Sup-in-time H^s distance between MKdV-B (each ε) and MKdV from the same data."""
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 4:
        raise ParameterError("inviscid sweep needs at least 4 epsilon values")
    if any(not (0 < e <= 1) for e in eps_list):
        raise ParameterError("sweep epsilons must lie in (0, 1]")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ParameterError("sweep epsilons must be strictly decreasing")
    if eps_list[0] / eps_list[-1] < 100 * (1 - 1e-12):
        raise ParameterError("sweep epsilons must span at least two decades")
    if not (0.25 <= s <= 2):
        raise ParameterError(f"sweep Sobolev index must lie in [1/4, 2], got {s}")
    if not (0 <= drop_largest <= 2):
        raise ParameterError("drop_largest must be 0, 1 or 2")
    check_dissipation_params(eps_list[0], alpha)

    ref = evolve(phi, EquationSpec(Family.MKDV), T, cfg)
    jobs = [(phi, e, alpha, s, T, cfg, ref.samples) for e in eps_list]
    nworkers = min(_workers(), len(jobs))

    def run_one(job):
        try:
            return _sweep_member(job)
        except BlowUpError as exc:
            if on_error == "raise":
                raise SweepError(f"member run with epsilon={job[1]} blew up: {exc}", job[1]) from exc
            return exc

    if nworkers > 1:
        with ProcessPoolExecutor(nworkers) as pool:
            futures = [pool.submit(_sweep_member, j) for j in jobs]
            results = []
            for job, fut in zip(jobs, futures):
                try:
                    results.append(fut.result())
                except BlowUpError as exc:
                    if on_error == "raise":
                        raise SweepError(f"member run with epsilon={job[1]} blew up: {exc}", job[1]) from exc
                    results.append(exc)
    else:
        results = [run_one(j) for j in jobs]

    errors, failed = [], []
    for e, r in zip(eps_list, results):
        if isinstance(r, Exception):
            errors.append(None)
            failed.append(e)
        else:
            errors.append(float(r))

    ok = [(e, r) for e, r in zip(eps_list, errors) if r is not None]
    notes = []
    slope = None
    if len(ok) < 4:
        notes.append("slope undefined: fewer than 4 successful members")
    elif any(r == 0 for _, r in ok):
        notes.append("slope undefined: zero error in sweep")
    else:
        fit = ok[drop_largest:]
        slope = fit_slope([e for e, _ in fit], [r for _, r in fit])

    vals = [r for _, r in ok]
    # eps decreasing, so errors should be non-increasing along the list
    monotone = all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))
    if not monotone:
        warnings.warn("inviscid sweep errors are not monotone in epsilon")
        notes.append("errors not monotone in epsilon")
    return SweepReport(eps_list, errors, s, alpha, T, slope, monotone, failed, drop_largest, notes)
