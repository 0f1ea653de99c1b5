"""Resonance function, critical regularity and the quadrilinear form J.

``J(f₁, f₂, f₃, f₄)`` integrates ``f₁f₂f₃`` over ℝ⁶ against ``f₄`` evaluated at
``(ξ₁+ξ₂+ξ₃, μ₁+μ₂+μ₃+Ω(ξ₁,ξ₂,ξ₃))``. Block functions are discretised as
nodal values on cell-midpoint grids inside their frequency block, extended by
bilinear interpolation, so both evaluation paths below compute the same
Riemann sum and must agree to rounding.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError
from ..evolution import _workers

DEFAULT_BUDGET = 10**8
CASES = ("a", "b", "c", "d")


def omega(xi):
    return np.asarray(xi, dtype=float) ** 3


def _omega_fast(x1, x2, x3):
    return x1**3 + x2**3 + x3**3 - (x1 + x2 + x3) ** 3


def _exact_direct(x1, x2, x3):
    """Direct Ω evaluated in exact integer arithmetic, rounded once to float."""
    arrs = [np.atleast_1d(np.asarray(a, dtype=float)) for a in (x1, x2, x3)]
    arrs = np.broadcast_arrays(*arrs)
    shape = arrs[0].shape
    flat = [a.ravel() for a in arrs]
    mants, exps = zip(*(np.frexp(a) for a in flat))
    # value = mant * 2^exp with |mant| in [0.5, 1): scale mantissas to 53-bit integers
    ints = [np.round(m * 2.0**53).astype(np.int64) for m in mants]
    exps = [e.astype(np.int64) - 53 for e in exps]
    nonzero = np.concatenate([e[i != 0] for e, i in zip(exps, ints)])
    base = int(nonzero.min()) if nonzero.size else 0
    out = np.empty(flat[0].size)
    for idx in range(out.size):
        n = [int(ints[c][idx]) << int(exps[c][idx] - base) if ints[c][idx] else 0 for c in range(3)]
        s = n[0] + n[1] + n[2]
        val = n[0] ** 3 + n[1] ** 3 + n[2] ** 3 - s**3
        out[idx] = _ldexp_int(val, 3 * base)
    return out.reshape(shape)


def _ldexp_int(n, e):
    """``n · 2^e`` correctly rounded, falling back to rationals outside the float range."""
    if n == 0:
        return 0.0
    if n.bit_length() < 1000 and -900 < e < 900:
        return math.ldexp(float(n), e)
    try:
        return float(Fraction(n) * Fraction(2) ** e)
    except OverflowError:
        return math.copysign(math.inf, n)


def resonance_factored(x1, x2, x3):
    """``3(ξ₁+ξ₂)(ξ₁+ξ₃)(ξ₁+ξ₄)`` with ``ξ₄ = -(ξ₁+ξ₂+ξ₃)``, so ``ξ₁+ξ₄ = -(ξ₂+ξ₃)``."""
    x1, x2, x3 = (np.asarray(a, dtype=float) for a in (x1, x2, x3))
    return -3.0 * (x1 + x2) * (x1 + x3) * (x2 + x3)


def resonance(x1, x2, x3):
    """Return ``(Ω direct, Ω factored)``; the direct form is exact up to one final rounding."""
    direct = _exact_direct(x1, x2, x3)
    fact = resonance_factored(x1, x2, x3)
    if np.ndim(x1) == np.ndim(x2) == np.ndim(x3) == 0:
        return float(direct.reshape(())), float(fact)
    return direct, fact


def critical_regularity(alpha):
    if not (0 < alpha <= 1):
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    if alpha <= 0.5:
        return -0.75
    return -3.0 / (5.0 - 2.0 * alpha)


def shell_intervals(k):
    """``I_k`` as two closed intervals."""
    lo, hi = 2.0 ** (k - 1), 2.0 ** (k + 1)
    return [(-hi, -lo), (lo, hi)]


def modulation_intervals(j):
    """``Ĩ_j``: ``[-2, 2]`` for j = 0, otherwise ``I_j``."""
    if j < 0:
        raise ParameterError("modulation index j must be >= 0")
    return [(-2.0, 2.0)] if j == 0 else shell_intervals(j)


@dataclass(frozen=True)
class _Axis:
    starts: tuple
    steps: tuple
    n: int

    @classmethod
    def build(cls, intervals, n_total):
        per = n_total // len(intervals)
        if per < 2:
            raise ParameterError(f"need at least 2 nodes per interval, got {n_total} for {len(intervals)}")
        steps = tuple((b - a) / per for a, b in intervals)
        starts = tuple(a + 0.5 * h for (a, _), h in zip(intervals, steps))
        return cls(starts, steps, per)

    def nodes(self, comp):
        return self.starts[comp] + self.steps[comp] * np.arange(self.n)

    @property
    def components(self):
        return len(self.starts)


@dataclass(frozen=True)
class BlockFunction:
    """Non-negative function supported in ``I_k × Ĩ_j``.

    ``values[(a, b)]`` holds nodal values on component ``a`` of the ξ axis and
    component ``b`` of the μ axis.
    """

    k: int
    j: int
    xi_axis: _Axis
    mu_axis: _Axis
    values: dict = field(compare=False)

    @classmethod
    def from_generator(cls, k, j, n_axis=8, gen=None):
        xa = _Axis.build(shell_intervals(k), n_axis)
        ma = _Axis.build(modulation_intervals(j), n_axis)
        vals = {}
        for a in range(xa.components):
            for b in range(ma.components):
                shape = (xa.n, ma.n)
                v = np.ones(shape) if gen is None else gen.random(shape)
                v.setflags(write=False)
                vals[(a, b)] = v
        return cls(k, j, xa, ma, vals)

    @classmethod
    def indicator(cls, k, j, n_axis=8):
        return cls.from_generator(k, j, n_axis, None)

    @classmethod
    def random(cls, k, j, n_axis=8, rng=None):
        return cls.from_generator(k, j, n_axis, np.random.default_rng(rng))

    def scaled(self, c):
        vals = {key: v * c for key, v in self.values.items()}
        return BlockFunction(self.k, self.j, self.xi_axis, self.mu_axis, vals)

    def points(self):
        """Node coordinates and weighted values ``(ξ, μ, w·f)`` flattened."""
        xs, ms, ws = [], [], []
        for (a, b), v in self.values.items():
            X, Mu = np.meshgrid(self.xi_axis.nodes(a), self.mu_axis.nodes(b), indexing="ij")
            w = self.xi_axis.steps[a] * self.mu_axis.steps[b]
            xs.append(X.ravel())
            ms.append(Mu.ravel())
            ws.append(w * v.ravel())
        return np.concatenate(xs), np.concatenate(ms), np.concatenate(ws)

    def l2_norm(self):
        tot = 0.0
        for (a, b), v in self.values.items():
            tot += self.xi_axis.steps[a] * self.mu_axis.steps[b] * np.sum(v**2)
        return float(np.sqrt(tot))

    def __call__(self, xi, mu):
        xi = np.asarray(xi, dtype=float)
        mu = np.asarray(mu, dtype=float)
        out = np.zeros(np.broadcast(xi, mu).shape)
        for (a, b), v in self.values.items():
            out += _bilinear(
                self.xi_axis.starts[a], self.xi_axis.steps[a],
                self.mu_axis.starts[b], self.mu_axis.steps[b], v, xi, mu,
            )
        return out

    @property
    def size(self):
        return sum(v.size for v in self.values.values())


def _bilinear(x0, hx, m0, hm, v, X, Mu):
    nx, nm = v.shape
    fx = (X - x0) / hx
    fm = (Mu - m0) / hm
    inside = (fx >= 0) & (fx <= nx - 1) & (fm >= 0) & (fm <= nm - 1)
    i = np.clip(np.floor(fx), 0, nx - 2).astype(int)
    jj = np.clip(np.floor(fm), 0, nm - 2).astype(int)
    ax = np.where(inside, fx - i, 0.0)
    am = np.where(inside, fm - jj, 0.0)
    val = (
        v[i, jj] * (1 - ax) * (1 - am)
        + v[i + 1, jj] * ax * (1 - am)
        + v[i, jj + 1] * (1 - ax) * am
        + v[i + 1, jj + 1] * ax * am
    )
    return np.where(inside, val, 0.0)


def _check_budget(fs, budget):
    count = fs[0].size * fs[1].size * fs[2].size
    if count > budget:
        raise ParameterError(f"6-dimensional sum needs {count} evaluations, budget is {budget}")


def _chunks(n, other):
    step = max(1, int(2_000_000 // max(other, 1)))
    for s in range(0, n, step):
        yield slice(s, min(n, s + step))


def brute_force_J(f1, f2, f3, f4, budget=DEFAULT_BUDGET):
    """Direct weighted sum over the six-dimensional product grid."""
    _check_budget((f1, f2, f3), budget)
    x1, m1, w1 = f1.points()
    x2, m2, w2 = f2.points()
    x3, m3, w3 = f3.points()
    X2, X3 = np.meshgrid(x2, x3, indexing="ij")
    M2, M3 = np.meshgrid(m2, m3, indexing="ij")
    W23 = np.outer(w2, w3)
    total = 0.0
    for sl in _chunks(x1.size, W23.size):
        a = x1[sl, None, None]
        om = _omega_fast(a, X2, X3)
        vals = f4(a + X2 + X3, m1[sl, None, None] + M2 + M3 + om)
        total += float(np.sum(w1[sl, None, None] * W23 * vals))
    return total


def convolution_J(f1, f2, f3, f4, budget=DEFAULT_BUDGET):
    """``⟨f₁♯ * f₂♯ * f₃♯, f₄♯⟩`` with ``f♯(ξ, τ) = f(ξ, τ - ω(ξ))``.

    Each ``fᵢ♯`` is a discrete measure in (ξ, τ); the triple convolution is
    built pairwise and paired with ``f₄♯``.
    """
    _check_budget((f1, f2, f3), budget)
    clouds = []
    for f in (f1, f2, f3):
        x, m, w = f.points()
        clouds.append((x, m + omega(x), w))
    (x1, t1, w1), (x2, t2, w2), (x3, t3, w3) = clouds
    x12 = np.add.outer(x1, x2).ravel()
    t12 = np.add.outer(t1, t2).ravel()
    w12 = np.outer(w1, w2).ravel()
    total = 0.0
    for sl in _chunks(x12.size, x3.size):
        xs = x12[sl, None] + x3[None, :]
        ts = t12[sl, None] + t3[None, :]
        total += float(np.sum(w12[sl, None] * w3[None, :] * f4(xs, ts - omega(xs))))
    return total


def _sorted_desc(vals):
    return sorted(vals, reverse=True)


def J_bound(case, ks, js):
    """Right-hand side of the case's estimate with constant 1 (norm product excluded)."""
    k1, k2, k3, k4 = ks
    kd = _sorted_desc(ks)
    jd = _sorted_desc(js)
    kmax, kthd, kmin = kd[0], kd[2], kd[3]
    jmax, jthd, jmin = jd[0], jd[2], jd[3]
    jsum = sum(js)
    if case == "a":
        return 2.0 ** ((jmin + jthd) / 2) * 2.0 ** ((kmin + kthd) / 2)
    if case == "b":
        low = kmin if js[1] != jmax else kthd
        return 2.0 ** (jsum / 2 - jmax / 2) * 2.0 ** (-kmax) * 2.0 ** (low / 2)
    if case == "c":
        return 2.0 ** (jsum / 2 - jmax / 2) * 2.0 ** (-(k1 + k2 + k3) / 6)
    if case == "d":
        return 2.0 ** (jsum / 2) * 2.0 ** (-1.5 * kmax)
    raise ParameterError(f"unknown case {case!r}")


def check_hypotheses(case, ks, js):
    if case not in CASES:
        raise ParameterError(f"case must be one of {CASES}, got {case!r}")
    if len(ks) != 4 or len(js) != 4:
        raise ParameterError("need four shell indices and four modulation indices")
    if any(int(k) != k for k in ks) or any(int(j) != j or j < 0 for j in js):
        raise ParameterError("shell indices must be integers and modulation indices non-negative integers")
    if list(ks) != sorted(ks):
        raise ParameterError(f"shell indices must satisfy k1 <= k2 <= k3 <= k4, got {tuple(ks)}")
    k1, k2, k3, k4 = ks
    if case == "b" and not k2 <= k3 - 5:
        raise ParameterError(f"case (b) requires k2 <= k3 - 5, got k2={k2}, k3={k3}")
    if case == "c" and min(ks) < 1:
        raise ParameterError("case (c) requires every k >= 1")
    if case == "d" and not min(ks) <= max(ks) - 10:
        raise ParameterError("case (d) requires k_min <= k_max - 10")


def resonant_level(ks, n_axis=8):
    """Modulation index j whose shell holds the median |Ω| over the block nodes."""
    axes = [_Axis.build(shell_intervals(k), n_axis) for k in ks[:3]]
    pts = [np.concatenate([a.nodes(c) for c in range(a.components)]) for a in axes]
    X1, X2, X3 = np.meshgrid(*pts, indexing="ij")
    s = np.abs(X1 + X2 + X3)
    k4 = ks[3]
    sel = (s >= 2.0 ** (k4 - 1)) & (s <= 2.0 ** (k4 + 1))
    if not sel.any():
        return 0
    med = float(np.median(np.abs(_omega_fast(X1, X2, X3))[sel]))
    return max(0, int(round(math.log2(med)))) if med > 2 else 0


@dataclass
class BoundReport:
    case: str
    ks: tuple
    js: tuple
    ratios: list
    max_ratio: float
    bound: float

    @property
    def finite(self):
        return math.isfinite(self.max_ratio)


def trial_rng(seed, case, ks, js, trial):
    key = [int(seed), CASES.index(case)] + [int(k) + 64 for k in ks] + [int(j) for j in js] + [int(trial)]
    return np.random.default_rng(np.random.SeedSequence(key))


def _trial_ratio(args):
    case, ks, js, t, n_axis, seed, budget, zero, bound = args
    rng = trial_rng(seed, case, ks, js, t)
    fs = [BlockFunction.random(k, j, n_axis, rng) for k, j in zip(ks, js)]
    if zero:
        fs = [f.scaled(0.0) for f in fs]
    norms = float(np.prod([f.l2_norm() for f in fs]))
    if norms == 0:
        return 0.0
    return abs(brute_force_J(*fs, budget=budget)) / (bound * norms)


def check_J_bound(case, ks, js, trials=100, n_axis=8, seed=0, budget=DEFAULT_BUDGET, zero=False):
    """Max over random non-negative trials of ``J / (bound · Π‖fᵢ‖)``.

    Trials draw from independent streams keyed on (seed, case, blocks, trial),
    so the result does not depend on the worker count.
    """
    ks, js = tuple(int(k) for k in ks), tuple(int(j) for j in js)
    check_hypotheses(case, ks, js)
    bound = J_bound(case, ks, js)
    jobs = [(case, ks, js, t, n_axis, seed, budget, zero, bound) for t in range(trials)]
    nworkers = min(_workers(), len(jobs))
    if nworkers > 1:
        with ProcessPoolExecutor(nworkers) as pool:
            ratios = list(pool.map(_trial_ratio, jobs))
    else:
        ratios = [_trial_ratio(j) for j in jobs]
    return BoundReport(case, ks, js, ratios, float(max(ratios)) if ratios else 0.0, bound)


@dataclass
class BoundSweep:
    case: str
    reports: list
    spread: float
    stable: bool


def sweep_J_bounds(case, blocks, trials=20, n_axis=8, seed=0, limit=50.0):
    """Run ``check_J_bound`` over ``blocks = [(ks, js), ...]`` and measure the ratio spread."""
    reports = [check_J_bound(case, ks, js, trials, n_axis, seed) for ks, js in blocks]
    vals = [r.max_ratio for r in reports]
    spread = max(vals) / min(vals) if min(vals) > 0 else math.inf
    return BoundSweep(case, reports, spread, bool(spread < limit and all(map(math.isfinite, vals))))


def default_blocks(case, n_axis=8):
    """Block sweeps used by the harness; the last modulation index sits on the resonance."""
    base = {
        "a": [(0, 1, 2, 2), (1, 1, 2, 2), (0, 2, 3, 3), (1, 2, 3, 3)],
        "b": [(0, 0, 5, 5), (0, 1, 6, 6), (1, 1, 6, 6), (0, 0, 6, 6)],
        "c": [(1, 1, 1, 2), (1, 1, 2, 2), (2, 2, 2, 3), (1, 2, 3, 3)],
        "d": [(0, 5, 10, 10), (0, 6, 11, 11), (1, 6, 11, 11), (0, 5, 11, 11)],
    }[case]
    return [(ks, (0, 0, 0, resonant_level(ks, n_axis))) for ks in base]
