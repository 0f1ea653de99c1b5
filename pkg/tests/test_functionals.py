import mpmath as mp
import numpy as np
import pytest

from mkdvlab import functionals as fn
from mkdvlab.errors import DiagnosticError
from mkdvlab.evolution import EquationSpec, Family, SolverConfig, evolve
from mkdvlab.profiles import gaussian
from mkdvlab.spectral import RealField, make_grid

from .conftest import field_of

PI = np.pi


@pytest.fixture
def cos_field(grid2pi):
    return field_of(grid2pi, np.cos)


@pytest.fixture
def mkdv_run(gauss):
    return evolve(gauss, EquationSpec(Family.MKDV), 1.0, SolverConfig(0.01, record_every=10))


def test_zero_field_functionals(grid2pi):
    z = RealField(grid2pi, np.zeros(grid2pi.N))
    for name in ("h1_mkdv", "h1_kdv", "h2_mkdv", "h2p_mkdv"):
        assert getattr(fn, name)(z) == 0


def test_cosine_closed_forms(cos_field):
    assert fn.h1_mkdv(cos_field) == pytest.approx(PI + 3 * PI / 4 + PI, rel=1e-13)
    assert fn.h1_mkdv(cos_field, quartic_sign=-1) == pytest.approx(5 * PI / 4, rel=1e-13)
    assert fn.h1_kdv(cos_field) == pytest.approx(PI, rel=1e-13)
    assert fn.h2_mkdv(cos_field) == pytest.approx(19 * PI / 4, rel=1e-13)
    assert fn.h2p_mkdv(cos_field) == pytest.approx(19 * PI / 4 + PI, rel=1e-13)


def test_mkdv_conservation(mkdv_run):
    assert fn.functional_report(mkdv_run, "h1_mkdv").drift < 1e-6
    assert fn.functional_report(mkdv_run, "h2p_mkdv").drift < 1e-5
    rep = fn.functional_report(mkdv_run, "l2")
    assert rep.drift < 1e-8 and rep.budget_residual is None and rep.boundary_decay < 1e-6


def test_opposite_quartic_sign_is_not_conserved(mkdv_run):
    vals = [fn.h1_mkdv(u, quartic_sign=-1) for u in mkdv_run.fields]
    assert max(abs(v - vals[0]) for v in vals) / (1 + abs(vals[0])) > 1e-4


def test_kdv_conservation(gauss):
    traj = evolve(gauss, EquationSpec(Family.KDV), 1.0, SolverConfig(0.01, record_every=10))
    assert fn.functional_report(traj, "h1_kdv").drift < 1e-6


def test_dissipation_budget(gauss):
    traj = evolve(gauss, EquationSpec(Family.MKDV_B, 0.1, 1.0), 1.0, SolverConfig(0.01, record_every=100))
    budget = fn.dissipation_budget(traj, 1.0)
    m0, m1 = (fn.l2_squared(u) for u in (traj.fields[0], traj.fields[-1]))
    assert budget == pytest.approx(np.sqrt((m0 - m1) / 2), rel=1e-4)
    assert fn.functional_report(traj, "l2").budget_residual < 1e-6
    with pytest.raises(DiagnosticError):
        fn.dissipation_budget(traj, 2.0)


def test_budget_trivial_cases(gauss, mkdv_run):
    assert fn.dissipation_budget(mkdv_run, 1.0) == 0
    z = RealField(gauss.grid, np.zeros(gauss.grid.N))
    traj = evolve(z, EquationSpec(Family.MKDV_B, 0.1, 1.0), 0.2, SolverConfig(0.05))
    assert fn.dissipation_budget(traj, 1.0) == 0


def test_order2_budget_recorded(gauss):
    cfg = SolverConfig(0.02, order2=True)
    traj = evolve(gauss, EquationSpec(Family.MKDV_B, 0.1, 0.5), 0.2, cfg)
    assert fn.dissipation_budget(traj, 2.0) > 0


def test_gn_cosine(cos_field):
    r6, r4 = fn.gn_ratios(cos_field)
    assert r6 == pytest.approx(5 / (8 * PI**2), rel=1e-12)
    assert r4 == pytest.approx((3 * PI / 4) / (PI**1.5 * PI**0.5), rel=1e-12)


def test_gn_gaussian_against_quadrature():
    g = make_grid(64 * np.pi, 2048)
    r6, r4 = fn.gn_ratios(field_of(g, lambda x: np.exp(-(x**2) / 2)))
    mp.mp.dps = 30
    q = lambda f: mp.quad(f, [-mp.inf, 0, mp.inf])
    l2 = q(lambda x: mp.e ** (-(x**2)))
    dx2 = q(lambda x: x**2 * mp.e ** (-(x**2)))
    l6 = q(lambda x: mp.e ** (-3 * x**2))
    l4 = q(lambda x: mp.e ** (-2 * x**2))
    assert r6 == pytest.approx(float(l6 / (l2**2 * dx2)), rel=1e-8)
    assert r4 == pytest.approx(float(l4 / (l2**1.5 * mp.sqrt(dx2))), rel=1e-8)


@pytest.mark.parametrize("lam", [0.5, 0.25])
def test_gn_scale_invariance(lam):
    g = make_grid(40.0, 256)
    u = field_of(g, lambda x: np.exp(-(x**2) / 2) * (1 + 0.3 * np.sin(x)))
    gs = make_grid(40.0 / lam, 256)
    us = field_of(gs, lambda x: lam * np.exp(-((lam * x) ** 2) / 2) * (1 + 0.3 * np.sin(lam * x)))
    assert np.allclose(fn.gn_ratios(us), fn.gn_ratios(u), rtol=1e-8)


def test_gn_rejects_degenerate(grid2pi):
    with pytest.raises(DiagnosticError):
        fn.gn_ratios(RealField(grid2pi, np.zeros(grid2pi.N)))
    with pytest.raises(DiagnosticError):
        fn.gn_ratios(RealField(grid2pi, np.ones(grid2pi.N)))


def test_miura_transform_examples(grid2pi, cos_field):
    z = RealField(grid2pi, np.zeros(grid2pi.N))
    assert np.all(fn.miura_transform(z).samples == 0)
    c = fn.miura_transform(RealField(grid2pi, np.full(grid2pi.N, 0.7))).samples
    assert np.allclose(c, 0.49, atol=1e-14)
    x = grid2pi.x
    assert np.max(np.abs(fn.miura_transform(cos_field).samples - (-np.sin(x) + np.cos(x) ** 2))) < 1e-12


def test_miura_consistency_trivial(gauss):
    z = RealField(gauss.grid, np.zeros(gauss.grid.N))
    traj = evolve(z, EquationSpec(Family.MKDV), 0.3, SolverConfig(0.1))
    assert fn.miura_consistency(traj) == 0


def test_miura_stencil_order(gauss):
    res = []
    for h in (0.05, 0.025):
        traj = evolve(gauss, EquationSpec(Family.MKDV), 0.5, SolverConfig(h / 5, record_every=5))
        res.append(fn.miura_consistency(traj))
    assert 3.5 <= res[0] / res[1] <= 4.5


def test_miura_consistency_guards(gauss):
    short = evolve(gauss, EquationSpec(Family.MKDV), 0.1, SolverConfig(0.1))
    with pytest.raises(DiagnosticError):
        fn.miura_consistency(short)
    diss = evolve(gauss, EquationSpec(Family.MKDV_B, 0.1, 1.0), 0.3, SolverConfig(0.1))
    with pytest.raises(DiagnosticError):
        fn.miura_consistency(diss)
    uneven = evolve(gauss, EquationSpec(Family.MKDV), 0.3, SolverConfig(0.1, record_every=2))
    with pytest.raises(DiagnosticError):
        fn.miura_consistency(uneven)


def test_h1_bounded_by_data_across_amplitudes():
    g = make_grid(64 * np.pi, 1024)
    sups, data = [], []
    for a in (0.1, 0.2, 0.4, 0.8):
        phi = gaussian(g, a, 2.0)
        traj = evolve(phi, EquationSpec(Family.MKDV_B, 0.1, 1.0), 1.0, SolverConfig(0.01, record_every=10))
        sups.append(max(fn.h1_mkdv(u) for u in traj.fields) + fn.dissipation_budget(traj, 1.0))
        data.append(fn.h1_mkdv(phi))
    assert all(np.isfinite(sups)) and all(b >= a for a, b in zip(sups, sups[1:]))
