import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mkdvlab.errors import DataError, ParameterError
from mkdvlab.spectral import (
    MultiplierSymbol,
    RealField,
    SpectralField,
    airy_evolve,
    apply_multiplier,
    derivative_symbol,
    dissipative_evolve,
    dissipative_symbol,
    forward_transform,
    fractional_symbol,
    homogeneous_seminorm,
    interpolate,
    inverse_transform,
    l2_norm,
    make_grid,
    sobolev_norm,
    upsample,
)

from .conftest import field_of


def smooth_random(grid, seed, modes=6):
    rng = np.random.default_rng(seed)
    u = np.zeros(grid.N)
    for m in range(1, modes + 1):
        a, b = rng.standard_normal(2) / m**2
        u += a * np.cos(2 * np.pi * m * grid.x / grid.L) + b * np.sin(2 * np.pi * m * grid.x / grid.L)
    return RealField(grid, u + rng.standard_normal())


def test_grid_lattice():
    g = make_grid(2 * np.pi, 8)
    assert sorted(g.xi) == list(range(-4, 4))
    assert make_grid(64 * np.pi, 1024).dx == pytest.approx(np.pi / 16, rel=1e-15)


@pytest.mark.parametrize("L,N", [(-1, 8), (0, 8), (2 * np.pi, 7), (2 * np.pi, 6), (np.inf, 8)])
def test_grid_rejects(L, N):
    with pytest.raises(ParameterError):
        make_grid(L, N)


def test_constant_and_cosine_transforms():
    g = make_grid(2 * np.pi, 8)
    c = forward_transform(RealField(g, np.ones(8))).coefficients
    assert c[0] == pytest.approx(2 * np.pi)
    assert np.max(np.abs(c[1:])) < 1e-14
    c = forward_transform(field_of(g, np.cos)).coefficients
    for m in range(8):
        want = np.pi if abs(g.xi[m]) == 1 else 0.0
        assert abs(c[m] - want) < 1e-13


def test_gaussian_transform_matches_closed_form():
    g = make_grid(64 * np.pi, 2048)
    s = forward_transform(field_of(g, lambda x: np.exp(-(x**2) / 2)))
    exact = np.sqrt(2 * np.pi) * np.exp(-g.xi**2 / 2)
    assert np.max(np.abs(s.coefficients - exact)) < 1e-10


def test_nonfinite_samples_rejected(grid2pi):
    bad = np.zeros(grid2pi.N)
    bad[3] = np.nan
    with pytest.raises(DataError):
        RealField(grid2pi, bad)
    with pytest.raises(DataError):
        RealField(grid2pi, np.zeros(grid2pi.N + 1))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_round_trip_and_parseval(seed):
    g = make_grid(10.0, 64)
    u = smooth_random(g, seed)
    s = forward_transform(u)
    back = inverse_transform(s)
    assert np.max(np.abs(back.samples - u.samples)) <= 1e-12 * np.max(np.abs(u.samples))
    phys = np.sum(u.samples**2) * g.dx
    spec = np.sum(np.abs(s.coefficients) ** 2) / g.L
    assert spec == pytest.approx(phys, rel=1e-12)
    assert s.hermitian_defect() < 1e-14


def test_inverse_edge_cases(grid2pi):
    z = SpectralField(grid2pi, np.zeros(grid2pi.N, dtype=complex))
    assert np.all(inverse_transform(z).samples == 0)
    c = forward_transform(field_of(grid2pi, np.cos))
    assert np.max(np.abs(inverse_transform(c).samples - np.cos(grid2pi.x))) < 1e-12
    skew = np.zeros(grid2pi.N, dtype=complex)
    skew[1] = 1.0
    with pytest.raises(DataError):
        inverse_transform(SpectralField(grid2pi, skew))


def test_multiplier_examples(grid2pi):
    g = grid2pi
    c = forward_transform(field_of(g, np.cos))
    ident = apply_multiplier(c, MultiplierSymbol("one", lambda xi: np.ones_like(xi)))
    paired = np.arange(g.N) != g.N // 2
    assert np.array_equal(ident.coefficients[paired], c.coefficients[paired])
    d = inverse_transform(apply_multiplier(c, derivative_symbol(1)))
    assert np.max(np.abs(d.samples + np.sin(g.x))) < 1e-12
    c2 = forward_transform(field_of(g, lambda x: np.cos(2 * x)))
    h = inverse_transform(apply_multiplier(c2, fractional_symbol(0.5)))
    assert np.max(np.abs(h.samples - np.sqrt(2) * np.cos(2 * g.x))) < 1e-12


def test_multiplier_is_linear(grid2pi):
    a = forward_transform(smooth_random(grid2pi, 1))
    b = forward_transform(smooth_random(grid2pi, 2))
    m = derivative_symbol(3)
    lhs = apply_multiplier(a * 2.5 + b, m).coefficients
    rhs = (apply_multiplier(a, m) * 2.5 + apply_multiplier(b, m)).coefficients
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(lhs))


def test_nyquist_zeroed(grid2pi):
    c = forward_transform(smooth_random(grid2pi, 3))
    out = apply_multiplier(c, derivative_symbol(1))
    assert out.coefficients[grid2pi.N // 2] == 0


def test_airy_flow():
    g = make_grid(20.0, 128)
    s = forward_transform(smooth_random(g, 4, modes=10))
    assert np.allclose(airy_evolve(s, 0.0).coefficients[: g.N // 2], s.coefficients[: g.N // 2], atol=1e-15)
    for sigma in (-2, -0.5, 0, 1, 2.5, 4):
        assert sobolev_norm(airy_evolve(s, 0.37), sigma) == pytest.approx(
            sobolev_norm(apply_multiplier(s, MultiplierSymbol("one", np.ones_like)), sigma), rel=1e-12
        )
    two = airy_evolve(airy_evolve(s, 0.3), 0.45).coefficients
    one = airy_evolve(s, 0.75).coefficients
    assert np.max(np.abs(two - one)) < 1e-12 * np.max(np.abs(one))


def test_dissipative_flow(grid2pi):
    s = forward_transform(smooth_random(grid2pi, 5))
    for t in (0.2, 1.3):
        assert np.allclose(dissipative_evolve(s, t, 0.0, 0.7).coefficients, airy_evolve(s, t).coefficients, atol=1e-15)
    c2 = forward_transform(field_of(grid2pi, lambda x: np.cos(2 * x)))
    damped = inverse_transform(dissipative_evolve(c2, 1.0, 1.0, 1.0))
    assert np.max(np.abs(damped.samples - np.exp(-4) * np.cos(2 * grid2pi.x + 8))) < 1e-12
    a = dissipative_evolve(dissipative_evolve(s, 0.4, 0.3, 0.6), 0.5, 0.3, 0.6).coefficients
    b = dissipative_evolve(s, 0.9, 0.3, 0.6).coefficients
    assert np.max(np.abs(a - b)) < 1e-12 * np.max(np.abs(b))


@settings(max_examples=40, deadline=None)
@given(
    st.floats(0, 3), st.floats(0, 1), st.floats(0.05, 1), st.floats(-2, 4), st.integers(0, 1000)
)
def test_dissipation_contracts(t, eps, alpha, sigma, seed):
    g = make_grid(12.0, 32)
    s = forward_transform(smooth_random(g, seed))
    out = dissipative_evolve(s, t, eps, alpha)
    assert sobolev_norm(out, sigma) <= sobolev_norm(s, sigma) + 1e-12
    assert abs(out.coefficients[0] - s.coefficients[0]) < 1e-14 * (1 + abs(s.coefficients[0]))
    m = dissipative_symbol(t, eps, alpha).on(g)
    assert m[0] == 1
    assert np.all(np.abs(m) <= 1 + 1e-15)


def test_dissipation_rejects_ranges(grid2pi):
    s = forward_transform(smooth_random(grid2pi, 6))
    with pytest.raises(ParameterError):
        dissipative_evolve(s, 1.0, 1.5, 1.0)
    with pytest.raises(ParameterError):
        dissipative_evolve(s, 1.0, 0.1, 0.0)


def test_negative_time_extension_damps(grid2pi):
    s = forward_transform(smooth_random(grid2pi, 7))
    assert sobolev_norm(dissipative_evolve(s, -1.0, 0.5, 1.0), 0) < sobolev_norm(s, 0)


def test_sobolev_examples(grid2pi):
    c = forward_transform(field_of(grid2pi, np.cos))
    assert sobolev_norm(c, 0) == pytest.approx(np.sqrt(np.pi), rel=1e-13)
    assert sobolev_norm(c, 1) == pytest.approx(np.sqrt(2 * np.pi), rel=1e-13)
    with pytest.raises(ParameterError):
        sobolev_norm(c, 4.5)


def test_sobolev_gaussian_against_quadrature():
    g = make_grid(64 * np.pi, 2048)
    s = forward_transform(field_of(g, lambda x: np.exp(-(x**2) / 2)))
    # ‖u‖²_{H¹} = (1/2π) ∫ (1+ξ²) 2π e^{-ξ²} dξ
    mp.mp.dps = 30
    exact = mp.quad(lambda xi: (1 + xi**2) * mp.e ** (-(xi**2)), [-mp.inf, mp.inf])
    assert sobolev_norm(s, 1) == pytest.approx(float(mp.sqrt(exact)), rel=1e-8)


def test_homogeneous_examples(grid2pi):
    g = grid2pi
    u = field_of(g, lambda x: 3 + np.cos(x))
    assert homogeneous_seminorm(forward_transform(u), 0) == pytest.approx(np.sqrt(np.pi), rel=1e-13)
    c2 = forward_transform(field_of(g, lambda x: np.cos(2 * x)))
    assert homogeneous_seminorm(c2, 0.5) == pytest.approx(np.sqrt(2 * np.pi), rel=1e-13)
    const = forward_transform(RealField(g, np.full(g.N, 2.0)))
    assert homogeneous_seminorm(const, 1.3) == 0
    with pytest.raises(ParameterError):
        homogeneous_seminorm(c2, -0.5)


def test_l2_matches_sobolev_zero():
    g = make_grid(10.0, 64)
    u = smooth_random(g, 8)
    assert l2_norm(u) == pytest.approx(sobolev_norm(forward_transform(u), 0), rel=1e-12)


def test_interpolate_and_upsample():
    g = make_grid(2 * np.pi, 16)
    u = field_of(g, lambda x: np.cos(x) + 0.3 * np.sin(3 * x))
    pts = np.array([0.1, 1.234, -2.5])
    assert np.allclose(interpolate(forward_transform(u), pts), np.cos(pts) + 0.3 * np.sin(3 * pts), atol=1e-13)
    fine = upsample(u, 2)
    assert np.allclose(fine.samples, np.cos(fine.grid.x) + 0.3 * np.sin(3 * fine.grid.x), atol=1e-13)
