"""Velocity grids, Faddeeva evaluation and Doppler averaging."""

import os

import numpy as np
import pytest
from numpy.testing import assert_allclose

import blochsim as bs
from conftest import make_ladder

DATA = os.path.join(os.path.dirname(__file__), "data")


# ----------------------------------------------------------------- Faddeeva

def test_faddeeva_matches_high_precision_table():
    # Reference values computed with 30-digit arithmetic (see
    # data/make_faddeeva_oracle.py); grid plus random points over
    # [-30, 30] x [0, 30].
    ref = np.load(os.path.join(DATA, "faddeeva_oracle.npz"))
    got = bs.faddeeva(ref["z"])
    rel = np.abs(got - ref["w"]) / np.abs(ref["w"])
    assert rel.max() < 1e-8


def test_faddeeva_at_origin():
    assert abs(bs.faddeeva(0.0) - 1.0) < 1e-14


def test_faddeeva_real_axis_real_part():
    # Re w(x) = exp(-x^2) for real x.
    x = np.linspace(-4.0, 4.0, 41)
    assert_allclose(bs.faddeeva(x).real, np.exp(-x ** 2), atol=1e-14)


def test_faddeeva_imaginary_axis():
    # w(iy) = exp(y^2) erfc(y), purely real for y >= 0.
    from scipy.special import erfc
    y = np.array([0.1, 0.5, 1.0, 3.0, 10.0])
    w = bs.faddeeva(1j * y)
    assert_allclose(w.imag, 0.0, atol=1e-15)
    assert_allclose(w.real, np.exp(y ** 2) * erfc(y), rtol=1e-12)


def test_faddeeva_overflow_guard():
    # Deep in the lower half plane w(z) ~ 2 exp(-z^2) overflows; the
    # evaluator must refuse rather than return inf.
    with pytest.raises(ValueError):
        bs.faddeeva(-40.0j)


# ------------------------------------------------------------------- grids

def test_grid_weights_normalize_maxwellian():
    # Weights exclude f_M, so sum w f_M(v) must reproduce its unit norm.
    u = 240.0
    for kind, n in [("trapezoid", 501), ("clenshaw_curtis", 129),
                    ("gauss_hermite", 32)]:
        g = bs.make_grid(kind, n=n, span=5.0, u=u)
        total = np.sum(g.weights * bs.f_maxwell(g.nodes, u))
        assert abs(total - 1.0) < 1e-10, kind


def test_grid_second_moment():
    # <v^2> = u^2 / 2 for the 1D Maxwellian.
    u = 180.0
    for kind, n in [("trapezoid", 1001), ("clenshaw_curtis", 257),
                    ("gauss_hermite", 48)]:
        g = bs.make_grid(kind, n=n, span=6.0, u=u)
        m2 = np.sum(g.weights * g.nodes ** 2 * bs.f_maxwell(g.nodes, u))
        assert_allclose(m2, u ** 2 / 2.0, rtol=1e-9)


def test_clenshaw_curtis_polynomial_exactness():
    # n-point Clenshaw-Curtis integrates polynomials of degree < n exactly.
    g = bs.make_grid("clenshaw_curtis", n=9, span=2.0, u=1.0)
    a = 2.0
    for k in range(0, 8):
        got = np.sum(g.weights * g.nodes ** k)
        want = 0.0 if k % 2 else 2.0 * a ** (k + 1) / (k + 1)
        assert abs(got - want) < 1e-12 * max(1.0, abs(want))


def test_gauss_hermite_weights_undo_maxwell_factor():
    # Node t_k maps to u t_k and the weight carries exp(t_k^2), so the
    # uniform sum w q f_M applies to Gauss-Hermite like any other rule.
    u = 150.0
    g = bs.make_grid("gauss_hermite", n=24, u=u)
    t, w = np.polynomial.hermite.hermgauss(24)
    assert_allclose(g.nodes, u * t, rtol=1e-14)
    assert_allclose(g.weights, u * w * np.exp(t ** 2), rtol=1e-14)


def test_gauss_hermite_order_limit():
    with pytest.raises(ValueError):
        bs.make_grid("gauss_hermite", n=500)


def test_trapezoid_endpoint_weights():
    g = bs.make_grid("trapezoid", n=5, span=2.0, u=1.0)
    h = g.nodes[1] - g.nodes[0]
    assert_allclose(g.weights, [0.5 * h, h, h, h, 0.5 * h])


def test_grid_validation():
    with pytest.raises(ValueError):
        bs.make_grid("trapezoid", n=1)
    with pytest.raises(ValueError):
        bs.make_grid("clenshaw_curtis", n=1)
    with pytest.raises(ValueError):
        bs.make_grid("simpson")


def test_load_grid_roundtrip(tmp_path):
    g = bs.make_grid("clenshaw_curtis", n=129, span=5.0, u=200.0)
    path = tmp_path / "grid.dat"
    np.savetxt(path, np.column_stack([g.nodes, g.weights]))
    loaded = bs.load_grid(path)
    assert loaded.kind == "imported"
    assert_allclose(loaded.nodes, g.nodes, rtol=1e-12)
    assert_allclose(loaded.weights, g.weights, rtol=1e-12)
    total = np.sum(loaded.weights * bs.f_maxwell(loaded.nodes, 200.0))
    assert abs(total - 1.0) < 1e-10


def test_load_grid_rejects_bad_shape(tmp_path):
    path = tmp_path / "bad.dat"
    np.savetxt(path, np.arange(12.0).reshape(4, 3))
    with pytest.raises(ValueError):
        bs.load_grid(path)


# -------------------------------------------------------------- averaging

def test_average_steady_numerical_analytic_moment():
    # solver(v) = (1, v^2) averages to (1, u^2/2).
    u = 220.0
    grid = bs.make_grid("gauss_hermite", n=40, u=u)
    out = bs.average_steady_numerical(
        lambda v: np.array([1.0, v * v]), grid, u)
    assert_allclose(out, [1.0, u ** 2 / 2.0], rtol=1e-10)


def test_average_steady_custom_weight():
    # Supplying the Maxwellian explicitly must match the default exactly.
    u = 200.0
    system, fields = make_ladder(wavelengths=(780.0, 776.0),
                                 directions=(1, -1))
    split = bs.split_velocity(system, fields)
    grid = bs.make_grid("trapezoid", n=201, span=4.0, u=u)

    def solver(v):
        return bs.steady_eigen(split.at(v), system.n_states)

    base = bs.average_steady_numerical(solver, grid, u)
    same = bs.average_steady_numerical(solver, grid, u,
                                       weight=lambda v: bs.f_maxwell(v, u))
    assert np.array_equal(base, same)


def test_average_td_memory_modes_agree_exactly():
    # Streaming and precompute-all reduce in the same order, so the
    # results are bitwise identical.
    u = 20.0
    system, fields = make_ladder(wavelengths=(780.0, 776.0),
                                 directions=(1, -1))
    split = bs.split_velocity(system, fields)
    r0 = bs.init_rho([1.0, 0.0, 0.0])
    grid = bs.make_grid("clenshaw_curtis", n=21, span=4.0, u=u)
    a = bs.average_td(split.l0, split.l1, r0, grid, u, 0.0, 0.5, 1000,
                      memory_mode="streaming")
    b = bs.average_td(split.l0, split.l1, r0, grid, u, 0.0, 0.5, 1000,
                      memory_mode="precompute_all")
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.times, b.times)


def test_average_td_longtime_matches_steady_average():
    # After many lifetimes the averaged trajectory settles onto the
    # quadrature average of the per-velocity steady states.  Exact
    # eigenbasis propagation sidesteps stiffness from the largest
    # Doppler shifts on the Gauss-Hermite grid.
    u = 180.0
    system, fields = make_ladder(wavelengths=(780.0, 776.0),
                                 directions=(1, -1))
    split = bs.split_velocity(system, fields)
    r0 = bs.init_rho([1.0, 0.0, 0.0])
    grid = bs.make_grid("gauss_hermite", n=24, u=u)
    traj = bs.average_td(split.l0, split.l1, r0, grid, u, 0.0, 8.0, 32,
                         method="eigen")
    want = bs.average_steady_numerical(
        lambda v: bs.steady_eigen(split.at(v), system.n_states), grid, u)
    assert_allclose(traj.states[-1], want, atol=2e-5)


def test_average_td_methods_agree():
    # Moderate shifts keep the explicit integrators comfortably inside
    # their stability region; eigen propagation is the exact reference.
    u = 20.0
    system, fields = make_ladder(wavelengths=(780.0, 776.0),
                                 directions=(1, -1))
    split = bs.split_velocity(system, fields)
    r0 = bs.init_rho([1.0, 0.0, 0.0])
    grid = bs.make_grid("clenshaw_curtis", n=17, span=4.0, u=u)
    args = (split.l0, split.l1, r0, grid, u, 0.0, 1.0, 4000)
    ref = bs.average_td(*args, method="eigen")
    for method in ["rk4", "rk5", "adaptive"]:
        traj = bs.average_td(*args, method=method)
        assert_allclose(traj.states[-1], ref.states[-1], atol=1e-5), method
        assert_allclose(traj.times, ref.times, atol=1e-12)


def test_average_td_rejects_unknown_options():
    system, fields = make_ladder(wavelengths=(780.0, 776.0),
                                 directions=(1, -1))
    split = bs.split_velocity(system, fields)
    r0 = bs.init_rho([1.0, 0.0, 0.0])
    grid = bs.make_grid("trapezoid", n=11, span=3.0, u=100.0)
    with pytest.raises(ValueError):
        bs.average_td(split.l0, split.l1, r0, grid, 100.0, 0.0, 1.0, 10,
                      method="euler")
    with pytest.raises(ValueError):
        bs.average_td(split.l0, split.l1, r0, grid, 100.0, 0.0, 1.0, 10,
                      memory_mode="mmap")
