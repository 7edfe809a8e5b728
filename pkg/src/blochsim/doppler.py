"""Velocity grids, the Faddeeva function and Doppler averaging.

A moving atom sees field alpha detuned by -+ k_alpha v; averaging any
velocity-dependent quantity over the 1D Maxwell distribution

    f_M(v) = exp(-(v/u)^2) / (u sqrt(pi)),   u = sqrt(2 kB T / M)

is done either by quadrature, sum_k w_k q(v_k) f_M(v_k) with weights that
exclude f_M, or semi-analytically through the Faddeeva function
w(z) = exp(-z^2) erfc(-iz) (see steady.doppler_average_form).
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import wofz

from . import dynamics


def f_maxwell(v, u: float):
    """1D Maxwell velocity distribution, normalized to 1."""
    v = np.asarray(v, dtype=float)
    return np.exp(-((v / u) ** 2)) / (u * np.sqrt(np.pi))


def faddeeva(z):
    """Faddeeva function w(z) = exp(-z^2) erfc(-iz).

    Accurate to well below 1e-8 relative over |z| <= 30, Im z >= 0 (and
    anywhere overflow permits).
    """
    out = wofz(z)
    if not np.all(np.isfinite(out)):
        raise ValueError("faddeeva overflowed; for Im z < 0 use the "
                         "conjugation identity instead of direct evaluation")
    return out


@dataclass
class VelocityGrid:
    """Quadrature nodes (m/s) and weights for integrals against f_M.

    Weights exclude the Maxwell factor: sum_k weights[k] * f_M(nodes[k])
    approximates integral of f_M, i.e. 1.
    """
    nodes: np.ndarray
    weights: np.ndarray
    kind: str


def _clenshaw_curtis(n: int):
    """Nodes and weights on [-1, 1] (classic cosine-sum construction)."""
    if n < 2:
        raise ValueError("Clenshaw-Curtis needs at least 2 nodes")
    m = n - 1
    theta = np.pi * np.arange(n) / m
    x = np.cos(theta)
    w = np.empty(n)
    for k in range(n):
        acc = 1.0
        for j in range(1, m // 2 + 1):
            b = 1.0 if 2 * j < m else 0.5
            acc -= b * 2.0 * np.cos(2.0 * j * theta[k]) / (4.0 * j * j - 1.0)
        w[k] = 2.0 * acc / m
    w[0] *= 0.5
    w[-1] *= 0.5
    return x[::-1].copy(), w[::-1].copy()


def make_grid(kind: str = "trapezoid", n: int = 501, span: float = 5.0,
              u: float = 1.0) -> VelocityGrid:
    """Velocity quadrature grid.

    trapezoid / clenshaw_curtis cover [-span*u, span*u]; gauss_hermite uses
    the Hermite nodes scaled by u (span is ignored, weights are divided by
    f_M so the uniform weighted-sum form applies).
    """
    if kind == "trapezoid":
        if n < 2:
            raise ValueError("trapezoid grid needs at least 2 nodes")
        vmax = span * u
        nodes = np.linspace(-vmax, vmax, n)
        h = nodes[1] - nodes[0]
        weights = np.full(n, h)
        weights[0] = weights[-1] = 0.5 * h
    elif kind == "clenshaw_curtis":
        x, w = _clenshaw_curtis(n)
        vmax = span * u
        nodes = vmax * x
        weights = vmax * w
    elif kind == "gauss_hermite":
        t, w = np.polynomial.hermite.hermgauss(n)
        if np.max(t) ** 2 > 700.0:
            raise ValueError("gauss_hermite order too large: exp(t^2) "
                             "overflows when undoing the Maxwell factor")
        nodes = u * t
        weights = u * w * np.exp(t ** 2)
    else:
        raise ValueError(f"unknown grid kind '{kind}'")
    return VelocityGrid(nodes, weights, kind)


def load_grid(path) -> VelocityGrid:
    """Velocity grid from a two-column text file (node, weight)."""
    data = np.loadtxt(path)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("grid file must have two columns: node weight")
    return VelocityGrid(data[:, 0].copy(), data[:, 1].copy(), "imported")


def average_steady_numerical(solver: Callable[[float], np.ndarray],
                             grid: VelocityGrid, u: float,
                             weight: Optional[Callable] = None) -> np.ndarray:
    """Quadrature average of a per-velocity solution.

    solver maps a velocity (m/s) to a density vector; weight replaces f_M
    for non-Maxwellian distributions (must be normalized like f_M).
    """
    dist = weight if weight is not None else (lambda v: f_maxwell(v, u))
    acc = None
    for v, w in zip(grid.nodes, grid.weights):
        term = (w * float(dist(v))) * np.asarray(solver(v))
        acc = term if acc is None else acc + term
    return acc


_TD_METHODS = {
    "rk4": dynamics.integrate_rk4,
    "rk5": dynamics.integrate_rk5,
    "adaptive": dynamics.integrate_adaptive,
}


def average_td(l0: np.ndarray, l1: np.ndarray, r0: np.ndarray,
               grid: VelocityGrid, u: float, t0: float, t1: float,
               n_steps: int, method: str = "rk4", n_substeps: int = 1,
               memory_mode: str = "streaming",
               weight: Optional[Callable] = None) -> dynamics.Trajectory:
    """Doppler-averaged time-dependent solution for L(v) = l0 + v l1.

    memory_mode "streaming" accumulates the weighted trajectories one
    velocity class at a time; "precompute_all" stores every class first.
    Both reduce in grid order and agree to machine precision.
    """
    dist = weight if weight is not None else (lambda v: f_maxwell(v, u))
    if method == "eigen":
        t_eval = np.linspace(t0, t1, n_steps + 1)
        def run(v):
            return dynamics.integrate_eigen(l0 + v * l1, r0, t_eval)
    elif method in _TD_METHODS:
        fun = _TD_METHODS[method]
        kw = {} if method == "adaptive" else {"n_substeps": n_substeps}
        def run(v):
            return fun(l0 + v * l1, r0, t0, t1, n_steps, **kw)
    else:
        raise ValueError(f"unknown method '{method}'")

    if memory_mode == "streaming":
        acc = None
        times = None
        for v, w in zip(grid.nodes, grid.weights):
            traj = run(v)
            times = traj.times
            term = (w * float(dist(v))) * traj.states
            acc = term if acc is None else acc + term
        return dynamics.Trajectory(times, acc)
    if memory_mode == "precompute_all":
        trajs = [run(v) for v in grid.nodes]
        acc = None
        for traj, v, w in zip(trajs, grid.nodes, grid.weights):
            term = (w * float(dist(v))) * traj.states
            acc = term if acc is None else acc + term
        return dynamics.Trajectory(trajs[0].times, acc)
    raise ValueError(f"unknown memory_mode '{memory_mode}'")
