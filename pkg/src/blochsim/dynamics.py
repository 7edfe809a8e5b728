"""Time integration of dr/dt = L(t) r.

Fixed-step classic RK4 and the six-stage fifth-order Butcher scheme are
implemented directly; the adaptive route wraps an embedded 8th-order
Dormand-Prince pair.  For a time-independent L the eigendecomposition
propagator gives the solution in closed form at arbitrary times.

l_provider arguments accept either a constant matrix or a callable t -> L;
providers are sampled at the RK stage abscissas, no caching or interpolation
is done here.  Times are in us, L in rad/us.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eig

LProvider = Union[np.ndarray, Callable[[float], np.ndarray]]


@dataclass
class Trajectory:
    """Sampled solution: times (n_out,), states (n_out, dim)."""
    times: np.ndarray
    states: np.ndarray


def _as_provider(l_provider: LProvider) -> Callable[[float], np.ndarray]:
    if callable(l_provider):
        return l_provider
    lmat = np.asarray(l_provider)
    return lambda t: lmat


def _output_times(t0: float, t1: float, n_steps: int) -> np.ndarray:
    if n_steps < 1:
        raise ValueError("need at least one step")
    return np.linspace(t0, t1, n_steps + 1)


def integrate_rk4(l_provider: LProvider, r0: np.ndarray, t0: float, t1: float,
                  n_steps: int, n_substeps: int = 1,
                  callback: Optional[Callable] = None) -> Trajectory:
    """Classic fourth-order Runge-Kutta with n_substeps per output sample."""
    lfun = _as_provider(l_provider)
    times = _output_times(t0, t1, n_steps)
    h = (times[1] - times[0]) / n_substeps
    r = np.array(r0, dtype=float)
    out = np.empty((n_steps + 1, r.size))
    out[0] = r
    if callback:
        callback(times[0], r)
    for m in range(n_steps):
        t = times[m]
        for _ in range(n_substeps):
            k1 = lfun(t) @ r
            k2 = lfun(t + 0.5 * h) @ (r + 0.5 * h * k1)
            k3 = lfun(t + 0.5 * h) @ (r + 0.5 * h * k2)
            k4 = lfun(t + h) @ (r + h * k3)
            r = r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        out[m + 1] = r
        if callback:
            callback(times[m + 1], r)
    return Trajectory(times, out)


def integrate_rk5(l_provider: LProvider, r0: np.ndarray, t0: float, t1: float,
                  n_steps: int, n_substeps: int = 1,
                  callback: Optional[Callable] = None) -> Trajectory:
    """Butcher's six-stage fifth-order Runge-Kutta scheme."""
    lfun = _as_provider(l_provider)
    times = _output_times(t0, t1, n_steps)
    h = (times[1] - times[0]) / n_substeps
    r = np.array(r0, dtype=float)
    out = np.empty((n_steps + 1, r.size))
    out[0] = r
    if callback:
        callback(times[0], r)
    for m in range(n_steps):
        t = times[m]
        for _ in range(n_substeps):
            k1 = lfun(t) @ r
            k2 = lfun(t + 0.25 * h) @ (r + 0.25 * h * k1)
            k3 = lfun(t + 0.25 * h) @ (r + 0.125 * h * (k1 + k2))
            k4 = lfun(t + 0.5 * h) @ (r + h * (-0.5 * k2 + k3))
            k5 = lfun(t + 0.75 * h) @ (r + (h / 16.0) * (3.0 * k1 + 9.0 * k4))
            k6 = lfun(t + h) @ (r + (h / 7.0) * (-3.0 * k1 + 2.0 * k2
                                                 + 12.0 * k3 - 12.0 * k4
                                                 + 8.0 * k5))
            r = r + (h / 90.0) * (7.0 * k1 + 32.0 * k3 + 12.0 * k4
                                  + 32.0 * k5 + 7.0 * k6)
            t += h
        out[m + 1] = r
        if callback:
            callback(times[m + 1], r)
    return Trajectory(times, out)


def integrate_adaptive(l_provider: LProvider, r0: np.ndarray, t0: float,
                       t1: float, n_steps: int, rtol: float = 1e-8,
                       atol: float = 1e-8,
                       callback: Optional[Callable] = None) -> Trajectory:
    """Adaptive embedded 8th-order Runge-Kutta (Dormand-Prince)."""
    lfun = _as_provider(l_provider)
    times = _output_times(t0, t1, n_steps)
    sol = solve_ivp(lambda t, y: lfun(t) @ y, (t0, t1),
                    np.asarray(r0, dtype=float), method="DOP853",
                    t_eval=times, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"adaptive integration failed: {sol.message}")
    out = sol.y.T.copy()
    if callback:
        for t, r in zip(times, out):
            callback(t, r)
    return Trajectory(times, out)


def integrate_eigen(lmat: np.ndarray, r0: np.ndarray,
                    times: np.ndarray) -> Trajectory:
    """Propagation by eigendecomposition of a constant L.

    r(t) = sum_j c_j exp(lambda_j (t - t0)) v_j with c_j fixed by the left
    eigenvectors.  Raises if the eigenbasis fails to reconstruct r0 (defective
    or near-defective L); use a Runge-Kutta integrator in that case.
    """
    times = np.asarray(times, dtype=float)
    r0 = np.asarray(r0, dtype=float)
    w, vl, vr = eig(lmat, left=True, right=True)
    denom = np.einsum("ij,ij->j", vl.conj(), vr)
    if np.any(np.abs(denom) < 1e-300):
        raise RuntimeError("defective Liouvillian: eigen propagation "
                           "unavailable, use integrate_rk4/rk5/adaptive")
    c = (vl.conj().T @ r0) / denom
    recon = vr @ c
    resid = np.linalg.norm(recon.real - r0)
    if resid > 1e-8 * max(np.linalg.norm(r0), 1e-300):
        raise RuntimeError(
            f"eigenbasis reconstruction residual {resid:.2e} exceeds "
            "tolerance; L is near-defective, use a Runge-Kutta integrator")
    dt = times - times[0]
    phases = np.exp(np.outer(dt, w))          # (n_out, dim)
    states = (phases * c) @ vr.T
    return Trajectory(times, states.real)
