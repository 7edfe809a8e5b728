"""Generate the frozen Faddeeva reference grid (faddeeva_oracle.npz).

Run once; the .npz is committed so the test suite never depends on mpmath.
Reference values are computed with mpmath at 30 significant digits from the
definition w(z) = exp(-z^2) erfc(-iz), on 10^4 points covering the upper
half-disk |z| <= 30, Im z >= 0 (where the function is needed for Voigt
profiles and pole integrals).
"""

import numpy as np
from mpmath import mp, mpc, erfc, exp


def main():
    mp.dps = 30
    rng = np.random.default_rng(20250817)
    # structured polar grid plus random fill-in, 10^4 points in total
    r_ax = np.linspace(0.05, 30.0, 64)
    th_ax = np.linspace(0.0, np.pi, 100)
    zg = (r_ax[:, None] * np.exp(1j * th_ax[None, :])).ravel()
    extra = []
    while len(extra) < 3600:
        cand = rng.uniform(-30, 30) + 1j * rng.uniform(0, 30)
        if abs(cand) <= 30.0:
            extra.append(cand)
    z = np.concatenate([zg, np.array(extra)])
    assert z.size == 10000
    assert np.all(np.abs(z) <= 30.0 * (1.0 + 1e-12)) and np.all(z.imag >= 0.0)

    vals = np.empty(z.size, dtype=complex)
    for k, zz in enumerate(z):
        zk = mpc(zz.real, zz.imag)
        wk = exp(-zk * zk) * erfc(-1j * zk)
        vals[k] = complex(wk)

    np.savez_compressed("faddeeva_oracle.npz", z=z, w=vals)
    print(f"wrote faddeeva_oracle.npz with {z.size} points")


if __name__ == "__main__":
    main()
