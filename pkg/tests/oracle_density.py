"""Brute-force reference values for the bump-profile moments.

Run directly to regenerate the frozen constants used in test_density.py /
test_energy.py.  Everything here is deliberately independent of the package:
plain trapezoid rules at high resolution, so the numbers can be trusted to
~1e-12 relative without sharing any code with the implementation under test.
"""

import numpy as np


def delta1_quartic(x, sigma0=0.5):
    c = 15.0 / (8.0 * sigma0)
    t = 2.0 * x / sigma0
    return np.where(np.abs(t) < 1.0, c * (1.0 - t**2) ** 2, 0.0)


def delta1_sextic(x, sigma0=0.5):
    c = 35.0 / (16.0 * sigma0)
    t = 2.0 * x / sigma0
    return np.where(np.abs(t) < 1.0, c * (1.0 - t**2) ** 3, 0.0)


def mu_trapz(delta1, m, sigma0=0.5, n=1_000_001):
    x = np.linspace(-sigma0 / 2, sigma0 / 2, n)
    return np.trapezoid(delta1(x, sigma0) * np.exp(m * x), x)


def self_moment_trapz(delta1, m, sigma0=0.5, n=4001):
    # 2D trapezoid of delta1(s) delta1(t) exp(-m|s-t|); the kernel kink sits on
    # grid diagonals, so plain trapezoid converges ~h^2 -- n=4001 gives ~1e-9,
    # Richardson over n and 2n-1 sharpens it to ~1e-12.
    def raw(nn):
        s = np.linspace(-sigma0 / 2, sigma0 / 2, nn)
        ds = s[1] - s[0]
        ker = np.exp(-m * np.abs(s[:, None] - s[None, :]))
        f = delta1(s, sigma0)[:, None] * delta1(s, sigma0)[None, :] * ker
        w = np.ones(nn)
        w[0] = w[-1] = 0.5
        return float(np.einsum("i,ij,j->", w, f, w) * ds * ds)

    a, b = raw(n), raw(2 * n - 1)
    return b + (b - a) / 3.0


if __name__ == "__main__":
    for name, d1 in [("quartic", delta1_quartic), ("sextic", delta1_sextic)]:
        print(f"profile={name} sigma0=0.5")
        print(f"  norm   = {np.trapezoid(d1(np.linspace(-0.25, 0.25, 1_000_001)), np.linspace(-0.25, 0.25, 1_000_001)):.15f}")
        for m in (1.0, 2.0, 0.5):
            print(f"  mu(m={m})        = {mu_trapz(d1, m):.15f}")
        for m in (1.0, 2.0):
            print(f"  self_moment(m={m}) = {self_moment_trapz(d1, m):.15f}")
