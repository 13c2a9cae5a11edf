import numpy as np
import pytest

from acfield.density import (
    gauss_on_interval,
    grad_rho,
    mu,
    quartic_bump,
    rho,
    self_moment,
    sextic_bump,
)
from acfield.lattice import ChainConfig, homogeneous, positions

# Frozen reference values from tests/oracle_density.py (brute-force trapezoid,
# 1e6 points for mu, Richardson-extrapolated 2D trapezoid for self_moment).
MU_QUARTIC_M1 = 1.004472043554214
MU_QUARTIC_M2 = 1.017981621651718
MU_QUARTIC_M05 = 1.001116555949270
MU_SEXTIC_M1 = 1.003477158310150
SELF_QUARTIC_M1 = 0.900130121592294
SELF_QUARTIC_M2 = 0.814921384310684
SELF_SEXTIC_M1 = 0.911362874279205


def test_profile_normalization():
    for prof in (quartic_bump(0.5), sextic_bump(0.5), quartic_bump(0.8)):
        x, w = gauss_on_interval(-prof.half_width, prof.half_width, 24)
        assert np.sum(w * prof.delta1(x)) == pytest.approx(1.0, rel=1e-14)


def test_profile_values():
    prof = quartic_bump(0.5)
    assert prof.delta1(0.0) == pytest.approx(15.0 / 4.0)  # C = 15/(8*0.5) = 3.75
    assert prof.delta1(0.25) == 0.0
    assert prof.delta1(0.3) == 0.0
    # even function, gradient odd
    xs = np.linspace(-0.3, 0.3, 41)
    assert np.allclose(prof.delta1(xs), prof.delta1(-xs))
    assert np.allclose(prof.grad_delta1(xs), -prof.grad_delta1(-xs))


def test_profile_gradient_fd():
    for prof in (quartic_bump(0.5), sextic_bump(0.5)):
        xs = np.linspace(-0.24, 0.24, 17)
        h = 1e-6
        fd = (prof.delta1(xs + h) - prof.delta1(xs - h)) / (2 * h)
        assert np.allclose(prof.grad_delta1(xs), fd, atol=2e-6)


def test_mu_against_frozen_oracle():
    q = quartic_bump(0.5)
    assert mu(q, 1.0).mu == pytest.approx(MU_QUARTIC_M1, rel=1e-12)
    assert mu(q, 2.0).mu == pytest.approx(MU_QUARTIC_M2, rel=1e-12)
    assert mu(q, 0.5).mu == pytest.approx(MU_QUARTIC_M05, rel=1e-12)
    assert mu(sextic_bump(0.5), 1.0).mu == pytest.approx(MU_SEXTIC_M1, rel=1e-12)


def test_mu_even_and_at_least_one():
    q = quartic_bump(0.5)
    assert mu(q, -1.0).mu == mu(q, 1.0).mu
    for m in (0.1, 0.7, 3.0):
        assert mu(q, m).mu >= 1.0


def test_self_moment_against_frozen_oracle():
    q = quartic_bump(0.5)
    assert self_moment(q, 1.0) == pytest.approx(SELF_QUARTIC_M1, rel=1e-10)
    assert self_moment(q, 2.0) == pytest.approx(SELF_QUARTIC_M2, rel=1e-10)
    assert self_moment(sextic_bump(0.5), 1.0) == pytest.approx(SELF_SEXTIC_M1, rel=1e-10)


def test_rho_total_charge():
    # integral of rho over one period = eps*(2N+1) = 2 regardless of displacement
    rng = np.random.default_rng(2)
    u = rng.normal(0, 0.02, 13)
    u -= u.mean()
    cfg = ChainConfig(6, 1.1, u)
    prof = quartic_bump(0.5)
    n = 200_001
    x = np.linspace(0.0, cfg.L, n)
    vals = rho(cfg, prof, x)
    total = np.trapezoid(vals, x)
    assert total == pytest.approx(2.0, rel=1e-7)


def test_rho_peak_value_and_periodicity():
    cfg = homogeneous(5, 1.2)
    prof = quartic_bump(0.5)
    y = positions(cfg)
    # at an atom position rho = eps*delta_eps(0) = delta1(0)
    assert rho(cfg, prof, float(y[3])) == pytest.approx(prof.delta1(0.0), rel=1e-12)
    xs = np.linspace(-1.0, 1.0, 11)
    assert np.allclose(rho(cfg, prof, xs), rho(cfg, prof, xs + cfg.L), rtol=1e-12)
    assert np.allclose(grad_rho(cfg, prof, xs), grad_rho(cfg, prof, xs - 3 * cfg.L), rtol=1e-12)


def test_rho_compact_support():
    cfg = homogeneous(5, 1.2)
    prof = quartic_bump(0.5)
    y = positions(cfg)
    mid = 0.5 * (y[3] + y[4])  # midpoint between atoms, outside every bump
    assert rho(cfg, prof, mid) == 0.0
    assert grad_rho(cfg, prof, mid) == 0.0


def test_nonoverlap_pair_identity():
    # For separated bumps the interaction integral collapses to
    # mu^2 exp(-(m/eps) |y_j - y_i|).  Oracle: 2D Gauss-Legendre.
    m = 1.0
    prof = quartic_bump(0.5)
    cfg = homogeneous(4, 1.1)
    eps = cfg.eps
    y = positions(cfg)
    yi, yj = float(y[4]), float(y[5])
    w = prof.half_width * eps
    xs, ws = gauss_on_interval(yi - w, yi + w, 40)
    zs, wz = gauss_on_interval(yj - w, yj + w, 40)
    di = prof.delta1((xs - yi) / eps) / eps
    dj = prof.delta1((zs - yj) / eps) / eps
    ker = np.exp(-(m / eps) * np.abs(zs[:, None] - xs[None, :]))
    quad = float(np.einsum("i,ij,j->", wz * dj, ker, ws * di))
    muv = mu(prof, m).mu
    closed = muv**2 * np.exp(-(m / eps) * (yj - yi))
    assert quad == pytest.approx(closed, rel=1e-8)


def test_separation_check():
    prof = quartic_bump(0.5)
    # strain 1.1 > sigma0: fine
    rho(homogeneous(4, 1.1), prof, 0.0, require_separated=True)
    # strain 0.4 < sigma0 = 0.5: overlapping bumps must raise
    with pytest.raises(ValueError, match="overlap"):
        rho(homogeneous(4, 0.4), prof, 0.0, require_separated=True)


def test_sextic_is_c2_at_support_edge():
    # near the support edge the sextic gradient vanishes ~h^2 (C2), the
    # quartic only ~h (C1): check the one-sided scaling exponents
    e = 0.25
    h = 1e-4
    gs = [abs(sextic_bump(0.5).grad_delta1(e - s)) for s in (h, 2 * h)]
    assert gs[1] / gs[0] == pytest.approx(4.0, rel=1e-3)
    gq = [abs(quartic_bump(0.5).grad_delta1(e - s)) for s in (h, 2 * h)]
    assert gq[1] / gq[0] == pytest.approx(2.0, rel=1e-3)
