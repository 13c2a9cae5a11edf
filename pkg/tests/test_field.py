import numpy as np
import pytest

from acfield.density import quartic_bump, sextic_bump, mu
from acfield.field import (
    BoundaryData,
    eval_green_dirichlet,
    eval_green_free,
    eval_green_periodic,
    fem_relative_budget,
    field_lipschitz_check,
    green_dirichlet,
    solve_dirichlet,
    solve_periodic,
    xi_closed_form,
)
from acfield.lattice import ChainConfig, homogeneous, positions

PROF = quartic_bump(0.5)
M = 1.0


def wiggled_chain(N=8, F=1.1, amp=0.02, seed=1):
    rng = np.random.default_rng(seed)
    u = rng.normal(0, amp, 2 * N + 1)
    u -= u.mean()
    return ChainConfig(N, F, u)


def slab_setup(cfg, lo=3, hi=14, g=(0.4, 0.7)):
    y = positions(cfg)[lo:hi]
    a_L = float(y[0]) - 0.55 * cfg.eps
    a_R = float(y[-1]) + 0.55 * cfg.eps
    return y, BoundaryData(a_L, a_R, g[0], g[1], M, cfg.eps)


def test_constant_rho_hook():
    cfg = wiggled_chain()
    f = solve_periodic(cfg, PROF, 2.0, constant_rho=3.0)
    assert np.max(np.abs(f.values - 3.0 / 4.0)) < 1e-12


def test_periodic_fem_within_budget_of_kernel_oracle():
    cfg = wiggled_chain()
    f = solve_periodic(cfg, PROF, M, mesh_density=16)
    assert f.residual_rel <= 1e-12
    xs = np.linspace(-1.0, 1.0, 101)
    ref, _ = eval_green_periodic(cfg, PROF, M, xs)
    err = np.max(np.abs(f.value(xs) - ref)) / np.max(np.abs(ref))
    assert err <= fem_relative_budget(PROF, M, 16)


def test_periodic_mesh_halving_rate():
    cfg = wiggled_chain()
    xs = np.linspace(-1.0, 1.0, 201)
    ref, _ = eval_green_periodic(cfg, PROF, M, xs)
    errs = [
        np.max(np.abs(solve_periodic(cfg, PROF, M, mesh_density=md).value(xs) - ref))
        for md in (16, 32, 64)
    ]
    rate = 0.5 * np.log2(errs[0] / errs[2])
    assert rate >= 1.8


def test_periodic_field_positive_and_lattice_periodic():
    cfg = homogeneous(8, 1.1)
    f = solve_periodic(cfg, PROF, M)
    assert np.min(f.values) >= 0.0
    # on the homogeneous chain the field inherits the eps*F lattice period;
    # the mesh is commensurate, so this holds to solver precision
    n_pc = f.n_nodes // cfg.n_atoms
    shifted = np.roll(f.values, -n_pc)
    assert np.max(np.abs(shifted - f.values)) < 1e-11 * np.max(f.values)
    # kernel route, arbitrary points
    xs = np.linspace(-0.9, 0.9, 17)
    v1, _ = eval_green_periodic(cfg, PROF, M, xs)
    v2, _ = eval_green_periodic(cfg, PROF, M, xs + cfg.eps * cfg.F)
    assert np.allclose(v1, v2, rtol=1e-12)


def test_field_value_periodic_wrap_and_grad():
    cfg = wiggled_chain()
    f = solve_periodic(cfg, PROF, M)
    xs = np.linspace(-1.0, 1.0, 23)
    assert np.allclose(f.value(xs), f.value(xs + cfg.L), rtol=0, atol=1e-13)
    assert np.allclose(f.value(xs), f.value(xs - 2 * cfg.L), rtol=0, atol=1e-13)
    # gradient is the slope of the linear interpolant inside one element
    x0 = 0.3 + 0.25 * f.h
    fd = (f.value(x0 + 0.2 * f.h) - f.value(x0)) / (0.2 * f.h)
    assert f.grad(x0 + 0.1 * f.h) == pytest.approx(fd, rel=1e-9)


def test_discrete_energy_identity_periodic():
    # I(phi_h) = -(1/2) integral rho phi_h at the Galerkin solution
    cfg = wiggled_chain()
    f = solve_periodic(cfg, PROF, M)
    assert f.i_value == pytest.approx(-0.5 * f.interaction, rel=1e-10)


def test_green_periodic_against_brute_image_sum():
    # independent oracle: truncated image sum with explicit quadrature per image
    from acfield.density import gauss_on_interval

    cfg = wiggled_chain(N=3, F=1.1)
    eps, L = cfg.eps, cfg.L
    y = positions(cfg)
    xs = np.array([-0.37, 0.0, 0.11, float(y[2]), float(y[4]) + 0.3 * eps])
    w = PROF.half_width * eps
    n_img = 30
    val_ref = np.zeros_like(xs)
    for ix, x in enumerate(xs):
        acc = 0.0
        for j in range(y.size):
            for n in range(-n_img, n_img + 1):
                c = y[j] + n * L
                # split at the kernel kink only when it lies inside the support
                segs = ((c - w, x), (x, c + w)) if abs(x - c) < w else ((c - w, c + w),)
                for a, b in segs:
                    z, wq = gauss_on_interval(a, b, 24)
                    acc += np.sum(
                        wq * PROF.delta1((z - c) / eps) / eps * np.exp(-(M / eps) * np.abs(x - z))
                    )
        val_ref[ix] = acc / (2.0 * M)
    val, _ = eval_green_periodic(cfg, PROF, M, xs)
    assert np.allclose(val, val_ref, rtol=1e-13)


def test_green_periodic_gradient_fd():
    cfg = wiggled_chain()
    xs = np.linspace(-0.97, 0.95, 29)
    _, g = eval_green_periodic(cfg, PROF, M, xs)
    h = 1e-7
    vp, _ = eval_green_periodic(cfg, PROF, M, xs + h)
    vm, _ = eval_green_periodic(cfg, PROF, M, xs - h)
    assert np.allclose(g, (vp - vm) / (2 * h), atol=5e-8)


def test_green_free_kernel():
    assert eval_green_free(2.0, 0.1, 0.0) == pytest.approx(1.0 / (2 * 0.1 * 2.0))
    assert eval_green_free(1.0, 0.1, 0.05) == pytest.approx(np.exp(-0.5) / 0.2)


def test_dirichlet_fem_within_budget_and_bc():
    cfg = wiggled_chain()
    y, bd = slab_setup(cfg)
    f = solve_dirichlet(y, bd, PROF, mesh_density=16)
    assert f.values[0] == bd.g_L and f.values[-1] == bd.g_R
    xs = np.linspace(bd.a_L, bd.a_R, 97)
    ref, _ = eval_green_dirichlet(y, bd, PROF, xs)
    err = np.max(np.abs(f.value(xs) - ref)) / np.max(np.abs(ref))
    assert err <= fem_relative_budget(PROF, M, 16)


def test_dirichlet_mesh_halving_rate():
    cfg = wiggled_chain()
    y, bd = slab_setup(cfg)
    xs = np.linspace(bd.a_L, bd.a_R, 151)
    ref, _ = eval_green_dirichlet(y, bd, PROF, xs)
    errs = [
        np.max(np.abs(solve_dirichlet(y, bd, PROF, mesh_density=md).value(xs) - ref))
        for md in (16, 32, 64)
    ]
    rate = 0.5 * np.log2(errs[0] / errs[2])
    assert rate >= 1.8


def test_dirichlet_superposition_and_xi():
    cfg = wiggled_chain()
    y, bd = slab_setup(cfg)
    f_g = solve_dirichlet(y, bd, PROF)
    f_0 = solve_dirichlet(y, bd.with_g(0.0, 0.0), PROF)
    # discrete superposition: difference solves the sourceless problem with data g
    xi_h = solve_dirichlet(np.empty(0), bd, PROF)
    assert np.max(np.abs((f_g.values - f_0.values) - xi_h.values)) < 1e-12
    # and that solution is the boundary layer, up to the documented mesh budget
    _, xi = xi_closed_form(bd)
    xv, _ = xi(f_g.nodes())
    scale = max(abs(bd.g_L), abs(bd.g_R))
    assert np.max(np.abs(xi_h.values - xv)) <= fem_relative_budget(PROF, M, 16) * scale


def test_xi_coefficients_near_g():
    cfg = wiggled_chain()
    _, bd = slab_setup(cfg, g=(0.8, -0.3))
    co, _ = xi_closed_form(bd)
    gmax = max(abs(bd.g_L), abs(bd.g_R))
    assert abs(co.c_L - bd.g_L) <= 2 * bd.tau * gmax
    assert abs(co.c_R - bd.g_R) <= 2 * bd.tau * gmax
    # g = (1, 1) -> c = (1, 1)/(1 + tau)
    co2, _ = xi_closed_form(bd.with_g(1.0, 1.0))
    assert co2.c_L == pytest.approx(1.0 / (1.0 + bd.tau), rel=1e-14)
    assert co2.c_R == pytest.approx(1.0 / (1.0 + bd.tau), rel=1e-14)


def test_dirichlet_energy_identity_and_positivity():
    cfg = wiggled_chain()
    y, bd = slab_setup(cfg, g=(0.2, 0.1))
    f = solve_dirichlet(y, bd, PROF)
    # with nonzero g the identity I = -(1/2) b phi does not hold; with g = 0 it must
    f0 = solve_dirichlet(y, bd.with_g(0.0, 0.0), PROF)
    assert f0.i_value == pytest.approx(-0.5 * f0.interaction, rel=1e-10)
    assert np.min(f.values) >= 0.0


def test_green_dirichlet_kernel_properties():
    cfg = wiggled_chain()
    _, bd = slab_setup(cfg)
    zs = bd.a_L + bd.width * np.array([0.2, 0.5, 0.8])
    # vanishes on the boundary (down to roundoff on the kernel scale 1/(2 m eps))
    scale = 1.0 / (2.0 * bd.m * bd.eps)
    for z in zs:
        assert abs(green_dirichlet(bd, bd.a_L, z)) < 1e-14 * scale
        assert abs(green_dirichlet(bd, bd.a_R, z)) < 1e-14 * scale
    # symmetric
    x = bd.a_L + 0.37 * bd.width
    for z in zs:
        assert green_dirichlet(bd, x, z) == pytest.approx(green_dirichlet(bd, z, x), rel=1e-14)
    # interior positivity (screened diffusion of a positive source)
    assert green_dirichlet(bd, x, float(zs[1])) > 0.0


def test_green_dirichlet_solves_g0_problem():
    # the kernel-route field with g=0 matches a dense FEM solve well beyond
    # the default budget
    cfg = wiggled_chain()
    y, bd0 = slab_setup(cfg, g=(0.0, 0.0))
    f = solve_dirichlet(y, bd0, PROF, mesh_density=128)
    xs = np.linspace(bd0.a_L, bd0.a_R, 61)
    ref, _ = eval_green_dirichlet(y, bd0, PROF, xs)
    budget = fem_relative_budget(PROF, M, 128)
    assert np.max(np.abs(f.value(xs) - ref)) <= budget * np.max(np.abs(ref))


def test_green_dirichlet_gradient_fd():
    cfg = wiggled_chain()
    y, bd = slab_setup(cfg, g=(0.3, 0.15))
    xs = np.linspace(bd.a_L + 0.05 * bd.width, bd.a_R - 0.05 * bd.width, 31)
    _, g = eval_green_dirichlet(y, bd, PROF, xs)
    h = 1e-7
    vp, _ = eval_green_dirichlet(y, bd, PROF, xs + h)
    vm, _ = eval_green_dirichlet(y, bd, PROF, xs - h)
    assert np.allclose(g, (vp - vm) / (2 * h), atol=5e-8)


def test_sextic_profile_supported_everywhere():
    cfg = wiggled_chain()
    prof = sextic_bump(0.5)
    f = solve_periodic(cfg, prof, M)
    xs = np.linspace(-1.0, 1.0, 51)
    ref, _ = eval_green_periodic(cfg, prof, M, xs)
    err = np.max(np.abs(f.value(xs) - ref)) / np.max(np.abs(ref))
    assert err <= fem_relative_budget(prof, M, 16)


def test_lipschitz_locality_of_boundary_data():
    cfg = wiggled_chain()
    y, bd1 = slab_setup(cfg, g=(0.4, 0.7))
    bd2 = bd1.with_g(0.55, 0.35)
    rep = field_lipschitz_check(y, bd1, bd2, PROF, n_samples=300, seed=7)
    assert rep["ok"], rep
    assert rep["max_ratio_value"] <= 1.0 + 10 * fem_relative_budget(PROF, M, 16)
    assert rep["n_usable"] > 10


def test_solve_dirichlet_rejects_bumps_touching_boundary():
    cfg = wiggled_chain()
    y = positions(cfg)[3:14]
    bd = BoundaryData(float(y[0]), float(y[-1]) + 0.55 * cfg.eps, 0, 0, M, cfg.eps)
    with pytest.raises(ValueError, match="inside the slab"):
        solve_dirichlet(y, bd, PROF)


def test_boundary_data_validation():
    with pytest.raises(ValueError):
        BoundaryData(1.0, 0.5, 0, 0, 1.0, 0.1)
    with pytest.raises(ValueError):
        BoundaryData(0.0, 1.0, 0, 0, -1.0, 0.1)
