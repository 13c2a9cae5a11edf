"""Atomistic/continuum coupled energies and their calculus.

Both couplings keep the 2K+1 central atoms fully atomistic inside the window
Omega_a = (a_L, a_R), with a_L = (y_{-K-1}+y_{-K})/2 and a_R = (y_K+y_{K+1})/2
the midpoints between the interface atom pairs, and replace the outside by
per-cell Cauchy-Born energies: full cells beyond the interface, the two cells
straddling a_L, a_R at half weight.  The methods differ only in the boundary
data of the atomistic slab:

* method 1 hands the slab its stationary data g*(y).  Since D_g E vanishes
  there, g*'s own y-dependence drops out of the forces (envelope argument),
  and the derivative is a pure stress form: the coupled stress sigma^qc is
  sigma^cb cell by cell outside, the slab stress inside.

* method 2 solves the two interface cell problems instead: g is the
  comparison-chain field of the interface cell evaluated at the wall, which
  collapses to g(s) = (mu/m) sqrt(x)/(1-x), x = e^{-m s}, a function of the
  single interface strain.  Its y-dependence contributes an explicit extra
  chain-rule term, and no pure stress form exists.

Energies and derivatives ride on the exact pair/closed-form backend
throughout; FEM appears only in cross-checks at test level.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, null_space

from .cauchy_born import (
    cb_cell_denergy,
    cb_cell_energy,
    cell_state,
    cb_stress_function,
)
from .density import check_separated, mu
from .energy import (
    d_energy_dirichlet_a,
    d_energy_dirichlet_g,
    d_energy_dirichlet_y,
    energy_dirichlet,
    forces_periodic,
    g_star,
    mirror_energy,
    stress_dirichlet,
)
from .field import BoundaryData
from .lattice import DiscreteNormParams, first_diff, norm_weighted, positions, second_diff

__all__ = [
    "AcPartition",
    "AcMethod",
    "method1",
    "method2",
    "ac_energy",
    "ac_forces",
    "g_method2",
    "d_g_method2",
    "sigma_qc",
    "weak_form_qc",
    "consistency_error",
    "stability_spectrum",
]


@dataclass(frozen=True)
class AcPartition:
    """Atomistic window of half-width K: atoms -K..K stay atomistic."""

    K: int

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("atomistic half-width K must be at least 1")

    def boundaries(self, cfg):
        """(a_L, a_R): midpoints between the interface atom pairs."""
        if self.K >= cfg.N:
            raise ValueError("partition needs K < N")
        y = positions(cfg)
        i = cfg.N
        a_l = 0.5 * (y[i - self.K - 1] + y[i - self.K])
        a_r = 0.5 * (y[i + self.K] + y[i + self.K + 1])
        return float(a_l), float(a_r)

    def boundary_data(self, cfg, m, g=(0.0, 0.0)):
        a_l, a_r = self.boundaries(cfg)
        return BoundaryData(a_l, a_r, g[0], g[1], m, cfg.eps)

    def tau(self, cfg, m):
        return self.boundary_data(cfg, m).tau

    def atom_indices(self, cfg):
        """Array indices of the atomistic atoms -K..K."""
        return np.arange(cfg.N - self.K, cfg.N + self.K + 1)


@dataclass(frozen=True)
class AcMethod:
    variant: str
    partition: AcPartition

    def __post_init__(self):
        if self.variant not in ("method1", "method2"):
            raise ValueError("variant must be 'method1' or 'method2'")


def method1(K):
    return AcMethod("method1", AcPartition(K))


def method2(K):
    return AcMethod("method2", AcPartition(K))


def _validate(cfg, method, profile, m, tau_threshold):
    check_separated(cfg, profile)
    part = method.partition
    bd0 = part.boundary_data(cfg, m)
    if bd0.tau > tau_threshold:
        raise ValueError(
            "boundary decay tau = %.3e exceeds threshold %.1e; the coupled "
            "energy's O(tau) terms are not negligible at this window size"
            % (bd0.tau, tau_threshold)
        )
    return bd0


def _cb_weights(cfg, K):
    """Per-cell weights of the continuum part: 1 outside the window,
    1/2 on the two interface cells, 0 on the 2K interior cells."""
    n = cfg.n_atoms
    w = np.ones(n)
    i = cfg.N
    w[i - K + 1 : i + K + 1] = 0.0  # cells -K+1 .. K
    w[i - K] = 0.5  # cell -K, straddles a_L
    w[i + K + 1] = 0.5  # cell K+1, straddles a_R
    return w


def _method_bd(cfg, method, profile, m, bd0):
    y_at = positions(cfg)[method.partition.atom_indices(cfg)]
    if method.variant == "method1":
        g = g_star(y_at, bd0, profile)
    else:
        g = g_method2(cfg, method.partition, profile, m)
    return y_at, bd0.with_g(*g)


def ac_energy(cfg, method, profile, m, tau_threshold=1e-8):
    """Coupled energy: weighted continuum cells plus the atomistic slab."""
    bd0 = _validate(cfg, method, profile, m, tau_threshold)
    strains = first_diff(cfg)
    e_cb = float(np.sum(_cb_weights(cfg, method.partition.K)
                        * cb_cell_energy(strains, profile, m, cfg.eps)))
    y_at = positions(cfg)[method.partition.atom_indices(cfg)]
    if method.variant == "method1":
        e_at = mirror_energy(y_at, bd0, profile)
    else:
        g = g_method2(cfg, method.partition, profile, m)
        e_at = energy_dirichlet(y_at, bd0.with_g(*g), profile, backend="pair")
    return e_cb + e_at


def _interface_strain_gamma(profile, m, s):
    """Comparison-chain field at the midpoint between two atoms: the images
    sit at distances (k + 1/2) eps s, so the sum is (mu/m) sqrt(x)/(1-x)."""
    x = math.exp(-m * s)
    return mu(profile, m).mu / m * math.sqrt(x) / (1.0 - x)


def _interface_strain_dgamma(profile, m, s):
    """d/ds of the midpoint field: -mu sqrt(x)(1+x) / (2 (1-x)^2)."""
    x = math.exp(-m * s)
    return -mu(profile, m).mu * math.sqrt(x) * (1.0 + x) / (2.0 * (1.0 - x) ** 2)


def g_method2(cfg, partition, profile, m):
    """Cell-problem boundary data: the interface cell's comparison field at
    the wall, a function of that cell's strain alone."""
    if partition.K >= cfg.N:
        raise ValueError("partition needs K < N")
    strains = first_diff(cfg)
    i = cfg.N
    s_l = float(strains[i - partition.K])
    s_r = float(strains[i + partition.K + 1])
    return (
        _interface_strain_gamma(profile, m, s_l),
        _interface_strain_gamma(profile, m, s_r),
    )


def d_g_method2(cfg, partition, profile, m, u):
    """Directional derivative of g_method2 along the displacement u.

    g_L depends only on the strain of cell -K (g_R: of cell K+1), so the
    derivative is dgamma/ds times the strain of u across that cell -- in
    particular it is bounded by |dgamma/ds| |u'| with the constant evaluated
    at the interface strain.
    """
    if partition.K >= cfg.N:
        raise ValueError("partition needs K < N")
    u = np.asarray(u, dtype=float)
    strains = first_diff(cfg)
    i = cfg.N
    out = []
    for c in (i - partition.K, i + partition.K + 1):
        du = (u[c] - u[c - 1]) / cfg.eps
        out.append(_interface_strain_dgamma(profile, m, float(strains[c])) * du)
    return out[0], out[1]


def ac_forces(cfg, method, profile, m, tau_threshold=1e-8):
    """Gradient of ac_energy in the atom positions, fully analytic."""
    bd0 = _validate(cfg, method, profile, m, tau_threshold)
    part = method.partition
    i = cfg.N
    strains = first_diff(cfg)

    vals = _cb_weights(cfg, part.K) * cb_cell_denergy(strains, profile, m, cfg.eps) / cfg.eps
    grad = vals - np.roll(vals, -1)  # cell c pulls atoms c and c-1

    y_at, bd = _method_bd(cfg, method, profile, m, bd0)
    idx = part.atom_indices(cfg)
    grad[idx] += d_energy_dirichlet_y(y_at, bd, profile, backend="pair")
    d_al, d_ar = d_energy_dirichlet_a(y_at, bd, profile, backend="pair")
    grad[i - part.K - 1] += 0.5 * d_al
    grad[i - part.K] += 0.5 * d_al
    grad[i + part.K] += 0.5 * d_ar
    grad[i + part.K + 1] += 0.5 * d_ar

    if method.variant == "method2":
        # explicit boundary-data term; for method 1 D_g E(g*) = 0 drops it
        dg_e = d_energy_dirichlet_g(y_at, bd, profile)
        c_l, c_r = i - part.K, i + part.K + 1
        dgl = _interface_strain_dgamma(profile, m, float(strains[c_l])) / cfg.eps
        dgr = _interface_strain_dgamma(profile, m, float(strains[c_r])) / cfg.eps
        grad[c_l] += dg_e[0] * dgl
        grad[c_l - 1] -= dg_e[0] * dgl
        grad[c_r] += dg_e[1] * dgr
        grad[c_r - 1] -= dg_e[1] * dgr
    return grad


def sigma_qc(cfg, method, x, profile, m, tau_threshold=1e-8):
    """Coupled stress of method 1: sigma^cb cell by cell outside the window,
    the slab stress inside.  Method 2's derivative carries a boundary-data
    term no stress field represents, so it is rejected here.
    """
    if method.variant != "method1":
        raise ValueError("the coupled stress exists for method 1 only")
    bd0 = _validate(cfg, method, profile, m, tau_threshold)
    y_at, bd = _method_bd(cfg, method, profile, m, bd0)
    nodes = positions(cfg, -cfg.N - 1, cfg.N)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs <= nodes[0]) or np.any(xs > nodes[-1]):
        raise ValueError("evaluation point outside the periodic window")
    sf_at = stress_dirichlet(y_at, bd, profile, backend="green")
    out = np.empty_like(xs)
    inside = (xs > bd.a_L) & (xs < bd.a_R)
    if np.any(inside):
        out[inside] = sf_at(xs[inside])
    cells = {}
    for p in np.nonzero(~inside)[0]:
        j = int(np.searchsorted(nodes, xs[p], side="left")) - 1 - cfg.N
        if j not in cells:
            cells[j] = cb_stress_function(cell_state(cfg, profile, m, j))
        out[p] = cells[j](np.array([xs[p]]))[0]
    return out if np.ndim(x) else float(out[0])


def weak_form_qc(cfg, method, u, profile, m, tau_threshold=1e-8, order=24):
    """integral sigma^qc grad(interpolant of u) over the period (method 1).

    The interpolant runs through the atoms and through the walls, whose
    values move with the interface midpoints: u(a_L) = (u_{-K-1}+u_{-K})/2.
    Equals ac_forces . u -- the weak form of the coupled energy.
    """
    if method.variant != "method1":
        raise ValueError("the coupled stress exists for method 1 only")
    bd0 = _validate(cfg, method, profile, m, tau_threshold)
    part = method.partition
    u = np.asarray(u, dtype=float)
    y = positions(cfg, -cfg.N - 1, cfg.N)
    uu = np.concatenate([[u[-1]], u])
    i = cfg.N + 1  # index in the extended arrays of atom 0
    y_at, bd = _method_bd(cfg, method, profile, m, bd0)
    acc = 0.0

    # full CB cells (weight-1): cells -N..-K-1 and K+2..N
    for j in list(range(-cfg.N, -part.K)) + list(range(part.K + 2, cfg.N + 1)):
        du = uu[j + i] - uu[j + i - 1]
        if du == 0.0:
            continue
        dy = y[j + i] - y[j + i - 1]
        sf = cb_stress_function(cell_state(cfg, profile, m, j))
        acc += du / dy * sf.integral(float(y[j + i - 1]), float(y[j + i]), order)

    # half cells: outer halves of cells -K and K+1
    for j, lo, hi in (
        (-part.K, float(y[i - part.K - 1]), bd.a_L),
        (part.K + 1, bd.a_R, float(y[i + part.K + 1])),
    ):
        du = uu[j + i] - uu[j + i - 1]
        if du != 0.0:
            dy = y[j + i] - y[j + i - 1]
            sf = cb_stress_function(cell_state(cfg, profile, m, j))
            acc += du / dy * sf.integral(lo, hi, order)

    # atomistic window: nodes a_L, atoms, a_R with wall values from midpoints
    idx = part.atom_indices(cfg) + 1  # extended-array indices
    h_l = 0.5 * (uu[idx[0] - 1] + uu[idx[0]])
    h_r = 0.5 * (uu[idx[-1]] + uu[idx[-1] + 1])
    nodes_at = np.concatenate([[bd.a_L], y[idx], [bd.a_R]])
    vals_at = np.concatenate([[h_l], uu[idx], [h_r]])
    sf_at = stress_dirichlet(y_at, bd, profile, backend="green")
    for p in range(1, nodes_at.size):
        du = vals_at[p] - vals_at[p - 1]
        if du == 0.0:
            continue
        acc += du / (nodes_at[p] - nodes_at[p - 1]) * sf_at.integral(
            float(nodes_at[p - 1]), float(nodes_at[p]), order
        )
    return acc


def consistency_error(cfg, method, profile, m, n_smooth=8, seed=0,
                      s0=None, tau_threshold=1e-8):
    """Sup over probe displacements of |(DE - DE^qc) . u| / |grad u|_{L^2},
    next to the theory's right-hand side eps ||y''||_w + tau.

    Probes: every hat displacement plus n_smooth random low-frequency modes,
    mean-adjusted.  The weighted seminorm decays into the atomistic window
    with rate m s0 from the interfaces; s0 defaults to the minimal strain.
    Returns a dict with the sup, the right-hand side, their ratio (the
    fitted constant), and tau.
    """
    bd0 = _validate(cfg, method, profile, m, tau_threshold)
    n = cfg.n_atoms
    strains = first_diff(cfg)
    if s0 is None:
        s0 = float(np.min(strains))
    f_at = forces_periodic(cfg, profile, m, backend="pair")
    f_qc = ac_forces(cfg, method, profile, m, tau_threshold)
    diff = f_at - f_qc

    rng = np.random.default_rng(seed)
    probes = list(np.eye(n))
    jj = np.arange(-cfg.N, cfg.N + 1)
    for _ in range(n_smooth):
        k = rng.integers(1, 4)
        phase = rng.uniform(0, 2 * np.pi)
        amp = rng.uniform(0.5, 1.5)
        probes.append(amp * np.sin(2 * np.pi * k * jj / n + phase))

    sup = 0.0
    for u in probes:
        u = u - u.mean()
        du = u - np.roll(u, 1)
        h1 = math.sqrt(float(np.sum(du**2 / (cfg.eps * strains))))
        if h1 < 1e-14:
            continue
        sup = max(sup, abs(float(diff @ u)) / h1)

    params = DiscreteNormParams(s0=s0, m=m, K=method.partition.K)
    rhs = cfg.eps * norm_weighted(second_diff(cfg), cfg.eps, params) + bd0.tau
    return {
        "sup_error": sup,
        "rhs": float(rhs),
        "fitted_C": sup / rhs if rhs > 0 else math.inf,
        "tau": bd0.tau,
        "n_probes": len(probes),
    }


def stability_spectrum(cfg, method, profile, m, fd_scale=1e-5, tau_threshold=1e-8):
    """Smallest eigenvalue of D^2 E^qc over mean-zero displacements,
    measured against the strain seminorm |u'|^2_{l2_eps}, next to the
    uniform convexity floor (m mu^2/2) e^{-m max y'}.

    The Hessian is the central difference of the analytic forces (step
    fd_scale * eps); force translation-invariance makes the mean-zero
    re-centering of the perturbed configurations exact rather than
    approximate.  Gross asymmetry of the FD Hessian raises.
    """
    _validate(cfg, method, profile, m, tau_threshold)
    n = cfg.n_atoms
    h = fd_scale * cfg.eps
    cols = []
    for p in range(n):
        up, um = cfg.u.copy(), cfg.u.copy()
        up[p] += h
        um[p] -= h
        up -= up.mean()
        um -= um.mean()
        fp = ac_forces(cfg.replace_u(up), method, profile, m, tau_threshold)
        fm = ac_forces(cfg.replace_u(um), method, profile, m, tau_threshold)
        cols.append((fp - fm) / (2 * h))
    hess = np.column_stack(cols)
    scale = np.max(np.abs(hess))
    asym = np.max(np.abs(hess - hess.T))
    if asym > 1e-4 * scale:
        raise RuntimeError(
            "FD Hessian asymmetry %.2e exceeds tolerance (scale %.2e)" % (asym, scale)
        )
    hess = 0.5 * (hess + hess.T)

    d_mat = np.eye(n) - np.roll(np.eye(n), 1, axis=1)  # row j: u_j - u_{j-1}
    b_mat = d_mat.T @ d_mat / cfg.eps
    q = null_space(np.ones((1, n)))
    lam = eigh(q.T @ hess @ q, q.T @ b_mat @ q, eigvals_only=True)
    muv = mu(profile, m).mu
    bound = m * muv**2 / 2.0 * math.exp(-m * float(np.max(first_diff(cfg))))
    return float(lam[0]), bound
