"""Equilibration: minimize E(y) + (f, y)_eps over mean-zero displacements.

A model is anything with .energy(cfg) / .gradient(cfg) / .profile / .m;
three are provided: the periodic atomistic energy, its Cauchy-Born
approximation, and the coupled energies.  The solver is a damped Newton
iteration on the mean-zero subspace: FD Hessian assembled from the analytic
gradient, Cholesky solve (steepest-descent fallback when the projected
Hessian is not positive definite), and Armijo backtracking that refuses any
iterate whose minimal strain drops to the bump-overlap guard.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, null_space

from .ac import ac_energy, ac_forces
from .cauchy_born import cb_forces, cb_total_energy
from .energy import energy_periodic, forces_periodic
from .lattice import (
    ChainConfig,
    DiscreteNormParams,
    first_diff,
    norm_l2eps,
    norm_weighted,
    second_diff,
)

__all__ = [
    "ExternalForce",
    "sine_force",
    "AtomisticModel",
    "CauchyBornModel",
    "AcModel",
    "MinimizeResult",
    "MinimizeError",
    "minimize",
    "compare_minimizers",
]


@dataclass(frozen=True)
class ExternalForce:
    """Dead load paired against positions: contributes eps * sum f_j y_j.

    Must be mean-zero so the pairing is translation invariant (it then only
    sees the displacement class the minimization runs over).
    """

    f: np.ndarray = field(repr=False)

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        if f.ndim != 1 or f.size % 2 != 1:
            raise ValueError("f must be a vector of odd length 2N+1")
        if not np.all(np.isfinite(f)):
            raise ValueError("f contains non-finite entries")
        scale = max(1.0, float(np.max(np.abs(f))))
        if abs(float(np.sum(f))) > 1e-9 * scale * f.size:
            raise ValueError("external force must be mean-zero")
        object.__setattr__(self, "f", f)

    def pairing(self, cfg):
        from .lattice import positions

        return cfg.eps * float(self.f @ positions(cfg))


def sine_force(N, amplitude, k=1, phase=0.0):
    """Mean-zero single-mode force f_j = amplitude * sin(2 pi k j/(2N+1) + phase)."""
    j = np.arange(-N, N + 1)
    f = amplitude * np.sin(2 * np.pi * k * j / (2 * N + 1) + phase)
    return ExternalForce(f - f.mean())


@dataclass(frozen=True)
class AtomisticModel:
    profile: object
    m: float
    backend: str = "pair"

    name = "atomistic"

    def energy(self, cfg):
        return energy_periodic(cfg, self.profile, self.m, backend=self.backend)

    def gradient(self, cfg):
        return forces_periodic(cfg, self.profile, self.m, backend=self.backend)


@dataclass(frozen=True)
class CauchyBornModel:
    profile: object
    m: float

    name = "cauchy_born"

    def energy(self, cfg):
        return cb_total_energy(cfg, self.profile, self.m)

    def gradient(self, cfg):
        return cb_forces(cfg, self.profile, self.m)


@dataclass(frozen=True)
class AcModel:
    method: object
    profile: object
    m: float
    tau_threshold: float = 1e-8

    @property
    def name(self):
        return "ac_%s_K%d" % (self.method.variant, self.method.partition.K)

    def energy(self, cfg):
        return ac_energy(cfg, self.method, self.profile, self.m, self.tau_threshold)

    def gradient(self, cfg):
        return ac_forces(cfg, self.method, self.profile, self.m, self.tau_threshold)


class MinimizeError(RuntimeError):
    pass


@dataclass(frozen=True)
class MinimizeResult:
    y_final: ChainConfig
    gradient_norm: float
    iterations: int
    converged: bool
    min_strain: float
    max_strain: float
    energies: tuple = ()


def _strain_guard(cfg, guard):
    s = first_diff(cfg)
    p = int(np.argmin(s))
    return float(s[p]), p - cfg.N


def minimize(model, f, y0, tol=None, max_iter=60, margin=0.05,
             fd_scale=1e-5, raise_on_failure=True):
    """Damped Newton for E(y) + (f, y)_eps over mean-zero displacements.

    tol bounds the l2_eps norm of the projected gradient; it defaults to
    1e-10 * m * eps.  Every accepted iterate keeps min y' >= sigma0 + margin
    (bumps must stay separated with room to spare); the Armijo test carries a
    machine-precision slack so the final Newton polish steps, whose predicted
    decrease is below roundoff in the total energy, are not rejected.
    """
    eps = y0.eps
    if tol is None:
        tol = 1e-10 * model.m * eps
    guard = model.profile.sigma0 + margin

    s_min, bond = _strain_guard(y0, guard)
    if s_min <= guard:
        raise ValueError(
            "initial strain %.4f at bond %d is below the guard %.4f"
            % (s_min, bond, guard)
        )

    def total(cfg):
        return model.energy(cfg) + f.pairing(cfg)

    def grad(cfg):
        g = model.gradient(cfg) + eps * f.f
        return g - g.mean()  # project onto the mean-zero subspace

    n = y0.n_atoms
    q = null_space(np.ones((1, n)))
    cfg = y0.replace_u(y0.u - y0.u.mean())
    e_cur = total(cfg)
    energies = [e_cur]
    g = grad(cfg)
    gnorm = norm_l2eps(g, eps)

    def fail(msg):
        if raise_on_failure:
            raise MinimizeError(msg)
        s = first_diff(cfg)
        return MinimizeResult(cfg, gnorm, steps, False, float(s.min()),
                              float(s.max()), tuple(energies))

    steps = 0
    while gnorm > tol:
        if steps >= max_iter:
            return fail("no convergence in %d iterations (|g| = %.3e)" % (max_iter, gnorm))

        h = fd_scale * eps
        cols = []
        for p in range(n):
            up, um = cfg.u.copy(), cfg.u.copy()
            up[p] += h
            um[p] -= h
            gp = model.gradient(cfg.replace_u(up - up.mean()))
            gm = model.gradient(cfg.replace_u(um - um.mean()))
            cols.append((gp - gm) / (2 * h))
        hess = np.column_stack(cols)
        hess = 0.5 * (hess + hess.T)

        gq = q.T @ g
        try:
            d = q @ cho_solve(cho_factor(q.T @ hess @ q), -gq)
        except LinAlgError:
            d = q @ (-gq)  # steepest descent on the subspace
        slope = float(g @ d)
        if slope >= 0:  # Newton direction lost descent; fall back
            d = q @ (-gq)
            slope = float(g @ d)

        slack = 64 * np.finfo(float).eps * (1.0 + abs(e_cur))
        t = 1.0
        accepted = None
        for _ in range(40):
            u_t = cfg.u + t * d
            u_t -= u_t.mean()
            cand = cfg.replace_u(u_t)
            if float(np.min(first_diff(cand))) > guard:
                e_t = total(cand)
                if e_t <= e_cur + 1e-4 * t * slope + slack:
                    accepted = (cand, e_t)
                    break
            t *= 0.5
        if accepted is None:
            return fail("line search failed at step %d (|g| = %.3e)" % (steps + 1, gnorm))

        cfg, e_cur = accepted
        energies.append(e_cur)
        steps += 1
        g = grad(cfg)
        gnorm = norm_l2eps(g, eps)

    s = first_diff(cfg)
    return MinimizeResult(cfg, gnorm, steps, True,
                          float(s.min()), float(s.max()), tuple(energies))


def compare_minimizers(model_a, model_b, f, y0, tol=None, max_iter=60, margin=0.05):
    """Equilibrate both models and measure |y'_a - y'_b|_{l2_eps} next to the
    first-order bound eps * ||y''_a||_w + tau.

    The second minimization starts from the first minimizer.  tau and the
    weight band come from whichever model couples (zero and trivial weights
    otherwise); the weight decay rate uses the minimal strain of the first
    minimizer.
    """
    res_a = minimize(model_a, f, y0, tol=tol, max_iter=max_iter, margin=margin)
    res_b = minimize(model_b, f, res_a.y_final, tol=tol, max_iter=max_iter, margin=margin)
    ya, yb = res_a.y_final, res_b.y_final
    err = norm_l2eps(first_diff(ya) - first_diff(yb), ya.eps)

    tau, k_band = 0.0, 0
    for mod in (model_b, model_a):
        if isinstance(mod, AcModel):
            tau = mod.method.partition.tau(yb, mod.m)
            k_band = mod.method.partition.K
            break
    params = DiscreteNormParams(s0=res_a.min_strain, m=model_a.m, K=k_band)
    rhs = ya.eps * norm_weighted(second_diff(ya), ya.eps, params) + tau
    return err, rhs
