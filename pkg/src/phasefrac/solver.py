"""Alternating minimization of the diffuse energy over the blocks u, z, c.

The u-step minimizes the quadratic elastic term exactly (conjugate gradient,
seeded at the current displacement so the rigid-motion nullspace needs no
deflation).  The z- and c-steps take one Armijo-accepted (projected) gradient
step per sweep.  The energy is nonincreasing along the trajectory up to the
CG residual slack; no claim of global minimization is made, the energy is
nonconvex.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .energy import (DiffuseState, ElasticModel, EnergyBreakdown, diffuse_energy,
                     grad_c, grad_u, grad_z, mass, project_mass)
from .fields import Grid, ScalarField, SymTensorField, VectorField, sym_gradient, \
    sym_gradient_adjoint
from .potentials import PotentialSet

_MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class SolverPlan:
    max_outer: int = 200
    tol_rel_energy: float = 1e-8
    cg_tol: float = 1e-10
    cg_max_iters: int = 1000
    step0: float = 1.0
    backtrack_factor: float = 0.5
    armijo_c: float = 0.25
    mass_constraint: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.tol_rel_energy <= 0 or self.cg_tol <= 0 or self.step0 <= 0:
            raise ValueError("tolerances and step0 must be positive")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if not 0.0 < self.armijo_c <= 0.5:
            raise ValueError("armijo_c must lie in (0, 1/2]")
        if self.mass_constraint is not None and not 0.0 <= self.mass_constraint <= 1.0:
            raise ValueError("mass constraint must lie in [0, 1]")


@dataclass(frozen=True)
class BlockResult:
    block: str
    accepted: bool
    flag: str = ""
    iters: int = 0
    step: float = 0.0
    energy: Optional[EnergyBreakdown] = None


@dataclass(frozen=True)
class Trajectory:
    energies: tuple[EnergyBreakdown, ...]
    reason: str
    grad_norms: dict
    flags: tuple[tuple[str, ...], ...] = field(default_factory=tuple)

    @property
    def totals(self) -> np.ndarray:
        return np.array([e.e_total for e in self.energies])


def default_state(grid: Grid, eps: float, delta: float, c0: float = 0.5,
                  seed: int = 0, amplitude: float = 1e-3) -> DiffuseState:
    """Jittered flat start: c = c0 + low-frequency noise, z = 1, u = 0.

    The jitter is a sum of the four lowest cosine modes per axis with
    Philox-seeded amplitudes; low modes break the symmetric saddle of the
    double well without seeding a fine-scale interface pattern.  Each cosine
    mode has exactly zero mean under the midpoint rule.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    jitter = np.zeros(grid.cells)
    mesh = grid.meshgrid()
    for axis in range(grid.dim):
        xhat = (mesh[axis] - grid.origin[axis]) / grid.extent[axis]
        for m in range(1, 5):
            jitter += rng.uniform(-1.0, 1.0) / (m * m) * np.cos(m * np.pi * xhat)
    c = ScalarField(grid, c0 + amplitude * jitter)
    return DiffuseState(c=c, u=VectorField.full(grid, np.zeros(grid.dim)),
                        z=ScalarField.full(grid, 1.0), eps=eps, delta=delta)


def _cg(apply_a, b: np.ndarray, x0: np.ndarray, tol: float,
        max_iters: int) -> tuple[np.ndarray, int, bool]:
    x = x0.copy()
    r = b - apply_a(x)
    res0 = float(np.sqrt(np.sum(r * r)))
    if res0 == 0.0:
        return x, 0, True
    p = r.copy()
    rr = res0 * res0
    for k in range(1, max_iters + 1):
        ap = apply_a(p)
        pap = float(np.sum(p * ap))
        if pap <= 0.0:  # nullspace direction reached; current x already minimizes there
            return x, k, True
        alpha = rr / pap
        x += alpha * p
        r -= alpha * ap
        rr_new = float(np.sum(r * r))
        if np.sqrt(rr_new) <= tol * res0:
            return x, k, True
        p = r + (rr_new / rr) * p
        rr = rr_new
    return x, max_iters, False


def minimize_u(s: DiffuseState, P: PotentialSet, M: ElasticModel,
               plan: SolverPlan) -> tuple[DiffuseState, BlockResult]:
    """Exact block minimization in u: solve grad_u E = 0 by matrix-free CG."""
    grid = s.grid
    zc = np.clip(s.z.values, 0.0, 1.0)
    weight = (M.psi(zc) + M.eta(s.delta))[..., None, None]
    vol = grid.cell_volume

    def apply_a(uvals: np.ndarray) -> np.ndarray:
        eu = sym_gradient(VectorField(grid, uvals)).values
        return vol * sym_gradient_adjoint(
            SymTensorField(grid, weight * M.dform(eu))).values

    misfit_rhs = s.c.values[..., None, None] * M.e0
    b = vol * sym_gradient_adjoint(
        SymTensorField(grid, weight * M.dform(misfit_rhs))).values

    before = diffuse_energy(s, P, M)
    unew, iters, converged = _cg(apply_a, b, s.u.values, plan.cg_tol, plan.cg_max_iters)
    candidate = s.replace(u=VectorField(grid, unew))
    after = diffuse_energy(candidate, P, M)
    if after.e_total > before.e_total * (1.0 + 1e-13) + 1e-300:
        # inexact solve raised the energy: keep the old displacement
        return s, BlockResult("u", False, flag="energy_rose", iters=iters, energy=before)
    flag = "" if converged else "cg_max_iters"
    return candidate, BlockResult("u", True, flag=flag, iters=iters, energy=after)


def _armijo_step(s: DiffuseState, P: PotentialSet, M: ElasticModel, plan: SolverPlan,
                 block: str, start_step: float) -> tuple[DiffuseState, BlockResult]:
    grid = s.grid
    vol = grid.cell_volume
    if block == "z":
        base = s.z.values
        direction = grad_z(s, P, M).values / vol
    else:
        base = s.c.values
        g = grad_c(s, P, M).values
        if plan.mass_constraint is not None:
            g = g - g.mean()
        direction = g / vol
    before = diffuse_energy(s, P, M)
    scale = max(1.0, float(np.abs(base).max()))
    if float(np.abs(direction).max()) * start_step < 1e-16 * scale:
        return s, BlockResult(block, True, flag="stationary", energy=before)

    t = start_step
    for k in range(_MAX_BACKTRACKS):
        trial = base - t * direction
        if block == "z":
            trial = np.clip(trial, 0.0, 1.0)
        delta = trial - base
        move = float(np.abs(delta).max())
        if move < 1e-16 * scale:
            return s, BlockResult(block, True, flag="stationary", iters=k, energy=before)
        if block == "z":
            candidate = s.replace(z=ScalarField(grid, trial))
        else:
            candidate = s.replace(c=ScalarField(grid, trial))
        after = diffuse_energy(candidate, P, M)
        decrease = plan.armijo_c * (vol / t) * float(np.sum(delta * delta))
        if after.e_total <= before.e_total - decrease:
            if block == "c" and plan.mass_constraint is not None:
                cfix = project_mass(candidate.c, plan.mass_constraint)
                candidate = candidate.replace(c=cfix)
                after = diffuse_energy(candidate, P, M)
            return candidate, BlockResult(block, True, iters=k, step=t, energy=after)
        t *= plan.backtrack_factor
    return s, BlockResult(block, False, flag="no_step", iters=_MAX_BACKTRACKS,
                          energy=before)


def minimize_z(s: DiffuseState, P: PotentialSet, M: ElasticModel, plan: SolverPlan,
               start_step: Optional[float] = None) -> tuple[DiffuseState, BlockResult]:
    """One projected-gradient Armijo step for z on the box [0, 1]^cells."""
    return _armijo_step(s, P, M, plan, "z", start_step or plan.step0)


def minimize_c(s: DiffuseState, P: PotentialSet, M: ElasticModel, plan: SolverPlan,
               start_step: Optional[float] = None) -> tuple[DiffuseState, BlockResult]:
    """One gradient Armijo step for c; zero-mean direction under a mass constraint."""
    return _armijo_step(s, P, M, plan, "c", start_step or plan.step0)


def alternate(s0: DiffuseState, P: PotentialSet, M: ElasticModel,
              plan: SolverPlan) -> tuple[DiffuseState, Trajectory]:
    """Sweep (u, z, c) blocks until the relative energy decrease stalls.

    The trajectory records the breakdown after every sweep (index 0 is the
    start state); identical plan and seed reproduce it bit for bit.
    """
    s = s0
    if plan.mass_constraint is not None:
        s = s.replace(c=project_mass(s.c, plan.mass_constraint))
    energies = [diffuse_energy(s, P, M)]
    flags: list[tuple[str, ...]] = []
    reason = "max_outer"
    step_z = plan.step0
    step_c = plan.step0
    for _ in range(plan.max_outer):
        s, ru = minimize_u(s, P, M, plan)
        s, rz = minimize_z(s, P, M, plan, start_step=step_z)
        if rz.accepted and rz.step > 0:
            step_z = min(rz.step / plan.backtrack_factor, plan.step0)
        s, rc = minimize_c(s, P, M, plan, start_step=step_c)
        if rc.accepted and rc.step > 0:
            step_c = min(rc.step / plan.backtrack_factor, plan.step0)
        energies.append(rc.energy if rc.energy is not None else diffuse_energy(s, P, M))
        flags.append(tuple(f"{r.block}:{r.flag}" for r in (ru, rz, rc) if r.flag))
        prev, cur = energies[-2].e_total, energies[-1].e_total
        if prev - cur < plan.tol_rel_energy * max(abs(prev), 1e-300):
            reason = "converged"
            break
    norms = {
        "c": float(np.abs(grad_c(s, P, M).values).max()),
        "u": float(np.abs(grad_u(s, P, M).values).max()),
        "z": float(np.abs(grad_z(s, P, M).values).max()),
    }
    return s, Trajectory(tuple(energies), reason, norms, tuple(flags))
