"""Diffuse energy of a (c, u, z) triplet and its exact discrete gradients.

The energy is the midpoint-rule evaluation of

    E = int phi_delta(z) (W(c)/eps + eps |grad c|^2)
      + int (psi(z) + eta(delta)) C(e(u) - c e0)
      + int (V(z)/delta + delta |grad z|^2)

with C the isotropic quadratic form C(xi) = lambda tr(xi)^2 + 2 mu |xi|^2 and
psi the stiffness degradation (default psi(z) = z^2, eta = delta^2, which is
the plain (z^2 + delta^2) weight).  Gradients are derivatives of the discrete
energy with respect to nodal values (discretize-then-differentiate), so the
solver's descent property holds exactly; they are validated against central
finite differences in the test suite.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fields import (Grid, ScalarField, SymTensorField, VectorField, gradient,
                     gradient_adjoint, integrate, sym_gradient, sym_gradient_adjoint)
from .potentials import PotentialSet


def _psi_quadratic(z):
    return np.asarray(z) ** 2


def _dpsi_quadratic(z):
    return 2.0 * np.asarray(z)


def _eta_delta_squared(delta: float) -> float:
    return delta * delta


@dataclass(frozen=True)
class ElasticModel:
    """Isotropic elasticity with lattice-misfit strain and damage degradation."""
    lame_lambda: float = 0.0
    lame_mu: float = 0.5
    e0: np.ndarray = field(default_factory=lambda: np.zeros((1, 1)))
    psi: Callable = _psi_quadratic
    dpsi: Callable = _dpsi_quadratic
    eta_rule: Callable[[float], float] = _eta_delta_squared

    def __post_init__(self):
        object.__setattr__(self, "e0", np.asarray(self.e0, dtype=float))
        if self.lame_mu <= 0 or self.lame_lambda < 0:
            raise ValueError("need mu > 0 and lambda >= 0")
        if self.e0.ndim != 2 or self.e0.shape[0] != self.e0.shape[1]:
            raise ValueError("e0 must be a square matrix")
        if not np.allclose(self.e0, self.e0.T, atol=1e-14):
            raise ValueError("e0 must be symmetric")
        if abs(float(self.psi(1.0)) - 1.0) > 1e-12 or abs(float(self.psi(0.0))) > 1e-12:
            raise ValueError("degradation must satisfy psi(0) = 0, psi(1) = 1")

    def form(self, xi: np.ndarray) -> np.ndarray:
        """Quadratic form C(xi) per cell; xi has shape cells + (d, d), symmetric."""
        tr = np.trace(xi, axis1=-2, axis2=-1)
        return self.lame_lambda * tr * tr + 2.0 * self.lame_mu * np.sum(xi * xi, axis=(-2, -1))

    def dform(self, xi: np.ndarray) -> np.ndarray:
        """Derivative of the form: dC(xi) = 2 lambda tr(xi) I + 4 mu xi."""
        d = xi.shape[-1]
        tr = np.trace(xi, axis1=-2, axis2=-1)
        return (2.0 * self.lame_lambda * tr[..., None, None] * np.eye(d)
                + 4.0 * self.lame_mu * xi)

    def eta(self, delta: float) -> float:
        val = float(self.eta_rule(delta))
        if val <= 0:
            raise ValueError("eta(delta) must be positive")
        return val


@dataclass(frozen=True)
class DiffuseState:
    """The triplet (c, u, z) with its regularization lengths (eps, delta).

    z is stored as given; energy evaluation clamps degradation arguments to
    [0, 1] and counts the clamped cells, the solver keeps z in the box by
    projection.
    """
    c: ScalarField
    u: VectorField
    z: ScalarField
    eps: float
    delta: float

    def __post_init__(self):
        if self.eps <= 0 or self.delta <= 0:
            raise ValueError("eps and delta must be positive")
        if self.c.grid != self.u.grid or self.c.grid != self.z.grid:
            raise ValueError("c, u, z must share one grid")

    @property
    def grid(self) -> Grid:
        return self.c.grid

    def replace(self, **kw) -> "DiffuseState":
        parts = {"c": self.c, "u": self.u, "z": self.z,
                 "eps": self.eps, "delta": self.delta}
        parts.update(kw)
        return DiffuseState(**parts)


@dataclass(frozen=True)
class EnergyBreakdown:
    """Component values plus evaluation metadata (clamp audit, tube bound)."""
    e_phase: float
    e_elastic: float
    e_crack: float
    e_total: float
    clamped_cells: int = 0
    excluded_bound: float = 0.0

    def __post_init__(self):
        for name in ("e_phase", "e_elastic", "e_crack"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if abs(self.e_total - (self.e_phase + self.e_elastic + self.e_crack)) > \
                1e-9 * max(1.0, abs(self.e_total)):
            raise ValueError("e_total must equal the sum of the components")

    @classmethod
    def of(cls, e_phase: float, e_elastic: float, e_crack: float,
           clamped_cells: int = 0) -> "EnergyBreakdown":
        return cls(e_phase, e_elastic, e_crack, e_phase + e_elastic + e_crack,
                   clamped_cells)


def _misfit(s: DiffuseState, M: ElasticModel) -> np.ndarray:
    """xi = e(u) - c e0 per cell."""
    eu = sym_gradient(s.u).values
    return eu - s.c.values[..., None, None] * M.e0


def _clamped_z(s: DiffuseState) -> tuple[np.ndarray, int]:
    z = s.z.values
    clamped = int(np.count_nonzero((z < 0.0) | (z > 1.0)))
    return np.clip(z, 0.0, 1.0), clamped


def _raise_nonfinite(density: np.ndarray, label: str) -> None:
    if not np.all(np.isfinite(density)):
        idx = np.unravel_index(int(np.argmax(~np.isfinite(density))), density.shape)
        raise ValueError(f"non-finite {label} density at cell {tuple(int(i) for i in idx)}")


def diffuse_energy(s: DiffuseState, P: PotentialSet, M: ElasticModel) -> EnergyBreakdown:
    zc, clamped = _clamped_z(s)
    cdel = P.c_delta(s.delta)
    eta = M.eta(s.delta)
    gc = gradient(s.c).values
    gz = gradient(s.z).values

    phase = (P.phi(zc) + cdel) * (P.w(s.c.values) / s.eps
                                  + s.eps * np.sum(gc * gc, axis=-1))
    _raise_nonfinite(phase, "interfacial")
    elastic = (M.psi(zc) + eta) * M.form(_misfit(s, M))
    _raise_nonfinite(elastic, "elastic")
    crack = P.v(zc) / s.delta + s.delta * np.sum(gz * gz, axis=-1)
    _raise_nonfinite(crack, "crack")

    vol = s.grid.cell_volume
    return EnergyBreakdown.of(float(vol * phase.sum()),
                              float(vol * elastic.sum()),
                              float(vol * crack.sum()), clamped)


def grad_c(s: DiffuseState, P: PotentialSet, M: ElasticModel) -> ScalarField:
    """d/dc of the discrete energy (a nodal gradient, not an L2 representative)."""
    zc, _ = _clamped_z(s)
    cdel = P.c_delta(s.delta)
    eta = M.eta(s.delta)
    weight = P.phi(zc) + cdel
    out = weight * P.dw(s.c.values) / s.eps
    gc = gradient(s.c)
    out += 2.0 * s.eps * gradient_adjoint(
        VectorField(s.grid, weight[..., None] * gc.values)).values
    dq = M.dform(_misfit(s, M))
    out -= (M.psi(zc) + eta) * np.sum(dq * M.e0, axis=(-2, -1))
    return ScalarField(s.grid, s.grid.cell_volume * out)


def grad_u(s: DiffuseState, P: PotentialSet, M: ElasticModel) -> VectorField:
    zc, _ = _clamped_z(s)
    eta = M.eta(s.delta)
    weight = (M.psi(zc) + eta)[..., None, None]
    dq = weight * M.dform(_misfit(s, M))
    adj = sym_gradient_adjoint(SymTensorField(s.grid, dq))
    return VectorField(s.grid, s.grid.cell_volume * adj.values)


def grad_z(s: DiffuseState, P: PotentialSet, M: ElasticModel) -> ScalarField:
    zc, _ = _clamped_z(s)
    # chain rule of the clamp: zero derivative strictly outside the box,
    # the inside value on the faces (defaults have zero slope there anyway)
    mask = np.where((s.z.values < 0.0) | (s.z.values > 1.0), 0.0, 1.0)
    gc = gradient(s.c).values
    phase_raw = P.w(s.c.values) / s.eps + s.eps * np.sum(gc * gc, axis=-1)
    out = mask * P.dphi(zc) * phase_raw
    out += mask * M.dpsi(zc) * M.form(_misfit(s, M))
    out += mask * P.dv(zc) / s.delta
    gz = gradient(s.z)
    out += 2.0 * s.delta * gradient_adjoint(gz).values
    return ScalarField(s.grid, s.grid.cell_volume * out)


def mass(c: ScalarField) -> float:
    """Mean concentration over the domain."""
    vol = float(np.prod(c.grid.extent))
    return integrate(c) / vol


def project_mass(c: ScalarField, mu0: float) -> ScalarField:
    """Shift c by a constant so its mean equals mu0 exactly."""
    return ScalarField(c.grid, c.values + (mu0 - mass(c)))
