"""Uniform cell-centered grids on axis-aligned boxes and discrete operators.

Discrete gradient: centered differences in the interior, one-sided at the two
boundary cells of each axis; exact on affine fields. The adjoint (transpose)
operators are provided so energies differentiated against nodal values close
exactly under the discrete inner product. Integration is the midpoint rule.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Axis-aligned box discretized into uniform cells; fields live at centers."""
    origin: tuple[float, ...]
    extent: tuple[float, ...]
    cells: tuple[int, ...]

    def __post_init__(self):
        if len(self.origin) != len(self.extent) or len(self.origin) != len(self.cells):
            raise ValueError("origin, extent, cells must have equal length")
        if self.dim not in (1, 2):
            raise ValueError("only dimensions 1 and 2 are supported")
        if any(n < 2 for n in self.cells):
            raise ValueError("need at least 2 cells per axis")
        if any(e <= 0 for e in self.extent):
            raise ValueError("extent must be positive")

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(e / n for e, n in zip(self.extent, self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def centers(self, axis: int) -> np.ndarray:
        h = self.spacing[axis]
        return self.origin[axis] + h * (np.arange(self.cells[axis]) + 0.5)

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinate arrays, each shaped like a scalar field."""
        axes = [self.centers(a) for a in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def diameter(self) -> float:
        return float(np.sqrt(sum(e * e for e in self.extent)))


def _freeze(arr: np.ndarray) -> np.ndarray:
    # always copy so freezing never touches the caller's array
    arr = np.array(arr, dtype=float, order="C", copy=True)
    arr.setflags(write=False)
    return arr


def _check_values(grid: Grid, values: np.ndarray, trailing: tuple[int, ...]) -> None:
    if values.shape != grid.cells + trailing:
        raise ValueError(f"field shape {values.shape} does not match grid "
                         f"{grid.cells + trailing}")
    if not np.all(np.isfinite(values)):
        raise ValueError("field contains non-finite values")


@dataclass(frozen=True)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(self.values))
        _check_values(self.grid, self.values, ())

    @classmethod
    def full(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.cells, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        return cls(grid, np.asarray(fn(*grid.meshgrid()), dtype=float))


@dataclass(frozen=True)
class VectorField:
    grid: Grid
    values: np.ndarray  # shape cells + (d,)

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(self.values))
        _check_values(self.grid, self.values, (self.grid.dim,))

    @classmethod
    def full(cls, grid: Grid, value) -> "VectorField":
        vec = np.broadcast_to(np.asarray(value, dtype=float), (grid.dim,))
        return cls(grid, np.tile(vec, grid.cells + (1,)))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "VectorField":
        comps = fn(*grid.meshgrid())
        return cls(grid, np.stack([np.asarray(c, dtype=float) for c in comps], axis=-1))


@dataclass(frozen=True)
class SymTensorField:
    grid: Grid
    values: np.ndarray  # shape cells + (d, d), symmetric per cell

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(self.values))
        d = self.grid.dim
        _check_values(self.grid, self.values, (d, d))


def _diff(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Centered interior / one-sided boundary difference along one axis."""
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    out[0] = (v[1] - v[0]) / h
    out[-1] = (v[-1] - v[-2]) / h
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    return np.moveaxis(out, 0, axis)


def _diff_t(weights: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Transpose of _diff under the plain (unweighted) euclidean inner product."""
    w = np.moveaxis(weights, axis, 0)
    out = np.zeros_like(w)
    out[0] += -w[0] / h
    out[1] += w[0] / h
    out[:-2] += -w[1:-1] / (2.0 * h)
    out[2:] += w[1:-1] / (2.0 * h)
    out[-2] += -w[-1] / h
    out[-1] += w[-1] / h
    return np.moveaxis(out, 0, axis)


def gradient(f: ScalarField) -> VectorField:
    g = f.grid
    comps = [_diff(f.values, a, g.spacing[a]) for a in range(g.dim)]
    return VectorField(g, np.stack(comps, axis=-1))


def gradient_adjoint(vf: VectorField) -> ScalarField:
    """Adjoint of `gradient`: <gradient(f), v> = <f, gradient_adjoint(v)> exactly."""
    g = vf.grid
    out = np.zeros(g.cells)
    for a in range(g.dim):
        out += _diff_t(vf.values[..., a], a, g.spacing[a])
    return ScalarField(g, out)


def sym_gradient(u: VectorField) -> SymTensorField:
    """Symmetric part of the discrete Jacobian; vanishes on rigid motions."""
    g = u.grid
    d = g.dim
    jac = np.empty(g.cells + (d, d))
    for a in range(d):
        for b in range(d):
            jac[..., a, b] = _diff(u.values[..., a], b, g.spacing[b])
    sym = 0.5 * (jac + np.swapaxes(jac, -1, -2))
    return SymTensorField(g, sym)


def sym_gradient_adjoint(s: SymTensorField) -> VectorField:
    """Adjoint of `sym_gradient` for symmetric-valued weight fields."""
    g = s.grid
    d = g.dim
    out = np.zeros(g.cells + (d,))
    for a in range(d):
        for b in range(d):
            out[..., a] += _diff_t(s.values[..., a, b], b, g.spacing[b])
    return VectorField(g, out)


def integrate(f: ScalarField) -> float:
    """Midpoint rule: cell volume times the sum over cells in row-major layout."""
    return float(f.grid.cell_volume * np.sum(f.values))


@dataclass(frozen=True)
class SliceSamples:
    """Samples of a field along a line x = y + t*xi clipped to the open box."""
    t: np.ndarray
    values: np.ndarray
    hit: bool


def _clip_line_to_box(grid: Grid, y: np.ndarray, xi: np.ndarray) -> tuple[float, float] | None:
    t0, t1 = -np.inf, np.inf
    for a in range(grid.dim):
        lo = grid.origin[a]
        hi = grid.origin[a] + grid.extent[a]
        if abs(xi[a]) < 1e-15:
            if not (lo < y[a] < hi):
                return None
            continue
        ta = (lo - y[a]) / xi[a]
        tb = (hi - y[a]) / xi[a]
        t0 = max(t0, min(ta, tb))
        t1 = min(t1, max(ta, tb))
    if not (t0 < t1):
        return None
    return float(t0), float(t1)


def sample_at(field, points: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of a Scalar/Vector field at arbitrary points.

    Points within the half-cell margin of the boundary are clamped to the
    nearest cell center (first-order accurate near the boundary and at kinks).
    `points` has shape (m, d); scalar fields return (m,), vector fields (m, d).
    """
    g = field.grid
    vals = field.values
    idx = []
    frac = []
    for a in range(g.dim):
        h = g.spacing[a]
        x = (points[:, a] - g.origin[a]) / h - 0.5
        x = np.clip(x, 0.0, g.cells[a] - 1.0)
        i0 = np.minimum(np.floor(x).astype(int), g.cells[a] - 2)
        idx.append(i0)
        frac.append(x - i0)
    if g.dim == 1:
        i = idx[0]
        t = frac[0]
        t = t if vals.ndim == 1 else t[:, None]
        return (1 - t) * vals[i] + t * vals[i + 1]
    i, j = idx
    s, t = frac
    if vals.ndim > 2:  # vector: broadcast weights over components
        s = s[:, None]
        t = t[:, None]
    return ((1 - s) * (1 - t) * vals[i, j] + s * (1 - t) * vals[i + 1, j]
            + (1 - s) * t * vals[i, j + 1] + s * t * vals[i + 1, j + 1])


def slice_extract(field, xi, y, samples: int) -> SliceSamples:
    """Sample a field along the line t -> y + t*xi restricted to the domain.

    Vector fields are projected onto xi, i.e. the returned values are
    <u(y + t*xi), xi>.  xi must be a unit vector to 1e-12.  A line missing the
    domain yields an empty, flagged result.
    """
    g = field.grid
    xi = np.asarray(xi, dtype=float)
    y = np.asarray(y, dtype=float)
    if xi.shape != (g.dim,) or y.shape != (g.dim,):
        raise ValueError("xi and y must have the grid dimension")
    if abs(np.linalg.norm(xi) - 1.0) > 1e-12:
        raise ValueError("xi must be a unit vector")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    span = _clip_line_to_box(g, y, xi)
    if span is None:
        empty = np.empty((0,))
        return SliceSamples(empty, empty, hit=False)
    t0, t1 = span
    dt = (t1 - t0) / samples
    t = t0 + dt * (np.arange(samples) + 0.5)
    pts = y[None, :] + t[:, None] * xi[None, :]
    vals = sample_at(field, pts)
    if vals.ndim == 2:
        vals = vals @ xi
    return SliceSamples(t, vals, hit=True)


def write_field(f: ScalarField, path) -> None:
    """Plain-text dump: header (dim, cells, origin, extent), then row-major values."""
    g = f.grid
    buf = io.StringIO()
    buf.write(f"dim {g.dim}\n")
    buf.write("cells " + " ".join(str(n) for n in g.cells) + "\n")
    buf.write("origin " + " ".join(f"{x:.17g}" for x in g.origin) + "\n")
    buf.write("extent " + " ".join(f"{x:.17g}" for x in g.extent) + "\n")
    for v in f.values.reshape(-1):
        buf.write(f"{v:.17g}\n")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def read_field(path) -> ScalarField:
    with open(path) as fh:
        lines = fh.read().split("\n")
    header = {}
    for k in range(4):
        name, *rest = lines[k].split()
        header[name] = rest
    dim = int(header["dim"][0])
    cells = tuple(int(x) for x in header["cells"])
    origin = tuple(float(x) for x in header["origin"])
    extent = tuple(float(x) for x in header["extent"])
    if len(cells) != dim:
        raise ValueError("corrupt field header")
    n = int(np.prod(cells))
    values = np.array([float(x) for x in lines[4:4 + n]]).reshape(cells)
    return ScalarField(Grid(origin, extent, cells), values)
