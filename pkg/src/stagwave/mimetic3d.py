"""Staggered 3D grid calculus: difference operators, material stars, inner
products.

Scalar and vector fields live on two interleaved grids over a box.  The
primal grid carries node scalars, edge vectors, face vectors and cell
scalars; the dual grid (shifted by half a spacing along every axis) carries
the mirrored kinds, so each primal kind is collocated with one dual kind:

====================  ====================  =======================
primal kind           collocated dual kind  point locations
====================  ====================  =======================
node scalar           dual cell scalar      (i, j, k)
edge vector           dual face vector      e.g. (i+1/2, j, k)
face vector           dual edge vector      e.g. (i, j+1/2, k+1/2)
cell scalar           dual node scalar      (i+1/2, j+1/2, k+1/2)
====================  ====================  =======================

``grad3``/``curl3``/``div3`` are the forward-difference operators on the
primal kinds; the ``*_star`` trio are the backward-difference duals.  Both
chains are exact complexes (curl of gradient and divergence of curl vanish
identically).  Material properties enter through :class:`Star3`, which maps
each kind to its collocated partner: scalar weights ``a`` (nodes) and ``b``
(cell centers), and matrix weights ``A`` (edges -> dual faces) and ``B``
(dual edges -> faces) whose off-diagonal entries act through second-order
4-point averages.  The eight weighted inner products make the dual operators
the (anti-)adjoints of the primal ones, which is what the conserved-quantity
machinery in the time steppers relies on; ``check_discrete_adjoints`` and
``negativity_check`` verify those identities numerically.

Two boundary policies are supported.  ``"periodic"`` wraps every stencil, so
all arrays are ``(nx, ny, nz)``.  ``"pinned"`` stores the full staggered
index ranges of a closed box; the dual (backward) operators then zero-fill
output entries whose stencil would reach outside, which is exactly the set
of entries a Dirichlet-pinned time stepper never updates.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable

import numpy as np

BOUNDARIES = ("periodic", "pinned")

SCALAR_KINDS = ("node", "cell", "dual-node", "dual-cell")
VECTOR_KINDS = ("edge", "face", "dual-edge", "dual-face")

# staggering pattern per kind: 'n' = node-aligned axis, 'h' = half-shifted
_SCALAR_PATTERN = {
    "node": "nnn",
    "cell": "hhh",
    "dual-node": "hhh",   # cell centers
    "dual-cell": "nnn",   # nodes
}
_VECTOR_PATTERN = {
    "edge": ("hnn", "nhn", "nnh"),
    "face": ("nhh", "hnh", "hhn"),
    "dual-edge": ("nhh", "hnh", "hhn"),  # face points
    "dual-face": ("hnn", "nhn", "nnh"),  # edge points
}

STAR_MODES = ("scalar", "diagonal", "full")

# ---------------------------------------------------------------------------
# grid and fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid3:
    """Uniform box grid with a boundary policy.

    Parameters
    ----------
    lx, ly, lz : float
        Box extents; the box is ``[0, lx] x [0, ly] x [0, lz]``.
    nx, ny, nz : int
        Primal cells per axis (each >= 2); spacings are ``lx/nx`` etc.
    boundary : str
        ``"periodic"`` (every kind stored as ``(nx, ny, nz)``) or
        ``"pinned"`` (full staggered index ranges of the closed box).
    """

    lx: float
    ly: float
    lz: float
    nx: int
    ny: int
    nz: int
    boundary: str = "periodic"

    def __post_init__(self):
        if min(self.lx, self.ly, self.lz) <= 0:
            raise ValueError("box extents must be positive")
        for n in (self.nx, self.ny, self.nz):
            if int(n) != n or n < 2:
                raise ValueError("need at least 2 cells per axis")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary policy {self.boundary!r}")

    @classmethod
    def cube(cls, n: int, length: float = 1.0, boundary: str = "periodic") -> "Grid3":
        return cls(length, length, length, n, n, n, boundary)

    # -- geometry ------------------------------------------------------

    @property
    def counts(self) -> tuple:
        return (self.nx, self.ny, self.nz)

    @property
    def spacings(self) -> tuple:
        return (self.lx / self.nx, self.ly / self.ny, self.lz / self.nz)

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def dz(self) -> float:
        return self.lz / self.nz

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy * self.dz

    def axis_nodes(self, axis: int) -> np.ndarray:
        """Node coordinates along one axis (wrap point excluded if periodic)."""
        n = self.counts[axis]
        m = n if self.boundary == "periodic" else n + 1
        return np.arange(m) * self.spacings[axis]

    def axis_centers(self, axis: int) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        return (np.arange(self.counts[axis]) + 0.5) * self.spacings[axis]

    # -- staggered shapes and sample points ----------------------------

    def _axis_len(self, axis: int, tag: str) -> int:
        n = self.counts[axis]
        if tag == "h" or self.boundary == "periodic":
            return n
        return n + 1

    def _pattern_shape(self, pattern: str) -> tuple:
        return tuple(self._axis_len(ax, tag) for ax, tag in enumerate(pattern))

    def scalar_shape(self, kind: str) -> tuple:
        if kind not in SCALAR_KINDS:
            raise ValueError(f"unknown scalar kind {kind!r}")
        return self._pattern_shape(_SCALAR_PATTERN[kind])

    def vector_shapes(self, kind: str) -> tuple:
        if kind not in VECTOR_KINDS:
            raise ValueError(f"unknown vector kind {kind!r}")
        return tuple(self._pattern_shape(p) for p in _VECTOR_PATTERN[kind])

    def _pattern_points(self, pattern: str) -> tuple:
        axes = [
            self.axis_nodes(ax) if tag == "n" else self.axis_centers(ax)
            for ax, tag in enumerate(pattern)
        ]
        return np.meshgrid(*axes, indexing="ij")

    def scalar_points(self, kind: str):
        """Meshgrid (X, Y, Z) of the sample points of a scalar kind."""
        if kind not in SCALAR_KINDS:
            raise ValueError(f"unknown scalar kind {kind!r}")
        return self._pattern_points(_SCALAR_PATTERN[kind])

    def vector_points(self, kind: str, comp: int):
        """Meshgrid (X, Y, Z) of the sample points of one vector component."""
        if kind not in VECTOR_KINDS:
            raise ValueError(f"unknown vector kind {kind!r}")
        return self._pattern_points(_VECTOR_PATTERN[kind][comp])


@dataclass(frozen=True, eq=False)
class VectorField3:
    """Three staggered component arrays with componentwise arithmetic."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    @property
    def components(self) -> tuple:
        return (self.x, self.y, self.z)

    def __add__(self, other):
        if not isinstance(other, VectorField3):
            return NotImplemented
        return VectorField3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other):
        if not isinstance(other, VectorField3):
            return NotImplemented
        return VectorField3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self):
        return VectorField3(-self.x, -self.y, -self.z)

    def __mul__(self, c):
        if not np.isscalar(c):
            return NotImplemented
        return VectorField3(c * self.x, c * self.y, c * self.z)

    __rmul__ = __mul__

    def copy(self) -> "VectorField3":
        return VectorField3(self.x.copy(), self.y.copy(), self.z.copy())


def zeros_field(grid: Grid3, kind: str):
    """All-zero field of the given kind (ndarray or VectorField3)."""
    if kind in SCALAR_KINDS:
        return np.zeros(grid.scalar_shape(kind))
    return VectorField3(*(np.zeros(s) for s in grid.vector_shapes(kind)))


def _as_fn(value) -> Callable:
    if callable(value):
        return value
    c = float(value)
    return lambda x, y, z: np.full_like(x, c)


def sample_scalar(grid: Grid3, kind: str, fn) -> np.ndarray:
    """Sample a function (or constant) at the points of a scalar kind."""
    pts = grid.scalar_points(kind)
    vals = np.asarray(_as_fn(fn)(*pts), dtype=float)
    shape = grid.scalar_shape(kind)
    if vals.shape != shape:
        vals = np.broadcast_to(vals, shape).copy()
    return vals


def sample_vector(grid: Grid3, kind: str, fns) -> VectorField3:
    """Sample three functions (or constants) at a vector kind's points."""
    comps = []
    for c, fn in enumerate(fns):
        pts = grid.vector_points(kind, c)
        vals = np.asarray(_as_fn(fn)(*pts), dtype=float)
        shape = grid.vector_shapes(kind)[c]
        if vals.shape != shape:
            vals = np.broadcast_to(vals, shape).copy()
        comps.append(vals)
    return VectorField3(*comps)


def _check_scalar(f, grid: Grid3, kind: str, who: str):
    f = np.asarray(f)
    if f.shape != grid.scalar_shape(kind):
        raise ValueError(
            f"{who}: expected {kind} scalar of shape {grid.scalar_shape(kind)}, "
            f"got {f.shape}"
        )
    return f


def _check_vector(v, grid: Grid3, kind: str, who: str):
    if not isinstance(v, VectorField3):
        raise ValueError(f"{who}: expected a VectorField3 of kind {kind!r}")
    shapes = tuple(c.shape for c in v.components)
    if shapes != grid.vector_shapes(kind):
        raise ValueError(
            f"{who}: expected {kind} component shapes {grid.vector_shapes(kind)}, "
            f"got {shapes}"
        )
    return v


# ---------------------------------------------------------------------------
# difference operators
# ---------------------------------------------------------------------------


def _fwd(arr, axis, delta):
    return (np.roll(arr, -1, axis) - arr) / delta


def _bwd(arr, axis, delta):
    return (arr - np.roll(arr, 1, axis)) / delta


def grad3(s, grid: Grid3) -> VectorField3:
    """Node scalar -> edge vector (forward differences to edge midpoints)."""
    s = _check_scalar(s, grid, "node", "grad3")
    dx, dy, dz = grid.spacings
    if grid.boundary == "periodic":
        return VectorField3(_fwd(s, 0, dx), _fwd(s, 1, dy), _fwd(s, 2, dz))
    return VectorField3(
        np.diff(s, axis=0) / dx, np.diff(s, axis=1) / dy, np.diff(s, axis=2) / dz
    )


def curl3(t: VectorField3, grid: Grid3) -> VectorField3:
    """Edge vector -> face vector."""
    t = _check_vector(t, grid, "edge", "curl3")
    dx, dy, dz = grid.spacings
    if grid.boundary == "periodic":
        return VectorField3(
            _fwd(t.z, 1, dy) - _fwd(t.y, 2, dz),
            _fwd(t.x, 2, dz) - _fwd(t.z, 0, dx),
            _fwd(t.y, 0, dx) - _fwd(t.x, 1, dy),
        )
    return VectorField3(
        np.diff(t.z, axis=1) / dy - np.diff(t.y, axis=2) / dz,
        np.diff(t.x, axis=2) / dz - np.diff(t.z, axis=0) / dx,
        np.diff(t.y, axis=0) / dx - np.diff(t.x, axis=1) / dy,
    )


def div3(n: VectorField3, grid: Grid3) -> np.ndarray:
    """Face vector -> cell scalar."""
    n = _check_vector(n, grid, "face", "div3")
    dx, dy, dz = grid.spacings
    if grid.boundary == "periodic":
        return _fwd(n.x, 0, dx) + _fwd(n.y, 1, dy) + _fwd(n.z, 2, dz)
    return (
        np.diff(n.x, axis=0) / dx
        + np.diff(n.y, axis=1) / dy
        + np.diff(n.z, axis=2) / dz
    )


def grad3_star(s_star, grid: Grid3) -> VectorField3:
    """Dual node scalar (cell centers) -> dual edge vector (face points).

    On pinned grids the entries whose backward stencil would leave the box
    are zero-filled.
    """
    s = _check_scalar(s_star, grid, "dual-node", "grad3_star")
    dx, dy, dz = grid.spacings
    if grid.boundary == "periodic":
        return VectorField3(_bwd(s, 0, dx), _bwd(s, 1, dy), _bwd(s, 2, dz))
    out = zeros_field(grid, "dual-edge")
    out.x[1:-1, :, :] = np.diff(s, axis=0) / dx
    out.y[:, 1:-1, :] = np.diff(s, axis=1) / dy
    out.z[:, :, 1:-1] = np.diff(s, axis=2) / dz
    return out


def curl3_star(t_star: VectorField3, grid: Grid3) -> VectorField3:
    """Dual edge vector (face points) -> dual face vector (edge points)."""
    t = _check_vector(t_star, grid, "dual-edge", "curl3_star")
    dx, dy, dz = grid.spacings
    if grid.boundary == "periodic":
        return VectorField3(
            _bwd(t.z, 1, dy) - _bwd(t.y, 2, dz),
            _bwd(t.x, 2, dz) - _bwd(t.z, 0, dx),
            _bwd(t.y, 0, dx) - _bwd(t.x, 1, dy),
        )
    out = zeros_field(grid, "dual-face")
    out.x[:, 1:-1, 1:-1] = (
        np.diff(t.z[:, :, 1:-1], axis=1) / dy - np.diff(t.y[:, 1:-1, :], axis=2) / dz
    )
    out.y[1:-1, :, 1:-1] = (
        np.diff(t.x[1:-1, :, :], axis=2) / dz - np.diff(t.z[:, :, 1:-1], axis=0) / dx
    )
    out.z[1:-1, 1:-1, :] = (
        np.diff(t.y[:, 1:-1, :], axis=0) / dx - np.diff(t.x[1:-1, :, :], axis=1) / dy
    )
    return out


def div3_star(n_star: VectorField3, grid: Grid3) -> np.ndarray:
    """Dual face vector (edge points) -> dual cell scalar (nodes)."""
    n = _check_vector(n_star, grid, "dual-face", "div3_star")
    dx, dy, dz = grid.spacings
    if grid.boundary == "periodic":
        return _bwd(n.x, 0, dx) + _bwd(n.y, 1, dy) + _bwd(n.z, 2, dz)
    out = zeros_field(grid, "dual-cell")
    out[1:-1, 1:-1, 1:-1] = (
        np.diff(n.x[:, 1:-1, 1:-1], axis=0) / dx
        + np.diff(n.y[1:-1, :, 1:-1], axis=1) / dy
        + np.diff(n.z[1:-1, 1:-1, :], axis=2) / dz
    )
    return out


# ---------------------------------------------------------------------------
# star (material) operators
# ---------------------------------------------------------------------------


def _sample_at_pattern(grid: Grid3, pattern: str, fn) -> np.ndarray:
    pts = grid._pattern_points(pattern)
    vals = np.asarray(_as_fn(fn)(*pts), dtype=float)
    shape = grid._pattern_shape(pattern)
    if vals.shape != shape:
        vals = np.broadcast_to(vals, shape).copy()
    return vals


_MAT_KEYS = ("xx", "yy", "zz", "xy", "xz", "yz")


def _full_rows(grid: Grid3, patterns, mat: dict):
    """Sample a symmetric matrix at each row's points; return rows of the
    matrix and of its pointwise inverse."""
    missing = [k for k in _MAT_KEYS if k not in mat]
    if missing:
        raise ValueError(f"full star matrix needs entries {missing}")
    names = ("x", "y", "z")
    rows, inv_rows = [], []
    for r in range(3):
        entries = np.empty((3, 3), dtype=object)
        for i in range(3):
            for j in range(3):
                key = names[i] + names[j]
                key = key if key in mat else names[j] + names[i]
                entries[i, j] = _sample_at_pattern(grid, patterns[r], mat[key])
        diag = entries[r, r]
        if np.any(diag <= 0):
            raise ValueError("full star matrix needs positive diagonal entries")
        stacked = np.stack(
            [np.stack([entries[i, j] for j in range(3)], axis=-1) for i in range(3)],
            axis=-2,
        )
        inv = np.linalg.inv(stacked)
        rows.append(tuple(entries[r, j] for j in range(3)))
        inv_rows.append(tuple(np.ascontiguousarray(inv[..., r, j]) for j in range(3)))
    return tuple(rows), tuple(inv_rows)


@dataclass(frozen=True, eq=False)
class Star3:
    """Material maps between collocated primal/dual kinds.

    ``a`` (node scalars -> dual cell densities) and ``b`` (dual node
    scalars -> cell densities) multiply pointwise and invert exactly.
    ``A`` (edge -> dual face) and ``B`` (dual edge -> face) are symmetric
    matrices; in ``"scalar"`` and ``"diagonal"`` modes they act and invert
    componentwise, while in ``"full"`` mode the off-diagonal entries act
    through 4-point averages and the pointwise inverse is only a
    second-order approximation of the true inverse, so full mode cannot
    back a conserved-quantity guarantee (see :func:`require_exact_star`).

    Build instances with :meth:`trivial`, :meth:`from_scalars`,
    :meth:`from_diagonals` or :meth:`from_matrices`.
    """

    grid: Grid3
    mode: str
    a: np.ndarray
    b: np.ndarray
    # rows[r][c]: entry (r,c) sampled at the points of output component r;
    # None for off-diagonal entries in scalar/diagonal modes
    a_rows: tuple
    a_inv_rows: tuple
    b_rows: tuple
    b_inv_rows: tuple

    def __post_init__(self):
        if self.mode not in STAR_MODES:
            raise ValueError(f"unknown star mode {self.mode!r}")
        if np.any(self.a <= 0) or np.any(self.b <= 0):
            raise ValueError("scalar star coefficients must be positive")

    @property
    def exactly_invertible(self) -> bool:
        return self.mode != "full"

    # -- constructors ---------------------------------------------------

    @classmethod
    def trivial(cls, grid: Grid3) -> "Star3":
        """Unit materials: a = b = 1, A = B = identity."""
        return cls.from_scalars(grid, 1.0, 1.0, 1.0, 1.0)

    @classmethod
    def from_scalars(cls, grid: Grid3, a, b, coef_a, coef_b) -> "Star3":
        """A = coef_a * identity, B = coef_b * identity."""
        return cls._build(grid, "scalar", a, b, (coef_a,) * 3, (coef_b,) * 3)

    @classmethod
    def from_diagonals(cls, grid: Grid3, a, b, diag_a, diag_b) -> "Star3":
        """Diagonal A and B; ``diag_*`` are 3-tuples of constants/functions."""
        return cls._build(grid, "diagonal", a, b, tuple(diag_a), tuple(diag_b))

    @classmethod
    def _build(cls, grid, mode, a, b, diag_a, diag_b):
        a_s = sample_scalar(grid, "node", a)
        b_s = _sample_at_pattern(grid, "hhh", b)
        edge_p = _VECTOR_PATTERN["edge"]
        face_p = _VECTOR_PATTERN["face"]
        a_rows, a_inv = [], []
        b_rows, b_inv = [], []
        for r in range(3):
            da = _sample_at_pattern(grid, edge_p[r], diag_a[r])
            db = _sample_at_pattern(grid, face_p[r], diag_b[r])
            if np.any(da <= 0) or np.any(db <= 0):
                raise ValueError("diagonal star entries must be positive")
            a_rows.append(tuple(da if c == r else None for c in range(3)))
            a_inv.append(tuple(1.0 / da if c == r else None for c in range(3)))
            b_rows.append(tuple(db if c == r else None for c in range(3)))
            b_inv.append(tuple(1.0 / db if c == r else None for c in range(3)))
        return cls(
            grid, mode, a_s, b_s, tuple(a_rows), tuple(a_inv), tuple(b_rows), tuple(b_inv)
        )

    @classmethod
    def from_matrices(cls, grid: Grid3, a, b, mat_a: dict, mat_b: dict) -> "Star3":
        """Full symmetric A and B given as dicts with keys xx, yy, zz, xy,
        xz, yz (constants or functions of x, y, z)."""
        a_s = sample_scalar(grid, "node", a)
        b_s = _sample_at_pattern(grid, "hhh", b)
        a_rows, a_inv = _full_rows(grid, _VECTOR_PATTERN["edge"], mat_a)
        b_rows, b_inv = _full_rows(grid, _VECTOR_PATTERN["face"], mat_b)
        return cls(grid, "full", a_s, b_s, a_rows, a_inv, b_rows, b_inv)


def require_exact_star(star: Star3):
    """Reject star configurations whose inverses are not exact.

    Full-matrix mode averages the off-diagonal terms, so the pointwise
    inverse is not the exact operator inverse; runs that promise conserved
    quantities must refuse it.
    """
    if not star.exactly_invertible:
        raise ValueError(
            "full-matrix star mode cannot guarantee conserved quantities; "
            "use scalar or diagonal mode"
        )


_SCALAR_DIRECTIONS = ("node-to-dual-cell", "dual-node-to-cell")


def star_scalar(field, star: Star3, direction: str) -> np.ndarray:
    """Multiply a scalar kind onto its collocated partner.

    ``"node-to-dual-cell"``: node scalar -> dual cell density (weight ``a``);
    ``"dual-node-to-cell"``: dual node scalar -> cell density (weight ``b``).
    """
    grid = star.grid
    if direction == "node-to-dual-cell":
        f = _check_scalar(field, grid, "node", "star_scalar")
        return star.a * f
    if direction == "dual-node-to-cell":
        f = _check_scalar(field, grid, "dual-node", "star_scalar")
        return star.b * f
    raise ValueError(f"direction must be one of {_SCALAR_DIRECTIONS}")


def star_scalar_inverse(field, star: Star3, direction: str) -> np.ndarray:
    """Inverse of :func:`star_scalar` for the same ``direction`` label."""
    grid = star.grid
    if direction == "node-to-dual-cell":
        f = _check_scalar(field, grid, "dual-cell", "star_scalar_inverse")
        return f / star.a
    if direction == "dual-node-to-cell":
        f = _check_scalar(field, grid, "cell", "star_scalar_inverse")
        return f / star.b
    raise ValueError(f"direction must be one of {_SCALAR_DIRECTIONS}")


def _avg_pair(v, axis):
    lo = [slice(None)] * 3
    hi = [slice(None)] * 3
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    return 0.5 * (v[tuple(lo)] + v[tuple(hi)])


def _avg4(v, node_axis, half_axis, grid: Grid3, out_shape):
    """4-point average moving half->node along one axis and node->half
    along another (zero-filled at the box ends of the node axis)."""
    if grid.boundary == "periodic":
        w = np.roll(v, 1, node_axis)
        return 0.25 * (
            v + w + np.roll(v, -1, half_axis) + np.roll(w, -1, half_axis)
        )
    w = _avg_pair(_avg_pair(v, node_axis), half_axis)
    out = np.zeros(out_shape)
    sl = [slice(None)] * 3
    sl[node_axis] = slice(1, -1)
    out[tuple(sl)] = w
    return out


def _apply_rows(vec: VectorField3, rows, grid: Grid3, geometry: str, out_kind: str):
    """Apply a 3x3 star (rows sampled at output points) to a vector field."""
    out_shapes = (
        grid.vector_shapes(out_kind)
        if grid.boundary == "pinned"
        else ((grid.counts),) * 3
    )
    comps = []
    for r in range(3):
        acc = rows[r][r] * vec.components[r]
        for c in range(3):
            if c == r or rows[r][c] is None:
                continue
            # geometry "a": input half-offset along c; "b": along r
            node_axis, half_axis = (c, r) if geometry == "a" else (r, c)
            avg = _avg4(vec.components[c], node_axis, half_axis, grid, out_shapes[r])
            acc = acc + rows[r][c] * avg
        comps.append(acc)
    return VectorField3(*comps)


def star_matrix(
    vec: VectorField3, star: Star3, which: str = "a", inverse: bool = False
) -> VectorField3:
    """Apply the matrix star A (edges <-> dual faces) or B (dual edges <->
    faces), or its pointwise inverse.

    ``which="a"``: forward maps edge -> dual face, inverse maps dual face ->
    edge.  ``which="b"``: forward maps dual edge -> face, inverse maps
    face -> dual edge.  Diagonal entries multiply collocated components;
    off-diagonal entries (full mode) multiply 4-point averages.
    """
    grid = star.grid
    if which == "a":
        in_kind = "dual-face" if inverse else "edge"
        out_kind = "edge" if inverse else "dual-face"
        rows = star.a_inv_rows if inverse else star.a_rows
        geometry = "a"
    elif which == "b":
        in_kind = "face" if inverse else "dual-edge"
        out_kind = "dual-edge" if inverse else "face"
        rows = star.b_inv_rows if inverse else star.b_rows
        geometry = "b"
    else:
        raise ValueError("which must be 'a' or 'b'")
    vec = _check_vector(vec, grid, in_kind, "star_matrix")
    return _apply_rows(vec, rows, grid, geometry, out_kind)


# ---------------------------------------------------------------------------
# inner products
# ---------------------------------------------------------------------------

ALL_KINDS = SCALAR_KINDS + VECTOR_KINDS


def inner3(kind: str, f1, f2, star: Star3, grid: Grid3) -> float:
    """One of the eight weighted inner products.

    Scalar kinds sum ``w * f1 * f2 * dV`` with weight ``a`` (node), ``1/b``
    (cell), ``b`` (dual-node) or ``1/a`` (dual-cell).  Vector kinds sum the
    weighted componentwise product with weight ``A`` (edge), ``B^-1``
    (face), ``B`` (dual-edge) or ``A^-1`` (dual-face).  Components are
    reduced in fixed x, y, z order so results are bit-reproducible.
    """
    if star.grid != grid:
        raise ValueError("star was built for a different grid")
    dv = grid.cell_volume
    if kind == "node":
        f1 = _check_scalar(f1, grid, kind, "inner3")
        f2 = _check_scalar(f2, grid, kind, "inner3")
        return float(np.sum(star.a * f1 * f2)) * dv
    if kind == "cell":
        f1 = _check_scalar(f1, grid, kind, "inner3")
        f2 = _check_scalar(f2, grid, kind, "inner3")
        return float(np.sum(f1 * f2 / star.b)) * dv
    if kind == "dual-node":
        f1 = _check_scalar(f1, grid, kind, "inner3")
        f2 = _check_scalar(f2, grid, kind, "inner3")
        return float(np.sum(star.b * f1 * f2)) * dv
    if kind == "dual-cell":
        f1 = _check_scalar(f1, grid, kind, "inner3")
        f2 = _check_scalar(f2, grid, kind, "inner3")
        return float(np.sum(f1 * f2 / star.a)) * dv
    if kind not in VECTOR_KINDS:
        raise ValueError(f"unknown field kind {kind!r}")
    f1 = _check_vector(f1, grid, kind, "inner3")
    f2 = _check_vector(f2, grid, kind, "inner3")
    which, inverse = {
        "edge": ("a", False),
        "face": ("b", True),
        "dual-edge": ("b", False),
        "dual-face": ("a", True),
    }[kind]
    w1 = star_matrix(f1, star, which=which, inverse=inverse)
    total = 0.0
    for r in range(3):
        total += float(np.sum(w1.components[r] * f2.components[r]))
    return total * dv


# ---------------------------------------------------------------------------
# verification: adjointness and negativity
# ---------------------------------------------------------------------------


def _random_scalar_field(grid: Grid3, kind: str, rng, margin: int = 2) -> np.ndarray:
    arr = rng.standard_normal(grid.scalar_shape(kind))
    if grid.boundary == "pinned":
        _zero_margin(arr, margin)
    return arr


def _random_vector_field(grid: Grid3, kind: str, rng, margin: int = 2) -> VectorField3:
    comps = []
    for s in grid.vector_shapes(kind):
        arr = rng.standard_normal(s)
        if grid.boundary == "pinned":
            _zero_margin(arr, margin)
        comps.append(arr)
    return VectorField3(*comps)


def _zero_margin(arr, m):
    for ax in range(3):
        sl = [slice(None)] * 3
        sl[ax] = slice(None, m)
        arr[tuple(sl)] = 0.0
        sl[ax] = slice(-m, None)
        arr[tuple(sl)] = 0.0


def check_discrete_adjoints(
    star: Star3,
    grid: Grid3,
    trials: int = 20,
    seed: int = 0,
    broken_sign: bool = False,
) -> dict:
    """Measure the discrete adjoint identities with random fields.

    Checks, as normalized residuals maximized over ``trials`` draws:

    * gradient:   <G s, t>_edge      = <s, -a^-1 D*(A t)>_node
    * curl:       <R t, n>_face      = <t, A^-1 R*(B^-1 n)>_edge
    * divergence: <D n, d>_cell      = <n, -B G*(b^-1 d)>_face
    * composite:  <A G s, m>_dual-face = -<s, a^-1 D* m>_node

    On pinned grids the random fields vanish in a 2-entry boundary layer so
    no boundary terms appear.  ``broken_sign`` flips the gradient identity's
    sign to demonstrate that the detector reports O(1) for a wrong adjoint.
    Returns a dict of residuals plus their ``"max"``.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    floor = 1e-300
    res = {"grad": 0.0, "curl": 0.0, "div": 0.0, "composite": 0.0}
    sign = 1.0 if broken_sign else -1.0
    for _ in range(trials):
        s = _random_scalar_field(grid, "node", rng)
        t = _random_vector_field(grid, "edge", rng)
        n = _random_vector_field(grid, "face", rng)
        d = _random_scalar_field(grid, "cell", rng)
        m = _random_vector_field(grid, "dual-face", rng)

        ns = np.sqrt(inner3("node", s, s, star, grid))
        nt = np.sqrt(inner3("edge", t, t, star, grid))
        nn = np.sqrt(inner3("face", n, n, star, grid))
        nd = np.sqrt(inner3("cell", d, d, star, grid))
        nm = np.sqrt(inner3("dual-face", m, m, star, grid))

        lhs = inner3("edge", grad3(s, grid), t, star, grid)
        adj = star_scalar_inverse(
            div3_star(star_matrix(t, star, which="a"), grid), star, "node-to-dual-cell"
        )
        rhs = sign * inner3("node", s, adj, star, grid)
        res["grad"] = max(res["grad"], abs(lhs - rhs) / (ns * nt + floor))

        lhs = inner3("face", curl3(t, grid), n, star, grid)
        adj = star_matrix(
            curl3_star(star_matrix(n, star, which="b", inverse=True), grid),
            star,
            which="a",
            inverse=True,
        )
        rhs = inner3("edge", t, adj, star, grid)
        res["curl"] = max(res["curl"], abs(lhs - rhs) / (nt * nn + floor))

        lhs = inner3("cell", div3(n, grid), d, star, grid)
        adj = star_matrix(
            grad3_star(star_scalar_inverse(d, star, "dual-node-to-cell"), grid),
            star,
            which="b",
        )
        rhs = -inner3("face", n, adj, star, grid)
        res["div"] = max(res["div"], abs(lhs - rhs) / (nn * nd + floor))

        lhs = inner3("dual-face", star_matrix(grad3(s, grid), star, which="a"), m, star, grid)
        adj = star_scalar_inverse(div3_star(m, grid), star, "node-to-dual-cell")
        rhs = -inner3("node", s, adj, star, grid)
        res["composite"] = max(res["composite"], abs(lhs - rhs) / (ns * nm + floor))
    res["max"] = max(res.values())
    return res


def negativity_check(
    star: Star3, grid: Grid3, trials: int = 100, seed: int = 0
) -> bool:
    """True if <a^-1 D* A G f, f>_node <= +1e-12 * <f, f>_node for random f.

    The operator is a weighted discrete Laplacian; its node inner product
    against f equals -<A G f, G f> and must never be meaningfully positive.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        f = _random_scalar_field(grid, "node", rng)
        lap = star_scalar_inverse(
            div3_star(star_matrix(grad3(f, grid), star, which="a"), grid),
            star,
            "node-to-dual-cell",
        )
        val = inner3("node", lap, f, star, grid)
        scale = inner3("node", f, f, star, grid)
        if val > 1e-12 * scale:
            return False
    return True


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------

_SNAP_MAGIC = b"SWF3"
_SNAP_VERSION = 1


def dump_field_snapshot(path, field, kind: str, grid: Grid3):
    """Write a field as little-endian float64 with a small binary header
    (kind, per-component shapes, spacings)."""
    if kind in SCALAR_KINDS:
        comps = [_check_scalar(field, grid, kind, "dump_field_snapshot")]
    elif kind in VECTOR_KINDS:
        comps = list(_check_vector(field, grid, kind, "dump_field_snapshot").components)
    else:
        raise ValueError(f"unknown field kind {kind!r}")
    kb = kind.encode()
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sH", _SNAP_MAGIC, _SNAP_VERSION))
        fh.write(struct.pack("<H", len(kb)) + kb)
        fh.write(struct.pack("<B", len(comps)))
        fh.write(struct.pack("<3d", *grid.spacings))
        for c in comps:
            fh.write(struct.pack("<3I", *c.shape))
        for c in comps:
            fh.write(np.ascontiguousarray(c, dtype="<f8").tobytes())


def load_field_snapshot(path):
    """Read a snapshot; returns (field, kind, spacings)."""
    with open(path, "rb") as fh:
        magic, version = struct.unpack("<4sH", fh.read(6))
        if magic != _SNAP_MAGIC:
            raise ValueError("not a field snapshot file")
        if version != _SNAP_VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        (klen,) = struct.unpack("<H", fh.read(2))
        kind = fh.read(klen).decode()
        (ncomp,) = struct.unpack("<B", fh.read(1))
        spacings = struct.unpack("<3d", fh.read(24))
        shapes = [struct.unpack("<3I", fh.read(12)) for _ in range(ncomp)]
        comps = []
        for s in shapes:
            count = int(np.prod(s))
            data = np.frombuffer(fh.read(8 * count), dtype="<f8")
            comps.append(data.reshape(s).astype(float))
    if ncomp == 1:
        return comps[0], kind, spacings
    return VectorField3(*comps), kind, spacings
