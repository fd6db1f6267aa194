"""2D wave equation on the staggered unit square with a pinned boundary ring.

This is the direct two-dimensional restriction of the 3D machinery: the
scalar ``u`` lives on the primal nodes at whole time steps, the flux pair
``v = (vx, vy)`` lives on the dual normal points at half time steps, and
one leapfrog step updates ``u`` first and then ``v`` from the fresh ``u``.
The boundary ring of ``u`` is never touched (homogeneous Dirichlet).

Twelve staggered field kinds appear, named by a letter for the quantity
(``f``/``g`` scalars, ``t``/``n`` tangent/normal vector components) and a
suffix for the grid (``p`` primal, ``d`` dual).  Their array shapes on an
``nx`` x ``ny`` cell grid:

=====  ==============  ======================================
kind   shape           sample locations (x-axis, y-axis)
=====  ==============  ======================================
fp     (nx+1, ny+1)    nodes, nodes
gp     (nx,   ny)      centers, centers
txp    (nx,   ny+1)    centers, nodes
typ    (nx+1, ny)      nodes, centers
nxp    (nx+1, ny)      nodes, centers
nyp    (nx,   ny+1)    centers, nodes
fd     (nx,   ny)      centers, centers
gd     (nx-1, ny-1)    inner nodes, inner nodes
txd    (nx-1, ny)      inner nodes, centers
tyd    (nx,   ny-1)    centers, inner nodes
nxd    (nx,   ny-1)    centers, inner nodes
nyd    (nx-1, ny)      inner nodes, centers
=====  ==============  ======================================

Formulas quoted in docstrings use the 1-based ``(i, j)`` convention of the
staggered-mesh literature; arrays here are 0-based, so a displayed
``f(i+1, j+1)`` reads ``f[i, j]`` in code.

A numerical curiosity worth knowing: for the ``m = n = 1`` standing mode
with unit materials on a square grid, the time step ``dt = dx/sqrt(2)``
(Courant number exactly 1) makes the discrete and continuum dispersion
coincide, and the march reproduces the mode to rounding.  The tests keep
that case out of the convergence sweeps.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

# ---------------------------------------------------------------------------
# grid, star coefficients, state
# ---------------------------------------------------------------------------

# axis sample tags per field kind: "n" nodes, "c" centers, "i" inner nodes
_AXIS_TAGS = {
    "fp": ("n", "n"), "gp": ("c", "c"), "fd": ("c", "c"), "gd": ("i", "i"),
    "txp": ("c", "n"), "typ": ("n", "c"),
    "nxp": ("n", "c"), "nyp": ("c", "n"),
    "txd": ("i", "c"), "tyd": ("c", "i"),
    "nxd": ("c", "i"), "nyd": ("i", "c"),
}


@dataclass(frozen=True)
class Grid2:
    """Uniform staggered grid on the unit square.

    Parameters
    ----------
    nx, ny : int
        Number of cells per axis (>= 2 each); ``dx = 1/nx``, ``dy = 1/ny``.
        Primal nodes sit at ``(i - 1) dx`` for 1-based ``i <= nx + 1``, dual
        nodes at ``(i - 1/2) dx``.
    """

    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError("need at least 2 cells per axis")

    @property
    def dx(self) -> float:
        return 1.0 / self.nx

    @property
    def dy(self) -> float:
        return 1.0 / self.ny

    def _axis(self, axis: int, tag: str) -> np.ndarray:
        n = self.nx if axis == 0 else self.ny
        h = 1.0 / n
        if tag == "n":
            return np.arange(n + 1) * h
        if tag == "c":
            return (np.arange(n) + 0.5) * h
        return np.arange(1, n) * h  # "i"

    def shape(self, kind: str) -> tuple:
        """Array shape of a field kind (see the module table)."""
        try:
            tx, ty = _AXIS_TAGS[kind]
        except KeyError:
            raise ValueError(f"unknown field kind {kind!r}") from None
        return (self._axis(0, tx).size, self._axis(1, ty).size)

    def points(self, kind: str) -> tuple:
        """Meshgrid (X, Y) of a kind's sample locations, 'ij' indexed."""
        try:
            tx, ty = _AXIS_TAGS[kind]
        except KeyError:
            raise ValueError(f"unknown field kind {kind!r}") from None
        return np.meshgrid(self._axis(0, tx), self._axis(1, ty), indexing="ij")


@dataclass(frozen=True)
class Star2:
    """Constant material coefficients: scalar weight ``a`` plus the
    diagonal ``(a11, a22)`` acting on vector components.  All positive."""

    a: float = 1.0
    a11: float = 1.0
    a22: float = 1.0

    def __post_init__(self):
        if self.a <= 0 or self.a11 <= 0 or self.a22 <= 0:
            raise ValueError("star coefficients must be positive")

    @property
    def diag(self) -> tuple:
        return (self.a11, self.a22)


@dataclass(frozen=True)
class WaveState2D:
    """u at step n, v = (vx, vy) at step n+1/2, plus one step of history."""

    u: np.ndarray
    v: tuple
    u_prev: np.ndarray | None = None
    v_prev: tuple | None = None
    step: int = 0


def _expect(arr, kind: str, grid: Grid2) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    want = grid.shape(kind)
    if arr.shape != want:
        raise ValueError(f"{kind} field needs shape {want}, got {arr.shape}")
    return arr


# ---------------------------------------------------------------------------
# staggered difference operators
# ---------------------------------------------------------------------------


def grad2p(fp, grid: Grid2) -> tuple:
    """Primal gradient, nodes -> tangent pair (txp, typ)."""
    fp = _expect(fp, "fp", grid)
    return np.diff(fp, axis=0) / grid.dx, np.diff(fp, axis=1) / grid.dy


def div2d(nd, grid: Grid2) -> np.ndarray:
    """Dual divergence, normal pair (nxd, nyd) -> inner-node scalar gd."""
    nxd = _expect(nd[0], "nxd", grid)
    nyd = _expect(nd[1], "nyd", grid)
    return np.diff(nxd, axis=0) / grid.dx + np.diff(nyd, axis=1) / grid.dy


def grad2d(fd, grid: Grid2) -> tuple:
    """Dual gradient, centers -> tangent pair (txd, tyd)."""
    fd = _expect(fd, "fd", grid)
    return np.diff(fd, axis=0) / grid.dx, np.diff(fd, axis=1) / grid.dy


def div2p(np_pair, grid: Grid2) -> np.ndarray:
    """Primal divergence, normal pair (nxp, nyp) -> cell scalar gp."""
    nxp = _expect(np_pair[0], "nxp", grid)
    nyp = _expect(np_pair[1], "nyp", grid)
    return np.diff(nxp, axis=0) / grid.dx + np.diff(nyp, axis=1) / grid.dy


# ---------------------------------------------------------------------------
# star maps (constant coefficients only)
# ---------------------------------------------------------------------------

_SCALAR_DIRECTIONS = frozenset(
    {"node-to-dual-cell", "dual-cell-to-node",
     "dual-node-to-cell", "cell-to-dual-node"})
_VECTOR_DIRECTIONS = frozenset(
    {"tangent-to-dual-normal", "dual-normal-to-tangent",
     "normal-to-dual-tangent", "dual-tangent-to-normal"})


def _pair(coef) -> tuple:
    if np.isscalar(coef):
        a11 = a22 = float(coef)
    else:
        a11, a22 = float(coef[0]), float(coef[1])
    if a11 <= 0 or a22 <= 0:
        raise ValueError("star coefficients must be positive")
    return a11, a22


def star2(field, coef, direction: str):
    """Move a field to the opposite grid, weighting by the coefficients.

    ``coef`` is a positive constant ``a`` for the scalar directions and a
    positive pair ``(a11, a22)`` for the vector directions.  The forward
    maps multiply, e.g. ``gd(i, j) = a f(i+1, j+1)`` and
    ``nxd(i, j) = a11 txp(i, j+1)``; the ``*-to-node`` / ``*-to-tangent``
    inverses divide with the reverse index shifts and fill the rows or
    columns they cannot reach with zeros.
    """
    if direction in _SCALAR_DIRECTIONS:
        a = float(coef)
        if a <= 0:
            raise ValueError("star coefficients must be positive")
        f = np.asarray(field, dtype=float)
        if direction == "node-to-dual-cell":
            return a * f[1:-1, 1:-1]
        if direction == "dual-cell-to-node":
            out = np.zeros((f.shape[0] + 2, f.shape[1] + 2))
            out[1:-1, 1:-1] = f / a
            return out
        if direction == "dual-node-to-cell":
            return a * f
        return f / a  # cell-to-dual-node

    if direction in _VECTOR_DIRECTIONS:
        a11, a22 = _pair(coef)
        fx = np.asarray(field[0], dtype=float)
        fy = np.asarray(field[1], dtype=float)
        if direction == "tangent-to-dual-normal":
            return a11 * fx[:, 1:-1], a22 * fy[1:-1, :]
        if direction == "dual-normal-to-tangent":
            tx = np.zeros((fx.shape[0], fx.shape[1] + 2))
            tx[:, 1:-1] = fx / a11
            ty = np.zeros((fy.shape[0] + 2, fy.shape[1]))
            ty[1:-1, :] = fy / a22
            return tx, ty
        if direction == "normal-to-dual-tangent":
            return fx[1:-1, :] / a11, fy[:, 1:-1] / a22
        nxp = np.zeros((fx.shape[0] + 2, fx.shape[1]))  # dual-tangent-to-normal
        nxp[1:-1, :] = a11 * fx
        nyp = np.zeros((fy.shape[0], fy.shape[1] + 2))
        nyp[:, 1:-1] = a22 * fy
        return nxp, nyp

    raise ValueError(f"unknown star direction {direction!r}")


# ---------------------------------------------------------------------------
# leapfrog march
# ---------------------------------------------------------------------------


def wave2d_step(state: WaveState2D, star: Star2, grid: Grid2, dt: float) -> WaveState2D:
    """One leapfrog step: u first, then v from the fresh u (order matters).

    The boundary ring of ``u`` never changes; starting from data that is
    zero there keeps the march inside the pinned subspace.
    """
    u_new = state.u + dt * star2(div2d(state.v, grid), star.a, "dual-cell-to-node")
    agx, agy = star2(grad2p(u_new, grid), star.diag, "tangent-to-dual-normal")
    v_new = (state.v[0] + dt * agx, state.v[1] + dt * agy)
    return WaveState2D(u=u_new, v=v_new, u_prev=state.u, v_prev=state.v,
                       step=state.step + 1)


def init_v_half_2d(u0, v0, star: Star2, grid: Grid2, dt: float, *,
                   variant: str = "oscillator-taylor") -> tuple:
    """Half-step start for v from whole-step data (u(0), v(0)).

    Taylor expansion v(dt/2) ~ v0 + (dt/2) A G u0 + coeff A G (a^-1 D* v0)
    with coeff = (1/2)(dt/2)^2 for "oscillator-taylor" (the default) and
    (1/2) dt^2 for "system-taylor".
    """
    u0 = _expect(u0, "fp", grid)
    vx0 = _expect(v0[0], "nxd", grid)
    vy0 = _expect(v0[1], "nyd", grid)
    if variant == "oscillator-taylor":
        coeff = 0.5 * (0.5 * dt) ** 2
    elif variant == "system-taylor":
        coeff = 0.5 * dt ** 2
    else:
        raise ValueError(f"unknown init variant {variant!r}")
    agx, agy = star2(grad2p(u0, grid), star.diag, "tangent-to-dual-normal")
    du = star2(div2d((vx0, vy0), grid), star.a, "dual-cell-to-node")
    a2x, a2y = star2(grad2p(du, grid), star.diag, "tangent-to-dual-normal")
    return (vx0 + (0.5 * dt) * agx + coeff * a2x,
            vy0 + (0.5 * dt) * agy + coeff * a2y)


# ---------------------------------------------------------------------------
# conserved quantities
# ---------------------------------------------------------------------------


def _require_history(*fields):
    if any(f is None for f in fields):
        raise ValueError("conserved quantities need one completed step of history")


def conserved_n_2d(state: WaveState2D, star: Star2, grid: Grid2, dt: float) -> float:
    """Whole-step invariant: the node norm of u plus the dual-normal norm
    of the time-averaged v, minus the (dt/2)^2 stiffness correction."""
    _require_history(state.v_prev)
    dv = grid.dx * grid.dy
    vbx = 0.5 * (state.v[0] + state.v_prev[0])
    vby = 0.5 * (state.v[1] + state.v_prev[1])
    agx, agy = star2(grad2p(state.u, grid), star.diag, "tangent-to-dual-normal")
    term_u = star.a * float(np.sum(state.u ** 2)) * dv
    term_v = (float(np.sum(vbx ** 2)) / star.a11
              + float(np.sum(vby ** 2)) / star.a22) * dv
    corr = (float(np.sum(agx ** 2)) / star.a11
            + float(np.sum(agy ** 2)) / star.a22) * dv
    return term_u + term_v - (0.5 * dt) ** 2 * corr


def conserved_half_2d(state: WaveState2D, star: Star2, grid: Grid2, dt: float) -> float:
    """Half-step invariant: the dual-normal norm of v at n-1/2 plus the
    node norm of the time-averaged u, minus the (dt/2)^2 correction."""
    _require_history(state.u_prev, state.v_prev)
    dv = grid.dx * grid.dy
    ubar = 0.5 * (state.u + state.u_prev)
    du = star2(div2d(state.v_prev, grid), star.a, "dual-cell-to-node")
    term_v = (float(np.sum(state.v_prev[0] ** 2)) / star.a11
              + float(np.sum(state.v_prev[1] ** 2)) / star.a22) * dv
    term_u = star.a * float(np.sum(ubar ** 2)) * dv
    corr = star.a * float(np.sum(du ** 2)) * dv
    return term_v + term_u - (0.5 * dt) ** 2 * corr


# ---------------------------------------------------------------------------
# time step bound and simulation driver
# ---------------------------------------------------------------------------


def suggest_dt_2d(star: Star2, grid: Grid2, safety: float = 1.0) -> float:
    """Largest stable dt (times ``safety``) from the constant-coefficient
    wave speed sqrt(max(a11, a22)/a) and the 2D stencil norm."""
    if safety <= 0:
        raise ValueError("safety factor must be positive")
    s_max = math.sqrt(max(star.a11, star.a22) / star.a)
    stencil = 2.0 * math.sqrt(1.0 / grid.dx ** 2 + 1.0 / grid.dy ** 2)
    return safety * 2.0 / (s_max * stencil)


def _check_courant(dt: float, dt_max: float):
    if dt > dt_max:
        warnings.warn(
            f"dt = {dt:.4g} exceeds the stability bound {dt_max:.4g}; "
            "the march is unstable",
            RuntimeWarning,
            stacklevel=3,
        )


def run_wave2d(grid: Grid2, star: Star2, u0, v_half, dt: float, n_steps: int, *,
               record_every: int = 1):
    """March n_steps; returns (final state, [(step, C_n, C_half), ...])."""
    _check_courant(dt, suggest_dt_2d(star, grid))
    state = WaveState2D(u=_expect(u0, "fp", grid),
                        v=(_expect(v_half[0], "nxd", grid),
                           _expect(v_half[1], "nyd", grid)))
    records = []
    for _ in range(n_steps):
        state = wave2d_step(state, star, grid, dt)
        if record_every and state.step % record_every == 0:
            records.append((state.step,
                            conserved_n_2d(state, star, grid, dt),
                            conserved_half_2d(state, star, grid, dt)))
    return state, records


# ---------------------------------------------------------------------------
# standing mode and convergence sweep
# ---------------------------------------------------------------------------


def exact_solution_2d(m: int, n: int, c: float, x, y, t: float) -> tuple:
    """Standing mode of the first-order system u_t = c div v, v_t = c grad u
    on the unit square with pinned u: returns (u, vx, vy) sampled at (x, y).

    u  = cos(c s pi t) sin(m pi x) sin(n pi y),        s = sqrt(m^2 + n^2)
    v  = (1/s) sin(c s pi t) (m cos(m pi x) sin(n pi y),
                              n sin(m pi x) cos(n pi y))
    """
    if m < 1 or n < 1:
        raise ValueError("mode numbers must be at least 1")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = math.sqrt(m * m + n * n)
    u = math.cos(c * s * math.pi * t) * np.sin(m * math.pi * x) * np.sin(n * math.pi * y)
    amp = math.sin(c * s * math.pi * t) / s
    vx = amp * m * np.cos(m * math.pi * x) * np.sin(n * math.pi * y)
    vy = amp * n * np.sin(m * math.pi * x) * np.cos(n * math.pi * y)
    return u, vx, vy


def mode_errors_2d(sizes=(16, 32, 64), *, t_final: float = 0.35,
                   safety: float = 0.9):
    """Max-abs u error of the m = n = 1, c = 1 mode march per grid size.

    The step count comes from the stability bound (nt = ceil(T / dt_max),
    dt = T / nt) and v starts from the Taylor half step of v(0) = 0.
    Returns [(dx, err), ...] for order fitting.
    """
    star = Star2()
    out = []
    for size in sizes:
        grid = Grid2(size, size)
        nt = math.ceil(t_final / suggest_dt_2d(star, grid, safety))
        dt = t_final / nt
        x, y = grid.points("fp")
        u0, _, _ = exact_solution_2d(1, 1, 1.0, x, y, 0.0)
        zero_v = (np.zeros(grid.shape("nxd")), np.zeros(grid.shape("nyd")))
        state = WaveState2D(u=u0, v=init_v_half_2d(u0, zero_v, star, grid, dt))
        for _ in range(nt):
            state = wave2d_step(state, star, grid, dt)
        want, _, _ = exact_solution_2d(1, 1, 1.0, x, y, t_final)
        out.append((grid.dx, float(np.max(np.abs(state.u - want)))))
    return out
