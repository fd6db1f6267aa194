"""Leapfrog marches for the 3D scalar wave and for Maxwell on the staggered box.

The scalar wave keeps the potential s on nodes at whole steps and its flux v
on dual faces at half steps; Maxwell keeps E on edges at whole steps and H on
dual edges at half steps — the classic staggered layout in which the x
component of E lives at (i+1/2, j, k) and the x component of H at
(i, j+1/2, k+1/2).  Both marches are the generic two-field leapfrog of
`core` specialized with the mimetic operators and material stars of
`mimetic3d`, so each carries a pair of exactly conserved quadratic forms,
evaluated here with the material-weighted inner products.

On pinned grids the zero boundary rows of the dual operators double as the
physical boundary conditions: s is held at zero on the box walls and the
tangential part of E is held at zero (a perfect electric conductor).  Initial
data must respect those wall values for the conserved forms to close; see
`pin_scalar_boundary` and `pin_tangential_boundary`.

States carry their own dt (the 3D grid is purely spatial).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import OperatorPair, init_g_half
from .mimetic3d import (
    Grid3,
    Star3,
    VectorField3,
    curl3,
    curl3_star,
    div3,
    div3_star,
    grad3,
    inner3,
    require_exact_star,
    star_matrix,
    star_scalar_inverse,
    zeros_field,
)


# ---------------------------------------------------------------------------
# states and operator pairs
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScalarWaveState3:
    """s on nodes at t = step*dt; v on dual faces half a step later."""

    s: np.ndarray
    v: VectorField3
    dt: float
    s_prev: np.ndarray | None = None
    v_prev: VectorField3 | None = None
    step: int = 0


@dataclass(frozen=True, eq=False)
class MaxwellState3:
    """E on edges at t = step*dt; H on dual edges half a step later."""

    e: VectorField3
    h: VectorField3
    dt: float
    e_prev: VectorField3 | None = None
    h_prev: VectorField3 | None = None
    step: int = 0


def scalar_wave_operators(star: Star3, grid: Grid3) -> OperatorPair:
    """The pair behind ds/dt = a^-1 D* v, dv/dt = A G s.

    In the core's sign convention (df/dt = -A* g, dg/dt = A f) that makes
    A = (A G .) on node scalars and A* = -(a^-1 D* .) on dual-face fields.
    """

    def apply_a(s):
        return star_matrix(grad3(s, grid), star, "a")

    def apply_astar(v):
        return -1.0 * star_scalar_inverse(div3_star(v, grid), star, "node-to-dual-cell")

    return OperatorPair(apply_A=apply_a, apply_Astar=apply_astar)


def maxwell_operators(eps_star: Star3, mu_star: Star3, grid: Grid3) -> OperatorPair:
    """The pair behind dE/dt = eps^-1 R* H, dH/dt = -mu^-1 R E.

    eps acts in the A role of its star (edge -> dual face) and mu in the B
    role (dual edge -> face); only those halves of the two stars are used.
    """

    def apply_a(e):
        return -1.0 * star_matrix(curl3(e, grid), mu_star, "b", inverse=True)

    def apply_astar(h):
        return -1.0 * star_matrix(curl3_star(h, grid), eps_star, "a", inverse=True)

    return OperatorPair(apply_A=apply_a, apply_Astar=apply_astar)


# ---------------------------------------------------------------------------
# time steps
# ---------------------------------------------------------------------------


def scalar_wave_step(
    state: ScalarWaveState3, star: Star3, grid: Grid3, *, guaranteed: bool = True
) -> ScalarWaveState3:
    """One leapfrog step; s is updated first, v uses the fresh s.

    With guaranteed=True (the default) a full-matrix star is rejected, since
    its inexact inverse breaks the conserved quantities; pass
    guaranteed=False to march with one anyway.
    """
    if guaranteed:
        require_exact_star(star)
    dt = state.dt
    s_new = state.s + dt * star_scalar_inverse(
        div3_star(state.v, grid), star, "node-to-dual-cell"
    )
    v_new = state.v + dt * star_matrix(grad3(s_new, grid), star, "a")
    return ScalarWaveState3(
        s=s_new, v=v_new, dt=dt, s_prev=state.s, v_prev=state.v, step=state.step + 1
    )


def maxwell_step(
    state: MaxwellState3,
    eps_star: Star3,
    mu_star: Star3,
    grid: Grid3,
    *,
    guaranteed: bool = True,
) -> MaxwellState3:
    """One leapfrog step; E is updated first, H uses the fresh E."""
    if guaranteed:
        require_exact_star(eps_star)
        require_exact_star(mu_star)
    dt = state.dt
    e_new = state.e + dt * star_matrix(
        curl3_star(state.h, grid), eps_star, "a", inverse=True
    )
    h_new = state.h - dt * star_matrix(curl3(e_new, grid), mu_star, "b", inverse=True)
    return MaxwellState3(
        e=e_new, h=h_new, dt=dt, e_prev=state.e, h_prev=state.h, step=state.step + 1
    )


def scalar_wave_init_v(s0, v0: VectorField3, star: Star3, grid: Grid3, dt: float):
    """Second-order accurate v at t = dt/2 from whole-step data (s0, v0):

    v0 + (dt/2) A G s0 + 1/2 (dt/2)^2 A G (a^-1 D* v0).

    dt = 0 returns v0; with v0 = 0 only the gradient term survives.
    """
    return init_g_half(np.asarray(s0, float), v0, scalar_wave_operators(star, grid), dt)


def maxwell_init_h(
    e0: VectorField3, h0: VectorField3, eps_star: Star3, mu_star: Star3,
    grid: Grid3, dt: float,
):
    """Second-order accurate H at t = dt/2 from whole-step data (E0, H0):

    H0 - (dt/2) mu^-1 R E0 - 1/2 (dt/2)^2 mu^-1 R (eps^-1 R* H0).
    """
    return init_g_half(e0, h0, maxwell_operators(eps_star, mu_star, grid), dt)


# ---------------------------------------------------------------------------
# conserved quadratic forms
# ---------------------------------------------------------------------------


def _need_history(*fields):
    if any(f is None for f in fields):
        raise ValueError("conserved quantities need one completed step of history")


def _scalar_pieces(state: ScalarWaveState3, star: Star3, grid: Grid3):
    """(c1, c2, c3) with C_n = c1 + c2 - (dt/2)^2 c3."""
    _need_history(state.v_prev)
    v_bar = 0.5 * (state.v + state.v_prev)
    ag = star_matrix(grad3(state.s, grid), star, "a")
    return (
        inner3("node", state.s, state.s, star, grid),
        inner3("dual-face", v_bar, v_bar, star, grid),
        inner3("dual-face", ag, ag, star, grid),
    )


def scalar_conserved_n(state: ScalarWaveState3, star: Star3, grid: Grid3) -> float:
    """Whole-step invariant at the state's step:

    ||s||_N^2 + ||(v + v_prev)/2||_F*^2 - (dt/2)^2 ||A G s||_F*^2.
    """
    c1, c2, c3 = _scalar_pieces(state, star, grid)
    return c1 + c2 - (0.5 * state.dt) ** 2 * c3


def scalar_conserved_half(state: ScalarWaveState3, star: Star3, grid: Grid3) -> float:
    """Half-step invariant at the half level trailing the state:

    ||v_prev||_F*^2 + ||(s + s_prev)/2||_N^2 - (dt/2)^2 ||a^-1 D* v_prev||_N^2.
    """
    _need_history(state.v_prev, state.s_prev)
    s_bar = 0.5 * (state.s + state.s_prev)
    dsv = star_scalar_inverse(div3_star(state.v_prev, grid), star, "node-to-dual-cell")
    return (
        inner3("dual-face", state.v_prev, state.v_prev, star, grid)
        + inner3("node", s_bar, s_bar, star, grid)
        - (0.5 * state.dt) ** 2 * inner3("node", dsv, dsv, star, grid)
    )


def _maxwell_pieces(state: MaxwellState3, eps_star: Star3, mu_star: Star3, grid: Grid3):
    """(c1, c2, c3) with C_n = c1 + c2 - (dt/2)^2 c3."""
    _need_history(state.h_prev)
    h_bar = 0.5 * (state.h + state.h_prev)
    me = star_matrix(curl3(state.e, grid), mu_star, "b", inverse=True)
    return (
        inner3("edge", state.e, state.e, eps_star, grid),
        inner3("dual-edge", h_bar, h_bar, mu_star, grid),
        inner3("dual-edge", me, me, mu_star, grid),
    )


def maxwell_conserved_n(
    state: MaxwellState3, eps_star: Star3, mu_star: Star3, grid: Grid3
) -> float:
    """Whole-step invariant at the state's step:

    ||E||_E^2 + ||(H + H_prev)/2||_E*^2 - (dt/2)^2 ||mu^-1 R E||_E*^2

    with the eps-weighted edge product and the mu-weighted dual-edge product.
    """
    c1, c2, c3 = _maxwell_pieces(state, eps_star, mu_star, grid)
    return c1 + c2 - (0.5 * state.dt) ** 2 * c3


def maxwell_conserved_half(
    state: MaxwellState3, eps_star: Star3, mu_star: Star3, grid: Grid3
) -> float:
    """Half-step invariant at the half level trailing the state:

    ||(E + E_prev)/2||_E^2 + ||H_prev||_E*^2 - (dt/2)^2 ||eps^-1 R* H_prev||_E^2.
    """
    _need_history(state.h_prev, state.e_prev)
    e_bar = 0.5 * (state.e + state.e_prev)
    eh = star_matrix(curl3_star(state.h_prev, grid), eps_star, "a", inverse=True)
    return (
        inner3("edge", e_bar, e_bar, eps_star, grid)
        + inner3("dual-edge", state.h_prev, state.h_prev, mu_star, grid)
        - (0.5 * state.dt) ** 2 * inner3("edge", eh, eh, eps_star, grid)
    )


# ---------------------------------------------------------------------------
# divergence audit and time-step bound
# ---------------------------------------------------------------------------


def divergence_audit(
    state: MaxwellState3, eps_star: Star3, mu_star: Star3, grid: Grid3
) -> tuple:
    """Unweighted L2 norms of div*(eps E) on dual cells and div(mu H) on cells.

    Both are exact invariants of the march for any admissible materials —
    the update adds dt * D* R* H to the first and -dt * D R E to the second,
    and both composites vanish identically — so the norms stay constant (not
    necessarily zero) to rounding.
    """
    flux_e = star_matrix(state.e, eps_star, "a")
    flux_h = star_matrix(state.h, mu_star, "b")
    dv = grid.cell_volume
    div_e = math.sqrt(float(np.sum(div3_star(flux_e, grid) ** 2)) * dv)
    div_h = math.sqrt(float(np.sum(div3(flux_h, grid) ** 2)) * dv)
    return div_e, div_h


def _gershgorin_max(rows) -> float:
    worst = -math.inf
    for r in range(3):
        bound = np.asarray(rows[r][r], float)
        for c in range(3):
            if c != r and rows[r][c] is not None:
                bound = bound + np.abs(rows[r][c])
        worst = max(worst, float(np.max(bound)))
    return worst


def _gershgorin_min(rows) -> float:
    worst = math.inf
    for r in range(3):
        bound = np.asarray(rows[r][r], float)
        for c in range(3):
            if c != r and rows[r][c] is not None:
                bound = bound - np.abs(rows[r][c])
        worst = min(worst, float(np.min(bound)))
    return worst


def suggest_dt(
    star: Star3,
    grid: Grid3,
    safety: float = 1.0,
    system: str = "scalar-wave",
    mu_star: Star3 | None = None,
) -> float:
    """Largest stable dt times the safety factor, from analytic bounds only.

    The stencil norm of the spatial operator is bounded by
    N = 2 * s_max * sqrt(1/dx^2 + 1/dy^2 + 1/dz^2) and the leapfrog is
    stable (both conserved forms positive) for dt * N < 2, so the bound
    returned is safety * 2 / N.  s_max bounds the wave speed: for the scalar
    wave sqrt(max A / min a) and for Maxwell 1/sqrt(min eps * min mu), with
    the tensor extremes taken over Gershgorin intervals so that full-matrix
    stars are bounded too.  For system="maxwell", eps is read from `star`
    (A role) and mu from `mu_star` (B role), defaulting to the same star.
    """
    if safety <= 0:
        raise ValueError(f"safety factor must be positive, got {safety}")
    if system == "scalar-wave":
        s_max = math.sqrt(_gershgorin_max(star.a_rows) / float(np.min(star.a)))
    elif system == "maxwell":
        mu = star if mu_star is None else mu_star
        low = _gershgorin_min(star.a_rows) * _gershgorin_min(mu.b_rows)
        if low <= 0:
            raise ValueError(
                "cannot bound the wave speed: a material tensor is not "
                "diagonally dominant"
            )
        s_max = 1.0 / math.sqrt(low)
    else:
        raise ValueError(f"unknown system {system!r}")
    stencil = 2.0 * math.sqrt(sum(1.0 / d**2 for d in grid.spacings))
    return safety * 2.0 / (s_max * stencil)


def measured_stencil_norm(
    star: Star3,
    grid: Grid3,
    system: str = "scalar-wave",
    mu_star: Star3 | None = None,
    iterations: int = 60,
    seed: int = 0,
) -> float:
    """Power-iteration estimate of the spatial operator norm N (diagnostic).

    Iterates the positive-semidefinite composite A* A in the weighted inner
    product and returns sqrt of the Rayleigh quotient, a lower estimate of
    the true N with dt * N < 2 the stability condition.  `suggest_dt` never
    calls this — the time step always comes from the analytic bound — it
    exists only to check how sharp that bound is.
    """
    rng = np.random.default_rng(seed)
    if system == "scalar-wave":
        ops = scalar_wave_operators(star, grid)
        w = rng.standard_normal(grid.scalar_shape("node"))
        if grid.boundary == "pinned":
            w = pin_scalar_boundary(w)

        def inner(f1, f2):
            return inner3("node", f1, f2, star, grid)

    elif system == "maxwell":
        mu = star if mu_star is None else mu_star
        ops = maxwell_operators(star, mu, grid)
        w = VectorField3(
            *[rng.standard_normal(sh) for sh in grid.vector_shapes("edge")]
        )
        if grid.boundary == "pinned":
            w = pin_tangential_boundary(w)

        def inner(f1, f2):
            return inner3("edge", f1, f2, star, grid)

    else:
        raise ValueError(f"unknown system {system!r}")
    lam = 0.0
    for _ in range(iterations):
        aw = ops.apply_Astar(ops.apply_A(w))
        ww = inner(w, w)
        if ww == 0.0:
            return 0.0
        lam = inner(w, aw) / ww
        scale = math.sqrt(inner(aw, aw))
        if scale == 0.0:
            return 0.0
        w = (1.0 / scale) * aw
    return math.sqrt(max(lam, 0.0))


def _check_courant(dt: float, dt_max: float):
    if dt > dt_max:
        warnings.warn(
            f"dt = {dt:.4g} exceeds the stability bound {dt_max:.4g}; "
            "the march is unstable",
            RuntimeWarning,
            stacklevel=3,
        )


# ---------------------------------------------------------------------------
# simulation drivers
# ---------------------------------------------------------------------------


def run_scalar_wave(
    grid: Grid3,
    star: Star3,
    s0,
    v_half: VectorField3,
    dt: float,
    n_steps: int,
    *,
    record_every: int = 1,
    guaranteed: bool = True,
):
    """March n_steps from (s0, v_half); returns (state, records).

    Each record is (step, t, C_n, C_half, c1, c2, c3) where c1, c2, c3 are
    the pieces of the whole-step invariant — the weighted squares of s, of
    the time-averaged v, and of A G s — so C_n = c1 + c2 - (dt/2)^2 c3.
    """
    _check_courant(dt, suggest_dt(star, grid))
    state = ScalarWaveState3(s=np.asarray(s0, float), v=v_half, dt=dt)
    records = []
    for _ in range(n_steps):
        state = scalar_wave_step(state, star, grid, guaranteed=guaranteed)
        if record_every and state.step % record_every == 0:
            c1, c2, c3 = _scalar_pieces(state, star, grid)
            records.append(
                (
                    state.step,
                    state.step * dt,
                    c1 + c2 - (0.5 * dt) ** 2 * c3,
                    scalar_conserved_half(state, star, grid),
                    c1,
                    c2,
                    c3,
                )
            )
    return state, records


def run_maxwell(
    grid: Grid3,
    eps_star: Star3,
    mu_star: Star3,
    e0: VectorField3,
    h_half: VectorField3,
    dt: float,
    n_steps: int,
    *,
    record_every: int = 1,
    guaranteed: bool = True,
):
    """March n_steps from (E0, H_half); returns (state, records).

    Each record is (step, t, C_n, C_half, c1, c2, c3, div_e, div_h) with the
    invariant pieces as in `run_scalar_wave` and the two divergence-audit
    norms appended.
    """
    _check_courant(dt, suggest_dt(eps_star, grid, system="maxwell", mu_star=mu_star))
    state = MaxwellState3(e=e0, h=h_half, dt=dt)
    records = []
    for _ in range(n_steps):
        state = maxwell_step(state, eps_star, mu_star, grid, guaranteed=guaranteed)
        if record_every and state.step % record_every == 0:
            c1, c2, c3 = _maxwell_pieces(state, eps_star, mu_star, grid)
            div_e, div_h = divergence_audit(state, eps_star, mu_star, grid)
            records.append(
                (
                    state.step,
                    state.step * dt,
                    c1 + c2 - (0.5 * dt) ** 2 * c3,
                    maxwell_conserved_half(state, eps_star, mu_star, grid),
                    c1,
                    c2,
                    c3,
                    div_e,
                    div_h,
                )
            )
    return state, records


# ---------------------------------------------------------------------------
# admissible-data helpers (pinned box)
# ---------------------------------------------------------------------------


def pin_scalar_boundary(s) -> np.ndarray:
    """Copy of a node scalar with the six wall planes zeroed.

    On a pinned grid the march holds the walls fixed, so initial data must
    vanish there for the conserved forms to close.
    """
    out = np.array(s, float)
    for ax in range(out.ndim):
        sl = [slice(None)] * out.ndim
        sl[ax] = 0
        out[tuple(sl)] = 0.0
        sl[ax] = -1
        out[tuple(sl)] = 0.0
    return out


def pin_tangential_boundary(v: VectorField3) -> VectorField3:
    """Copy of an edge field with the wall-tangential entries zeroed.

    For component r the walls normal to the two other axes carry tangential
    values; zeroing them is the conductor condition the pinned march holds.
    """
    comps = []
    for r, comp in enumerate(v.components):
        out = np.array(comp, float)
        for ax in range(3):
            if ax == r:
                continue
            sl = [slice(None)] * 3
            sl[ax] = 0
            out[tuple(sl)] = 0.0
            sl[ax] = -1
            out[tuple(sl)] = 0.0
        comps.append(out)
    return VectorField3(*comps)


# ---------------------------------------------------------------------------
# cavity modes on the pinned unit box (unit materials)
# ---------------------------------------------------------------------------


def cavity_mode_s(grid: Grid3, t: float, modes=(1, 1, 1)) -> np.ndarray:
    """Standing mode cos(w t) sin(m pi x) sin(n pi y) sin(p pi z) on nodes,
    with w = pi sqrt(m^2 + n^2 + p^2)."""
    m, n, p = modes
    w = np.pi * math.sqrt(m * m + n * n + p * p)
    x, y, z = grid.scalar_points("node")
    return (
        math.cos(w * t)
        * np.sin(m * np.pi * x)
        * np.sin(n * np.pi * y)
        * np.sin(p * np.pi * z)
    )


def cavity_mode_v(grid: Grid3, t: float, modes=(1, 1, 1)) -> VectorField3:
    """The dual-face flux paired with `cavity_mode_s` (zero at t = 0)."""
    m, n, p = modes
    w = np.pi * math.sqrt(m * m + n * n + p * p)
    amp = math.sin(w * t) * np.pi / w
    x, y, z = grid.vector_points("dual-face", 0)
    vx = amp * m * np.cos(m * np.pi * x) * np.sin(n * np.pi * y) * np.sin(p * np.pi * z)
    x, y, z = grid.vector_points("dual-face", 1)
    vy = amp * n * np.sin(m * np.pi * x) * np.cos(n * np.pi * y) * np.sin(p * np.pi * z)
    x, y, z = grid.vector_points("dual-face", 2)
    vz = amp * p * np.sin(m * np.pi * x) * np.sin(n * np.pi * y) * np.cos(p * np.pi * z)
    return VectorField3(vx, vy, vz)


def te_cavity_e(grid: Grid3, t: float) -> VectorField3:
    """TE(1,1,0) conductor-box mode: E = (0, 0, sin(pi x) sin(pi y) cos(w t))
    with w = pi sqrt(2); the tangential components vanish on all walls."""
    w = np.pi * math.sqrt(2.0)
    shapes = grid.vector_shapes("edge")
    x, y, _ = grid.vector_points("edge", 2)
    ez = np.sin(np.pi * x) * np.sin(np.pi * y) * math.cos(w * t)
    return VectorField3(np.zeros(shapes[0]), np.zeros(shapes[1]), ez)


def te_cavity_h(grid: Grid3, t: float) -> VectorField3:
    """The dual-edge field paired with `te_cavity_e` (zero at t = 0)."""
    w = np.pi * math.sqrt(2.0)
    amp = math.sin(w * t) * np.pi / w
    x, y, _ = grid.vector_points("dual-edge", 0)
    hx = -amp * np.sin(np.pi * x) * np.cos(np.pi * y)
    x, y, _ = grid.vector_points("dual-edge", 1)
    hy = amp * np.cos(np.pi * x) * np.sin(np.pi * y)
    hz = np.zeros(grid.vector_shapes("dual-edge")[2])
    return VectorField3(hx, hy, hz)


# ---------------------------------------------------------------------------
# convergence measurement against the cavity modes
# ---------------------------------------------------------------------------


def scalar_cavity_errors(sizes=(8, 16, 32), t_final: float = 0.35, safety: float = 0.9):
    """Max-norm error of s against the cavity mode, one pinned cube per size.

    dt is picked from `suggest_dt` per grid, so space and time refine
    together; returns [(dx, error), ...] ready for order estimation.
    """
    out = []
    for n in sizes:
        grid = Grid3.cube(int(n), 1.0, boundary="pinned")
        star = Star3.trivial(grid)
        nt = math.ceil(t_final / suggest_dt(star, grid, safety))
        dt = t_final / nt
        s0 = cavity_mode_s(grid, 0.0)
        v_half = scalar_wave_init_v(s0, zeros_field(grid, "dual-face"), star, grid, dt)
        state = ScalarWaveState3(s=s0, v=v_half, dt=dt)
        for _ in range(nt):
            state = scalar_wave_step(state, star, grid)
        err = float(np.max(np.abs(state.s - cavity_mode_s(grid, t_final))))
        out.append((grid.dx, err))
    return out


def maxwell_cavity_errors(sizes=(8, 16, 32), t_final: float = 0.35, safety: float = 0.9):
    """Max-norm error of E_z against the TE cavity mode (conductor unit cube)."""
    out = []
    for n in sizes:
        grid = Grid3.cube(int(n), 1.0, boundary="pinned")
        star = Star3.trivial(grid)
        nt = math.ceil(t_final / suggest_dt(star, grid, safety, system="maxwell"))
        dt = t_final / nt
        e0 = te_cavity_e(grid, 0.0)
        h_half = maxwell_init_h(
            e0, zeros_field(grid, "dual-edge"), star, star, grid, dt
        )
        state = MaxwellState3(e=e0, h=h_half, dt=dt)
        for _ in range(nt):
            state = maxwell_step(state, star, star, grid)
        err = float(np.max(np.abs(state.e.z - te_cavity_e(grid, t_final).z)))
        out.append((grid.dx, err))
    return out
