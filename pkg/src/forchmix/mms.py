"""Manufactured solution, error norms, and the convergence-study driver.

The manufactured pressure on the unit square,

    p(x, y, t) = exp(-5t) [ (x^2 + y^2)/2 - (x^3 + y^3)/3 ],

has gradient s = exp(-5t) (x(1-x), y(1-y)), so the velocity
u = -K(|s|) s satisfies u.n = 0 on all four sides exactly.  The forcing
f = p_t + div u is derived in closed form from this convention; at points
where s = 0 the removable singularity of the K' term is replaced by its
limit -K(0) (d1 s1 + d2 s2).

Errors are measured at the final time: pressure in L2, gradient and
velocity in L^beta with beta = 2 - a from the law's degeneracy exponents.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .law import ForchheimerLaw, K_eval, K_flux, K_prime, degeneracy_exponents
from .mesh import TriMesh, unit_square_mesh
from .solver import DiscreteState, ExpandedMixedSolver, RunResult, SolverConfig
from .spaces import (
    DofMap,
    QuadratureRule,
    cell_points,
    rt0_at_cell_points,
    triangle_quadrature,
)

_DECAY = 5.0


def forcing_f(law: ForchheimerLaw, x, y, t) -> np.ndarray:
    """Forcing f = p_t + div u of the manufactured solution.

    div u expands to -[K(|s|)(d1 s1 + d2 s2)
    + K'(|s|)(s1^2 d1 s1 + s2^2 d2 s2)/|s|]; the second term vanishes as
    |s| -> 0, so the limit value is used where s = 0.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    decay = np.exp(-_DECAY * np.asarray(t, dtype=float))
    p = decay * (0.5 * (x**2 + y**2) - (x**3 + y**3) / 3.0)
    s1 = decay * x * (1.0 - x)
    s2 = decay * y * (1.0 - y)
    ds1 = decay * (1.0 - 2.0 * x)
    ds2 = decay * (1.0 - 2.0 * y)
    xi = np.hypot(s1, s2)
    k = K_eval(law, xi)
    kp = K_prime(law, xi)
    safe_xi = np.where(xi > 0.0, xi, 1.0)
    radial = np.where(xi > 0.0, kp * (s1**2 * ds1 + s2**2 * ds2) / safe_xi, 0.0)
    return -_DECAY * p - k * (ds1 + ds2) - radial


@dataclass(frozen=True)
class ManufacturedSolution:
    """Closed-form fields (p, s, u, f) of the verification problem."""

    law: ForchheimerLaw

    def p(self, x, y, t) -> np.ndarray:
        decay = np.exp(-_DECAY * np.asarray(t, dtype=float))
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return decay * (0.5 * (x**2 + y**2) - (x**3 + y**3) / 3.0)

    def s(self, x, y, t) -> np.ndarray:
        decay = np.exp(-_DECAY * np.asarray(t, dtype=float))
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.stack(
            np.broadcast_arrays(decay * x * (1.0 - x), decay * y * (1.0 - y)), axis=-1
        )

    def u(self, x, y, t) -> np.ndarray:
        return -K_flux(self.law, self.s(x, y, t))

    def f(self, x, y, t) -> np.ndarray:
        return forcing_f(self.law, x, y, t)

    def p0(self, x, y) -> np.ndarray:
        return self.p(x, y, 0.0)

    def s0(self, x, y) -> np.ndarray:
        return self.s(x, y, 0.0)

    def u0(self, x, y) -> np.ndarray:
        return self.u(x, y, 0.0)


def error_norms(
    mesh: TriMesh,
    dofmap: DofMap,
    state: DiscreteState,
    exact: ManufacturedSolution,
    t: float | None = None,
    rule: QuadratureRule | None = None,
) -> tuple[float, float, float]:
    """(e_p, e_s, e_u): L2 pressure error and L^beta gradient/velocity errors.

    The velocity error evaluates the RT0 field pointwise inside each cell,
    not its cell average.
    """
    t = state.t if t is None else t
    rule = rule or triangle_quadrature(4)
    beta = degeneracy_exponents(exact.law).beta
    pts = cell_points(mesh, rule)
    x, y = pts[..., 0], pts[..., 1]
    weights = rule.weights
    areas = mesh.areas

    p_diff = state.p[:, None] - exact.p(x, y, t)
    e_p = float(np.sqrt(areas @ (p_diff**2 @ weights)))

    s_diff = state.s[:, None, :] - exact.s(x, y, t)
    s_mag = np.linalg.norm(s_diff, axis=-1)
    e_s = float((areas @ (s_mag**beta @ weights)) ** (1.0 / beta))

    u_h = rt0_at_cell_points(mesh, dofmap, state.u, pts)
    u_diff = u_h - exact.u(x, y, t)
    u_mag = np.linalg.norm(u_diff, axis=-1)
    e_u = float((areas @ (u_mag**beta @ weights)) ** (1.0 / beta))
    return e_p, e_s, e_u


def convergence_rate(
    err_coarse: float, err_fine: float, h_coarse: float, h_fine: float
) -> float:
    """Observed order: log(err_coarse/err_fine) / log(h_coarse/h_fine).

    Reduces to log2 of the error ratio when the mesh is halved.
    """
    if err_coarse <= 0.0 or err_fine <= 0.0:
        return float("nan")
    return float(np.log(err_coarse / err_fine) / np.log(h_coarse / h_fine))


@dataclass(frozen=True)
class ReportRow:
    """One mesh of a convergence study; rates are None on the coarsest row."""

    n: int
    h: float
    dt: float
    err_p: float
    rate_p: float | None
    err_s: float
    rate_s: float | None
    err_u: float
    rate_u: float | None
    picard_avg: float


@dataclass(frozen=True)
class MeshRun:
    """Raw per-mesh artifacts kept alongside the serialized rows."""

    n: int
    mesh: TriMesh
    dofmap: DofMap
    state: DiscreteState
    result: RunResult


@dataclass(frozen=True)
class ConvergenceReport:
    """Rows of a convergence study plus (optionally) the raw runs."""

    rows: list[ReportRow]
    runs: list[MeshRun] | None = None

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("n,h,dt,err_p,rate_p,err_s,rate_s,err_u,rate_u,picard_avg\n")
        for row in self.rows:
            out.write(
                f"{row.n},{row.h:.12e},{row.dt:.12e},"
                f"{row.err_p:.12e},{_csv_rate(row.rate_p)},"
                f"{row.err_s:.12e},{_csv_rate(row.rate_s)},"
                f"{row.err_u:.12e},{_csv_rate(row.rate_u)},"
                f"{row.picard_avg:.4f}\n"
            )
        return out.getvalue()

    def to_markdown(self) -> str:
        lines = [
            "| n | err_p | rate | err_s | rate | err_u | rate |",
            "|---|-------|------|-------|------|-------|------|",
        ]
        for row in self.rows:
            lines.append(
                f"| {row.n} | {row.err_p:.3e} | {_md_rate(row.rate_p)} "
                f"| {row.err_s:.3e} | {_md_rate(row.rate_s)} "
                f"| {row.err_u:.3e} | {_md_rate(row.rate_u)} |"
            )
        return "\n".join(lines) + "\n"


def _csv_rate(rate: float | None) -> str:
    return "" if rate is None else f"{rate:.4f}"


def _md_rate(rate: float | None) -> str:
    return "-" if rate is None else f"{rate:.2f}"


def _pick_dt(dt: float | str, dt_cap: float, h: float, t_final: float) -> float:
    """Resolve the dt policy and snap so that t_final is a whole number of steps."""
    if isinstance(dt, str):
        if dt != "h2":
            raise ValueError("dt must be a positive number or 'h2'")
        raw = min(dt_cap, h * h)
    else:
        raw = float(dt)
    if raw <= 0.0:
        raise ValueError("dt must be positive")
    if t_final == 0.0:
        return raw
    return t_final / max(1, round(t_final / raw))


def convergence_study(
    law: ForchheimerLaw,
    mesh_sizes: list[int],
    *,
    dt: float | str = "h2",
    dt_cap: float = 1e-2,
    t_final: float = 1.0,
    picard_tol: float = 1e-6,
    picard_max: int = 25,
    linear_solver: str = "condensed",
    keep_runs: bool = True,
) -> ConvergenceReport:
    """Run the manufactured problem on each mesh and tabulate errors and rates.

    dt is either a fixed step or the policy "h2", meaning
    dt = min(dt_cap, h^2) per mesh; either way the step is snapped to divide
    t_final exactly.  Rates compare consecutive rows.
    """
    if not mesh_sizes:
        raise ValueError("mesh_sizes must be nonempty")
    if any(b <= a for a, b in zip(mesh_sizes, mesh_sizes[1:])):
        raise ValueError("mesh_sizes must be strictly increasing")
    exact = ManufacturedSolution(law)
    rows: list[ReportRow] = []
    runs: list[MeshRun] = []
    prev: ReportRow | None = None
    for n in mesh_sizes:
        mesh = unit_square_mesh(n)
        dt_n = _pick_dt(dt, dt_cap, mesh.h, t_final)
        config = SolverConfig(
            dt=dt_n,
            t_final=t_final,
            picard_tol=picard_tol,
            picard_max=picard_max,
            linear_solver=linear_solver,
        )
        solver = ExpandedMixedSolver(mesh, law, config)
        result = solver.run(exact.f, exact.p0, exact.s0, exact.u0)
        e_p, e_s, e_u = error_norms(mesh, solver.dofmap, result.state, exact)
        picard_avg = (
            float(np.mean(result.picard_iters)) if result.picard_iters else 0.0
        )
        if prev is None:
            rates: tuple[float | None, float | None, float | None] = (None, None, None)
        else:
            rates = (
                convergence_rate(prev.err_p, e_p, prev.h, mesh.h),
                convergence_rate(prev.err_s, e_s, prev.h, mesh.h),
                convergence_rate(prev.err_u, e_u, prev.h, mesh.h),
            )
        row = ReportRow(
            n=n,
            h=mesh.h,
            dt=dt_n,
            err_p=e_p,
            rate_p=rates[0],
            err_s=e_s,
            rate_s=rates[1],
            err_u=e_u,
            rate_u=rates[2],
            picard_avg=picard_avg,
        )
        rows.append(row)
        runs.append(MeshRun(n=n, mesh=mesh, dofmap=solver.dofmap, state=result.state, result=result))
        prev = row
    return ConvergenceReport(rows=rows, runs=runs if keep_runs else None)
