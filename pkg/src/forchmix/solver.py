"""Backward Euler time stepping for the expanded mixed scheme.

Each time step solves the nonlinear system

    (1/dt) M_p p + B_div u            = (1/dt) M_p p_prev + F
              M_sz(K) s + M_uz u      = 0
    C_pv p + C_sv s                   = 0

by Picard iteration: the conductivity is frozen cellwise at K_T =
K(|s_T|) of the previous iterate, which makes the block system linear and
symmetric.  The sign convention is u = -K(|s|) s throughout.

Two equivalent linear solves are available.  The monolithic path factors
the full (p, s, u) saddle system.  The condensed path eliminates s and p
exactly (both mass blocks are diagonal) and factors the symmetric positive
definite velocity system

    (M_uz^T M_sz^{-1} M_uz + dt B^T M_p^{-1} B) u = B^T (p_prev + dt M_p^{-1} F)

then recovers s = -M_sz^{-1} M_uz u and p = p_prev + dt M_p^{-1} (F - B u).
Both produce the same iterates to rounding; condensed is the default
because it is several times faster on fine meshes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .law import ForchheimerLaw, K_eval
from .mesh import TriMesh
from .spaces import (
    DofMap,
    QuadratureRule,
    assemble_forms,
    build_dofmap,
    cell_points,
    hdiv_interpolate,
    l2_project_scalar,
    l2_project_vector,
    triangle_quadrature,
)

SIGN_CONVENTION = "u = -K(|s|) s"

ScalarField = Callable[[np.ndarray, np.ndarray], np.ndarray]
VectorField = Callable[[np.ndarray, np.ndarray], np.ndarray]
ForcingField = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


class PicardError(RuntimeError):
    """Nonlinear iteration failed to converge; carries the last residual."""

    def __init__(self, message: str, residual: float) -> None:
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class SolverConfig:
    """Time stepping and nonlinear-solve parameters.

    t_final must be an integer multiple of dt.  picard_tol is the relative
    max-norm tolerance on successive s iterates; on exit the residual of the
    frozen equation with the true nonlinearity is at most 10 * picard_tol
    (relative), enforced by the iteration.
    """

    dt: float
    t_final: float
    picard_tol: float = 1e-6
    picard_max: int = 25
    linear_solver: str = "condensed"
    sign_convention: str = SIGN_CONVENTION

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.t_final < 0.0:
            raise ValueError("t_final must be nonnegative")
        steps = self.t_final / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValueError("t_final must be an integer multiple of dt")
        if self.picard_tol <= 0.0:
            raise ValueError("picard_tol must be positive")
        if self.picard_max < 1:
            raise ValueError("picard_max must be at least 1")
        if self.linear_solver not in ("condensed", "monolithic"):
            raise ValueError("linear_solver must be 'condensed' or 'monolithic'")
        if self.sign_convention != SIGN_CONVENTION:
            raise ValueError(f"sign convention is fixed to '{SIGN_CONVENTION}'")

    @property
    def num_steps(self) -> int:
        return int(round(self.t_final / self.dt))


@dataclass(frozen=True)
class DiscreteState:
    """Coefficient vectors of one time level: piecewise-constant pressure p
    (one per cell), piecewise-constant gradient s (cell, component), and
    RT0 velocity u (one per interior edge)."""

    p: np.ndarray
    s: np.ndarray
    u: np.ndarray
    t: float


@dataclass(frozen=True)
class RunResult:
    """Final state plus per-step diagnostics of a time-stepping run.

    picard_iters[n], mass_residuals[n], f_integrals[n] and
    picard_increments[n] describe step n+1; p_norms has one entry per time
    level including t=0.  states is populated only when requested.
    """

    state: DiscreteState
    times: np.ndarray
    picard_iters: list[int]
    mass_residuals: list[float]
    f_integrals: list[float]
    p_norms: list[float]
    picard_increments: list[tuple[float, ...]]
    states: list[DiscreteState] | None = None


class ExpandedMixedSolver:
    """Assembles the scheme on a fixed mesh and law and advances it in time."""

    def __init__(
        self,
        mesh: TriMesh,
        law: ForchheimerLaw,
        config: SolverConfig,
        quadrature: QuadratureRule | None = None,
    ) -> None:
        self.mesh = mesh
        self.law = law
        self.config = config
        self.quadrature = quadrature or triangle_quadrature(4)
        self.dofmap: DofMap = build_dofmap(mesh)
        forms = assemble_forms(mesh, self.dofmap, np.ones(mesh.num_triangles))
        self._b_div = forms.B_div
        self._bt = forms.C_pv
        self._m_uz = forms.M_uz
        self._m_uz_t = forms.C_sv
        self._area2 = np.repeat(mesh.areas, 2)
        # dt-free part of the condensed velocity matrix: B^T M_p^{-1} B
        self._bt_mpi_b = (self._bt @ sp.diags(1.0 / mesh.areas) @ self._b_div).tocsr()
        self._qpoints = cell_points(mesh, self.quadrature)

    def _load_vector(self, f: ForcingField | None, t: float) -> np.ndarray:
        """Cell integrals of the forcing at time t."""
        if f is None:
            return np.zeros(self.mesh.num_triangles)
        x, y = self._qpoints[..., 0], self._qpoints[..., 1]
        values = np.asarray(f(x, y, t), dtype=float)
        return self.mesh.areas * (values @ self.quadrature.weights)

    def initial_state(
        self,
        p0: ScalarField,
        s0: VectorField,
        u0: VectorField | None = None,
    ) -> DiscreteState:
        """Project the initial data onto the discrete spaces.

        p and s are cell averages of p0 and of the supplied exact gradient
        s0.  When the exact initial velocity u0 is available its edge-flux
        interpolant is used; otherwise u solves the gradient and flux
        equations of the scheme at t=0 with conductivity frozen at K(|s|).
        """
        p = l2_project_scalar(self.mesh, p0, self.quadrature)
        s = l2_project_vector(self.mesh, s0, self.quadrature)
        if u0 is not None:
            u = hdiv_interpolate(self.mesh, self.dofmap, u0)
        else:
            kbar = K_eval(self.law, np.linalg.norm(s, axis=1))
            msz = sp.diags(np.repeat(kbar, 2) * self._area2)
            saddle = sp.bmat([[msz, self._m_uz], [self._m_uz_t, None]], format="csc")
            rhs = np.concatenate([np.zeros(self.dofmap.n_s), -(self._bt @ p)])
            solution = splu(saddle).solve(rhs)
            u = solution[self.dofmap.n_s :]
            if not np.all(np.isfinite(u)):
                raise RuntimeError("initial velocity solve produced non-finite values")
        return DiscreteState(p=p, s=s.reshape(-1, 2), u=u, t=0.0)

    def _solve_frozen(
        self,
        kbar: np.ndarray,
        p_prev: np.ndarray,
        load: np.ndarray,
        dt: float,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Solve one frozen-conductivity block system; returns (p, s_flat, u)."""
        areas = self.mesh.areas
        mk = np.repeat(kbar, 2) * self._area2
        if self.config.linear_solver == "monolithic":
            m_p_dt = sp.diags(areas / dt)
            system = sp.bmat(
                [
                    [m_p_dt, None, self._b_div],
                    [None, sp.diags(mk), self._m_uz],
                    [self._bt, self._m_uz_t, None],
                ],
                format="csc",
            )
            rhs = np.concatenate(
                [(areas * p_prev) / dt + load, np.zeros(self.dofmap.n_s + self.dofmap.n_rt0)]
            )
            solution = splu(system).solve(rhs)
            n_p, n_s = self.dofmap.n_p, self.dofmap.n_s
            p = solution[:n_p]
            s_flat = solution[n_p : n_p + n_s]
            u = solution[n_p + n_s :]
        else:
            weighted = self._m_uz.multiply((1.0 / mk)[:, None]).tocsr()
            system = (self._m_uz_t @ weighted + dt * self._bt_mpi_b).tocsc()
            p_hat = p_prev + dt * load / areas
            u = splu(system, permc_spec="MMD_AT_PLUS_A").solve(self._bt @ p_hat)
            s_flat = -(self._m_uz @ u) / mk
            p = p_hat - dt * (self._b_div @ u) / areas
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(s_flat)) and np.all(np.isfinite(u))):
            raise RuntimeError("frozen-coefficient linear system produced non-finite values")
        return p, s_flat, u

    def _advance(
        self,
        state_prev: DiscreteState,
        t_n: float,
        f: ForcingField | None,
    ) -> tuple[DiscreteState, int, dict]:
        """One backward Euler step with Picard resolution of K(|s|)."""
        cfg = self.config
        dt = cfg.dt
        load = self._load_vector(f, t_n)
        s_iter = state_prev.s.reshape(-1)
        increments: list[float] = []
        residual = np.inf
        for iteration in range(1, cfg.picard_max + 1):
            kbar = K_eval(self.law, np.linalg.norm(s_iter.reshape(-1, 2), axis=1))
            p, s_flat, u = self._solve_frozen(kbar, state_prev.p, load, dt)
            s_new = s_flat.reshape(-1, 2)
            k_new = K_eval(self.law, np.linalg.norm(s_new, axis=1))
            residual = float(np.max(np.abs((k_new - kbar)[:, None] * s_new), initial=0.0))
            increment = float(np.max(np.abs(s_flat - s_iter), initial=0.0))
            increments.append(increment)
            scale = 1.0 + float(np.max(np.abs(s_flat), initial=0.0))
            s_iter = s_flat
            if residual <= 0.1 * cfg.picard_tol * scale:
                break
            if increment <= cfg.picard_tol * scale and residual <= 10.0 * cfg.picard_tol * scale:
                break
        else:
            raise PicardError(
                f"Picard iteration did not converge in {cfg.picard_max} iterations "
                f"(last residual {residual:.3e})",
                residual=residual,
            )
        state = DiscreteState(p=p, s=s_iter.reshape(-1, 2), u=u, t=t_n)
        diagnostics = {
            "mass_residual": self._mass_residual(state_prev.p, p, load, dt),
            "f_integral": float(load.sum()),
            "increments": tuple(increments),
        }
        return state, iteration, diagnostics

    def _mass_residual(
        self, p_prev: np.ndarray, p: np.ndarray, load: np.ndarray, dt: float
    ) -> float:
        """|int(p^n) - int(p^{n-1}) - dt int(f^n)|, identically small."""
        areas = self.mesh.areas
        return float(abs(areas @ p - areas @ p_prev - dt * load.sum()))

    def picard_step(
        self,
        state_prev: DiscreteState,
        t_n: float,
        f: ForcingField | None = None,
    ) -> tuple[DiscreteState, int]:
        """Advance one step to time t_n; returns the state and the Picard count."""
        state, iterations, _ = self._advance(state_prev, t_n, f)
        return state, iterations

    def run(
        self,
        f: ForcingField | None,
        p0: ScalarField,
        s0: VectorField,
        u0: VectorField | None = None,
        store_states: bool = False,
    ) -> RunResult:
        """March from t=0 to t_final, collecting per-step diagnostics."""
        cfg = self.config
        num_steps = cfg.num_steps
        times = np.linspace(0.0, cfg.t_final, num_steps + 1)
        state = self.initial_state(p0, s0, u0)
        areas = self.mesh.areas
        p_norms = [float(np.sqrt(areas @ state.p**2))]
        picard_iters: list[int] = []
        mass_residuals: list[float] = []
        f_integrals: list[float] = []
        picard_increments: list[tuple[float, ...]] = []
        states = [state] if store_states else None
        for n in range(1, num_steps + 1):
            state, iterations, diagnostics = self._advance(state, float(times[n]), f)
            picard_iters.append(iterations)
            mass_residuals.append(diagnostics["mass_residual"])
            f_integrals.append(diagnostics["f_integral"])
            picard_increments.append(diagnostics["increments"])
            p_norms.append(float(np.sqrt(areas @ state.p**2)))
            if states is not None:
                states.append(state)
        return RunResult(
            state=state,
            times=times,
            picard_iters=picard_iters,
            mass_residuals=mass_residuals,
            f_integrals=f_integrals,
            p_norms=p_norms,
            picard_increments=picard_increments,
            states=states,
        )
