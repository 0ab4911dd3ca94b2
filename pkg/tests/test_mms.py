"""Manufactured fields, the derived forcing, error norms, and the study report."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from forchmix import (
    ConvergenceReport,
    ExpandedMixedSolver,
    ForchheimerLaw,
    K_eval,
    SolverConfig,
    convergence_rate,
    convergence_study,
    degeneracy_exponents,
    error_norms,
    forcing_f,
    unit_square_mesh,
)
from forchmix.mms import ManufacturedSolution, _pick_dt
from forchmix.solver import DiscreteState
from forchmix.spaces import build_dofmap, cell_points, triangle_quadrature

_FD_STEP = 1e-5


def _fd_residual(mms: ManufacturedSolution, x, y, t) -> np.ndarray:
    """p_t + div u - f with both derivatives by central differences."""
    h = _FD_STEP
    p_t = (mms.p(x, y, t + h) - mms.p(x, y, t - h)) / (2.0 * h)
    du1 = (mms.u(x + h, y, t)[..., 0] - mms.u(x - h, y, t)[..., 0]) / (2.0 * h)
    du2 = (mms.u(x, y + h, t)[..., 1] - mms.u(x, y - h, t)[..., 1]) / (2.0 * h)
    return p_t + du1 + du2 - mms.f(x, y, t)


def test_gradient_matches_pressure(mms: ManufacturedSolution) -> None:
    rng = np.random.default_rng(21)
    x = rng.uniform(0.01, 0.99, size=500)
    y = rng.uniform(0.01, 0.99, size=500)
    t = rng.uniform(0.0, 1.0, size=500)
    h = _FD_STEP
    grad_fd = np.stack(
        [
            (mms.p(x + h, y, t) - mms.p(x - h, y, t)) / (2.0 * h),
            (mms.p(x, y + h, t) - mms.p(x, y - h, t)) / (2.0 * h),
        ],
        axis=-1,
    )
    assert np.max(np.abs(grad_fd - mms.s(x, y, t))) < 1e-6


def test_velocity_normal_component_vanishes_on_boundary(mms) -> None:
    line = np.linspace(0.0, 1.0, 33)
    t = 0.3
    assert np.all(mms.u(np.zeros_like(line), line, t)[..., 0] == 0.0)
    assert np.all(mms.u(np.ones_like(line), line, t)[..., 0] == 0.0)
    assert np.all(mms.u(line, np.zeros_like(line), t)[..., 1] == 0.0)
    assert np.all(mms.u(line, np.ones_like(line), t)[..., 1] == 0.0)


def test_forcing_limit_where_gradient_vanishes(law: ForchheimerLaw, mms) -> None:
    """At the corners s = 0 and f = -5 p - K(0) (d1 s1 + d2 s2)."""
    for x, y in ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)):
        for t in (0.0, 0.4):
            decay = np.exp(-5.0 * t)
            expected = -5.0 * mms.p(x, y, t) - K_eval(law, 0.0) * decay * (
                (1.0 - 2.0 * x) + (1.0 - 2.0 * y)
            )
            assert forcing_f(law, x, y, t) == pytest.approx(float(expected), rel=1e-13)
            # cross-check against the interior formula approached radially
            near = forcing_f(law, x + 1e-9 - 2e-9 * x, y + 1e-9 - 2e-9 * y, t)
            assert near == pytest.approx(float(expected), abs=1e-7)


def test_pde_residual_vanishes(mms) -> None:
    rng = np.random.default_rng(7)
    x = rng.uniform(0.01, 0.99, size=1000)
    y = rng.uniform(0.01, 0.99, size=1000)
    t = rng.uniform(0.0, 1.0, size=1000)
    assert np.max(np.abs(_fd_residual(mms, x, y, t))) < 1e-6


def test_beta_for_two_term_law(law: ForchheimerLaw) -> None:
    exponents = degeneracy_exponents(law)
    assert exponents.a == 0.5
    assert exponents.beta == 1.5


def test_error_norms_zero_for_representable_fields(law: ForchheimerLaw) -> None:
    mesh = unit_square_mesh(3)
    dofmap = build_dofmap(mesh)

    @dataclass(frozen=True)
    class ConstantFields:
        law: ForchheimerLaw

        def p(self, x, y, t):
            return 0.75 + 0.0 * np.asarray(x)

        def s(self, x, y, t):
            return np.stack(np.broadcast_arrays(2.0 + 0.0 * x, -1.0 + 0.0 * y), axis=-1)

        def u(self, x, y, t):
            return np.stack(np.broadcast_arrays(0.0 * x, 0.0 * y), axis=-1)

    exact = ConstantFields(law)
    state = DiscreteState(
        p=np.full(mesh.num_triangles, 0.75),
        s=np.tile([2.0, -1.0], (mesh.num_triangles, 1)),
        u=np.zeros(dofmap.n_rt0),
        t=0.2,
    )
    e_p, e_s, e_u = error_norms(mesh, dofmap, state, exact)
    assert e_p < 1e-14 and e_s < 1e-14 and e_u < 1e-14


def test_error_norms_match_projection_error(law: ForchheimerLaw, mms) -> None:
    """A state holding the projections measures exactly the projection error."""
    mesh = unit_square_mesh(4)
    solver = ExpandedMixedSolver(mesh, law, SolverConfig(dt=0.5, t_final=1.0))
    state = solver.initial_state(mms.p0, mms.s0, mms.u0)
    e_p, _, _ = error_norms(mesh, solver.dofmap, state, mms, t=0.0)

    rule = triangle_quadrature(4)
    pts = cell_points(mesh, rule)
    diff = state.p[:, None] - mms.p(pts[..., 0], pts[..., 1], 0.0)
    oracle = float(np.sqrt(mesh.areas @ (diff**2 @ rule.weights)))
    assert e_p == pytest.approx(oracle, rel=1e-13)
    assert 0.0 < e_p < 0.1


def test_error_norms_homogeneous(law: ForchheimerLaw) -> None:
    """Scaling the discrete fields scales every norm linearly."""
    mesh = unit_square_mesh(3)
    dofmap = build_dofmap(mesh)
    rng = np.random.default_rng(12)

    @dataclass(frozen=True)
    class ZeroFields:
        law: ForchheimerLaw

        def p(self, x, y, t):
            return 0.0 * np.asarray(x)

        def s(self, x, y, t):
            return np.stack(np.broadcast_arrays(0.0 * x, 0.0 * y), axis=-1)

        u = s

    exact = ZeroFields(law)
    p = rng.normal(size=mesh.num_triangles)
    s = rng.normal(size=(mesh.num_triangles, 2))
    u = rng.normal(size=dofmap.n_rt0)
    lam = 3.7
    base = error_norms(mesh, dofmap, DiscreteState(p, s, u, 0.0), exact)
    scaled = error_norms(mesh, dofmap, DiscreteState(lam * p, lam * s, lam * u, 0.0), exact)
    for got, reference in zip(scaled, base):
        assert got == pytest.approx(lam * reference, rel=1e-12)


def test_rate_formula_on_synthetic_sequences() -> None:
    assert convergence_rate(1.0, 1.0, 0.2, 0.1) == pytest.approx(0.0, abs=1e-15)
    assert convergence_rate(0.4, 0.1, 0.2, 0.1) == pytest.approx(2.0, rel=1e-14)
    assert convergence_rate(0.4, 0.2, 0.2, 0.1) == pytest.approx(1.0, rel=1e-14)
    assert np.isnan(convergence_rate(0.0, 0.1, 0.2, 0.1))


def test_pick_dt_policy_and_snapping() -> None:
    assert _pick_dt("h2", 1e-2, np.sqrt(2.0) / 16.0, 1.0) == pytest.approx(1.0 / 128.0)
    assert _pick_dt("h2", 1e-2, np.sqrt(2.0) / 4.0, 1.0) == pytest.approx(1e-2)
    assert _pick_dt(0.3, 1e-2, 0.5, 1.0) == pytest.approx(1.0 / 3.0)
    assert _pick_dt(0.5, 1e-2, 0.5, 0.0) == 0.5
    with pytest.raises(ValueError):
        _pick_dt("cubic", 1e-2, 0.5, 1.0)
    with pytest.raises(ValueError):
        _pick_dt(-0.1, 1e-2, 0.5, 1.0)


def test_convergence_study_validates_mesh_sizes(law: ForchheimerLaw) -> None:
    with pytest.raises(ValueError):
        convergence_study(law, [])
    with pytest.raises(ValueError):
        convergence_study(law, [4, 4])
    with pytest.raises(ValueError):
        convergence_study(law, [8, 4])


def _tiny_report(law: ForchheimerLaw) -> ConvergenceReport:
    return convergence_study(law, [2, 4], dt=0.05, t_final=0.1)


def test_report_rows_and_runs(law: ForchheimerLaw) -> None:
    report = _tiny_report(law)
    assert [row.n for row in report.rows] == [2, 4]
    first, second = report.rows
    assert first.rate_p is None and first.rate_s is None and first.rate_u is None
    assert second.rate_p is not None
    assert first.dt == pytest.approx(0.05)
    assert first.picard_avg > 0.0
    assert report.runs is not None and len(report.runs) == 2
    assert report.runs[1].mesh.num_triangles == 32
    no_runs = convergence_study(law, [2], dt=0.05, t_final=0.1, keep_runs=False)
    assert no_runs.runs is None


def test_csv_header_and_determinism(law: ForchheimerLaw) -> None:
    report_a = _tiny_report(law)
    report_b = _tiny_report(law)
    csv_a = report_a.to_csv()
    assert csv_a.splitlines()[0] == "n,h,dt,err_p,rate_p,err_s,rate_s,err_u,rate_u,picard_avg"
    assert csv_a == report_b.to_csv()
    lines = csv_a.splitlines()
    assert len(lines) == 3
    first_fields = lines[1].split(",")
    assert first_fields[0] == "2"
    assert first_fields[4] == ""  # no rate on the coarsest row


def test_markdown_layout(law: ForchheimerLaw) -> None:
    text = _tiny_report(law).to_markdown()
    lines = text.splitlines()
    assert lines[0] == "| n | err_p | rate | err_s | rate | err_u | rate |"
    assert lines[1].startswith("|---")
    assert len(lines) == 4
    assert lines[2].split("|")[2].strip() != "-"  # error value present
    assert lines[2].split("|")[3].strip() == "-"  # no rate on the coarsest row
    assert lines[3].split("|")[3].strip() != "-"


def test_oversampled_error_quadrature_is_consistent(capped_report, mms) -> None:
    """Degree-7 error quadrature changes the n=16 norms by under 1 percent."""
    run = capped_report.runs[2]
    assert run.n == 16
    base = error_norms(run.mesh, run.dofmap, run.state, mms)
    fine = error_norms(
        run.mesh, run.dofmap, run.state, mms, rule=triangle_quadrature(7)
    )
    for coarse_value, fine_value in zip(base, fine):
        assert abs(coarse_value - fine_value) / fine_value < 0.01


def test_uncapped_step_policy_restores_second_order(uncapped_errors) -> None:
    """With dt = h^2 everywhere the pressure rates sit at two."""
    rates = [
        convergence_rate(prev[2], cur[2], prev[1], cur[1])
        for prev, cur in zip(uncapped_errors, uncapped_errors[1:])
    ]
    assert all(1.8 <= rate <= 2.2 for rate in rates[1:])
    assert rates[0] > 1.7
