from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from porodarcy.assembly import (DofMap, PointSource, PressureBC, PressurePin,
                                ProblemSpec, VelocityBC, apply_velocity_normal_bc,
                                assemble, assemble_full, boundary_pressure_term,
                                check_problem, constraint_map, element_matrices)
from porodarcy.drag_models import DragModel
from porodarcy.errors import (CompatibilityError, ProblemError,
                              SourcePlacementError, UnsupportedGeometryError)
from porodarcy.fem_core import quadrature_rule, shape_values
from porodarcy.mesh import Mesh, generate_annulus_2d, generate_grid_2d
from porodarcy.picard_solver import run_picard

ELEMENTS = {
    "line2": np.array([[0.2], [1.1]]),
    "tri3": np.array([[0.1, 0.0], [1.2, 0.3], [0.4, 0.9]]),
    "quad4": np.array([[0.0, 0.0], [1.3, 0.1], [1.1, 1.2], [-0.1, 0.9]]),
    "hex8": np.array([[0, 0, 0], [1, 0, 0.1], [1.1, 1, 0], [0, 0.9, 0],
                      [0, 0.1, 1], [1, 0, 1.2], [1, 1, 1], [0.1, 1, 0.9]], float),
}


def body_force(x):
    return np.stack([np.sin(x[:, 0] + k) + x[:, -1] for k in range(x.shape[1])], axis=-1)


def loop_oracle(kind, coords, drag, p_nodal, C, rho):
    """Stabilized forms evaluated basis pair by basis pair in unexpanded form:
    G = (w; a v) - (div w; p) - (q; div v) - 1/2 (a w + grad q; a^-1 (a v + grad p))
    L = (w; f) - 1/2 (a w + grad q; a^-1 f)."""
    rule = quadrature_rule(kind, 2)
    n, nd = coords.shape
    m = nd + 1
    K = np.zeros((n * m, n * m))
    F = np.zeros(n * m)

    def fields(N, G, a, c):
        # (vector part, scalar part, divergence, gradient of scalar part)
        vec = np.zeros(nd)
        scal, div, grad = 0.0, 0.0, np.zeros(nd)
        if c < nd:
            vec[c] = N[a]
            div = G[a, c]
        else:
            scal = N[a]
            grad = G[a].copy()
        return vec, scal, div, grad

    for xi, w in zip(rule.points, rule.weights):
        N, dN = shape_values(kind, xi)
        J = np.zeros((nd, nd))
        for a in range(n):
            J += np.outer(coords[a], dN[a])
        G = dN @ np.linalg.inv(J)
        dV = w * np.linalg.det(J)
        x = N @ coords
        a_q = drag.A * drag.alpha(0, N @ p_nodal)
        f = C * rho * body_force(x[None])[0]
        for A_ in range(n):
            for c in range(m):
                wv, q, divw, gq = fields(N, G, A_, c)
                row = A_ * m + c
                F[row] += dV * (wv @ f - 0.5 * (a_q * wv + gq) @ f / a_q)
                for B_ in range(n):
                    for d in range(m):
                        v, p, divv, gp = fields(N, G, B_, d)
                        g = (wv @ (a_q * v) - divw * p - q * divv
                             - 0.5 * (a_q * wv + gq) @ (a_q * v + gp) / a_q)
                        K[row, B_ * m + d] += dV * g
    return K, F


@pytest.mark.parametrize("law", ["barus", "linear"])
@pytest.mark.parametrize("kind", list(ELEMENTS))
def test_element_matrices_match_loop_oracle(kind, law):
    coords = ELEMENTS[kind]
    rng = np.random.default_rng(1)
    p = rng.uniform(0, 2, len(coords))
    drag = DragModel(law, 1.7, 0.3, A=1.3)
    Ke, fe = element_matrices(kind, coords, drag, p, C=0.8, density=1.1, body_force=body_force)
    K_ref, F_ref = loop_oracle(kind, coords, drag, p, 0.8, 1.1)
    scale = np.abs(K_ref).max()
    np.testing.assert_allclose(Ke, K_ref, rtol=0, atol=1e-14 * scale)
    np.testing.assert_allclose(fe, F_ref, rtol=0, atol=1e-14 * np.abs(F_ref).max())


def test_element_matrix_is_symmetric():
    Ke, _ = element_matrices("quad4", ELEMENTS["quad4"], DragModel("barus", 1.0, 0.5),
                             [0.0, 1.0, 2.0, 3.0])
    np.testing.assert_allclose(Ke, Ke.T, atol=1e-15)


def _five_spot_like(mesh, **kw):
    args = dict(C=0.0, velocity_bcs=tuple(VelocityBC(s) for s in ("left", "right", "bottom", "top")),
                sources=(PointSource((0.0, 0.0), 0.25), PointSource((1.0, 1.0), -0.25)))
    args.update(kw)
    return ProblemSpec(mesh, DragModel("barus", 1.0, 0.3), **args)


@given(st.integers(0, 2 ** 31 - 1), st.sampled_from(["quad4", "tri3"]))
def test_global_system_symmetric_for_any_frozen_pressure(seed, kind):
    problem = _five_spot_like(generate_grid_2d(4, 3, kind))
    p = np.random.default_rng(seed).uniform(-3, 3, problem.mesh.n_nodes)
    K, _ = assemble_full(problem, p)
    assert abs(K - K.T).max() <= 1e-14 * abs(K).max()
    A = assemble(problem, p).matrix
    assert abs(A - A.T).max() <= 1e-14 * abs(A).max()


def test_dof_numbering_is_node_major():
    dm = DofMap(5, 2)
    assert dm.velocity(3, 1) == 10 and dm.pressure(3) == 11 and dm.n_dofs == 15
    v, p = dm.split(np.arange(15.0))
    np.testing.assert_array_equal(p, [2, 5, 8, 11, 14])
    np.testing.assert_array_equal(v[1], [3, 4])


def test_threaded_assembly_is_bitwise_identical(monkeypatch):
    problem = _five_spot_like(generate_grid_2d(9, 7, "tri3"))
    p = np.linspace(0, 1, problem.mesh.n_nodes)
    monkeypatch.setenv("PORODARCY_THREADS", "0")
    K0, r0 = assemble_full(problem, p)
    monkeypatch.setenv("PORODARCY_THREADS", "3")
    K3, r3 = assemble_full(problem, p)
    assert (K0 != K3).nnz == 0
    np.testing.assert_array_equal(r0, r3)


def test_boundary_pressure_term_integrates_normal():
    mesh = generate_grid_2d(3, 3)
    dofs, vals = boundary_pressure_term(mesh, mesh.facet_sets["right"], 2.5)
    rhs = np.zeros(mesh.n_nodes * 3)
    np.add.at(rhs, dofs, vals)
    assert rhs[0::3].sum() == pytest.approx(-2.5)
    assert np.abs(rhs[1::3]).max() == 0.0 and np.abs(rhs[2::3]).max() == 0.0


def test_boundary_pressure_term_rejects_interior_facets():
    mesh = generate_grid_2d(2, 1)
    with pytest.raises(ValueError):
        boundary_pressure_term(mesh, [(0, 1)], 1.0)


def test_later_velocity_condition_wins():
    mesh = generate_grid_2d(2, 2)
    cons = {}
    apply_velocity_normal_bc(cons, mesh, VelocityBC("bottom", 0.0))
    apply_velocity_normal_bc(cons, mesh, VelocityBC("left", 3.0))
    corner = 0 * 3 + 0
    assert cons[corner] == -3.0  # outward normal of the left side is -x
    apply_velocity_normal_bc(cons, mesh, VelocityBC("left", 3.0, mode="component"))
    assert cons[corner] == 3.0
    assert cons[1] == 0.0  # v_y at the corner from the bottom side


def test_callable_velocity_values():
    mesh = generate_grid_2d(2, 2)
    cons = apply_velocity_normal_bc({}, mesh, VelocityBC("top", lambda x: x[:, 0]))
    top_nodes = np.nonzero(np.isclose(mesh.nodes[:, 1], 1.0))[0]
    for k in top_nodes:
        assert cons[k * 3 + 1] == pytest.approx(mesh.nodes[k, 0])


def test_default_pin_only_without_pressure_conditions():
    problem = _five_spot_like(generate_grid_2d(2, 2))
    assert constraint_map(problem)[2] == 0.0
    pinned = replace(problem, pin=PressurePin(4, 1.5))
    cons = constraint_map(pinned)
    assert cons[4 * 3 + 2] == 1.5 and 2 not in cons


def test_incompatible_pure_flux_problem_rejected_before_assembly(monkeypatch):
    problem = _five_spot_like(generate_grid_2d(4, 4),
                              sources=(PointSource((0.0, 0.0), 0.25), PointSource((1.0, 1.0), -0.2)))
    with pytest.raises(CompatibilityError):
        check_problem(problem)

    def boom(*a, **k):
        raise AssertionError("assembly reached")
    monkeypatch.setattr("porodarcy.picard_solver.assemble", boom)
    with pytest.raises(CompatibilityError):
        run_picard(problem)


def test_boundary_flux_counts_toward_compatibility():
    mesh = generate_grid_2d(4, 4)
    bcs = (VelocityBC("left", 0.5, "component"), VelocityBC("right", 0.5, "component"),
           VelocityBC("bottom"), VelocityBC("top"))
    check_problem(ProblemSpec(mesh, DragModel(), velocity_bcs=bcs))
    leaky = bcs[:1] + (VelocityBC("right", 0.6, "component"),) + bcs[2:]
    with pytest.raises(CompatibilityError):
        check_problem(ProblemSpec(mesh, DragModel(), velocity_bcs=leaky))
    # a matching source restores the balance: outflux 0.1 = injection 0.1
    fixed = ProblemSpec(mesh, DragModel(), velocity_bcs=leaky,
                        sources=(PointSource((0.5, 0.5), 0.1),))
    check_problem(fixed)


def test_uncovered_and_overlapping_boundaries():
    mesh = generate_grid_2d(2, 2)
    partial = ProblemSpec(mesh, DragModel(), velocity_bcs=(VelocityBC("left"),),
                          pressure_bcs=(PressureBC("right", 1.0),))
    with pytest.raises(ProblemError, match="no condition"):
        check_problem(partial)
    overlap = ProblemSpec(mesh, DragModel(),
                          velocity_bcs=(VelocityBC("left"), VelocityBC("bottom"), VelocityBC("top")),
                          pressure_bcs=(PressureBC("right", 1.0), PressureBC("left", 0.0)))
    with pytest.raises(ProblemError, match="both"):
        check_problem(overlap)
    with pytest.raises(ProblemError, match="unknown facet set"):
        check_problem(ProblemSpec(mesh, DragModel(), velocity_bcs=(VelocityBC("nowhere"),)))


def test_source_off_node_rejected():
    problem = _five_spot_like(generate_grid_2d(3, 3),
                              sources=(PointSource((0.5, 0.5), 0.0),))
    with pytest.raises(SourcePlacementError):
        check_problem(problem)


def test_curved_boundary_rejects_strong_normal_velocity():
    mesh = generate_annulus_2d(1.0, 2.0, 2, 12)
    problem = ProblemSpec(mesh, DragModel(), velocity_bcs=(VelocityBC("outer"),),
                          pressure_bcs=(PressureBC("inner", 1.0),))
    with pytest.raises(UnsupportedGeometryError):
        assemble(problem, np.zeros(mesh.n_nodes))


def _distorted_grid(kind, seed):
    mesh = generate_grid_2d(6, 5, kind)
    x = mesh.nodes.copy()
    inner = (x[:, 0] > 0) & (x[:, 0] < 1) & (x[:, 1] > 0) & (x[:, 1] < 1)
    x[inner] += np.random.default_rng(seed).uniform(-0.04, 0.04, (inner.sum(), 2))
    return Mesh(2, x, mesh.kinds, mesh.connectivity, facet_sets=mesh.facet_sets)


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("kind", ["quad4", "tri3"])
def test_patch_test_on_distorted_mesh(kind, seed):
    """Uniform Darcy flow is reproduced exactly on an irregular mesh."""
    mesh = _distorted_grid(kind, seed)
    corner = int(np.argmin(np.linalg.norm(mesh.nodes - [1.0, 1.0], axis=1)))
    problem = ProblemSpec(
        mesh, DragModel("barus", 2.0, 0.0), C=0.0,
        velocity_bcs=(VelocityBC("left", 1.0, "component"), VelocityBC("right", 1.0, "component"),
                      VelocityBC("bottom"), VelocityBC("top")),
        pin=PressurePin(corner, 1.0))
    sol, rep = run_picard(problem)
    assert rep.iterations_used == 1
    np.testing.assert_allclose(sol.velocity, np.tile([1.0, 0.0], (mesh.n_nodes, 1)), atol=1e-11)
    np.testing.assert_allclose(sol.pressure, 1.0 + 2.0 * (1 - mesh.nodes[:, 0]), atol=1e-11)


def test_weak_pressure_patch_test():
    """Pressure driven flow with weakly imposed pressures is linear and exact."""
    mesh = _distorted_grid("quad4", 5)
    problem = ProblemSpec(mesh, DragModel("constant", 0.5), C=0.0,
                          velocity_bcs=(VelocityBC("bottom"), VelocityBC("top")),
                          pressure_bcs=(PressureBC("left", 3.0), PressureBC("right", 1.0)))
    sol, _ = run_picard(problem)
    np.testing.assert_allclose(sol.pressure, 3.0 - 2.0 * mesh.nodes[:, 0], atol=1e-11)
    np.testing.assert_allclose(sol.velocity[:, 0], 4.0, atol=1e-10)
