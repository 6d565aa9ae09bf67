"""Closed-form solutions, error norms, fluxes and the packaged problem catalog.

Every packaged problem is non-dimensional.  ``PROBLEMS`` maps a name to a
builder accepting keyword overrides (``beta``, ``law``, ``alpha0``, ``n``,
``eps_tol``, ``max_iters``, ``quad_degree`` and, for 2D grids, ``kind``); see
:func:`problem_parameters`.  Builders return a
:class:`Benchmark` bundling the :class:`ProblemSpec` with its closed-form
solution when one exists.
"""
import inspect
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .assembly import (PointSource, PressureBC, PressurePin, ProblemSpec,
                       VelocityBC)
from .drag_models import DragModel
from .errors import ModelBreakdownError
from .fem_core import physical_gradients_batch, quadrature_rule, shape_values
from .mesh import (classify_boundary, generate_annulus_2d, generate_grid_2d,
                   generate_grid_3d, generate_interval, grid_3d_from_coords,
                   read_mesh, tag_regions)
from .picard_solver import run_picard

# ----------------------------------------------------------------------------
# Closed forms


def analytic_1d(law, alpha0, beta, A, p1, p2, x):
    """Pressure and (constant) velocity of the 1D problem on (0, 1).

    Pressures ``p1`` and ``p2`` are held at x=0 and x=1; no body force.
    """
    x = np.asarray(x, dtype=float)
    if beta == 0.0 or law == "constant":
        return p1 + (p2 - p1) * x, np.full_like(x, (p1 - p2) / (A * alpha0))
    if law == "linear":
        if 1 + beta * p1 <= 0 or 1 + beta * p2 <= 0:
            raise ModelBreakdownError("1 + beta*p must stay positive for the linear law")
        l1, l2 = math.log1p(beta * p1), math.log1p(beta * p2)
        p = np.expm1((1 - x) * l1 + x * l2) / beta
        v = (l1 - l2) / (A * alpha0 * beta)
    elif law == "barus":
        # written through expm1(y)/y and log1p(z)/z, both -> 1, so that
        # nothing is divided by a vanishing beta
        y = beta * (p1 - p2)
        ratio = math.expm1(y) / y if y != 0.0 else 1.0
        z = x * math.expm1(y)
        safe = np.where(z == 0.0, 1.0, z)
        L = np.where(z == 0.0, 1.0, np.log1p(safe) / safe)
        p = p1 - x * (p1 - p2) * ratio * L
        v = math.exp(-beta * p1) * ratio * (p1 - p2) / (A * alpha0)
    else:
        raise ValueError(f"unknown law {law!r}")
    return p, np.full_like(x, v)


def analytic_constant_flow_2d(alpha0, beta, p0, x):
    """Pressure for unit x-velocity through the unit square, p(1, .) = p0."""
    x = np.asarray(x, dtype=float)
    if beta == 0.0:
        return p0 + alpha0 * (1 - x)
    t = alpha0 * beta * (1 - x) * math.exp(beta * p0)
    if np.any(t >= 1):
        raise ModelBreakdownError(f"constant flow cannot be sustained at beta={beta}")
    return p0 - np.log1p(-t) / beta


def _constant_flow_dpdx(alpha0, beta, p0, x):
    if beta == 0.0:
        return np.full_like(x, -alpha0)
    c = alpha0 * math.exp(beta * p0)
    return -c / (1 - beta * c * (1 - x))


def analytic_patch_3d(alpha0, beta, x):
    """Pressure for unit x-velocity with p = 0 at x = 0."""
    x = np.asarray(x, dtype=float)
    if beta == 0.0:
        return -alpha0 * x
    t = alpha0 * beta * x
    if np.any(t <= -1):
        raise ModelBreakdownError(f"patch solution breaks down at beta={beta}")
    return -np.log1p(t) / beta


@dataclass
class AnalyticSolution:
    """Exact fields as callables on point arrays ``(P, nd)``.

    ``pressure_gradient`` is optional; without it the self-check falls back
    to central differences, which limits it to about 1e-8.
    """
    pressure: object
    velocity: object
    body_force: object = None
    law: str = "barus"
    alpha0: float = 1.0
    beta: float = 0.0
    A: float = 1.0
    C: float = 1.0
    rho: float = 1.0
    pressure_gradient: object = None

    def gradient(self, X, h=1e-6):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.pressure_gradient is not None:
            return np.asarray(self.pressure_gradient(X), dtype=float).reshape(X.shape)
        grad = np.empty_like(X)
        for i in range(X.shape[1]):
            e = np.zeros(X.shape[1])
            e[i] = h
            grad[:, i] = (self.pressure(X + e) - self.pressure(X - e)) / (2 * h)
        return grad

    def momentum_residual(self, X):
        """``A alpha(p) v + grad p - C rho b`` at the points ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        drag = DragModel(self.law, self.alpha0, self.beta, self.A)
        a = self.A * drag.alpha(0, self.pressure(X))
        r = a[:, None] * self.velocity(X) + self.gradient(X)
        if self.body_force is not None:
            r -= self.C * self.rho * self.body_force(X)
        return r


def analytic_1d_gradient(law, alpha0, beta, A, p1, p2, x):
    """``dp/dx`` of :func:`analytic_1d`."""
    x = np.asarray(x, dtype=float)
    if beta == 0.0 or law == "constant":
        return np.full_like(x, p2 - p1)
    if law == "linear":
        c1, c2 = 1 + beta * p1, 1 + beta * p2
        return c1 ** (1 - x) * c2 ** x * math.log(c2 / c1) / beta
    e1, e2 = math.exp(-beta * p1), math.exp(-beta * p2)
    return -(e2 - e1) / (beta * ((1 - x) * e1 + x * e2))


def mms_velocity(X):
    x, y = X[:, 0], X[:, 1]
    return np.stack([np.sin(np.pi * x) * np.cos(np.pi * y),
                     -np.cos(np.pi * x) * np.sin(np.pi * y)], axis=-1)


def mms_pressure(X):
    return X[:, 0] ** 2 * X[:, 1] ** 2


def mms_pressure_gradient(X):
    x, y = X[:, 0], X[:, 1]
    return np.stack([2 * x * y ** 2, 2 * x ** 2 * y], axis=-1)


def mms_body_force(X, beta=0.5, alpha0=1.0):
    """Body force balancing the manufactured fields under the Barus law."""
    drag = alpha0 * np.exp(beta * mms_pressure(X))
    return drag[:, None] * mms_velocity(X) + mms_pressure_gradient(X)


def mms_exact(beta=0.5, alpha0=1.0):
    return AnalyticSolution(mms_pressure, mms_velocity,
                            lambda X: mms_body_force(X, beta, alpha0),
                            law="barus", alpha0=alpha0, beta=beta,
                            pressure_gradient=mms_pressure_gradient)


# ----------------------------------------------------------------------------
# Errors and fluxes


def l2_errors(solution, exact, mesh, degree=3):
    """L2 norms of the pressure and velocity errors, ``(e_p, e_v)``."""
    ep = ev = 0.0
    for kind, (_, conn) in mesh.blocks.items():
        rule = quadrature_rule(kind, degree)
        N, dN = shape_values(kind, rule.points)
        coords = mesh.nodes[conn]
        _, detJ = physical_gradients_batch(coords, dN)
        w = detJ * rule.weights
        x = np.einsum("qa,eai->eqi", N, coords)
        flat = x.reshape(-1, mesh.dimension)
        ph = np.einsum("qa,ea->eq", N, solution.pressure[conn])
        vh = np.einsum("qa,eai->eqi", N, solution.velocity[conn])
        ep += np.sum(w * (ph - exact.pressure(flat).reshape(ph.shape)) ** 2)
        ev += np.sum(w * np.sum((vh - exact.velocity(flat).reshape(vh.shape)) ** 2, axis=-1))
    return math.sqrt(ep), math.sqrt(ev)


def facet_flux(mesh, solution, facets):
    """``sum int v_h . n dGamma`` with ``n`` outward from each facet's element."""
    facets = np.asarray(facets, dtype=int).reshape(-1, 2)
    fnodes, N, _, dS, normal = mesh.facet_data(facets)
    v = np.einsum("qa,fai->fqi", N, solution.velocity[fnodes])
    return float(np.sum(np.einsum("fqi,fqi->fq", v, normal) * dS))


def section_fluxes(problem, solution):
    """Signed fluxes of every named section of ``problem``."""
    return {name: sign * facet_flux(problem.mesh, solution, facets)
            for name, (facets, sign) in problem.flux_sections.items()}


def fit_rate(h, e):
    """Least-squares slope of log e against log h."""
    h, e = np.asarray(h, float), np.asarray(e, float)
    if np.any(e <= 0):
        return math.inf
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


@dataclass
class ConvergenceReport:
    h: list = field(default_factory=list)
    e_p: list = field(default_factory=list)
    e_v: list = field(default_factory=list)
    all_converged: bool = True
    exact_level: float = 1e-11

    @property
    def rate_p(self):
        return self._rate(self.e_p)

    @property
    def rate_v(self):
        return self._rate(self.e_v)

    def _rate(self, e):
        if max(e) <= self.exact_level:
            return "exact"
        return fit_rate(self.h, e)

    def to_csv(self):
        lines = ["h,e_p,e_v"]
        lines += [f"{h:.17g},{p:.17g},{v:.17g}" for h, p, v in zip(self.h, self.e_p, self.e_v)]

        def fmt(r):
            return r if isinstance(r, str) else f"{r:.17g}"
        lines.append(f"rates,{fmt(self.rate_p)},{fmt(self.rate_v)}")
        return "\n".join(lines) + "\n"


def convergence_study(family, sizes, **overrides):
    """Run ``PROBLEMS[family]`` on each size in ``sizes`` and fit L2 rates.

    The family must carry an exact solution; ``h`` is ``1 / n``.
    """
    sizes = list(sizes)
    if len(sizes) < 3:
        raise ValueError("a convergence study needs at least 3 mesh sizes")
    report = ConvergenceReport()
    for n in sorted(sizes):
        bench = PROBLEMS[family](n=n, **overrides)
        if bench.exact is None:
            raise ValueError(f"problem {family!r} has no exact solution")
        sol, rep = run_picard(bench.problem)
        e_p, e_v = l2_errors(sol, bench.exact, bench.problem.mesh)
        report.h.append(1.0 / n)
        report.e_p.append(e_p)
        report.e_v.append(e_v)
        report.all_converged &= rep.converged
    return report


# ----------------------------------------------------------------------------
# Packaged problems


@dataclass
class Benchmark:
    problem: ProblemSpec
    exact: AnalyticSolution = None
    description: str = ""


def _nearest_node(mesh, point):
    return int(np.argmin(np.linalg.norm(mesh.nodes - np.asarray(point, float)[None], axis=1)))


def _require_barus(law, what):
    if law != "barus":
        raise ValueError(f"the {what} closed form is for the Barus law, not {law!r}")


def _drag(law, alpha0, beta, A=1.0):
    return DragModel(law, alpha0, beta, A)


def one_d(beta=0.02, law="barus", alpha0=1.0, n=100, p1=200.0, p2=1.0, A=1.0,
          eps_tol=1e-10, max_iters=500, quad_degree=2):
    mesh = generate_interval(n)
    problem = ProblemSpec(mesh, _drag(law, alpha0, beta, A), C=0.0,
                          pressure_bcs=(PressureBC("left", p1), PressureBC("right", p2)),
                          eps_tol=eps_tol, max_iters=max_iters, quad_degree=quad_degree,
                          name="oneD")
    exact = AnalyticSolution(lambda X: analytic_1d(law, alpha0, beta, A, p1, p2, X[:, 0])[0],
                             lambda X: analytic_1d(law, alpha0, beta, A, p1, p2, X[:, 0])[1][:, None],
                             law=law, alpha0=alpha0, beta=beta, A=A,
                             pressure_gradient=lambda X: analytic_1d_gradient(
                                 law, alpha0, beta, A, p1, p2, X[:, 0])[:, None])
    return Benchmark(problem, exact, "unit interval, pressures held at both ends")


def constant_2d(beta=0.1, law="barus", alpha0=1.0, n=20, kind="quad4", p0=1.0,
                eps_tol=1e-10, max_iters=200, quad_degree=2):
    _require_barus(law, "constant-flow")
    mesh = generate_grid_2d(n, n, kind)
    problem = ProblemSpec(
        mesh, _drag(law, alpha0, beta), C=0.0,
        velocity_bcs=(VelocityBC("left", 1.0, "component"), VelocityBC("right", 1.0, "component"),
                      VelocityBC("bottom", 0.0), VelocityBC("top", 0.0)),
        pin=PressurePin(_nearest_node(mesh, (1.0, 1.0)), p0),
        flux_sections={"inflow": (mesh.facet_sets["left"], -1.0),
                       "outflow": (mesh.facet_sets["right"], 1.0)},
        eps_tol=eps_tol, max_iters=max_iters, quad_degree=quad_degree, name="constant2d")
    exact = AnalyticSolution(lambda X: analytic_constant_flow_2d(alpha0, beta, p0, X[:, 0]),
                             lambda X: np.tile([1.0, 0.0], (len(X), 1)),
                             law=law, alpha0=alpha0, beta=beta,
                             pressure_gradient=lambda X: np.stack(
                                 [_constant_flow_dpdx(alpha0, beta, p0, X[:, 0]),
                                  np.zeros(len(X))], axis=-1))
    return Benchmark(problem, exact, "uniform flow through the unit square")


def _five_spot_problem(mesh, drag, name, eps_tol, max_iters, quad_degree):
    return ProblemSpec(
        mesh, drag, C=0.0,
        velocity_bcs=tuple(VelocityBC(s, 0.0) for s in ("left", "right", "bottom", "top")),
        sources=(PointSource((0.0, 0.0), 0.25), PointSource((1.0, 1.0), -0.25)),
        eps_tol=eps_tol, max_iters=max_iters, quad_degree=quad_degree, name=name)


def five_spot(beta=0.3, law="barus", alpha0=1.0, n=20, kind="quad4",
              eps_tol=1e-10, max_iters=200, quad_degree=2):
    mesh = generate_grid_2d(n, n, kind)
    problem = _five_spot_problem(mesh, _drag(law, alpha0, beta), "fivespot",
                                 eps_tol, max_iters, quad_degree)
    return Benchmark(problem, None, "quarter five-spot: injection (0,0), production (1,1)")


CHECKERBOARD_ALPHA0 = {1: 1.0, 2: 0.001, 3: 0.001, 4: 1.0}


def checkerboard_region(c):
    """Quadrant tag: I lower-left, II lower-right, III upper-left, IV upper-right."""
    right, upper = c[0] > 0.5, c[1] > 0.5
    return 1 + int(right) + 2 * int(upper)


def checkerboard(beta=0.3, law="barus", alpha0=None, n=20, kind="quad4",
                 eps_tol=1e-9, max_iters=200, quad_degree=2):
    mesh = tag_regions(generate_grid_2d(n, n, kind), checkerboard_region)
    problem = _five_spot_problem(mesh, _drag(law, alpha0 or CHECKERBOARD_ALPHA0, beta),
                                 "checkerboard", eps_tol, max_iters, quad_degree)
    return Benchmark(problem, None, "five-spot with alpha0 = 1 in I/IV and 0.001 in II/III")


def manufactured(beta=0.5, law="barus", alpha0=1.0, n=20, kind="quad4",
                 eps_tol=1e-9, max_iters=200, quad_degree=2):
    _require_barus(law, "manufactured")
    mesh = generate_grid_2d(n, n, kind)
    problem = ProblemSpec(
        mesh, _drag(law, alpha0, beta), C=1.0, density=1.0,
        body_force=lambda X: mms_body_force(X, beta, alpha0),
        velocity_bcs=tuple(VelocityBC(s, 0.0) for s in ("left", "right", "bottom", "top")),
        pin=PressurePin(_nearest_node(mesh, (0.0, 0.0)), 0.0),
        eps_tol=eps_tol, max_iters=max_iters, quad_degree=quad_degree, name="mms")
    return Benchmark(problem, mms_exact(beta, alpha0), "manufactured solution p = x^2 y^2")


def patch_3d(beta=0.1, law="barus", alpha0=1.0, n=5, eps_tol=1e-9,
             max_iters=200, quad_degree=2):
    _require_barus(law, "patch-test")
    mesh = generate_grid_3d(n, n, n, ((0.0, 5.0),) * 3)
    problem = ProblemSpec(
        mesh, _drag(law, alpha0, beta), C=0.0,
        velocity_bcs=(VelocityBC("left", 1.0, "component"), VelocityBC("right", 1.0, "component"))
        + tuple(VelocityBC(s, 0.0) for s in ("front", "back", "bottom", "top")),
        pin=PressurePin(_nearest_node(mesh, (0.0, 0.0, 0.0)), 0.0),
        eps_tol=eps_tol, max_iters=max_iters, quad_degree=quad_degree, name="patch3d")
    exact = AnalyticSolution(lambda X: analytic_patch_3d(alpha0, beta, X[:, 0]),
                             lambda X: np.tile([1.0, 0.0, 0.0], (len(X), 1)),
                             law=law, alpha0=alpha0, beta=beta,
                             pressure_gradient=lambda X: np.stack(
                                 [-alpha0 / (1 + alpha0 * beta * X[:, 0]),
                                  np.zeros(len(X)), np.zeros(len(X))], axis=-1))
    return Benchmark(problem, exact, "3D constant-flow patch test on (0,5)^3")


# Regions with different permeability: annulus cross-section of radius 100
# around a unit-radius production well, straight interface at x = 5.
REGION_A, REGION_B = 1, 2
REGIONS_INTERFACE_X = 5.0
REGIONS_ALPHA0 = {REGION_A: 0.001, REGION_B: 1.0}


def build_regions_mesh(n_radial=32, n_theta=72, ratio=1.12):
    mesh = generate_annulus_2d(1.0, 100.0, n_radial, n_theta, ratio)
    mesh = tag_regions(mesh, lambda c: REGION_A if c[0] < REGIONS_INTERFACE_X else REGION_B)
    return mesh.with_facet_sets({"well": mesh.facet_sets["inner"],
                                 "farfield": mesh.facet_sets["outer"]})


# Leakage: two aquifers (A below, B above) separated by an unmeshed aquitard
# that only the abandoned-well column crosses.  Lengths in units of 100 m.
LEAK_Z = (0.0, 0.3, 0.6, 0.9)
LEAK_INJECTION_XY = (-0.5, 0.0)
LEAK_WELL_XY = (0.5, 0.0)
LEAK_WELL_HALF = 0.1
LEAK_FARFIELD = 5.0
AQUIFER_A, AQUIFER_B, WELL = 1, 2, 3
LEAKAGE_ALPHA0 = {AQUIFER_A: 1.0, AQUIFER_B: 1.0, WELL: 100.0}


def _graded_axis(centres, half, n_fine, extent, growth=0.5):
    """1D coordinates on ``[-extent, extent]``: ``n_fine`` uniform cells on each
    ``centre +- half``, cell size growing linearly with distance elsewhere."""
    h0 = 2 * half / n_fine
    zones = sorted((c - half, c + half) for c in centres)

    def size(x):
        return h0 + growth * min(max(lo - x, x - hi, 0.0) for lo, hi in zones)

    breaks = [-extent] + [v for z in zones for v in z] + [extent]
    pts = []
    for i, (a, b) in enumerate(zip(breaks[:-1], breaks[1:])):
        if i % 2 == 1:
            pts.extend(np.linspace(a, b, n_fine + 1)[:-1])
            continue
        gap = [a]
        while gap[-1] + 1.5 * size(gap[-1]) < b:
            gap.append(gap[-1] + size(gap[-1]))
        # stretch so the cells exactly fill [a, b]
        end = gap[-1] + size(gap[-1])
        pts.extend(a + (np.array(gap) - a) * (b - a) / (end - a))
    pts.append(extent)
    return np.unique(np.round(pts, 12))


def build_leakage_mesh(n_fine=4, growth=0.5):
    xs = _graded_axis([LEAK_INJECTION_XY[0], LEAK_WELL_XY[0]], LEAK_WELL_HALF, n_fine,
                      LEAK_FARFIELD, growth)
    ys = _graded_axis([0.0], LEAK_WELL_HALF, n_fine, LEAK_FARFIELD, growth)
    zs = np.array([0.0, 0.15, 0.3, 0.4, 0.5, 0.6, 0.75, 0.9])
    xc = (xs[:-1] + xs[1:]) / 2
    yc = (ys[:-1] + ys[1:]) / 2
    zc = (zs[:-1] + zs[1:]) / 2

    def in_column(x, y, xy):
        return abs(x - xy[0]) < LEAK_WELL_HALF and abs(y - xy[1]) < LEAK_WELL_HALF

    def keep(i, j, k):
        return not (LEAK_Z[1] < zc[k] < LEAK_Z[2]) or in_column(xc[i], yc[j], LEAK_WELL_XY)

    mesh = grid_3d_from_coords(xs, ys, zs, keep)

    def region(c):
        if LEAK_Z[1] < c[2] < LEAK_Z[2]:
            return WELL
        return AQUIFER_A if c[2] < LEAK_Z[1] else AQUIFER_B

    mesh = tag_regions(mesh, region)

    def boundary(c, n):
        axis = int(np.argmax(np.abs(n)))
        if axis < 2:
            if abs(abs(c[axis]) - LEAK_FARFIELD) < 1e-9:
                return "sides_A" if c[2] < LEAK_Z[1] else "sides_B"
            return "column_sides"
        if abs(c[2] - LEAK_Z[0]) < 1e-9 and in_column(c[0], c[1], LEAK_INJECTION_XY):
            return "inlet"
        return "no_flow"

    return mesh.with_facet_sets(classify_boundary(mesh, boundary))


def _data_mesh(name, builder):
    try:
        path = resources.files("porodarcy") / "data" / name
        if path.is_file():
            with resources.as_file(path) as p:
                return read_mesh(p)
    except (FileNotFoundError, ModuleNotFoundError):
        pass
    return builder()


def regions(beta=0.5, law="linear", alpha0=None, n=None, eps_tol=1e-12,
            max_iters=200, quad_degree=2, p_far=1.0, p_well=3.333e-4):
    mesh = _data_mesh("regions.msh", build_regions_mesh) if n is None else \
        build_regions_mesh(n_radial=n, n_theta=2 * n + 8)
    far = mesh.facet_sets["farfield"]
    far_tags = mesh.region_tags[far[:, 0]]
    problem = ProblemSpec(
        mesh, _drag(law, alpha0 or REGIONS_ALPHA0, beta), C=0.0,
        pressure_bcs=(PressureBC("farfield", p_far), PressureBC("well", p_well)),
        eps_tol=eps_tol, max_iters=max_iters, quad_degree=quad_degree, name="regions",
        flux_sections={"production": (mesh.facet_sets["well"], 1.0),
                       "inflow_A": (far[far_tags == REGION_A], -1.0),
                       "inflow_B": (far[far_tags == REGION_B], -1.0)})
    return Benchmark(problem, None, "production well near a permeability interface")


def leakage_coarse(beta=0.5, law="barus", alpha0=None, n=None, eps_tol=1e-12,
                   max_iters=200, quad_degree=2, p_a=1.0, p_b=0.95, inflow=0.262):
    mesh = _data_mesh("leakage.msh", build_leakage_mesh) if n is None else \
        build_leakage_mesh(n_fine=n)
    # injection: everything entering through the bottom of aquifer A, which
    # includes the partial flux of facets bordering the inlet patch
    bottom = np.vstack([mesh.facet_sets["inlet"], mesh.facet_sets["no_flow"]])
    fz = np.array([mesh.nodes[list(mesh.facet_nodes(e, lf)), 2].max() for e, lf in bottom])
    col = np.nonzero(mesh.region_tags == WELL)[0]
    top_z = mesh.nodes[np.asarray(mesh.connectivity)[col]][..., 2].max()
    section = np.array([(e, 1) for e in col
                        if np.allclose(mesh.nodes[list(mesh.facet_nodes(e, 1)), 2], top_z)])
    problem = ProblemSpec(
        mesh, _drag(law, alpha0 or LEAKAGE_ALPHA0, beta), C=0.0,
        velocity_bcs=(VelocityBC("no_flow", 0.0), VelocityBC("column_sides", 0.0),
                      VelocityBC("inlet", -inflow)),
        pressure_bcs=(PressureBC("sides_A", p_a), PressureBC("sides_B", p_b)),
        eps_tol=eps_tol, max_iters=max_iters, quad_degree=quad_degree, name="leakage-coarse",
        flux_sections={"injection": (bottom[fz <= LEAK_Z[0] + 1e-9], -1.0),
                       "leakage": (section, 1.0)})
    return Benchmark(problem, None, "CO2 injection next to an abandoned well crossing an aquitard")


PROBLEMS = {
    "oneD": one_d,
    "constant2d": constant_2d,
    "fivespot": five_spot,
    "checkerboard": checkerboard,
    "mms": manufactured,
    "patch3d": patch_3d,
    "regions": regions,
    "leakage-coarse": leakage_coarse,
}

PROBLEM_DESCRIPTIONS = {
    "oneD": "unit interval, pressures 200 and 1 held at the ends",
    "constant2d": "uniform unit flow through the unit square, closed-form pressure",
    "fivespot": "quarter five-spot, no-flow walls, wells at (0,0) and (1,1)",
    "checkerboard": "five-spot with alpha0 = 1 on the lower-left/upper-right quadrants, 0.001 elsewhere",
    "mms": "manufactured solution p = x^2 y^2 with body force",
    "patch3d": "3D uniform-flow patch test on (0,5)^3",
    "regions": "production well next to a permeability interface (annulus)",
    "leakage-coarse": "injection next to an abandoned well crossing an aquitard",
}


def packaged_problems():
    return dict(PROBLEMS)


def problem_parameters(name):
    """Names of the keyword overrides accepted by problem ``name``."""
    return tuple(inspect.signature(_builder(name)).parameters)


def _builder(name):
    if name not in PROBLEMS:
        raise KeyError(f"unknown problem {name!r}; available: {', '.join(PROBLEMS)}")
    return PROBLEMS[name]


def get_problem(name, **overrides):
    """Build problem ``name``; ``None`` overrides keep the defaults."""
    builder = _builder(name)
    given = {k: v for k, v in overrides.items() if v is not None}
    unknown = sorted(set(given) - set(problem_parameters(name)))
    if unknown:
        raise ValueError(f"problem {name!r} does not take {', '.join(unknown)}")
    return builder(**given)

