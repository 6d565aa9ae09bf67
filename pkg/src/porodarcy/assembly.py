"""Global linear system for one fixed-point step of the stabilized formulation.

For a frozen pressure iterate ``pt`` the drag ``a = A * alpha(pt)`` is known
and the bilinear and linear forms are::

    G(w,q; v,p) = (w; a v) - (div w; p) - (q; div v)
                  - 1/2 (a w + grad q; a^-1 (a v + grad p))
    L(w,q)      = (w; f) - (w.n; p0)_Gp - 1/2 (a w + grad q; a^-1 f)

with ``f = C * rho * b``.  Expanded, the velocity block carries ``a/2``,
the pressure block ``-1/2 a^-1 grad.grad`` and the couplings are
``-(div w; p) - 1/2 (w; grad p)`` and their transposes.

Degrees of freedom are node-major: node ``k`` owns ``nd`` velocity
components followed by its pressure, ``dof = k * (nd + 1) + c``.

Boundary facets must all belong to a velocity or a pressure facet set.
Normal velocity is imposed strongly (by elimination) and only on
axis-aligned facets; pressure enters weakly through the boundary term.
"""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import (CompatibilityError, ProblemError, SourcePlacementError,
                     UnsupportedGeometryError)
from .fem_core import (ELEMENT_NODES, FACET_KIND, physical_gradients_batch,
                       quadrature_rule, shape_values)

AXIS_TOL = 1e-10
COMPATIBILITY_TOL = 1e-10


@dataclass(frozen=True)
class VelocityBC:
    """Strong normal-velocity condition on a facet set.

    ``mode="normal"``: ``value`` is ``v.n`` with ``n`` the outward normal.
    ``mode="component"``: ``value`` is the velocity component along the
    facet's normal axis, whatever the orientation.
    ``value`` is a number or a callable ``x (P, nd) -> (P,)``.
    """
    facet_set: str
    value: object = 0.0
    mode: str = "normal"

    def __post_init__(self):
        if self.mode not in ("normal", "component"):
            raise ValueError(f"unknown velocity BC mode {self.mode!r}")


@dataclass(frozen=True)
class PressureBC:
    facet_set: str
    value: object = 0.0


@dataclass(frozen=True)
class PointSource:
    """Volumetric source collocated at a mesh node (+ injection, - production)."""
    location: tuple
    strength: float


@dataclass(frozen=True)
class PressurePin:
    node: int
    value: float = 0.0


@dataclass(frozen=True)
class ProblemSpec:
    mesh: object
    drag: object
    C: float = 1.0
    density: object = 1.0
    body_force: object = None
    velocity_bcs: tuple = ()
    pressure_bcs: tuple = ()
    pin: PressurePin = None
    sources: tuple = ()
    eps_tol: float = 1e-10
    max_iters: int = 100
    quad_degree: int = 2
    name: str = ""
    flux_sections: dict = field(default_factory=dict)

    @property
    def nd(self):
        return self.mesh.dimension

    @property
    def n_dofs(self):
        return self.mesh.n_nodes * (self.nd + 1)


def _evaluate(value, x):
    """Evaluate a constant or callable datum at points ``x`` of shape (..., nd)."""
    if callable(value):
        flat = x.reshape(-1, x.shape[-1])
        out = np.asarray(value(flat), dtype=float)
        return out.reshape(x.shape[:-1] + out.shape[1:])
    return np.full(x.shape[:-1], float(value))


@dataclass
class DofMap:
    n_nodes: int
    nd: int

    @property
    def per_node(self):
        return self.nd + 1

    @property
    def n_dofs(self):
        return self.n_nodes * self.per_node

    def velocity(self, node, comp):
        return np.asarray(node) * self.per_node + comp

    def pressure(self, node):
        return np.asarray(node) * self.per_node + self.nd

    def split(self, x):
        x = np.asarray(x).reshape(self.n_nodes, self.per_node)
        return x[:, :self.nd].copy(), x[:, self.nd].copy()


@dataclass
class LinearSystem:
    """Reduced system over unconstrained dofs, plus what is needed to expand."""
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dofmap: DofMap
    free: np.ndarray
    constrained: np.ndarray
    constrained_values: np.ndarray

    def expand(self, x_free):
        x = np.empty(self.dofmap.n_dofs)
        x[self.free] = x_free
        x[self.constrained] = self.constrained_values
        return x


# ----------------------------------------------------------------------------
# Element level

def block_matrices(N, grads, wdet, a, f):
    """Element matrices for a batch of same-kind elements.

    ``N``: (Q, n) shape values; ``grads``: (E, Q, n, nd) physical
    gradients; ``wdet``: (E, Q) quadrature weight times det J; ``a``: (E, Q)
    scaled drag at quadrature points; ``f``: (E, Q, nd) scaled body force or
    None.  Returns ``Ke`` (E, n(nd+1), n(nd+1)) and ``fe`` (E, n(nd+1)).
    """
    E, Q, n, nd = grads.shape
    m = nd + 1
    Ke = np.zeros((E, n, m, n, m))
    mass = np.einsum("eq,qa,qb->eab", wdet * a, N, N)
    for i in range(nd):
        Ke[:, :, i, :, i] = 0.5 * mass
    # B[e, a, b, i] = int dN_a/dx_i N_b
    B = np.einsum("eq,eqai,qb->eabi", wdet, grads, N)
    Kvp = -B - 0.5 * B.transpose(0, 2, 1, 3)
    Ke[:, :, :nd, :, nd] = Kvp.transpose(0, 1, 3, 2)
    Ke[:, :, nd, :, :nd] = Kvp.transpose(0, 2, 1, 3)
    Ke[:, :, nd, :, nd] = -0.5 * np.einsum("eq,eqai,eqbi->eab", wdet / a, grads, grads)
    fe = np.zeros((E, n, m))
    if f is not None:
        fe[:, :, :nd] = 0.5 * np.einsum("eq,qa,eqi->eai", wdet, N, f)
        fe[:, :, nd] = -0.5 * np.einsum("eq,eqai,eqi->ea", wdet / a, grads, f)
    return Ke.reshape(E, n * m, n * m), fe.reshape(E, n * m)


def _block_terms(problem, kind, conn, tags, p_tilde, rule):
    mesh = problem.mesh
    coords = mesh.nodes[conn]
    N, dN = shape_values(kind, rule.points)
    grads, detJ = physical_gradients_batch(coords, dN)
    wdet = detJ * rule.weights[None, :]
    pt = np.einsum("qa,ea->eq", N, p_tilde[conn])
    a = problem.drag.A * problem.drag.region_alpha0(tags)[:, None] * problem.drag.factor(pt)
    f = None
    if problem.body_force is not None:
        x = np.einsum("qa,eai->eqi", N, coords)
        b = _evaluate(problem.body_force, x)
        rho = _evaluate(problem.density, x)
        f = problem.C * rho[..., None] * b
    return block_matrices(N, grads, wdet, a, f)


def element_matrices(kind, node_coords, drag, p_tilde_nodal, region_tag=0, C=1.0,
                     density=1.0, body_force=None, rule=None):
    """``(Ke, fe)`` for a single element; see :func:`block_matrices`."""
    rule = rule or quadrature_rule(kind, 2)
    coords = np.asarray(node_coords, dtype=float).reshape(1, ELEMENT_NODES[kind], -1)
    N, dN = shape_values(kind, rule.points)
    grads, detJ = physical_gradients_batch(coords, dN)
    wdet = detJ * rule.weights[None, :]
    pt = N @ np.asarray(p_tilde_nodal, dtype=float)
    a = drag.A * drag.alpha(region_tag, pt)[None, :]
    f = None
    if body_force is not None:
        x = np.einsum("qa,eai->eqi", N, coords)
        f = C * _evaluate(density, x)[..., None] * _evaluate(body_force, x)
    Ke, fe = block_matrices(N, grads, wdet, a, f)
    return Ke[0], fe[0]


# ----------------------------------------------------------------------------
# Boundary terms, constraints and sources

def _facets(mesh, name):
    if name not in mesh.facet_sets:
        raise ProblemError(f"unknown facet set {name!r}; mesh has {sorted(mesh.facet_sets)}")
    return mesh.facet_sets[name]


def boundary_pressure_term(mesh, facets, p0, rule_degree=2):
    """RHS contribution ``-(w.n; p0)`` over ``facets``.

    Returns ``(dofs, values)`` to be scatter-added into the global RHS.
    """
    facets = np.asarray(facets, dtype=int).reshape(-1, 2)
    boundary = set(map(tuple, mesh.boundary_facets.tolist()))
    for f in facets.tolist():
        if tuple(f) not in boundary:
            raise ValueError(f"facet {tuple(f)} is not on the boundary")
    nd = mesh.dimension
    fkind = FACET_KIND[mesh.kinds[facets[0, 0]]]
    fnodes, N, x, dS, normal = mesh.facet_data(facets, quadrature_rule(fkind, rule_degree))
    p0q = _evaluate(p0, x)
    vals = -np.einsum("fq,qa,fqi->fai", dS * p0q, N, normal)
    dofs = fnodes[:, :, None] * (nd + 1) + np.arange(nd)[None, None, :]
    return dofs.ravel(), vals.ravel()


def facet_axes(mesh, facets):
    """Axis index and sign of the outward normal of axis-aligned facets."""
    _, _, _, _, normal = mesh.facet_data(facets)
    axis = np.argmax(np.abs(normal), axis=-1)[:, 0]
    sign = np.sign(normal[np.arange(len(facets)), 0, axis])
    aligned = np.abs(np.abs(normal[np.arange(len(facets)), :, axis]) - 1.0) <= AXIS_TOL
    if not np.all(aligned):
        bad = facets[np.nonzero(~np.all(aligned, axis=1))[0][0]]
        raise UnsupportedGeometryError(
            f"strong normal velocity needs axis-aligned facets; facet {tuple(bad)} is not")
    return axis, sign


def apply_velocity_normal_bc(constraints, mesh, bc):
    """Add the strong constraints of ``bc`` to ``constraints`` (dof -> value).

    A later condition on the same dof overrides an earlier one.
    """
    facets = _facets(mesh, bc.facet_set)
    axis, sign = facet_axes(mesh, facets)
    nd = mesh.dimension
    for (e, lf), k, s in zip(facets.tolist(), axis, sign):
        nodes = np.array(mesh.facet_nodes(e, lf))
        vals = _evaluate(bc.value, mesh.nodes[nodes])
        if bc.mode == "normal":
            vals = vals * s
        for node, v in zip(nodes.tolist(), vals.tolist()):
            constraints[node * (nd + 1) + int(k)] = v
    return constraints


def source_nodes(mesh, sources, tol=1e-10):
    nodes = []
    for src in sources:
        loc = np.asarray(src.location, dtype=float).reshape(-1)
        d = np.linalg.norm(mesh.nodes - loc[None, :], axis=1)
        k = int(np.argmin(d))
        if d[k] > tol:
            raise SourcePlacementError(
                f"source at {tuple(loc)} is {d[k]:.3g} from the nearest node")
        nodes.append(k)
    return nodes


def add_point_sources(rhs, sources, mesh):
    """Add ``-strength`` to the pressure-test row of each source node."""
    nd = mesh.dimension
    for node, src in zip(source_nodes(mesh, sources), sources):
        rhs[node * (nd + 1) + nd] -= src.strength
    return rhs


def boundary_velocity_flux(mesh, bc, rule_degree=2):
    """Prescribed outward flux ``int v.n dGamma`` of a velocity BC."""
    facets = _facets(mesh, bc.facet_set)
    fkind = FACET_KIND[mesh.kinds[facets[0, 0]]]
    _, _, x, dS, normal = mesh.facet_data(facets, quadrature_rule(fkind, rule_degree))
    val = _evaluate(bc.value, x)
    if bc.mode == "component":
        axis, _ = facet_axes(mesh, facets)
        val = val * normal[np.arange(len(facets)), :, axis]
    return float(np.sum(val * dS))


def check_problem(problem):
    """Validate boundary sets, sources and, for pure-flux problems, compatibility."""
    mesh = problem.mesh
    vnames = [bc.facet_set for bc in problem.velocity_bcs]
    pnames = [bc.facet_set for bc in problem.pressure_bcs]
    for name in vnames + pnames:
        _facets(mesh, name)
    vf = {tuple(f) for n in vnames for f in mesh.facet_sets[n].tolist()}
    pf = {tuple(f) for n in pnames for f in mesh.facet_sets[n].tolist()}
    if vf & pf:
        raise ProblemError(f"{len(vf & pf)} facet(s) carry both velocity and pressure conditions")
    uncovered = set(map(tuple, mesh.boundary_facets.tolist())) - vf - pf
    if uncovered:
        raise ProblemError(f"{len(uncovered)} boundary facet(s) have no condition, "
                           f"e.g. {sorted(uncovered)[0]}")
    source_nodes(mesh, problem.sources)
    if problem.pin is not None and not 0 <= problem.pin.node < mesh.n_nodes:
        raise ProblemError(f"pressure pin node {problem.pin.node} out of range")
    if not problem.pressure_bcs:
        outflux = sum(boundary_velocity_flux(mesh, bc) for bc in problem.velocity_bcs)
        injected = sum(s.strength for s in problem.sources)
        if abs(outflux - injected) > COMPATIBILITY_TOL:
            raise CompatibilityError(
                f"pure-flux problem is incompatible: boundary outflux {outflux:.6g} "
                f"but net source {injected:.6g}")


def constraint_map(problem):
    constraints = {}
    for bc in problem.velocity_bcs:
        apply_velocity_normal_bc(constraints, problem.mesh, bc)
    nd = problem.nd
    pin = problem.pin
    if pin is None and not problem.pressure_bcs:
        pin = PressurePin(0, 0.0)
    if pin is not None:
        constraints[pin.node * (nd + 1) + nd] = float(pin.value)
    return constraints


# ----------------------------------------------------------------------------
# Global assembly

def _threads():
    try:
        return max(0, int(os.environ.get("PORODARCY_THREADS", "0")))
    except ValueError:
        return 0


def assemble_full(problem, p_tilde):
    """Unconstrained global matrix (CSR) and RHS before elimination."""
    mesh = problem.mesh
    nd = problem.nd
    m = nd + 1
    p_tilde = np.asarray(p_tilde, dtype=float)
    if p_tilde.shape != (mesh.n_nodes,):
        raise ValueError(f"p_tilde must have one value per node ({mesh.n_nodes})")
    rows, cols, vals = [], [], []
    rhs = np.zeros(mesh.n_nodes * m)
    n_threads = _threads()
    for kind, (idx, conn) in mesh.blocks.items():
        rule = quadrature_rule(kind, problem.quad_degree)
        tags = mesh.region_tags[idx]
        chunks = [slice(0, len(idx))]
        if n_threads > 1 and len(idx) > n_threads:
            bounds = np.linspace(0, len(idx), n_threads + 1).astype(int)
            chunks = [slice(b0, b1) for b0, b1 in zip(bounds[:-1], bounds[1:])]

        def work(s):
            return _block_terms(problem, kind, conn[s], tags[s], p_tilde, rule)

        if len(chunks) > 1:
            with ThreadPoolExecutor(n_threads) as pool:
                results = list(pool.map(work, chunks))
        else:
            results = [work(chunks[0])]
        for s, (Ke, fe) in zip(chunks, results):
            gd = (conn[s][:, :, None] * m + np.arange(m)[None, None, :]).reshape(len(Ke), -1)
            nl = gd.shape[1]
            rows.append(np.repeat(gd, nl, axis=1).ravel())
            cols.append(np.tile(gd, (1, nl)).ravel())
            vals.append(Ke.ravel())
            np.add.at(rhs, gd.ravel(), fe.ravel())
    n = mesh.n_nodes * m
    K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()
    K.sum_duplicates()
    for bc in problem.pressure_bcs:
        dofs, v = boundary_pressure_term(mesh, _facets(mesh, bc.facet_set), bc.value)
        np.add.at(rhs, dofs, v)
    add_point_sources(rhs, problem.sources, mesh)
    return K, rhs


def assemble(problem, p_tilde):
    """Reduced :class:`LinearSystem` for the step frozen at ``p_tilde``."""
    K, rhs = assemble_full(problem, p_tilde)
    constraints = constraint_map(problem)
    dofmap = DofMap(problem.mesh.n_nodes, problem.nd)
    constrained = np.array(sorted(constraints), dtype=int)
    cvals = np.array([constraints[d] for d in constrained], dtype=float)
    mask = np.ones(dofmap.n_dofs, dtype=bool)
    mask[constrained] = False
    free = np.nonzero(mask)[0]
    Kfc = K[free][:, constrained]
    b = rhs[free] - Kfc @ cvals
    A = K[free][:, free].tocsr()
    return LinearSystem(A, b, dofmap, free, constrained, cvals)
