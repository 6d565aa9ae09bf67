"""Meshes with boundary facet sets and element region tags.

A mesh is immutable once built.  Elements are stored as a per-element kind
plus connectivity; assembly works on homogeneous ``blocks`` of one kind.
"""
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import MeshError
from .fem_core import (ELEMENT_DIM, ELEMENT_NODES, FACET_KIND, FACETS,
                       default_rule, facet_geometry, physical_gradients_batch,
                       shape_values)


@dataclass(frozen=True, eq=False)
class Mesh:
    dimension: int
    nodes: np.ndarray
    kinds: tuple
    connectivity: tuple
    region_tags: np.ndarray = None
    facet_sets: dict = field(default_factory=dict)

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        object.__setattr__(self, "nodes", nodes)
        conn = tuple(tuple(int(i) for i in c) for c in self.connectivity)
        object.__setattr__(self, "connectivity", conn)
        object.__setattr__(self, "kinds", tuple(self.kinds))
        if self.region_tags is None:
            tags = np.zeros(len(conn), dtype=int)
        else:
            tags = np.array(self.region_tags, dtype=int)
        object.__setattr__(self, "region_tags", tags)
        fsets = {name: np.array(f, dtype=int).reshape(-1, 2)
                 for name, f in self.facet_sets.items()}
        object.__setattr__(self, "facet_sets", fsets)
        self._validate()

    def _validate(self):
        if self.dimension not in (1, 2, 3):
            raise MeshError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        if self.nodes.shape[1] != self.dimension:
            raise MeshError("node coordinates do not match the mesh dimension")
        if len(self.kinds) != len(self.connectivity):
            raise MeshError("one kind per element is required")
        if len(self.region_tags) != len(self.connectivity):
            raise MeshError("one region tag per element is required")
        n_nodes = len(self.nodes)
        for e, (kind, conn) in enumerate(zip(self.kinds, self.connectivity)):
            if kind not in FACETS:
                raise MeshError(f"element {e}: unknown kind {kind!r}")
            if ELEMENT_DIM[kind] != self.dimension:
                raise MeshError(f"element {e}: {kind} in a {self.dimension}D mesh")
            if len(conn) != ELEMENT_NODES[kind]:
                raise MeshError(f"element {e}: {kind} needs {ELEMENT_NODES[kind]} nodes")
            if min(conn) < 0 or max(conn) >= n_nodes:
                raise MeshError(f"element {e}: node index out of range")
        boundary = set(map(tuple, self.boundary_facets.tolist()))
        for name, facets in self.facet_sets.items():
            for e, lf in facets.tolist():
                if not 0 <= e < self.n_elements or not 0 <= lf < len(FACETS[self.kinds[e]]):
                    raise MeshError(f"facet set {name!r}: bad facet ({e}, {lf})")
                if (e, lf) not in boundary:
                    raise MeshError(f"facet set {name!r}: facet ({e}, {lf}) is not on the boundary")
        for kind, (_, conn) in self.blocks.items():
            _, dN = shape_values(kind, default_rule(kind).points)
            try:
                physical_gradients_batch(self.nodes[conn], dN)
            except Exception as exc:
                raise MeshError(f"{kind} block: {exc}") from exc

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_elements(self):
        return len(self.connectivity)

    @cached_property
    def blocks(self):
        """``{kind: (element indices, connectivity array)}``."""
        out = {}
        for kind in dict.fromkeys(self.kinds):
            idx = np.array([e for e, k in enumerate(self.kinds) if k == kind], dtype=int)
            out[kind] = (idx, np.array([self.connectivity[e] for e in idx], dtype=int))
        return out

    def facet_nodes(self, e, lf):
        conn = self.connectivity[e]
        return tuple(conn[i] for i in FACETS[self.kinds[e]][lf])

    @cached_property
    def boundary_facets(self):
        """``(k, 2)`` array of (element, local facet) owned by one element."""
        counts = Counter()
        owners = {}
        for e, kind in enumerate(self.kinds):
            for lf in range(len(FACETS[kind])):
                key = frozenset(self.facet_nodes(e, lf))
                counts[key] += 1
                owners[key] = (e, lf)
        out = [owners[k] for k, c in counts.items() if c == 1]
        return np.array(sorted(out), dtype=int).reshape(-1, 2)

    def centroids(self):
        return np.array([self.nodes[list(c)].mean(axis=0) for c in self.connectivity])

    def element_volumes(self):
        vol = np.zeros(self.n_elements)
        for kind, (idx, conn) in self.blocks.items():
            rule = default_rule(kind)
            _, dN = shape_values(kind, rule.points)
            _, detJ = physical_gradients_batch(self.nodes[conn], dN)
            vol[idx] = detJ @ rule.weights
        return vol

    def facet_data(self, facets, rule=None):
        """Geometry of a list of (element, local facet) pairs.

        Returns ``(nodes, N, x, dS, normal)``: facet node indices ``(F, m)``,
        facet shape values ``(Q, m)``, quadrature points ``(F, Q, nd)``,
        surface weights ``dS * w`` ``(F, Q)`` and outward unit normals
        ``(F, Q, nd)``.  Facets must all be of one kind.
        """
        facets = np.asarray(facets, dtype=int).reshape(-1, 2)
        if len(facets) == 0:
            raise MeshError("empty facet list")
        fkinds = {FACET_KIND[self.kinds[e]] for e in facets[:, 0]}
        if len(fkinds) != 1:
            raise MeshError("facet list mixes facet kinds")
        fkind = fkinds.pop()
        rule = rule or default_rule(fkind)
        fnodes = np.array([self.facet_nodes(e, lf) for e, lf in facets], dtype=int)
        coords = self.nodes[fnodes]
        N, _ = shape_values(fkind, rule.points)
        x = np.einsum("qa,fai->fqi", N, coords)
        dS, normal = facet_geometry(coords, rule)
        cent = np.array([self.nodes[list(self.connectivity[e])].mean(axis=0)
                         for e in facets[:, 0]])
        outward = np.einsum("fqi,fqi->fq", normal, x - cent[:, None, :])
        normal = normal * np.where(outward < 0, -1.0, 1.0)[..., None]
        return fnodes, N, x, dS * rule.weights[None, :], normal

    def with_tags(self, tags):
        return Mesh(self.dimension, self.nodes, self.kinds, self.connectivity,
                    tags, self.facet_sets)

    def with_facet_sets(self, facet_sets):
        return Mesh(self.dimension, self.nodes, self.kinds, self.connectivity,
                    self.region_tags, facet_sets)

    def summary(self):
        kinds = Counter(self.kinds)
        lines = [f"dimension: {self.dimension}",
                 f"nodes: {self.n_nodes}",
                 f"elements: {self.n_elements} ("
                 + ", ".join(f"{k}: {n}" for k, n in kinds.items()) + ")",
                 "regions: " + ", ".join(
                     f"{t}: {n}" for t, n in sorted(Counter(self.region_tags.tolist()).items())),
                 f"volume: {self.element_volumes().sum():.12g}",
                 f"boundary facets: {len(self.boundary_facets)}"]
        for name, f in self.facet_sets.items():
            lines.append(f"facet set {name}: {len(f)}")
        return "\n".join(lines)


def tag_regions(mesh, classifier):
    """Return a copy of ``mesh`` with region tags ``classifier(centroid)``."""
    tags = np.array([int(classifier(c)) for c in mesh.centroids()], dtype=int)
    return mesh.with_tags(tags)


def classify_boundary(mesh, classifier):
    """Build facet sets from ``classifier(centroid, outward_normal) -> name``.

    Facets for which the classifier returns ``None`` are left unassigned.
    """
    sets = {}
    facets = mesh.boundary_facets
    fkind = np.array([FACET_KIND[mesh.kinds[e]] for e in facets[:, 0]])
    for kind in np.unique(fkind):
        group = facets[fkind == kind]
        fnodes, _, _, _, normal = mesh.facet_data(group)
        cents = mesh.nodes[fnodes].mean(axis=1)
        for (e, lf), c, n in zip(group.tolist(), cents, normal.mean(axis=1)):
            name = classifier(c, n)
            if name is not None:
                sets.setdefault(name, []).append((e, lf))
    return sets


def _check_extent(extent, dim):
    ext = np.asarray(extent, dtype=float).reshape(dim, 2)
    if np.any(ext[:, 1] - ext[:, 0] <= 0) or not np.all(np.isfinite(ext)):
        raise MeshError(f"degenerate extent {extent!r}")
    return ext


def _check_count(**counts):
    for name, n in counts.items():
        if int(n) != n or n < 1:
            raise MeshError(f"{name} must be a positive integer, got {n!r}")


def generate_interval(n_elements, extent=(0.0, 1.0)):
    """Uniform line2 mesh with facet sets ``left`` and ``right``."""
    _check_count(n_elements=n_elements)
    ext = _check_extent(extent, 1)
    return interval_from_coords(np.linspace(ext[0, 0], ext[0, 1], n_elements + 1))


def interval_from_coords(xs):
    xs = np.asarray(xs, dtype=float)
    n = len(xs) - 1
    conn = [(i, i + 1) for i in range(n)]
    return Mesh(1, xs[:, None], ["line2"] * n, conn,
                facet_sets={"left": [(0, 0)], "right": [(n - 1, 1)]})


def generate_grid_2d(nx, ny, kind="quad4", extent=((0.0, 1.0), (0.0, 1.0))):
    """Structured grid of quads, or of triangles from splitting each quad.

    Triangles use the lower-left to upper-right diagonal in every cell.
    Facet sets: ``left``, ``right``, ``bottom``, ``top``.
    """
    _check_count(nx=nx, ny=ny)
    ext = _check_extent(extent, 2)
    return grid_2d_from_coords(np.linspace(*ext[0], nx + 1),
                               np.linspace(*ext[1], ny + 1), kind)


def grid_2d_from_coords(xs, ys, kind="quad4"):
    if kind not in ("quad4", "tri3"):
        raise MeshError(f"2D grid kind must be quad4 or tri3, got {kind!r}")
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    nx, ny = len(xs) - 1, len(ys) - 1
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    nodes = np.stack([X.ravel(), Y.ravel()], axis=-1)

    def nid(i, j):
        return j * (nx + 1) + i

    conn, sets = [], {"left": [], "right": [], "bottom": [], "top": []}
    for j in range(ny):
        for i in range(nx):
            n0, n1, n2, n3 = nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)
            if kind == "quad4":
                e = len(conn)
                conn.append((n0, n1, n2, n3))
                edge = {"bottom": (e, 0), "right": (e, 1), "top": (e, 2), "left": (e, 3)}
            else:
                e = len(conn)
                conn.append((n0, n1, n2))
                conn.append((n0, n2, n3))
                edge = {"bottom": (e, 0), "right": (e, 1), "top": (e + 1, 1), "left": (e + 1, 2)}
            if j == 0:
                sets["bottom"].append(edge["bottom"])
            if j == ny - 1:
                sets["top"].append(edge["top"])
            if i == 0:
                sets["left"].append(edge["left"])
            if i == nx - 1:
                sets["right"].append(edge["right"])
    return Mesh(2, nodes, [kind] * len(conn), conn, facet_sets=sets)


def generate_grid_3d(nx, ny, nz, extent=((0.0, 1.0), (0.0, 1.0), (0.0, 1.0))):
    """Structured hex8 grid.

    Facet sets: ``left``/``right`` (x), ``front``/``back`` (y),
    ``bottom``/``top`` (z).
    """
    _check_count(nx=nx, ny=ny, nz=nz)
    ext = _check_extent(extent, 3)
    return grid_3d_from_coords(np.linspace(*ext[0], nx + 1),
                               np.linspace(*ext[1], ny + 1),
                               np.linspace(*ext[2], nz + 1))


_HEX_FACE_NAMES = ("bottom", "top", "front", "right", "back", "left")


def grid_3d_from_coords(xs, ys, zs, keep=None):
    """Hex8 tensor grid; ``keep(i, j, k) -> bool`` drops cells when given.

    Nodes not used by any kept cell are removed.  Facet sets name the six
    outer faces of the box; boundary facets created by dropped cells are
    left unassigned (see ``classify_boundary``).
    """
    xs, ys, zs = (np.asarray(a, float) for a in (xs, ys, zs))
    nx, ny, nz = len(xs) - 1, len(ys) - 1, len(zs) - 1
    Z, Y, X = np.meshgrid(zs, ys, xs, indexing="ij")
    nodes = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)

    def nid(i, j, k):
        return (k * (ny + 1) + j) * (nx + 1) + i

    conn, sets = [], {name: [] for name in ("left", "right", "front", "back", "bottom", "top")}
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                if keep is not None and not keep(i, j, k):
                    continue
                e = len(conn)
                conn.append((nid(i, j, k), nid(i + 1, j, k), nid(i + 1, j + 1, k), nid(i, j + 1, k),
                             nid(i, j, k + 1), nid(i + 1, j, k + 1), nid(i + 1, j + 1, k + 1),
                             nid(i, j + 1, k + 1)))
                on_face = {"bottom": k == 0, "top": k == nz - 1, "front": j == 0,
                           "right": i == nx - 1, "back": j == ny - 1, "left": i == 0}
                for lf, name in enumerate(_HEX_FACE_NAMES):
                    if on_face[name]:
                        sets[name].append((e, lf))
    conn = np.array(conn, dtype=int)
    used = np.unique(conn)
    remap = -np.ones(len(nodes), dtype=int)
    remap[used] = np.arange(len(used))
    return Mesh(3, nodes[used], ["hex8"] * len(conn), remap[conn],
                facet_sets={k: v for k, v in sets.items() if v})


def generate_annulus_2d(r_inner, r_outer, n_radial, n_theta, ratio=1.0, center=(0.0, 0.0)):
    """Quad4 polar mesh of an annulus with facet sets ``inner`` and ``outer``.

    Ring radii grow geometrically: each ring is ``ratio`` times thicker than
    the previous one.  Curved boundaries are piecewise linear.
    """
    _check_count(n_radial=n_radial, n_theta=n_theta)
    if not 0 < r_inner < r_outer:
        raise MeshError("annulus needs 0 < r_inner < r_outer")
    steps = ratio ** np.arange(n_radial)
    r = r_inner + (r_outer - r_inner) * np.concatenate([[0.0], np.cumsum(steps)]) / steps.sum()
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    R, T = np.meshgrid(r, theta, indexing="ij")
    nodes = np.stack([center[0] + R.ravel() * np.cos(T.ravel()),
                      center[1] + R.ravel() * np.sin(T.ravel())], axis=-1)

    def nid(i, j):
        return i * n_theta + j % n_theta

    conn, inner, outer = [], [], []
    for i in range(n_radial):
        for j in range(n_theta):
            e = len(conn)
            conn.append((nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)))
            if i == 0:
                inner.append((e, 3))
            if i == n_radial - 1:
                outer.append((e, 1))
    return Mesh(2, nodes, ["quad4"] * len(conn), conn,
                facet_sets={"inner": inner, "outer": outer})


def read_mesh(path):
    """Read the ASCII mesh format (see ``write_mesh``)."""
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    try:
        dim, n_nodes, n_elems = (int(t) for t in lines[0])
        pos = 1
        nodes = np.array([[float(t) for t in lines[pos + i]] for i in range(n_nodes)])
        pos += n_nodes
        kinds, conn = [], []
        for i in range(n_elems):
            kinds.append(lines[pos + i][0])
            conn.append([int(t) for t in lines[pos + i][1:]])
        pos += n_elems
        facet_sets, tags = {}, None
        while pos < len(lines):
            head = lines[pos]
            if head[0] == "facetset":
                name, count = head[1], int(head[2])
                facet_sets[name] = [[int(t) for t in lines[pos + 1 + i]] for i in range(count)]
                pos += count + 1
            elif head[0] == "regions":
                tags = [int(t) for ln in lines[pos:] for t in ln if t != "regions"]
                pos = len(lines)
            else:
                raise MeshError(f"{path}: unexpected section {head[0]!r}")
    except (IndexError, ValueError) as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"{path}: malformed mesh file ({exc})") from exc
    return Mesh(dim, nodes, kinds, conn, tags, facet_sets)


def write_mesh(mesh, path):
    """Write ``mesh`` in the ASCII format.

    Layout: ``dim N_nodes N_elems``; one coordinate line per node; one
    ``kind i0 i1 ...`` line per element (0-based); per facet set a line
    ``facetset <name> <count>`` followed by ``elem local_facet`` pairs;
    finally ``regions`` and one tag per element.
    """
    with open(path, "w") as fh:
        fh.write(f"{mesh.dimension} {mesh.n_nodes} {mesh.n_elements}\n")
        for x in mesh.nodes:
            fh.write(" ".join(repr(float(v)) for v in x) + "\n")
        for kind, conn in zip(mesh.kinds, mesh.connectivity):
            fh.write(kind + " " + " ".join(map(str, conn)) + "\n")
        for name, facets in mesh.facet_sets.items():
            fh.write(f"facetset {name} {len(facets)}\n")
            for e, lf in facets.tolist():
                fh.write(f"{e} {lf}\n")
        fh.write("regions " + " ".join(map(str, mesh.region_tags.tolist())) + "\n")
