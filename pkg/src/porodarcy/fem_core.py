"""Linear Lagrange reference elements, quadrature and isoparametric maps.

Reference domains:

* ``line2``: [-1, 1]
* ``tri3``:  triangle with vertices (0, 0), (1, 0), (0, 1)
* ``quad4``: [-1, 1]^2, nodes counter-clockwise from (-1, -1)
* ``hex8``:  [-1, 1]^3, nodes 0-3 on zeta=-1 counter-clockwise, 4-7 above them

``point`` is the zero-dimensional facet of ``line2``.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateElementError

ELEMENT_DIM = {"point": 0, "line2": 1, "tri3": 2, "quad4": 2, "hex8": 3}
ELEMENT_NODES = {"point": 1, "line2": 2, "tri3": 3, "quad4": 4, "hex8": 8}
REFERENCE_MEASURE = {"point": 1.0, "line2": 2.0, "tri3": 0.5, "quad4": 4.0, "hex8": 8.0}

_QUAD_NODES = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)
_HEX_NODES = np.array([[-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
                       [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1]], dtype=float)

# Local facets as local node tuples, ordered so the facet's own reference
# numbering matches the facet kind (cyclic for quad faces).
FACETS = {
    "line2": ((0,), (1,)),
    "tri3": ((0, 1), (1, 2), (2, 0)),
    "quad4": ((0, 1), (1, 2), (2, 3), (3, 0)),
    "hex8": ((0, 3, 2, 1), (4, 5, 6, 7), (0, 1, 5, 4),
             (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7)),
}
FACET_KIND = {"line2": "point", "tri3": "line2", "quad4": "line2", "hex8": "quad4"}


def _check_kind(kind):
    if kind not in ELEMENT_NODES:
        raise ValueError(f"unknown element kind {kind!r}")


def shape_values(kind, xi):
    """Shape function values and reference gradients at reference points.

    ``xi`` is a single point (shape ``(d,)``) or a batch ``(Q, d)``.  Returns
    ``N`` with shape ``(..., n)`` and ``dN`` with shape ``(..., n, d)``.
    """
    _check_kind(kind)
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim <= 1
    d = ELEMENT_DIM[kind]
    xi = xi.reshape(-1, d) if d else np.zeros((max(xi.size, 1), 0))
    q = xi.shape[0]

    if kind == "point":
        N = np.ones((q, 1))
        dN = np.zeros((q, 1, 0))
    elif kind == "line2":
        s = xi[:, 0]
        N = np.stack([(1 - s) / 2, (1 + s) / 2], axis=-1)
        dN = np.broadcast_to(np.array([[-0.5], [0.5]]), (q, 2, 1)).copy()
    elif kind == "tri3":
        r, s = xi[:, 0], xi[:, 1]
        N = np.stack([1 - r - s, r, s], axis=-1)
        dN = np.broadcast_to(np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]),
                             (q, 3, 2)).copy()
    elif kind == "quad4":
        a = 1 + xi[:, None, :] * _QUAD_NODES[None]
        N = a[..., 0] * a[..., 1] / 4
        dN = np.stack([_QUAD_NODES[None, :, 0] * a[..., 1],
                       _QUAD_NODES[None, :, 1] * a[..., 0]], axis=-1) / 4
    else:
        a = 1 + xi[:, None, :] * _HEX_NODES[None]
        N = a[..., 0] * a[..., 1] * a[..., 2] / 8
        dN = np.stack([_HEX_NODES[None, :, 0] * a[..., 1] * a[..., 2],
                       _HEX_NODES[None, :, 1] * a[..., 0] * a[..., 2],
                       _HEX_NODES[None, :, 2] * a[..., 0] * a[..., 1]], axis=-1) / 8
    if single:
        return N[0], dN[0]
    return N, dN


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self):
        return len(self.weights)


def _gauss_points(degree):
    return max(1, int(np.ceil((degree + 1) / 2)))


@lru_cache(maxsize=None)
def quadrature_rule(kind, degree=2):
    """Quadrature rule on the reference element, exact to ``degree``.

    Tensor Gauss-Legendre for line/quad/hex.  Triangles use the classical
    3-point edge-midpoint rule up to degree 2 and a collapsed (Duffy)
    Gauss product rule above that; all weights are positive.
    """
    _check_kind(kind)
    if degree < 0:
        raise ValueError("quadrature degree must be nonnegative")
    if kind == "point":
        return QuadratureRule(np.zeros((1, 0)), np.ones(1), degree)
    if kind in ("line2", "quad4", "hex8"):
        x, w = np.polynomial.legendre.leggauss(_gauss_points(degree))
        d = ELEMENT_DIM[kind]
        grids = np.meshgrid(*([x] * d), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        wgrids = np.meshgrid(*([w] * d), indexing="ij")
        wts = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
        return QuadratureRule(pts, wts, degree)
    if degree <= 2:
        pts = np.array([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]])
        return QuadratureRule(pts, np.full(3, 1.0 / 6.0), 2)
    # (u, v) in [0,1]^2 -> (r, s) = (u, v(1-u)), Jacobian (1-u).
    x, w = np.polynomial.legendre.leggauss(_gauss_points(degree + 1))
    x, w = (x + 1) / 2, w / 2
    u, v = np.meshgrid(x, x, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    u, v, wu, wv = u.ravel(), v.ravel(), wu.ravel(), wv.ravel()
    pts = np.stack([u, v * (1 - u)], axis=-1)
    return QuadratureRule(pts, wu * wv * (1 - u), degree)


def default_rule(kind):
    """Degree-2 rule used for assembly."""
    return quadrature_rule(kind, 2)


def jacobians(coords, dN):
    """Isoparametric Jacobians.

    ``coords``: ``(E, n, nd)`` node coordinates; ``dN``: ``(Q, n, d)``
    reference gradients.  Returns ``J`` of shape ``(E, Q, nd, d)`` with
    ``J[..., i, k] = dx_i / dxi_k``.
    """
    return np.einsum("eai,qak->eqik", coords, dN)


def physical_gradients_batch(coords, dN):
    """Physical gradients ``J^{-T} dN`` and ``det J`` for a batch of elements.

    Returns ``grads`` of shape ``(E, Q, n, nd)`` and ``detJ`` ``(E, Q)``.
    Raises DegenerateElementError if any determinant is nonpositive.
    """
    J = jacobians(coords, dN)
    detJ = np.linalg.det(J)
    if np.any(detJ <= 0.0):
        bad = np.unique(np.nonzero(detJ <= 0.0)[0])
        raise DegenerateElementError(
            f"{len(bad)} element(s) with nonpositive Jacobian, first batch index {bad[0]}")
    Jinv = np.linalg.inv(J)
    grads = np.einsum("qak,eqki->eqai", dN, Jinv)
    return grads, detJ


def physical_gradients(kind, node_coords, xi):
    """Gradients of the shape functions in the physical frame at ``xi``.

    Returns ``(grads, detJ)`` with ``grads`` of shape ``(n, nd)``.
    """
    _, dN = shape_values(kind, np.atleast_2d(xi))
    coords = np.asarray(node_coords, dtype=float).reshape(1, ELEMENT_NODES[kind], -1)
    grads, detJ = physical_gradients_batch(coords, dN)
    return grads[0, 0], float(detJ[0, 0])


def facet_geometry(coords, rule):
    """Surface measure and unit normal of facets at facet quadrature points.

    ``coords`` is ``(F, m, nd)``: facet node coordinates in the facet's own
    numbering, embedded in ``nd`` dimensions.  Returns ``(dS, normal)`` with
    shapes ``(F, Q)`` and ``(F, Q, nd)``.  The normal orientation is not
    fixed here; callers orient it outward.
    """
    F, m, nd = coords.shape
    Q = len(rule)
    if m == 1:
        normal = np.zeros((F, Q, nd))
        normal[..., 0] = 1.0
        return np.ones((F, Q)), normal
    kind = "line2" if m == 2 else "quad4"
    _, dN = shape_values(kind, rule.points)
    T = np.einsum("fai,qak->fqik", coords, dN)
    if m == 2:
        t = T[..., 0]
        dS = np.linalg.norm(t, axis=-1)
        normal = np.stack([t[..., 1], -t[..., 0]], axis=-1) / dS[..., None]
    else:
        c = np.cross(T[..., 0], T[..., 1])
        dS = np.linalg.norm(c, axis=-1)
        normal = c / dS[..., None]
    return dS, normal
