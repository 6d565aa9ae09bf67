import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from porodarcy.errors import MeshError
from porodarcy.mesh import (Mesh, classify_boundary, generate_annulus_2d,
                            generate_grid_2d, generate_grid_3d,
                            generate_interval, grid_3d_from_coords, read_mesh,
                            tag_regions, write_mesh)

SIDE_NORMALS = {"left": (-1, 0, 0), "right": (1, 0, 0), "bottom": (0, -1, 0),
                "top": (0, 1, 0)}
SIDE_NORMALS_3D = {"left": (-1, 0, 0), "right": (1, 0, 0), "front": (0, -1, 0),
                   "back": (0, 1, 0), "bottom": (0, 0, -1), "top": (0, 0, 1)}


def test_small_triangle_grid_counts():
    mesh = generate_grid_2d(2, 2, "tri3")
    assert (mesh.n_nodes, mesh.n_elements) == (9, 8)
    assert len(mesh.boundary_facets) == 8


def test_interval():
    mesh = generate_interval(4, (1.0, 3.0))
    assert mesh.n_nodes == 5
    assert mesh.element_volumes().sum() == pytest.approx(2.0)
    _, _, _, _, n = mesh.facet_data(mesh.facet_sets["left"])
    assert n[0, 0, 0] == -1.0
    _, _, _, _, n = mesh.facet_data(mesh.facet_sets["right"])
    assert n[0, 0, 0] == 1.0


@given(st.integers(1, 7), st.integers(1, 7), st.sampled_from(["quad4", "tri3"]),
       st.floats(0.1, 5.0), st.floats(0.1, 5.0))
def test_grid_2d_invariants(nx, ny, kind, lx, ly):
    mesh = generate_grid_2d(nx, ny, kind, ((0.0, lx), (-ly, 0.0)))
    per_cell = 1 if kind == "quad4" else 2
    assert mesh.n_nodes == (nx + 1) * (ny + 1)
    assert mesh.n_elements == per_cell * nx * ny
    assert mesh.element_volumes().sum() == pytest.approx(lx * ly, rel=1e-12)
    named = np.vstack(list(mesh.facet_sets.values()))
    assert sorted(map(tuple, named.tolist())) == sorted(map(tuple, mesh.boundary_facets.tolist()))
    for name, facets in mesh.facet_sets.items():
        _, _, _, dS, n = mesh.facet_data(facets)
        np.testing.assert_allclose(n, np.broadcast_to(SIDE_NORMALS[name][:2], n.shape), atol=1e-14)
        side = lx if name in ("bottom", "top") else ly
        assert dS.sum() == pytest.approx(side, rel=1e-12)


@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4))
def test_grid_3d_invariants(nx, ny, nz):
    mesh = generate_grid_3d(nx, ny, nz, ((0, 1.0), (0, 2.0), (0, 3.0)))
    assert mesh.n_nodes == (nx + 1) * (ny + 1) * (nz + 1)
    assert mesh.element_volumes().sum() == pytest.approx(6.0)
    for name, facets in mesh.facet_sets.items():
        _, _, _, _, n = mesh.facet_data(facets)
        np.testing.assert_allclose(n, np.broadcast_to(SIDE_NORMALS_3D[name], n.shape), atol=1e-14)
    total = sum(mesh.facet_data(f)[3].sum() for f in mesh.facet_sets.values())
    assert total == pytest.approx(2 * (2 + 3 + 6))


def test_cube_of_five():
    mesh = generate_grid_3d(5, 5, 5, ((0.0, 5.0),) * 3)
    assert mesh.n_nodes == 216
    assert mesh.element_volumes().sum() == pytest.approx(125.0)


def test_dropped_cells_remove_unused_nodes():
    xs = np.linspace(0, 3, 4)
    mesh = grid_3d_from_coords(xs, xs[:2], xs[:2], keep=lambda i, j, k: i != 1)
    assert mesh.n_elements == 2
    assert mesh.n_nodes == 16
    # the gap leaves two new unnamed boundary faces
    named = sum(len(f) for f in mesh.facet_sets.values())
    assert len(mesh.boundary_facets) == named + 2


def test_annulus_area_and_normals():
    mesh = generate_annulus_2d(1.0, 3.0, 8, 64, ratio=1.2)
    polygon = 0.5 * 64 * math.sin(2 * math.pi / 64) * (9.0 - 1.0)
    assert mesh.element_volumes().sum() == pytest.approx(polygon, rel=1e-12)
    fnodes, _, x, _, n = mesh.facet_data(mesh.facet_sets["inner"])
    radial = x / np.linalg.norm(x, axis=-1, keepdims=True)
    assert np.all(np.einsum("fqi,fqi->fq", n, radial) < -0.99)
    _, _, x, _, n = mesh.facet_data(mesh.facet_sets["outer"])
    radial = x / np.linalg.norm(x, axis=-1, keepdims=True)
    assert np.all(np.einsum("fqi,fqi->fq", n, radial) > 0.99)


def test_tag_regions_and_classify_boundary():
    mesh = tag_regions(generate_grid_2d(4, 4), lambda c: 1 + int(c[0] > 0.5))
    assert np.bincount(mesh.region_tags).tolist() == [0, 8, 8]
    sets = classify_boundary(mesh, lambda c, n: "vertical" if abs(n[0]) > 0.5 else None)
    assert len(sets["vertical"]) == 8


@pytest.mark.parametrize("bad", [
    dict(dimension=4),
    dict(connectivity=[(0, 1, 2, 9)]),
    dict(kinds=["tri3"]),
    dict(connectivity=[(0, 3, 2, 1)]),
    dict(facet_sets={"x": [(0, 7)]}),
    dict(region_tags=[1, 2]),
])
def test_invalid_mesh_rejected(bad):
    args = dict(dimension=2, nodes=[[0, 0], [1, 0], [1, 1], [0, 1]], kinds=["quad4"],
                connectivity=[(0, 1, 2, 3)])
    args.update(bad)
    with pytest.raises(MeshError):
        Mesh(**args)


def test_interior_facet_in_set_rejected():
    mesh = generate_grid_2d(2, 1)
    with pytest.raises(MeshError, match="not on the boundary"):
        mesh.with_facet_sets({"mid": [(0, 1)]})


def test_generator_arguments_checked():
    with pytest.raises(MeshError):
        generate_grid_2d(0, 3)
    with pytest.raises(MeshError):
        generate_grid_2d(2, 2, "hex8")
    with pytest.raises(MeshError):
        generate_interval(3, (1.0, 1.0))
    with pytest.raises(MeshError):
        generate_annulus_2d(2.0, 1.0, 3, 8)


@pytest.mark.parametrize("mesh", [
    generate_interval(3),
    tag_regions(generate_grid_2d(3, 2, "tri3"), lambda c: int(c[1] > 0.5)),
    generate_grid_3d(2, 1, 2),
], ids=["1d", "2d-tri", "3d"])
def test_read_write_round_trip(tmp_path, mesh):
    path = tmp_path / "m.msh"
    write_mesh(mesh, path)
    back = read_mesh(path)
    assert back.dimension == mesh.dimension
    np.testing.assert_array_equal(back.nodes, mesh.nodes)
    assert back.connectivity == mesh.connectivity
    assert back.kinds == mesh.kinds
    np.testing.assert_array_equal(back.region_tags, mesh.region_tags)
    assert back.facet_sets.keys() == mesh.facet_sets.keys()
    for k in mesh.facet_sets:
        np.testing.assert_array_equal(back.facet_sets[k], mesh.facet_sets[k])


def test_malformed_mesh_file(tmp_path):
    path = tmp_path / "bad.msh"
    path.write_text("2 4 1\n0 0\n1 0\n1 1\n")
    with pytest.raises(MeshError, match="malformed"):
        read_mesh(path)


def test_summary_mentions_counts():
    text = generate_grid_2d(2, 2).summary()
    assert "nodes: 9" in text and "facet set left: 2" in text
