"""Regenerate the packaged desk-scale meshes in src/porodarcy/data.

Run from the repository root:  python3 scripts/make_desk_meshes.py
"""
from pathlib import Path

from porodarcy.benchmarks import build_leakage_mesh, build_regions_mesh
from porodarcy.mesh import write_mesh

DATA = Path(__file__).resolve().parents[1] / "src" / "porodarcy" / "data"


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    for name, builder in (("regions.msh", build_regions_mesh), ("leakage.msh", build_leakage_mesh)):
        mesh = builder()
        write_mesh(mesh, DATA / name)
        print(f"{name}: {mesh.n_nodes} nodes, {mesh.n_elements} elements")


if __name__ == "__main__":
    main()
