"""Figures written next to the CSV output (non-interactive backend)."""
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.tri import Triangulation  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    # fixed metadata keeps repeated runs byte-identical
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_history(diff_norms, path, eps_tol=None):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    its = np.arange(1, len(diff_norms) + 1)
    norms = np.maximum(np.asarray(diff_norms, float), np.finfo(float).tiny)
    ax.semilogy(its, norms, "o-")
    if eps_tol is not None:
        ax.axhline(eps_tol, color="grey", ls="--", lw=1, label="tolerance")
        ax.legend()
    ax.set_xlabel("iteration")
    ax.set_ylabel("|p_k - p_(k-1)|")
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)


def plot_sweep(rows, columns, path):
    """Iterations and every flux column against beta; failed rows are skipped."""
    ok = [r for r in rows if r.get("status") == "ok"]
    n = 1 + len(columns)
    fig, axes = plt.subplots(1, n, figsize=(3.6 * n, 3.3), squeeze=False)
    beta = [r["beta"] for r in ok]
    axes[0, 0].plot(beta, [r["iters"] for r in ok], "o-")
    axes[0, 0].set_ylabel("iterations")
    for ax, col in zip(axes[0, 1:], columns):
        ax.plot(beta, [r[col] for r in ok], "s-")
        ax.set_ylabel(col)
    for ax in axes[0]:
        ax.set_xlabel("beta")
        ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_convergence(report, path):
    fig, ax = plt.subplots(figsize=(5, 3.8))
    h = np.asarray(report.h)
    for errs, label in ((report.e_p, "pressure"), (report.e_v, "velocity")):
        errs = np.maximum(np.asarray(errs, float), np.finfo(float).tiny)
        ax.loglog(h, errs, "o-", label=label)
    ax.set_xlabel("h")
    ax.set_ylabel("L2 error")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)


def _triangles(mesh):
    tris = []
    for kind, (_, conn) in mesh.blocks.items():
        if kind == "tri3":
            tris.append(conn)
        elif kind == "quad4":
            tris.append(conn[:, [0, 1, 2]])
            tris.append(conn[:, [0, 2, 3]])
    return np.vstack(tris)


def plot_field(mesh, solution, path):
    """Pressure contours with velocity arrows (2D), profiles (1D) or the
    pressure on the most populated horizontal node layer (3D)."""
    p, v = solution.pressure, solution.velocity
    if mesh.dimension == 1:
        x = mesh.nodes[:, 0]
        order = np.argsort(x)
        fig, (a1, a2) = plt.subplots(1, 2, figsize=(8, 3.3))
        a1.plot(x[order], p[order])
        a1.set_ylabel("pressure")
        a2.plot(x[order], v[order, 0])
        a2.set_ylabel("velocity")
        for ax in (a1, a2):
            ax.set_xlabel("x")
            ax.grid(True, alpha=0.3)
        return _save(fig, path)
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    if mesh.dimension == 2:
        tri = Triangulation(mesh.nodes[:, 0], mesh.nodes[:, 1], _triangles(mesh))
        cs = ax.tricontourf(tri, p, levels=20, cmap="viridis")
        step = max(1, mesh.n_nodes // 400)
        ax.quiver(mesh.nodes[::step, 0], mesh.nodes[::step, 1], v[::step, 0], v[::step, 1],
                  color="white", alpha=0.8)
    else:
        z = np.round(mesh.nodes[:, 2], 9)
        levels, counts = np.unique(z, return_counts=True)
        layer = z == levels[np.argmax(counts)]
        cs = ax.tricontourf(mesh.nodes[layer, 0], mesh.nodes[layer, 1], p[layer],
                            levels=20, cmap="viridis")
        ax.set_title(f"z = {levels[np.argmax(counts)]:g}")
    fig.colorbar(cs, ax=ax, label="pressure")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    return _save(fig, path)
