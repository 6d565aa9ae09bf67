"""Command-line driver, run-configuration files and VTK/CSV output.

Run configuration files are flat ``key = value`` lines grouped under
``[section]`` headers; ``#`` starts a comment::

    [problem]
    name = checkerboard

    [parameters]
    beta = 0.3
    alpha0 = 1: 1.0, 2: 0.001, 3: 0.001, 4: 1.0

    [solver]
    eps_tol = 1e-9
    max_iters = 200

    [output]
    dir = out/checkerboard
    plots = true

Exit codes: 0 converged, 2 not converged, 1 error.
"""
import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import benchmarks
from .drag_models import LAWS
from .errors import ConfigError, PorodarcyError
from .mesh import read_mesh
from .picard_solver import SolverConfig, run_picard

log = logging.getLogger(__name__)

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2

VTK_CELL_TYPES = {"line2": 3, "tri3": 5, "quad4": 9, "hex8": 12}


# ----------------------------------------------------------------------------
# Run configuration


def _parse_bool(text):
    low = text.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_alpha0(text):
    """``0.5`` or a region map ``1: 1.0, 2: 0.001``."""
    if ":" not in text:
        return float(text)
    out = {}
    for item in text.split(","):
        tag, _, val = item.partition(":")
        out[int(tag)] = float(val)
    return out


def _format_alpha0(value):
    if isinstance(value, dict):
        return ", ".join(f"{k}: {v!r}" for k, v in sorted(value.items()))
    return repr(float(value))


def _choice(options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return parse


# (section, key) -> (RunConfig field, parser)
SCHEMA = {
    ("problem", "name"): ("problem", str),
    ("parameters", "beta"): ("beta", float),
    ("parameters", "law"): ("law", _choice(LAWS)),
    ("parameters", "alpha0"): ("alpha0", _parse_alpha0),
    ("parameters", "n"): ("n", int),
    ("parameters", "kind"): ("kind", _choice(("quad4", "tri3"))),
    ("solver", "eps_tol"): ("eps_tol", float),
    ("solver", "max_iters"): ("max_iters", int),
    ("solver", "quad_degree"): ("quad_degree", int),
    ("solver", "linear_solver"): ("linear_solver", _choice(("direct", "iterative"))),
    ("solver", "initial_pressure"): ("initial_pressure", str),
    ("output", "dir"): ("output_dir", str),
    ("output", "plots"): ("plots", _parse_bool),
}

# parameters handed to the problem builder; the rest configure the run
PROBLEM_KEYS = ("beta", "law", "alpha0", "n", "kind", "eps_tol", "max_iters", "quad_degree")


@dataclass
class RunConfig:
    problem: str = None
    beta: float = None
    law: str = None
    alpha0: object = None
    n: int = None
    kind: str = None
    eps_tol: float = None
    max_iters: int = None
    quad_degree: int = None
    linear_solver: str = None
    initial_pressure: str = None
    output_dir: str = "."
    plots: bool = True

    def problem_overrides(self):
        return {k: getattr(self, k) for k in PROBLEM_KEYS if getattr(self, k) is not None}

    def merged(self, **overrides):
        """Copy with every non-``None`` override applied."""
        data = asdict(self)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig(**data)


def parse_config(text):
    """Parse configuration text into a :class:`RunConfig`."""
    values = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno)
            section = line[1:-1].strip()
            if section not in {s for s, _ in SCHEMA}:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if section is None:
            raise ConfigError(f"key {key!r} outside of a section", lineno)
        if (section, key) not in SCHEMA:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        name, parse = SCHEMA[(section, key)]
        if name in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        try:
            values[name] = parse(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from exc
    return RunConfig(**values)


def serialize_config(config):
    """Text form of ``config`` that :func:`parse_config` reads back."""
    defaults = RunConfig()
    by_section = {}
    for (section, key), (name, _) in SCHEMA.items():
        value = getattr(config, name)
        if value is None or (value == getattr(defaults, name) and name in ("output_dir", "plots")):
            continue
        if name == "alpha0":
            text = _format_alpha0(value)
        elif isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        by_section.setdefault(section, []).append(f"{key} = {text}")
    blocks = [f"[{s}]\n" + "\n".join(lines) for s, lines in by_section.items()]
    return "\n\n".join(blocks) + "\n"


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def build_problem(config):
    """Problem bundle for ``config``; unknown overrides raise ConfigError."""
    if not config.problem:
        raise ConfigError("no problem selected")
    try:
        return benchmarks.get_problem(config.problem, **config.problem_overrides())
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


# ----------------------------------------------------------------------------
# Output writers


def _fmt(x):
    return f"{x:.17g}"


def write_vtk(mesh, solution, path, title="porodarcy solution"):
    """Legacy ASCII VTK unstructured grid with nodal pressure and velocity."""
    vel = np.zeros((mesh.n_nodes, 3))
    vel[:, :mesh.dimension] = solution.velocity
    pts = np.zeros((mesh.n_nodes, 3))
    pts[:, :mesh.dimension] = mesh.nodes
    size = sum(len(c) + 1 for c in mesh.connectivity)
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.n_nodes} double"]
    lines += [" ".join(map(_fmt, x)) for x in pts]
    lines.append(f"CELLS {mesh.n_elements} {size}")
    lines += [f"{len(c)} " + " ".join(map(str, c)) for c in mesh.connectivity]
    lines.append(f"CELL_TYPES {mesh.n_elements}")
    lines += [str(VTK_CELL_TYPES[k]) for k in mesh.kinds]
    lines += [f"CELL_DATA {mesh.n_elements}", "SCALARS region int 1", "LOOKUP_TABLE default"]
    lines += [str(t) for t in mesh.region_tags.tolist()]
    lines += [f"POINT_DATA {mesh.n_nodes}", "SCALARS pressure double 1", "LOOKUP_TABLE default"]
    lines += [_fmt(p) for p in solution.pressure]
    lines.append("VECTORS velocity double")
    lines += [" ".join(map(_fmt, v)) for v in vel]
    Path(path).write_text("\n".join(lines) + "\n")
    return path


def write_history(diff_norms, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "diff_norm"])
        for i, d in enumerate(diff_norms, start=1):
            w.writerow([i, _fmt(d)])
    return path


def write_nodal(mesh, solution, path):
    """Per-node coordinates, pressure and velocity (also a warm-start file)."""
    axes = "xyz"[:mesh.dimension]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", *axes, "pressure", *(f"v{a}" for a in axes)])
        for i, (x, p, v) in enumerate(zip(mesh.nodes, solution.pressure, solution.velocity)):
            w.writerow([i, *map(_fmt, x), _fmt(p), *map(_fmt, v)])
    return path


def read_pressure(path, n_nodes):
    """Nodal pressure from a ``pressure`` CSV column or a one-value-per-line file."""
    with open(path) as fh:
        text = fh.read()
    first = text.lstrip().split("\n", 1)[0]
    try:
        if "pressure" in first:
            rows = list(csv.DictReader(text.splitlines()))
            p = np.array([float(r["pressure"]) for r in rows])
        else:
            p = np.array([float(t) for t in text.split()])
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: unreadable pressure data ({exc})") from exc
    if p.shape != (n_nodes,):
        raise ConfigError(f"{path}: {len(p)} pressure values for a mesh of {n_nodes} nodes")
    return p


def write_summary(path, items):
    with open(path, "w") as fh:
        for key, value in items:
            if isinstance(value, float):
                value = repr(value)
            fh.write(f"{key}: {value}\n")
    return path


# ----------------------------------------------------------------------------
# Commands


def _solver_config(config, problem):
    initial = None
    if config.initial_pressure:
        initial = read_pressure(config.initial_pressure, problem.mesh.n_nodes)
    return SolverConfig.from_problem(problem, linear_solver=config.linear_solver,
                                     initial_pressure=initial)


def run_case(config):
    """Solve one configuration; write artifacts; return (report, fluxes)."""
    bench = build_problem(config)
    problem = bench.problem
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    solution, report = run_picard(problem, _solver_config(config, problem))
    fluxes = benchmarks.section_fluxes(problem, solution)
    write_vtk(problem.mesh, solution, out / "solution.vtk")
    write_history(report.diff_norms, out / "history.csv")
    write_nodal(problem.mesh, solution, out / "nodal.csv")
    items = [("problem", problem.name), ("nodes", problem.mesh.n_nodes),
             ("elements", problem.mesh.n_elements), ("law", problem.drag.law),
             ("beta", problem.drag.beta), ("eps_tol", problem.eps_tol),
             ("iterations", report.iterations_used), ("converged", report.converged),
             ("tolerance_met", bool(report.diff_norms) and report.diff_norms[-1] < problem.eps_tol),
             ("final_diff_norm", report.diff_norms[-1])]
    items += [(f"flux_{k}", v) for k, v in fluxes.items()]
    write_summary(out / "summary.txt", items)
    if config.plots:
        from . import plotting
        plotting.plot_history(report.diff_norms, out / "history.png", problem.eps_tol)
        plotting.plot_field(problem.mesh, solution, out / "field.png")
    return report, fluxes


def cmd_solve(config):
    report, fluxes = run_case(config)
    print(f"{config.problem}: {report.iterations_used} iterations, "
          f"converged={report.converged}, last |dp|={report.diff_norms[-1]:.3e}")
    for k, v in fluxes.items():
        print(f"  {k} = {v:.10g}")
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def _sweep_one(config):
    try:
        report, fluxes = run_case(config)
        return {"beta": config.beta, "iters": report.iterations_used,
                "converged": report.converged, "status": "ok", **fluxes}
    except (PorodarcyError, ValueError, OSError) as exc:
        return {"beta": config.beta, "iters": "", "converged": False,
                "status": f"error: {exc}".replace(",", ";").replace("\n", " ")}


def cmd_sweep(config, betas, jobs=1):
    if not betas:
        raise ConfigError("empty beta list")
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cases = [config.merged(beta=b, output_dir=str(out / f"beta_{b:g}")) for b in betas]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_one, cases))
    else:
        rows = [_sweep_one(c) for c in cases]
    flux_cols = [k for k in rows[0] if k not in ("beta", "iters", "converged", "status")]
    for r in rows[1:]:
        flux_cols += [k for k in r if k not in flux_cols and k not in ("beta", "iters", "converged", "status")]
    cols = ["beta", "iters", "converged", *flux_cols, "status"]
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r[c]) if isinstance(r.get(c), float) else r.get(c, "") for c in cols])
    if config.plots and any(r["status"] == "ok" for r in rows):
        from . import plotting
        plotting.plot_sweep(rows, flux_cols, out / "sweep.png")
    for r in rows:
        print(f"beta={r['beta']:g}: iters={r['iters']} {r['status']}")
    if any(r["status"] != "ok" for r in rows):
        return EXIT_ERROR
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_NOT_CONVERGED


def cmd_convergence(config, sizes):
    overrides = {k: v for k, v in config.problem_overrides().items() if k != "n"}
    try:
        report = benchmarks.convergence_study(config.problem, sizes, **overrides)
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from exc
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "convergence.csv").write_text(report.to_csv())
    if config.plots:
        from . import plotting
        plotting.plot_convergence(report, out / "convergence.png")
    print(report.to_csv(), end="")
    return EXIT_OK if report.all_converged else EXIT_NOT_CONVERGED


def cmd_list_problems():
    for name, builder in benchmarks.PROBLEMS.items():
        params = ", ".join(benchmarks.problem_parameters(name))
        doc = benchmarks.PROBLEM_DESCRIPTIONS.get(name, "")
        print(f"{name:16s} {doc}\n{'':16s} parameters: {params}")
    return EXIT_OK


def cmd_mesh_info(config, mesh_path=None):
    mesh = read_mesh(mesh_path) if mesh_path else build_problem(config).problem.mesh
    print(mesh.summary())
    return EXIT_OK


# ----------------------------------------------------------------------------
# Argument parsing


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from exc


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from exc


def _alpha0_arg(text):
    try:
        return _parse_alpha0(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _add_run_options(p):
    p.add_argument("--problem", help="packaged problem name (see list-problems)")
    p.add_argument("--config", help="run configuration file")
    p.add_argument("--beta", type=float)
    p.add_argument("--law", choices=LAWS)
    p.add_argument("--alpha0", type=_alpha0_arg, help="value or region map '1:1.0,2:0.001'")
    p.add_argument("--n", type=int, help="mesh resolution")
    p.add_argument("--kind", choices=("quad4", "tri3"))
    p.add_argument("--eps-tol", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--quad-degree", type=int)
    p.add_argument("--linear-solver", choices=("direct", "iterative"))
    p.add_argument("--initial-pressure", help="warm-start pressure file")
    p.add_argument("--out", dest="output_dir", help="output directory")
    p.add_argument("--no-plots", dest="plots", action="store_false", default=None)


def make_parser():
    parser = argparse.ArgumentParser(prog="porodarcy",
                                     description="Darcy flow with pressure-dependent drag.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_options(sub.add_parser("solve", help="solve one problem"))
    sw = sub.add_parser("sweep", help="solve over a list of beta values")
    _add_run_options(sw)
    sw.add_argument("--betas", type=_float_list, help="comma separated beta values")
    sw.add_argument("--beta-range", type=float, nargs=3, metavar=("START", "STOP", "STEP"))
    sw.add_argument("--jobs", type=int, default=1)
    cv = sub.add_parser("convergence", help="mesh-refinement study")
    _add_run_options(cv)
    cv.add_argument("--sizes", type=_int_list, default=[8, 16, 32, 64])
    sub.add_parser("list-problems", help="show the packaged problems")
    mi = sub.add_parser("mesh-info", help="summarize a problem's mesh or a mesh file")
    mi.add_argument("--problem")
    mi.add_argument("--config")
    mi.add_argument("--mesh", help="mesh file")
    return parser


def config_from_args(args):
    config = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {f.name: getattr(args, f.name, None) for f in fields(RunConfig)}
    return config.merged(**overrides)


def _beta_values(args):
    if args.betas is not None:
        return args.betas
    if args.beta_range is not None:
        start, stop, step = args.beta_range
        if step <= 0:
            raise ConfigError("beta step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(max(count, 0))]
    raise ConfigError("give --betas or --beta-range")


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "list-problems":
            return cmd_list_problems()
        config = config_from_args(args)
        if args.command == "mesh-info":
            return cmd_mesh_info(config, args.mesh)
        if args.command == "solve":
            return cmd_solve(config)
        if args.command == "sweep":
            return cmd_sweep(config, _beta_values(args), args.jobs)
        return cmd_convergence(config.merged(problem=config.problem or "mms"), args.sizes)
    except (PorodarcyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
