"""``calabi-pack`` command line.

    calabi-pack <subcommand> --mesh <path> [--weights <path>]
                [--radii const:<x>|rand:<seed>|file:<path>] [--tol <x>] [--h0 <x>]
                [--tmax <x>] [--target <path>] [--out <dir>] [--json] [--quiet]

Subcommands: check, curvature, flow, solve, potential, bench. ``--mesh``
also accepts the name of a bundled fixture (tetrahedron, octahedron, torus,
genus2) when no file of that name exists.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import errors
from .export import write_table, write_trajectory_csv, write_trajectory_json
from .flow import FlowConfig, Termination, integrate, radius_floor_check
from .hypgeom import WeightedPacking, curvatures, u_from_r
from .laplacian import assemble, min_eigenvalue
from .mesh import FIXTURES, check_thurston_conditions, fixture_path, load_mesh, load_weights
from .newton import newton_solve
from .potential import properness_probe, ricci_potential

log = logging.getLogger("calabipack")

# most specific class first; lookup walks the exception's MRO
EXIT_CODES = {
    errors.ParseError: 2,
    errors.FileError: 3,
    errors.BoundaryEdge: 5,
    errors.DegenerateFace: 6,
    errors.NonManifold: 7,
    errors.MeshError: 4,
    errors.DomainError: 8,
    errors.TriangleInequalityViolation: 9,
    errors.DimensionMismatch: 10,
    errors.NoConvergence: 11,
    errors.BlowupGuard: 12,
    errors.StepFailure: 13,
    errors.QuadratureFailure: 14,
    errors.ConvergenceFailure: 15,
    errors.CalabiPackError: 1,
}


def exit_code_for(exc) -> int:
    for cls in type(exc).__mro__:
        if cls in EXIT_CODES:
            return EXIT_CODES[cls]
    return 1


RANDOM_RADII = (0.1, 10.0)


def parse_radii(spec: str, n: int) -> np.ndarray:
    """``const:<x>``, ``rand:<seed>`` (log-uniform in [0.1, 10]) or ``file:<path>``."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "const":
            r = np.full(n, float(arg))
        elif kind == "rand":
            rng = np.random.default_rng(int(arg))
            lo, hi = np.log(RANDOM_RADII[0]), np.log(RANDOM_RADII[1])
            r = np.exp(rng.uniform(lo, hi, n))
        elif kind == "file":
            r = _read_vector(arg, n)
        else:
            raise errors.ParseError(f"radii spec {spec!r}: use const:<x>, rand:<seed> or file:<path>")
    except ValueError as exc:
        raise errors.ParseError(f"radii spec {spec!r}: {exc}") from None
    if np.any(~(r > 0)) or not np.all(np.isfinite(r)):
        raise errors.DomainError(f"radii spec {spec!r} gives non-positive values")
    return r


def _read_vector(path, n):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise errors.FileError(f"cannot read {path}: {exc}") from None
    try:
        values = np.array(
            [float(x) for line in text.splitlines() for x in line.split("#", 1)[0].split()]
        )
    except ValueError as exc:
        raise errors.ParseError(f"{path}: {exc}") from None
    if values.shape != (n,):
        raise errors.ParseError(f"{path}: expected {n} values, found {len(values)}")
    return values


def _load_surface(arg):
    p = Path(arg)
    if not p.exists() and arg in FIXTURES:
        p = fixture_path(arg)
    if not p.exists():
        raise errors.FileError(f"mesh file {arg} not found")
    return load_mesh(p)


def _common(args):
    surface = _load_surface(args.mesh)
    phi = load_weights(args.weights, surface) if args.weights else np.zeros(surface.n_edges)
    r = parse_radii(args.radii, surface.n_vertices)
    target = _read_vector(args.target, surface.n_vertices) if args.target else None
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    return surface, phi, r, target, out


class Printer:
    def __init__(self, args):
        self.quiet = args.quiet
        self.json = args.json

    def line(self, text=""):
        if not self.quiet and not self.json:
            print(text)

    def document(self, doc):
        if self.json:
            print(json.dumps(doc, indent=1, default=_jsonable))


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(type(obj).__name__)


def cmd_check(args, pr):
    surface = _load_surface(args.mesh)
    phi = load_weights(args.weights, surface) if args.weights else np.zeros(surface.n_edges)
    report = check_thurston_conditions(surface, phi)
    stats = {
        "vertices": surface.n_vertices,
        "edges": surface.n_edges,
        "faces": surface.n_faces,
        "chi": surface.euler_characteristic,
        "max_degree": surface.max_degree,
    }
    pr.line(" ".join(f"{k}={v}" for k, v in stats.items()))
    pr.line(f"obstruction check: {report.status} ({report.note})")
    for cyc, s in report.triangle_violations:
        pr.line(f"  3-cycle {cyc} weight sum {s:.6g} >= pi")
    for cyc, s in report.quad_violations:
        pr.line(f"  4-cycle {cyc} weight sum {s:.6g} >= 2pi")
    pr.document({**stats, **report.to_dict()})
    return 0


def cmd_curvature(args, pr):
    surface, phi, r, _, out = _common(args)
    packing = WeightedPacking.from_radii(surface, r, phi)
    geo = curvatures(packing)
    resid = geo.gauss_bonnet_residual()
    rows = [(i, r[i], packing.u[i], geo.K[i]) for i in range(surface.n_vertices)]
    pr.line("vertex\tr\tu\tK")
    for i, ri, ui, ki in rows:
        pr.line(f"{i}\t{ri:.12g}\t{ui:.12g}\t{ki:.12g}")
    pr.line(f"total_area={geo.total_area:.12g} K_av={geo.K_av:.12g}")
    pr.line(f"gauss_bonnet_residual={resid:.3e}")
    if out:
        write_table(out / "curvature.csv", ("vertex", "r", "u", "K"), rows)
    pr.document(
        {
            "r": r,
            "u": packing.u,
            "K": geo.K,
            "total_area": geo.total_area,
            "K_av": geo.K_av,
            "gauss_bonnet_residual": resid,
        }
    )
    return 0


def _flow_config(args, target):
    return FlowConfig(target=target, h0=args.h0, tol=args.tol, t_max=args.tmax)


def cmd_flow(args, pr):
    surface, phi, r, target, out = _common(args)
    packing = WeightedPacking.from_radii(surface, r, phi)
    traj = integrate(packing, _flow_config(args, target))
    summary = {
        "termination": traj.termination.value,
        "steps": len(traj.samples) - 1,
        "t": traj.final.t,
        "residual_inf": traj.residual,
        "energy": traj.final.energy,
        "fitted_rate": traj.fitted_rate,
        "lambda1": traj.final.lambda1,
        "rejected_steps": traj.rejected_steps,
        "ceiling_exceeded": traj.ceiling_exceeded,
    }
    if not np.any(phi):
        floor = radius_floor_check(traj, surface)
        summary["radius_floor_holds"] = floor.holds and floor.tanh_form_holds
    pr.line(f"{traj.termination.value}: steps={summary['steps']} t={traj.final.t:.6g}")
    pr.line(f"final max|K - target| = {traj.residual:.3e}, energy = {traj.final.energy:.3e}")
    if traj.fitted_rate is not None:
        pr.line(f"fitted tail slope of ln(energy) = {traj.fitted_rate:.6g}")
    if traj.final.lambda1 is not None:
        lam = traj.final.lambda1
        pr.line(f"lambda1 = {lam:.6g}, -2 lambda1^2 = {-2 * lam * lam:.6g}")
    if "radius_floor_holds" in summary:
        pr.line(f"radius floor holds: {summary['radius_floor_holds']}")
    if out:
        write_trajectory_csv(traj, out / "trajectory.csv")
        write_trajectory_json(traj, out / "trajectory.json")
        from .plotting import plot_flow

        plot_flow(traj, out / "flow.png")
        pr.line(f"wrote {out / 'trajectory.csv'}, {out / 'trajectory.json'}, {out / 'flow.png'}")
    pr.document(summary)
    if traj.termination is Termination.BLOWUP_GUARD:
        raise errors.BlowupGuard(traj.message or "radius blow-up")
    if traj.termination is Termination.STEP_FAILURE:
        raise errors.StepFailure(traj.message)
    return 0


def cmd_solve(args, pr):
    surface, phi, r, target, out = _common(args)
    try:
        res = newton_solve(surface, phi, target, u_from_r(r), tol=args.tol)
    except errors.NoConvergence as exc:
        pr.document({"status": "NoConvergence", "residual": exc.residual, "iterations": exc.iterations})
        raise
    lam = min_eigenvalue(assemble(res.packing))
    pr.line(f"converged in {res.iterations} iterations, residual {res.residual:.3e}")
    pr.line(f"lambda1 = {lam:.6g}")
    rows = [(i, res.packing.r[i], res.u[i]) for i in range(surface.n_vertices)]
    pr.line("vertex\tr\tu")
    for i, ri, ui in rows:
        pr.line(f"{i}\t{ri:.15g}\t{ui:.15g}")
    if out:
        write_table(out / "solution.csv", ("vertex", "r", "u"), rows)
    pr.document(
        {
            "status": "Converged",
            "iterations": res.iterations,
            "residual": res.residual,
            "lambda1": lam,
            "r": res.packing.r,
            "u": res.u,
        }
    )
    return 0


def cmd_potential(args, pr):
    surface, phi, r, _, out = _common(args)
    u0 = u_from_r(parse_radii(args.base, surface.n_vertices))
    u = u_from_r(r)
    val = ricci_potential(surface, phi, u0, u)
    pr.line(f"f(u) = {val.value:.15g} ({val.path}, {val.evaluations} curvature evaluations)")
    doc = {"value": val.value, "evaluations": val.evaluations}
    if args.probe:
        rep = properness_probe(surface, phi, u0, rays=args.rays, radius_max=args.radius_max)
        pr.line(
            f"properness probe: {'increasing' if rep.proper else 'NOT increasing'} on "
            f"{len(rep.directions)} rays, min growth {rep.min_growth:.3e}, "
            f"min second difference {rep.min_second_difference:.3e}"
        )
        doc["probe"] = {
            "proper": rep.proper,
            "min_growth": rep.min_growth,
            "min_second_difference": rep.min_second_difference,
            "radii": rep.radii,
            "values": rep.values,
        }
        if out:
            from .plotting import plot_probe

            plot_probe(rep, out / "probe.png")
            write_table(
                out / "probe.csv",
                ("ray", *[f"{x:.6g}" for x in rep.radii]),
                [(k, *map(float, row)) for k, row in enumerate(rep.values)],
            )
    pr.document(doc)
    return 0


def _bench_one(job):
    mesh, phi, r, config = job
    surface = _load_surface(mesh)
    t0 = time.perf_counter()
    traj = integrate(WeightedPacking.from_radii(surface, r, phi), config)
    t_flow = time.perf_counter() - t0
    t0 = time.perf_counter()
    try:
        res = newton_solve(surface, phi, config.target, u_from_r(r), tol=config.tol)
        newton_iters, gap = res.iterations, float(np.max(np.abs(res.u - traj.final.u)))
    except errors.CalabiPackError:
        newton_iters, gap = None, math.nan
    t_newton = time.perf_counter() - t0
    return (
        traj.termination.value,
        len(traj.samples) - 1,
        t_flow,
        newton_iters,
        t_newton,
        gap,
    )


def cmd_bench(args, pr):
    surface, phi, _, target, out = _common(args)
    config = _flow_config(args, target)
    jobs = [
        (args.mesh, phi, parse_radii(f"rand:{seed}", surface.n_vertices), config)
        for seed in range(args.seed, args.seed + args.runs)
    ]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            results = list(pool.map(_bench_one, jobs))
    else:
        results = [_bench_one(j) for j in jobs]
    header = ("seed", "flow_termination", "flow_steps", "flow_seconds", "newton_iterations",
              "newton_seconds", "max_u_gap")
    rows = [(args.seed + k, *res) for k, res in enumerate(results)]
    pr.line("\t".join(header))
    for row in rows:
        pr.line("\t".join(f"{v:.4g}" if isinstance(v, float) else str(v) for v in row))
    if out:
        write_table(out / "bench.csv", header, rows)
    pr.document([dict(zip(header, row)) for row in rows])
    return 0


COMMANDS = {
    "check": cmd_check,
    "curvature": cmd_curvature,
    "flow": cmd_flow,
    "solve": cmd_solve,
    "potential": cmd_potential,
    "bench": cmd_bench,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mesh", required=True, help="mesh file or bundled fixture name")
    common.add_argument("--weights", help="edge weight file 'i j phi' (default: all zero)")
    common.add_argument("--radii", default="const:1", help="const:<x> | rand:<seed> | file:<path>")
    common.add_argument("--tol", type=float, default=1e-8)
    common.add_argument("--h0", type=float, default=1e-2)
    common.add_argument("--tmax", type=float, default=1e4)
    common.add_argument("--target", help="file with N target curvatures (default: zero)")
    common.add_argument("--out", help="directory for CSV/JSON/PNG output")
    common.add_argument("--json", action="store_true", help="print a JSON document instead of text")
    common.add_argument("--quiet", action="store_true", help="print nothing on success")

    parser = argparse.ArgumentParser(
        prog="calabi-pack", description="Hyperbolic circle packings and the combinatorial Calabi flow."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="surface statistics and obstruction report")
    sub.add_parser("curvature", parents=[common], help="curvatures and Gauss-Bonnet residual")
    sub.add_parser("flow", parents=[common], help="run the Calabi flow")
    sub.add_parser("solve", parents=[common], help="Newton solve for the target curvature")
    p = sub.add_parser("potential", parents=[common], help="evaluate the Ricci potential")
    p.add_argument("--base", default="const:1", help="radii of the base point u0")
    p.add_argument("--probe", action="store_true", help="also sample f along rays from u0")
    p.add_argument("--rays", type=int, default=8)
    p.add_argument("--radius-max", type=float, default=20.0)
    p = sub.add_parser("bench", parents=[common], help="flow vs Newton timings on random radii")
    p.add_argument("--runs", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    pr = Printer(args)
    try:
        return COMMANDS[args.command](args, pr)
    except errors.CalabiPackError as exc:
        if not args.json:
            print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code_for(exc)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
