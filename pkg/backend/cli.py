"""Command-line front end.

    helmholtz-means coeff --kind sphere-modified --dim 3 --t 0:5:0.5
    helmholtz-means verify --suite identities --dim 2 --seed 7
    helmholtz-means wos --shape ball --dim 3 --mu 1 --boundary const:1 --at 0,0,0

Every output line (JSON) or the CSV header comment carries the run manifest.
Exit status: 0 when every check passed, 1 when a check failed, 2 on usage or domain errors.
"""

import argparse
import csv
import io
import json
import logging
import math
import sys
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np

from config.settings import settings
from backend.campaigns.verification import SUITES, VerificationCampaign
from backend.models.errors import HelmholtzMeansError, SearchError
from backend.models.schemas import (
    BoundaryCondition,
    CheckReport,
    CoeffKind,
    Equation,
    Family,
    QuadConfig,
    RunManifest,
    SolutionSpec,
    WosConfig,
)
from backend.services import analysis, coeffs, solutions
from backend.services.geometry import make_shape
from backend.services.wos import parse_boundary, wos_field, wos_solve

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

Item = Union[CheckReport, Dict[str, Any]]


class CommandResult(NamedTuple):
    items: List[Item]
    passed: bool


def configure_logging() -> None:
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, settings.LOG_LEVEL.upper(), logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


# argument types


def float_list(text: str) -> List[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}")
    if not values or not all(math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError(f"expected finite numbers, got {text!r}")
    return values


def int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


def float_range(text: str) -> List[float]:
    """``start:stop:step``, both ends included."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed range {text!r}")
    if not step > 0 or stop < start:
        raise argparse.ArgumentTypeError(f"need step > 0 and stop >= start, got {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(count)]


# shared flag groups


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", default=None, help="write to this path instead of stdout")
    common.add_argument("--workers", type=int, default=settings.DEFAULT_WORKERS)
    common.add_argument("--tol", type=float, default=None, help="override the check's default tolerance")
    return common


def _solution_flags(equation: Equation) -> argparse.ArgumentParser:
    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("--solution", choices=("radial", "plane", "sinh", "eigen"), default="radial")
    flags.add_argument("--equation", choices=[e.value for e in Equation], default=equation.value)
    flags.add_argument("--dim", type=int, default=3)
    flags.add_argument("--k", type=float, default=1.0, help="wavenumber lambda or mu")
    flags.add_argument("--direction", type=float_list, default=None)
    flags.add_argument("--phase", type=float, default=0.0)
    flags.add_argument("--bc", choices=[b.value for b in BoundaryCondition], default=BoundaryCondition.DIRICHLET.value)
    flags.add_argument("--n", type=int, default=1)
    flags.add_argument("--radius", type=float, default=1.0)
    return flags


def solution_from_args(args: argparse.Namespace) -> SolutionSpec:
    family = Family.DISK_EIGEN if args.solution == "eigen" else Family(args.solution)
    return SolutionSpec(
        equation=Equation(args.equation),
        family=family,
        m=args.dim,
        wavenumber=None if family == Family.DISK_EIGEN else args.k,
        direction=args.direction,
        phase=args.phase,
        bc=BoundaryCondition(args.bc),
        n=args.n,
        radius=args.radius,
    )


def _quad(args: argparse.Namespace) -> QuadConfig:
    return QuadConfig(seed=args.seed, workers=args.workers)


# commands


def run_coeff(args: argparse.Namespace) -> CommandResult:
    kind = CoeffKind.parse(args.kind)
    t = np.asarray(args.t, dtype=float)
    values = np.atleast_1d(coeffs.mean_coeff(kind, t, args.dim))
    derivatives = np.atleast_1d(coeffs.mean_coeff_derivative(kind, t, args.dim)) if args.derivative else None

    items: List[Item] = []
    for i, point in enumerate(t):
        row: Dict[str, Any] = {"kind": kind.label, "m": args.dim, "t": float(point), "value": float(values[i])}
        if derivatives is not None:
            row["derivative"] = float(derivatives[i])
        items.append(row)
    return CommandResult(items, True)


def run_verify(args: argparse.Namespace) -> CommandResult:
    campaign = VerificationCampaign(m=args.dim, seed=args.seed, tol=args.tol, workers=args.workers, cases=args.cases)
    reports = campaign.run(args.suite)
    return CommandResult(list(reports), all(report.passed for report in reports))


def run_wos(args: argparse.Namespace) -> CommandResult:
    geom = make_shape(args.shape, args.dim)
    g = parse_boundary(args.boundary, args.dim)
    overrides = {"eps": args.eps, "n_walks": args.walks, "max_steps": args.max_steps}
    cfg = WosConfig(seed=args.seed, workers=args.workers, **{k: v for k, v in overrides.items() if v is not None})

    if len(args.at) == 1:
        estimate = wos_solve(geom, g, args.mu, args.at[0], cfg)
        return CommandResult([{"point": args.at[0], **estimate.model_dump(mode="json")}], estimate.valid)

    items: List[Item] = []
    passed = True
    for entry in wos_field(geom, g, args.mu, args.at, cfg):
        if entry.estimate is None:
            passed = False
            items.append({"point": entry.point, "error": entry.error})
        else:
            passed = passed and entry.estimate.valid
            items.append({"point": entry.point, **entry.estimate.model_dump(mode="json")})
    return CommandResult(items, passed)


def run_nodal(args: argparse.Namespace) -> CommandResult:
    spec = solution_from_args(args)
    found = analysis.nodal_locate(spec, args.at, args.r_star, args.directions)
    item: Dict[str, Any] = {"solution": spec.model_dump(mode="json"), **found.model_dump(mode="json")}
    if args.shells:
        item["shells"] = analysis.nodal_shells(spec, args.shells)
    return CommandResult([item], found.sign_change_verified or found.search_radius == 0.0)


def run_maxprin(args: argparse.Namespace) -> CommandResult:
    spec = solution_from_args(args)
    geom = make_shape(args.shape, args.dim)
    report = analysis.max_principle_check(spec, geom, args.n_interior, args.n_boundary, args.seed)
    return CommandResult([report], report.passed)


def run_growth(args: argparse.Namespace) -> CommandResult:
    spec = solution_from_args(args)
    report = analysis.growth_check(spec, args.at, args.radii, _quad(args), args.tol)
    return CommandResult([report], report.passed)


def _rmvp_field(args: argparse.Namespace):
    if args.field == "solution":
        spec = solution_from_args(args)
        return solutions.as_field(spec), f"{spec.family.value}-{spec.equation.value}", solutions.wavenumber(spec)
    fields = {
        "x1": lambda p: p[:, 0],
        "r2": lambda p: np.sum(p * p, axis=1),
        "zero": lambda p: np.zeros(len(p)),
    }
    return fields[args.field], args.field, args.k


def run_rmvp(args: argparse.Namespace) -> CommandResult:
    f, label, k = _rmvp_field(args)
    mu = args.mu if args.mu is not None else k
    geom = make_shape(args.shape, args.dim)
    fraction = args.fraction

    def rf(point: np.ndarray) -> float:
        return fraction * geom.distance(point)

    grid = geom.sample_interior(args.points, args.seed)
    report = analysis.rmvp_check(f, label, geom, mu, rf, grid, _quad(args), args.tol)
    return CommandResult([report], report.passed)


def run_liouville(args: argparse.Namespace) -> CommandResult:
    report = analysis.liouville_ratio(args.dim, args.radii, args.x_norm, args.powers, args.tol)
    return CommandResult([report], report.passed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="helmholtz-means",
        description="Mean value identities of the Helmholtz and modified Helmholtz equations",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_flags()

    coeff = sub.add_parser("coeff", parents=[common], help="tabulate a mean value coefficient")
    coeff.add_argument("--kind", default="sphere-modified", help="sphere|ball - helmholtz|modified")
    coeff.add_argument("--dim", type=int, default=3)
    coeff.add_argument("--t", type=float_range, required=True, help="start:stop:step")
    coeff.add_argument("--derivative", action="store_true", help="also print d/dt (sphere kinds)")
    coeff.set_defaults(handler=run_coeff)

    verify = sub.add_parser("verify", parents=[common], help="run a verification suite")
    verify.add_argument("--suite", choices=sorted(SUITES), default="all")
    verify.add_argument("--dim", type=int, default=2)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--cases", type=int, default=None, help="random (x, r) pairs per catalog member")
    verify.set_defaults(handler=run_verify)

    wos = sub.add_parser("wos", parents=[common], help="walk on spheres for the modified equation")
    wos.add_argument("--shape", choices=("ball", "box"), default="ball")
    wos.add_argument("--dim", type=int, default=3)
    wos.add_argument("--mu", type=float, default=1.0)
    wos.add_argument("--eps", type=float, default=None)
    wos.add_argument("--walks", type=int, default=None)
    wos.add_argument("--max-steps", type=int, default=None)
    wos.add_argument("--seed", type=int, default=0)
    wos.add_argument("--at", type=float_list, action="append", required=True, help="x1,x2,...; repeat for a grid")
    wos.add_argument("--boundary", default="const:1", help="const:<c> or exp:<d1,...>")
    wos.set_defaults(handler=run_wos)

    nodal = sub.add_parser("nodal", parents=[common, _solution_flags(Equation.HELMHOLTZ)], help="locate a nodal point")
    nodal.add_argument("--at", type=float_list, required=True)
    nodal.add_argument("--r-star", type=float, required=True)
    nodal.add_argument("--directions", type=int, default=None)
    nodal.add_argument("--shells", type=int, default=0, help="also list this many nodal sphere radii")
    nodal.set_defaults(handler=run_nodal)

    maxprin = sub.add_parser("maxprin", parents=[common, _solution_flags(Equation.MODIFIED)], help="weak maximum principle audit")
    maxprin.add_argument("--shape", choices=("ball", "box"), default="ball")
    maxprin.add_argument("--n-interior", type=int, default=10_000)
    maxprin.add_argument("--n-boundary", type=int, default=2_000)
    maxprin.add_argument("--seed", type=int, default=0)
    maxprin.set_defaults(handler=run_maxprin)

    growth = sub.add_parser("growth", parents=[common, _solution_flags(Equation.MODIFIED)], help="growth of |v| about a point")
    growth.add_argument("--at", type=float_list, required=True)
    growth.add_argument("--radii", type=float_list, default=[0.5, 1.0, 2.0])
    growth.add_argument("--seed", type=int, default=0)
    growth.set_defaults(handler=run_growth)

    rmvp = sub.add_parser("rmvp", parents=[common, _solution_flags(Equation.MODIFIED)], help="restricted mean value property")
    rmvp.add_argument("--field", choices=("solution", "x1", "r2", "zero"), default="solution")
    rmvp.add_argument("--mu", type=float, default=None, help="defaults to the solution's wavenumber or --k")
    rmvp.add_argument("--shape", choices=("ball", "box"), default="ball")
    rmvp.add_argument("--points", type=int, default=20)
    rmvp.add_argument("--fraction", type=float, default=settings.RMVP_RADIUS_FRACTION, help="r(x) = fraction * dist(x)")
    rmvp.add_argument("--seed", type=int, default=0)
    rmvp.set_defaults(handler=run_rmvp)

    liouville = sub.add_parser("liouville", parents=[common], help="ingredients of the Liouville argument")
    liouville.add_argument("--dim", type=int, default=3)
    liouville.add_argument("--radii", type=float_range, default=float_range("1:50:1"))
    liouville.add_argument("--x-norm", type=float, default=0.0)
    liouville.add_argument("--powers", type=int_list, default=[0, 1, 2])
    liouville.set_defaults(handler=run_liouville)

    return parser


# output


def _flat(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return " ".join(str(v) for v in value)
    if isinstance(value, dict):
        return json.dumps(value, sort_keys=True)
    return value


def _csv_rows(item: Item) -> List[Dict[str, Any]]:
    if isinstance(item, CheckReport):
        if not item.residuals:
            return [{"name": item.name, "label": "", "value": "", "tolerance": item.tolerance, "within": "", "passed": item.passed}]
        return [
            {
                "name": item.name,
                "label": residual.label,
                "value": residual.value,
                "tolerance": residual.tolerance,
                "within": residual.within,
                "passed": item.passed,
            }
            for residual in item.residuals
        ]
    return [{key: _flat(value) for key, value in item.items()}]


def render(items: Sequence[Item], manifest: RunManifest, fmt: str) -> str:
    if fmt == "json":
        lines = []
        for item in items:
            if isinstance(item, CheckReport):
                record = item.model_copy(update={"manifest": manifest}).model_dump(mode="json")
            else:
                record = {**item, "manifest": manifest.model_dump(mode="json")}
            lines.append(json.dumps(record))
        return "\n".join(lines) + ("\n" if lines else "")

    rows = [row for item in items for row in _csv_rows(item)]
    buffer = io.StringIO()
    buffer.write(f"# manifest {manifest.model_dump_json()}\n")
    if rows:
        fields: List[str] = []
        for row in rows:
            fields += [key for key in row if key not in fields]
        writer = csv.DictWriter(buffer, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buffer.getvalue()


def _manifest(args: argparse.Namespace) -> RunManifest:
    parameters = {key: str(value) for key, value in sorted(vars(args).items()) if key not in ("handler", "command")}
    return RunManifest(command=args.command, parameters=parameters, seed=getattr(args, "seed", 0))


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_OK

    try:
        result = args.handler(args)
    except SearchError as e:
        logger.error("%s: %s", args.command, e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILED
    except (HelmholtzMeansError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    text = render(result.items, _manifest(args), args.format)
    try:
        if args.out:
            with open(args.out, "w", encoding="utf-8") as handle:
                handle.write(text)
        else:
            sys.stdout.write(text)
    except OSError as e:
        print(f"error: cannot write output: {e}", file=sys.stderr)
        return EXIT_USAGE

    if not result.passed:
        logger.warning("%s: at least one check failed", args.command)
    return EXIT_OK if result.passed else EXIT_FAILED


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
