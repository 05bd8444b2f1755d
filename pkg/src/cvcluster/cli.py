"""Command-line interface: ``cvcluster {resources, simulate, cubic}``.

Exit codes: 0 success, 1 usage, 2 validation, 3 numerical tolerance.
Every report starts with the physical conventions it was produced under.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

from cvcluster import fock as fk
from cvcluster import grid as gr
from cvcluster import mbqc as mb
from cvcluster import resources as rs
from cvcluster.errors import NumericalError, ValidationError
from cvcluster.gaussian import CONVENTIONS, GaussianState
from cvcluster.graph import load_graph, square_lattice

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2, 3

CONVENTION_LINE = "# conventions: ordering q1..qn,p1..pn; hbar=1; vacuum variance 1/2; dB=10*log10(s^2); labels 1-based"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2 by default; usage errors are 1 here
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None) -> None:
    """Write atomically to ``out`` or print to stdout."""
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _require_file(path: str | None, what: str) -> Path:
    if path is None:
        raise UsageError(f"{what} file is required")
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} file not found: {path}")
    return p


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return CONVENTION_LINE + "\n" + buf.getvalue()


def _json_text(payload: dict) -> str:
    return json.dumps({"conventions": CONVENTIONS, **payload}, indent=1, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, Fraction):
        return [x.numerator, x.denominator]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")


# ---------------------------------------------------------------------------
# resources


def _parse_lattice(text: str) -> tuple[int, int]:
    try:
        r, c = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"lattice must look like ROWSxCOLS, got {text!r}")
    if r < 1 or c < 1:
        raise argparse.ArgumentTypeError(f"lattice dimensions must be positive, got {text!r}")
    return r, c


def cmd_resources(args) -> int:
    if args.lattice is not None:
        g = square_lattice(*args.lattice, periodic=args.periodic)
        gid = f"lattice-{args.lattice[0]}x{args.lattice[1]}" + ("-periodic" if args.periodic else "")
    else:
        g = load_graph(_require_file(args.graph, "graph"))
        gid = Path(args.graph).stem
    rep = rs.cost_comparison(g, args.accuracy, bound=args.bound, exact_svd=args.exact_svd)
    if args.format == "json":
        payload = rep.to_dict()
        payload.pop("conventions", None)
        text = _json_text({"graph_id": gid, "report": payload})
    elif args.format == "csv":
        text = CONVENTION_LINE + "\n" + rs.reports_to_csv({gid: rep})
    else:
        text = rep.table()
    _emit(text, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def _load_forced(path: Path):
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc

    def num(v):
        if isinstance(v, str):
            try:
                return Fraction(v)
            except ValueError:
                raise ValidationError(f"{path}: cannot read outcome {v!r}")
        if isinstance(v, list) and len(v) == 2:
            return Fraction(int(v[0]), int(v[1]))
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return v
        raise ValidationError(f"{path}: cannot read outcome {v!r}")

    if isinstance(data, list):
        return [num(v) for v in data]
    if isinstance(data, dict):
        try:
            return {int(k): num(v) for k, v in data.items()}
        except ValueError:
            raise ValidationError(f"{path}: outcome keys must be mode labels")
    raise ValidationError(f"{path}: forced outcomes must be a list or an object keyed by mode")


def _state_payload(state) -> dict:
    if isinstance(state, GaussianState):
        d = state.to_dict()
        d.pop("conventions", None)
        return {"kind": "gaussian", **d}
    return {"kind": "nullifier", **state.to_dict()}


def cmd_simulate(args) -> int:
    gpath = _require_file(args.graph, "graph")
    ppath = _require_file(args.program, "program")
    forced = _load_forced(_require_file(args.force_outcomes, "forced-outcomes")) if args.force_outcomes else None
    g = load_graph(gpath)
    program = mb.load_program(ppath)
    if args.backend == "fock":
        raise ValidationError(
            "the fock backend only runs the cubic-gate pipeline; use 'cvcluster cubic', "
            "or choose --backend nullifier or gaussian for measurement programs"
        )
    if args.backend == "gaussian" and args.accuracy is None:
        raise UsageError("--accuracy is required with --backend gaussian")
    res = mb.run_program(g, program, args.backend, s=args.accuracy, forced=forced, rng=np.random.default_rng(args.seed))
    state = mb.finalize(res) if args.finalize else res.state
    if args.format == "json":
        text = _json_text(
            {
                "backend": args.backend,
                "accuracy": args.accuracy,
                "finalized": args.finalize,
                "state": _state_payload(state),
                "record": res.record.to_dict(),
                "log": [
                    {"step": r.step, "mode": r.mode, "basis": r.basis, "outcome": r.raw, "result": r.result}
                    for r in res.log
                ],
            }
        )
    elif args.format == "csv":
        text = CONVENTION_LINE + "\n" + res.log_csv()
    else:
        lines = [CONVENTION_LINE, f"backend {args.backend}" + (f" accuracy s={args.accuracy:g}" if args.accuracy else "")]
        lines.append("outcomes:")
        for r in res.log:
            lines.append(f"  step {r.step} mode {r.mode} theta={r.basis:.6g} reading={mb._fmt(r.raw)} m={mb._fmt(r.result)}")
        lines.append("byproducts:")
        for w in res.record.tags:
            nf = res.record.normal_form(w)
            lines.append(f"  wire {w} -> mode {res.record.heads[w]}: F^{nf['fourier']}"
                         f"{' P' if nf['reflection'] else ''} X({mb._fmt(nf['x'])}) Z({mb._fmt(nf['z'])})")
        lines.append("state" + (" (byproducts undone):" if args.finalize else ":"))
        if isinstance(state, GaussianState):
            lines.append(f"  modes {list(state.labels)}")
            lines.append("  mean " + " ".join(f"{x:.10g}" for x in state.mean))
            for row in state.cov:
                lines.append("  cov  " + " ".join(f"{x:.10g}" for x in row))
        else:
            lines += [f"  {f}" for f in state.format()]
        text = "\n".join(lines)
    _emit(text, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# cubic


CUBIC_FIELDS = ["circuit", "s", "r", "dim", "n", "gamma", "probability", "overlap", "x0", "p0", "leak", "flagged"]


def _parse_list(kind):
    def parse(text: str):
        try:
            vals = [kind(x) for x in text.split(",") if x.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a comma-separated list, got {text!r}")
        if not vals:
            raise argparse.ArgumentTypeError("empty list")
        return vals

    return parse


def _parse_range(text: str) -> list[float]:
    """``START:STOP:COUNT`` (inclusive) or a comma-separated list."""
    if ":" not in text:
        return _parse_list(float)(text)
    try:
        a, b, k = text.split(":")
        a, b, k = float(a), float(b), int(k)
    except ValueError:
        raise argparse.ArgumentTypeError(f"range must be START:STOP:COUNT, got {text!r}")
    if k < 1 or b < a or (k == 1 and a != b):
        raise argparse.ArgumentTypeError(f"invalid sweep bounds {text!r}")
    return np.linspace(a, b, k).tolist()


def cubic_point(circuit: str, s: float, r: float, dim: int, n: int | None, rng, threshold: float,
                grid: gr.Grid, starts: int = 3) -> list:
    if circuit == "cluster":
        res = fk.run_circuit_cluster(s, r, dim, n, rng, threshold=None)
    else:
        sg, theta = fk.matched_gkp_parameters(s)
        res = fk.run_circuit_gkp(sg, r, dim, n, rng, theta=theta, threshold=None)
    gamma = fk.gamma_of_n(res.n)
    psi = gr.fock_to_grid(res.state.amplitudes, grid)
    g_res = mb.resource_cubic_strength(res.n, r)
    fit = gr.max_overlap_over_shifts(psi, lambda x0, p0: gr.cubic_target(g_res, s, grid, x0, p0), starts=starts)
    flagged = res.leak > threshold
    return [circuit, s, r, dim, res.n, gamma, res.probability, fit.overlap, fit.x0, fit.p0, res.leak, int(flagged)]


def cmd_cubic(args) -> int:
    for d in args.dims:
        if d <= fk.GUARD_BAND:
            raise UsageError(f"dimension {d} must exceed the guard band {fk.GUARD_BAND}")
    for v in args.s:
        if not v > 1:
            raise UsageError(f"accuracy s must exceed 1 for the cubic target envelope, got {v}")
    if args.n is not None and args.n < 0:
        raise UsageError("photon number must be non-negative")
    grid = gr.Grid(args.qmax, args.points)
    rows = []
    for s in args.s:
        for r in args.r:
            for d in args.dims:
                rng = np.random.default_rng(args.seed)
                rows.append(cubic_point(args.circuit, s, r, d, args.n, rng, args.leak_threshold, grid))
    if args.format == "json":
        text = _json_text({"rows": [dict(zip(CUBIC_FIELDS, row)) for row in rows]})
    elif args.format == "csv":
        text = _csv_text(CUBIC_FIELDS, [[repr(float(x)) if isinstance(x, float) else x for x in row] for row in rows])
    else:
        lines = [CONVENTION_LINE, " ".join(f"{h:>11}" for h in CUBIC_FIELDS)]
        for row in rows:
            lines.append(" ".join(f"{x:>11.6g}" if isinstance(x, float) else f"{x!s:>11}" for x in row))
        text = "\n".join(lines)
    _emit(text, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cvcluster", description="CV cluster-state simulation and resource estimation")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--format", choices=("json", "csv", "table"), default="table")
        sp.add_argument("--out", metavar="PATH", help="write here instead of stdout (atomic)")

    sp = sub.add_parser("resources", help="offline squeezing report for a graph")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", metavar="FILE", help="graph JSON {n, edges}")
    src.add_argument("--lattice", type=_parse_lattice, metavar="RxC", help="square lattice instead of a file")
    sp.add_argument("--periodic", action="store_true", help="wrap the lattice into a torus")
    sp.add_argument("--accuracy", type=float, required=True, metavar="S")
    sp.add_argument("--bound", action="store_true", help="use sqrt(1 + maxdeg^2) on every mode")
    sp.add_argument("--exact-svd", action="store_true", help="append all singular values of M(s)")
    common(sp)
    sp.set_defaults(func=cmd_resources)

    sp = sub.add_parser("simulate", help="run a measurement program")
    sp.add_argument("--graph", metavar="FILE")
    sp.add_argument("--program", metavar="FILE")
    sp.add_argument("--backend", choices=("nullifier", "gaussian", "fock"), default="nullifier")
    sp.add_argument("--accuracy", type=float, metavar="S")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--force-outcomes", metavar="FILE", help="JSON list (step order) or {mode: reading}")
    sp.add_argument("--finalize", action="store_true", help="undo the recorded byproducts before output")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("cubic", help="cubic-phase-state circuit sweep")
    sp.add_argument("--circuit", choices=("cluster", "gkp"), default="cluster")
    sp.add_argument("--s", type=_parse_range, default=[1.5], metavar="LIST|A:B:K")
    sp.add_argument("--r", type=_parse_range, default=[5.0], metavar="LIST|A:B:K")
    sp.add_argument("--dims", type=_parse_list(int), default=[fk.DEFAULT_DIM], metavar="LIST")
    sp.add_argument("--n", type=int, default=None, help="force the photon count (default: sample)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--leak-threshold", type=float, default=fk.LEAK_THRESHOLD)
    sp.add_argument("--qmax", type=float, default=10.0)
    sp.add_argument("--points", type=int, default=1024)
    common(sp)
    sp.set_defaults(func=cmd_cubic, format="csv")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help and usage errors
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"cvcluster: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"cvcluster: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValidationError as exc:
        print(f"cvcluster: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
