"""Command-line surface.

Objects travel between commands as typed JSON records ({"type", "value"}),
so commands compose through pipes:

    semimeasure measure gaussian --q '[[1]]' | semimeasure measure moment --index '[4]'

Exit codes: 0 success, 1 domain error, 2 audit failure, 64 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from . import audit
from .agmeasures import (
    AlmostGaussianMeasure,
    DeskDistribution,
    HeisenbergOp,
    fourier_measure,
    integrate,
    pair,
    pullback_measure,
    pushforward_measure,
)
from .derham import ComplexOfSpaces, build_semiinf_derham, koszul_differential
from .errors import DomainError, SchemaError
from .lattice import (
    DimensionTheory,
    WindowSpace,
    canonical_det_theory,
    complex_orientation,
    haar_from_det,
    orientation_from_det,
)
from .linalg import FinVec, LinMap
from .polynomial import Polynomial, coeff_from_str
from .promeasures import (
    CoherentMeasureFamily,
    QuadraticTheory,
    check_coherence,
    fourier_family,
    gaussian_family,
    heisenberg_on_family,
    parity_family,
    window_vector,
)
from .quadforms import PosDefForm, SymBilForm, is_positive_definite, pushforward_form, restrict_form
from .serialize import Workspace, decode, dump, dumps, encode, load, sample_workspace
from .superalg import ExteriorElement, SuperMeasure, WedgeVector, clifford_action, wedge_transition

EXIT_OK, EXIT_DOMAIN, EXIT_AUDIT, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- input helpers -------------------------------------------------------------


def default_window() -> int:
    raw = os.environ.get("SEMIMEASURE_WINDOW", "3")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"SEMIMEASURE_WINDOW={raw!r} is not an integer") from None
    if n < 1:
        raise UsageError("SEMIMEASURE_WINDOW must be at least 1")
    return n


def _json_arg(text: str | None, what: str):
    if text is None:
        raise UsageError(f"{what} is required")
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        raise UsageError(f"{what} is not valid JSON: {text!r}") from None


def _matrix(text: str, what: str) -> tuple:
    data = _json_arg(text, what)
    if not isinstance(data, list) or not all(isinstance(r, list) for r in data):
        raise UsageError(f"{what} must be a list of rows")
    try:
        return tuple(tuple(Fraction(str(x)) for x in row) for row in data)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"{what} has a non-rational entry") from None


def _indices(text: str, what: str) -> list:
    data = _json_arg(text, what)
    if not isinstance(data, list) or not all(isinstance(x, int) for x in data):
        raise UsageError(f"{what} must be a list of integers")
    return data


def _input_text(args) -> str:
    path = getattr(args, "input", None)
    if path:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    if sys.stdin is None or sys.stdin.isatty():
        return ""
    return sys.stdin.read()


def _read_input(args, expected: tuple | None = None, optional: bool = False):
    """The piped object: --input FILE, or stdin.  None when optional and absent."""
    text = _input_text(args)
    if not text.strip():
        if optional:
            return None
        raise UsageError("expected a JSON object on stdin (or --input FILE)")
    try:
        rec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"input is not JSON: {exc}") from None
    try:
        obj = decode(rec)
    except DomainError:
        raise
    except Exception as exc:
        raise SchemaError(f"input record is malformed: {type(exc).__name__}: {exc}") from None
    if expected and not isinstance(obj, expected):
        names = ", ".join(t.__name__ for t in expected)
        raise UsageError(f"input is a {rec.get('type')}, expected {names}")
    return obj


def _emit(obj) -> str:
    return json.dumps(encode(obj), sort_keys=True, indent=1)


def _emit_plain(data) -> str:
    return json.dumps(data, sort_keys=True, indent=1)


def _space_for(n: int, name: str) -> FinVec:
    return FinVec.standard(n, name)


def _linmap(source: FinVec, text: str, name: str = "T") -> LinMap:
    m = _matrix(text, "--map")
    if any(len(r) != source.dim for r in m):
        raise UsageError(f"--map rows must have {source.dim} entries")
    return LinMap(source, FinVec.standard(len(m), name, prefix="y"), m)


def _injection(target: FinVec, text: str, name: str = "S") -> LinMap:
    m = _matrix(text, "--map")
    if len(m) != target.dim:
        raise UsageError(f"--map needs {target.dim} rows")
    k = len(m[0]) if m else 0
    return LinMap(FinVec.standard(k, name, prefix="s"), target, m)


def _window(args) -> WindowSpace:
    n = args.window if args.window is not None else default_window()
    return WindowSpace.window(n)


def _ref(space: WindowSpace, args):
    return space.point(_indices(args.ref, "--ref")) if getattr(args, "ref", None) else space.u0


# --- commands -----------------------------------------------------------------


def cmd_space(args):
    return _emit(FinVec.standard(args.dim, args.name, prefix=args.prefix))


def cmd_form(args):
    if args.action == "check":
        m = _matrix(args.q, "--q")
        space = _space_for(len(m), "X")
        return _emit_plain({"positive_definite": is_positive_definite(SymBilForm(space, m))})
    if args.q:
        m = _matrix(args.q, "--q")
        q = PosDefForm(_space_for(len(m), "X"), m)
    else:
        q = _read_input(args, (PosDefForm,))
    if args.action == "push":
        return _emit(pushforward_form(q, _linmap(q.space, args.map)))
    return _emit(restrict_form(q, _injection(q.space, args.map)))


def _poly_arg(space: FinVec, text: str | None) -> Polynomial:
    if not text:
        return Polynomial.constant(space)
    data = _json_arg(text, "--p")
    try:
        return Polynomial(space, {tuple(e): coeff_from_str(str(c)) for e, c in data})
    except (TypeError, ValueError):
        raise UsageError("--p must be a list of [exponents, coefficient] pairs") from None


def cmd_measure(args):
    if args.action == "gaussian":
        m = _matrix(args.q, "--q")
        space = _space_for(len(m), args.name)
        q = PosDefForm(space, m)
        return _emit(AlmostGaussianMeasure(space, q, _poly_arg(space, args.p)))
    mu = _read_input(args, (AlmostGaussianMeasure,))
    if args.action == "push":
        return _emit(pushforward_measure(mu, _linmap(mu.space, args.map)))
    if args.action == "pull":
        return _emit(pullback_measure(mu, _injection(mu.space, args.map)))
    if args.action == "fourier":
        return _emit(fourier_measure(mu))
    if args.action == "moment":
        e = _indices(args.index, "--index")
        if len(e) != mu.space.dim or any(x < 0 for x in e):
            raise UsageError(f"--index needs {mu.space.dim} nonnegative exponents")
        return str(integrate(mu.with_p(Polynomial.monomial(mu.space, e) * mu.p)))
    # pair against a point mass at the origin, or a distribution record
    if args.dist:
        with open(args.dist, encoding="utf-8") as fh:
            phi = decode(json.load(fh))
        if not isinstance(phi, DeskDistribution):
            raise UsageError("--dist does not hold a distribution")
    else:
        phi = DeskDistribution.point_mass(mu.space, supply_line=bool(mu.tags))
    return str(pair(phi, mu))


def cmd_theory(args):
    space = _window(args)
    ref = _ref(space, args)
    if args.kind == "dim":
        return _emit(DimensionTheory.vanishing_at(ref))
    d = canonical_det_theory(ref)
    if args.kind == "det":
        return _emit(d)
    if args.kind == "haar":
        return _emit(haar_from_det(d, dualize=args.dual))
    if args.complex:
        return _emit(complex_orientation(space))
    return _emit(orientation_from_det(d))


def cmd_family(args):
    if args.action == "gaussian":
        space = _window(args)
        qt = QuadraticTheory.from_matrix(space, _matrix(args.q, "--q")) if args.q else QuadraticTheory.standard(space)
        return _emit(gaussian_family(qt, _ref(space, args)))
    fam = _read_input(args, (CoherentMeasureFamily,))
    if args.action == "fourier":
        return _emit(fourier_family(fam))
    if args.action == "parity":
        return _emit(parity_family(fam))
    if args.action == "heisenberg":
        if bool(args.vector) == bool(args.covector):
            raise UsageError("give exactly one of --vector or --covector (as {index: coefficient})")
        coords = _json_arg(args.vector or args.covector, "generator")
        vec = window_vector(fam.space, {int(k): Fraction(str(v)) for k, v in coords.items()})
        op = HeisenbergOp.vector(vec) if args.vector else HeisenbergOp.covector(vec)
        return _emit(heisenberg_on_family(op, fam))
    rep = check_coherence(fam)
    return _emit_plain(rep.to_json()), (EXIT_OK if rep.passed else EXIT_AUDIT)


def cmd_wedge(args):
    v = _read_input(args, (WedgeVector,), optional=True)
    if v is None:
        space = _window(args)
        v = WedgeVector.vacuum(canonical_det_theory(space.u0))
    if args.action == "transition":
        return _emit(wedge_transition(v, v.stage, _indices(args.to, "--to")))
    return _emit(clifford_action(args.op, args.index, v))


def cmd_complex(args):
    if args.action == "derham":
        n = args.window if args.window is not None else 2
        space = WindowSpace.window(n)
        qt = QuadraticTheory.from_matrix(space, _matrix(args.q, "--q")) if args.q else QuadraticTheory.standard(space)
        return _emit(build_semiinf_derham(complex_orientation(space), qt, args.kahler))
    if args.dim < 1:
        raise UsageError("--dim must be at least 1")
    cv = ComplexOfSpaces.cone_of_identity(FinVec.standard(args.dim, "V"))
    m = _read_input(args, (SuperMeasure,), optional=True)
    if m is None:
        sup = cv.sup()
        m = SuperMeasure(sup, PosDefForm.standard(sup.even), ExteriorElement(sup.odd_coords(), {(): 2, (0,): 3}))
    return _emit(koszul_differential(cv, None, m))


def _run_one(job):
    name, window, seed = job
    return audit.run_suite(name, window, seed).to_json()


def cmd_audit(args):
    names = list(audit.SUITES) if args.suite == "all" else [args.suite]
    window = args.window if args.window is not None else default_window()
    jobs = [(name, window, args.seed) for name in names]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_run_one, jobs))
    else:
        reports = [_run_one(j) for j in jobs]
    lines = []
    for r in reports:
        lines.append(f"{r['status'].upper():4} {r['name']} ({r['checked']} checks, {len(r['failures'])} failures)")
        for f in r["failures"][:5]:
            lines.append(f"     witness: {json.dumps(f)}")
    if args.json:
        out = _emit_plain(reports)
    else:
        out = "\n".join(lines)
    return out, (EXIT_OK if all(r["status"] == "pass" for r in reports) else EXIT_AUDIT)


def cmd_dump(args):
    if args.sample:
        ws = sample_workspace(args.window or 2)
    else:
        data = _json_arg(_input_text(args) or None, "a piped record")
        ws = Workspace(args.window if args.window is not None else default_window())
        if isinstance(data, dict) and "type" in data:
            data = {args.name: data}
        if not isinstance(data, dict):
            raise UsageError("dump expects one typed record or an object of named records")
        for name in sorted(data):
            try:
                ws.put(name, decode(data[name]))
            except Exception as exc:
                raise SchemaError(f"object {name!r}: {exc}") from None
    dump(ws, args.path)
    return f"wrote {len(ws.objects)} objects to {args.path}"


def cmd_load(args):
    ws = load(args.path)
    if args.get:
        return _emit(ws.get(args.get))
    return dumps(ws).rstrip("\n")


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="semimeasure", description="Exact almost-Gaussian measures on windowed Laurent spaces.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_input(sp):
        sp.add_argument("--input", help="read the piped object from FILE instead of stdin")
        return sp

    def with_window(sp):
        sp.add_argument("--window", type=int, help="window size N (default: $SEMIMEASURE_WINDOW or 3)")
        return sp

    sp = sub.add_parser("space", help="a coordinate vector space")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--name", default="X")
    sp.add_argument("--prefix", default="x")
    sp.set_defaults(fn=cmd_space)

    sp = with_input(sub.add_parser("form", help="quadratic forms"))
    sp.add_argument("action", choices=["push", "pull", "check"])
    sp.add_argument("--q", help="form matrix as JSON (otherwise a posdef_form record on stdin)")
    sp.add_argument("--map", help="matrix of the surjection (push) or injection (pull)")
    sp.set_defaults(fn=cmd_form)

    sp = with_input(sub.add_parser("measure", help="almost-Gaussian measures"))
    sp.add_argument("action", choices=["gaussian", "push", "pull", "fourier", "moment", "pair"])
    sp.add_argument("--q", help="form matrix (gaussian)")
    sp.add_argument("--p", help="polynomial factor as [[exponents, coefficient], ...] (gaussian)")
    sp.add_argument("--name", default="X")
    sp.add_argument("--map", help="matrix of the map (push, pull)")
    sp.add_argument("--index", help="exponent vector (moment)")
    sp.add_argument("--dist", help="distribution record file (pair; default: point mass at 0)")
    sp.set_defaults(fn=cmd_measure)

    sp = with_window(sub.add_parser("theory", help="dimension, determinantal, Haar and orientation theories"))
    sp.add_argument("kind", choices=["dim", "det", "haar", "orient"])
    sp.add_argument("--ref", help="reference lattice point as a list of indices (default U0)")
    sp.add_argument("--dual", action="store_true", help="Haar theory of the dual lines")
    sp.add_argument("--complex", action="store_true", help="complex orientation on complex points")
    sp.set_defaults(fn=cmd_theory)

    sp = with_window(with_input(sub.add_parser("family", help="coherent measure families")))
    sp.add_argument("action", choices=["gaussian", "fourier", "parity", "heisenberg", "coherence"])
    sp.add_argument("--q", help="window form matrix (gaussian; default standard)")
    sp.add_argument("--ref", help="reference lattice point (gaussian)")
    sp.add_argument("--vector", help="L_v generator as {index: coefficient}")
    sp.add_argument("--covector", help="L_f generator as {index: coefficient}")
    sp.set_defaults(fn=cmd_family)

    sp = with_window(with_input(sub.add_parser("wedge", help="semiinfinite wedge vectors")))
    sp.add_argument("action", choices=["transition", "act"])
    sp.add_argument("--to", help="target stage (transition)")
    sp.add_argument("--op", choices=["create", "annihilate"], default="create")
    sp.add_argument("--index", type=int, default=0)
    sp.set_defaults(fn=cmd_wedge)

    sp = with_window(with_input(sub.add_parser("complex", help="de Rham families and the Koszul differential")))
    sp.add_argument("action", choices=["derham", "koszul"])
    sp.add_argument("--q", help="window form matrix (derham)")
    sp.add_argument("--kahler", type=int, default=0, help="power of the Kahler form in the seed")
    sp.add_argument("--dim", type=int, default=1, help="dim V for the cone {V -> V} (koszul)")
    sp.set_defaults(fn=cmd_complex)

    sp = with_window(sub.add_parser("audit", help="run audit suites"))
    sp.add_argument("suite", choices=["all", *audit.SUITES])
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    sp.add_argument("--json", action="store_true", help="machine-readable reports")
    sp.set_defaults(fn=cmd_audit)

    sp = with_window(with_input(sub.add_parser("dump", help="write a workspace file")))
    sp.add_argument("path")
    sp.add_argument("--name", default="obj", help="name for a single piped record")
    sp.add_argument("--sample", action="store_true", help="write a workspace with one object of every type")
    sp.set_defaults(fn=cmd_dump)

    sp = sub.add_parser("load", help="read a workspace file")
    sp.add_argument("path")
    sp.add_argument("--get", help="print one named object")
    sp.set_defaults(fn=cmd_load)
    return p


def run_command(argv: list[str], out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        result = args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=err)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    except (DomainError, ZeroDivisionError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_DOMAIN
    code = EXIT_OK
    if isinstance(result, tuple):
        result, code = result
    print(result, file=out)
    return code


def main() -> None:
    try:
        code = run_command(sys.argv[1:])
        sys.stdout.flush()
    except BrokenPipeError:
        # the reader went away (e.g. `| head`); silence the interpreter's flush
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = EXIT_OK
    sys.exit(code)


if __name__ == "__main__":
    main()
