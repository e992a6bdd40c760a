"""Command line driver: one job per process, canonical JSON in and out.

Every command reads a JSON document (inline on the command line, from a
file path, or from stdin via ``-``), runs its exact-rational job, and
writes a single canonical report line: keys sorted, separators
``(",", ":")``, one trailing newline. The report embeds a sha256 of the
canonicalised input payload, the seed, and the degree bounds in force,
so identical (payload, seed) pairs produce byte-identical reports.

Exit status: 0 when the job ran and every check passed, 1 when the job
ran and at least one check failed, 2 when the input was rejected before
any verdict. Schema rejections carry a JSON pointer to the offending
field on stderr.
"""

import argparse
import hashlib
import json
import sys

from .algebra_lab import (
    AlgebraLabError,
    CaseUnsupported,
    bicommutant,
    commutant_dim,
    identify_type,
)
from .geoverify import (
    VerifyError,
    cartan_character_test,
    draw_regular_points,
    holonomy_span,
    identity_checks,
)
from .metric_forge import (
    ForgeError,
    MetricGerm,
    SeedForms,
    forge_by_tensoring,
    forge_kahler_nilpotent,
    forge_lorentzian,
    forge_nilpotent_metric,
    forge_two_nilpotents,
    random_seed_forms,
    tangent_lift,
)
from .nilmodule import ModuleShape, NilmoduleError, RationalMatrix
from .nilocalc import REAL, AdaptedSeed, NilocalcError, Poly
from .normal_forms import (
    NormalFormError,
    characteristic_signatures,
    global_signature,
)

COMMANDS = (
    "forge",
    "verify",
    "classify",
    "commutant",
    "cartan-test",
    "roundtrip",
)

FORGE_KINDS = (
    "nilpotent",
    "kahler",
    "parakahler",
    "complex",
    "tensor",
    "two-nilpotents",
    "lorentz",
    "tangent-lift",
)

# Domain rejections: structurally valid JSON describing an object the
# library refuses (degenerate seed, wrong field, unclassifiable type).
_INPUT_ERRORS = (
    AlgebraLabError,
    ForgeError,
    NilmoduleError,
    NilocalcError,
    NormalFormError,
    VerifyError,
    ValueError,
)


class SchemaError(Exception):
    """Input document rejected; `pointer` locates the offending field."""

    def __init__(self, message, pointer=""):
        super().__init__(message)
        self.message = message
        self.pointer = pointer


# -- canonical serialisation --------------------------------------------------


def _canon(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _payload_sha(payload) -> str:
    return hashlib.sha256(_canon(payload).encode("utf-8")).hexdigest()


def _emit(doc, out_path):
    text = _canon(doc) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- document loading ---------------------------------------------------------


def _load_text(arg: str, what: str) -> str:
    if arg == "-":
        return sys.stdin.read()
    stripped = arg.lstrip()
    if stripped.startswith("{") or stripped.startswith("["):
        return arg
    try:
        with open(arg, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise SchemaError(f"cannot read {what} from {arg!r}: {exc}")


def load_document(arg: str, what: str = "document"):
    text = _load_text(arg, what)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{what} is not valid JSON: {exc}")


# -- field validation ---------------------------------------------------------

_KIND_CHECKS = {
    "object": lambda v: isinstance(v, dict),
    "array": lambda v: isinstance(v, list),
    "string": lambda v: isinstance(v, str),
    # bool is an int subtype; reject it explicitly
    "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
}


def _field(obj, key, pointer, kind, required=True, default=None):
    here = f"{pointer}/{key}"
    if not isinstance(obj, dict):
        raise SchemaError("expected object", pointer or "/")
    if key not in obj:
        if required:
            raise SchemaError(f"missing required field {key!r}", here)
        return default
    value = obj[key]
    if not _KIND_CHECKS[kind](value):
        raise SchemaError(f"expected {kind}", here)
    return value


def _shape_from(obj, pointer) -> ModuleShape:
    if not isinstance(obj, dict):
        raise SchemaError("expected object", pointer)
    n = _field(obj, "n", pointer, "int")
    d = _field(obj, "d", pointer, "array")
    delta = obj.get("delta", 1)
    if isinstance(delta, bool) or not isinstance(delta, int):
        raise SchemaError("expected int", f"{pointer}/delta")
    for i, x in enumerate(d):
        if isinstance(x, bool) or not isinstance(x, int):
            raise SchemaError("expected int", f"{pointer}/d/{i}")
    try:
        return ModuleShape(n, tuple(d), delta)
    except ValueError as exc:
        raise SchemaError(str(exc), pointer)


def _poly_from(cell, pointer, order=1, field=REAL) -> Poly:
    if not isinstance(cell, list):
        raise SchemaError("expected array of terms", pointer)
    try:
        return Poly.from_json(cell, order, base_field=field)
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise SchemaError(f"bad polynomial: {exc}", pointer)


def _poly_rows(arr, pointer, order=1, field=REAL):
    if not isinstance(arr, list) or not arr:
        raise SchemaError("expected non-empty array of rows", pointer)
    rows = []
    for i, row in enumerate(arr):
        if not isinstance(row, list):
            raise SchemaError("expected array", f"{pointer}/{i}")
        rows.append(
            tuple(
                _poly_from(cell, f"{pointer}/{i}/{j}", order, field)
                for j, cell in enumerate(row)
            )
        )
    return tuple(rows)


def _adapted_seed(obj, pointer) -> AdaptedSeed:
    if not isinstance(obj, dict):
        raise SchemaError("expected object", pointer)
    try:
        return AdaptedSeed.from_json(obj)
    except (KeyError, TypeError, AttributeError) as exc:
        raise SchemaError(f"bad adapted seed: {exc}", pointer)


def _frac_matrix(arr, pointer) -> RationalMatrix:
    if not isinstance(arr, list) or not arr:
        raise SchemaError("expected non-empty array of rows", pointer)
    try:
        return RationalMatrix.from_json(arr)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"bad rational matrix: {exc}", pointer)


def _norm_epsilon(value, pointer="/epsilon"):
    if isinstance(value, bool):
        raise SchemaError("epsilon must be 1, -1 or \"C\"", pointer)
    if isinstance(value, int):
        if value in (-1, 1):
            return value
        raise SchemaError("epsilon must be 1, -1 or \"C\"", pointer)
    if isinstance(value, str):
        text = value.strip()
        if text == "-1":
            return -1
        if text in ("1", "+1"):
            return 1
        if text.lower() in ("c", "complex"):
            return "complex"
    raise SchemaError("epsilon must be 1, -1 or \"C\"", pointer)


def _germ_degree(germ) -> int:
    degs = [
        p.degree()
        for row in germ.sym_matrix
        for p in row
        if not p.is_zero()
    ]
    return max(degs, default=0)


def _opt_count(opts, payload, key, flag, default):
    """Flag wins over the payload field; both must be positive ints."""
    value = opts.get(flag)
    if value is None:
        value = payload.get(key, default) if isinstance(payload, dict) else default
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError("expected int", f"/{key}")
    return value


# -- command handlers ---------------------------------------------------------


def _run_forge(payload, seed, opts):
    if not isinstance(payload, dict):
        raise SchemaError("forge payload must be an object", "/")
    kind = opts.get("kind") or payload.get("kind")
    if kind is None:
        raise SchemaError("missing forge kind", "/kind")
    if kind not in FORGE_KINDS:
        raise SchemaError(f"unknown forge kind {kind!r}", "/kind")

    if kind == "nilpotent":
        seeds_doc = _field(payload, "seeds", "", "object")
        try:
            sf = SeedForms.from_json(seeds_doc)
        except (KeyError, TypeError, AttributeError) as exc:
            raise SchemaError(f"bad seed forms: {exc}", "/seeds")
        germ = forge_nilpotent_metric(sf)
    elif kind in ("kahler", "parakahler"):
        pot = _adapted_seed(_field(payload, "potential", "", "object"), "/potential")
        label = "2" if kind == "kahler" else "2p"
        germ = forge_kahler_nilpotent(pot.shape, label, pot)
    elif kind == "complex":
        case = payload.get("case", "1C")
        if case == "1C":
            grid = _field(payload, "coefficients", "", "array")
            rows = []
            for i, row in enumerate(grid):
                if not isinstance(row, list):
                    raise SchemaError("expected array", f"/coefficients/{i}")
                rows.append(
                    tuple(
                        _adapted_seed(cell, f"/coefficients/{i}/{j}")
                        for j, cell in enumerate(row)
                    )
                )
            if not rows:
                raise SchemaError("expected non-empty array", "/coefficients")
            germ = forge_kahler_nilpotent(rows[0][0].shape, "1C", tuple(rows))
        elif case == "2C":
            pot = _adapted_seed(
                _field(payload, "potential", "", "object"), "/potential"
            )
            germ = forge_kahler_nilpotent(pot.shape, "2C", pot)
        else:
            raise SchemaError('case must be "1C" or "2C"', "/case")
    elif kind == "tensor":
        base = _poly_rows(_field(payload, "base", "", "array"), "/base")
        n = _field(payload, "n", "", "int")
        germ = forge_by_tensoring(base, n)
    elif kind == "tangent-lift":
        base = _poly_rows(_field(payload, "base", "", "array"), "/base")
        germ = tangent_lift(base)
    elif kind == "lorentz":
        b10 = _poly_rows(_field(payload, "B1_0", "", "array"), "/B1_0")
        b = _poly_from(_field(payload, "b", "", "array"), "/b")
        germ = forge_lorentzian(b10, b)
    else:  # two-nilpotents
        shape = _shape_from(_field(payload, "shape", "", "object"), "/shape")
        u = _frac_matrix(_field(payload, "u", "", "array"), "/u").entries
        q_doc = _field(payload, "quotient", "", "object")
        if "B" in q_doc:
            try:
                quotient = SeedForms.from_json(q_doc)
            except (KeyError, TypeError, AttributeError) as exc:
                raise SchemaError(f"bad seed forms: {exc}", "/quotient")
        elif "matrix" in q_doc:
            try:
                quotient = MetricGerm.from_json(q_doc)
            except (KeyError, TypeError, AttributeError) as exc:
                raise SchemaError(f"bad germ: {exc}", "/quotient")
        else:
            raise SchemaError(
                "quotient must carry seed forms (key B) or a germ (key matrix)",
                "/quotient",
            )
        b1 = payload.get("B1")
        if b1 is not None:
            b1 = _poly_rows(b1, "/B1")
        germ = forge_two_nilpotents(shape, u, quotient, B1=b1)

    result = {"kind": kind, "germ": germ.to_json()}
    bounds = {"metric_degree": _germ_degree(germ)}
    return result, True, bounds


def _run_verify(payload, seed, opts):
    if not isinstance(payload, dict):
        raise SchemaError("verify payload must be an object", "/")
    if "germ" in payload:
        germ_doc = _field(payload, "germ", "", "object")
        pointer = "/germ"
    elif "matrix" in payload:
        germ_doc, pointer = payload, ""
    else:
        raise SchemaError("no germ found (expected key germ or matrix)", "/germ")
    try:
        germ = MetricGerm.from_json(germ_doc)
    except (KeyError, TypeError, AttributeError) as exc:
        raise SchemaError(f"bad germ: {exc}", pointer)
    germ.validate()

    points = _opt_count(opts, payload, "points", "points", 5)
    if points < 5:
        raise SchemaError("at least 5 points are required", "/points")
    order = _opt_count(opts, payload, "holonomy_order", "holonomy_order", 1)
    if order not in (0, 1, 2):
        raise SchemaError("holonomy order must be 0, 1 or 2", "/holonomy_order")

    pts = draw_regular_points(germ, points, seed)
    report = identity_checks(germ, pts)
    hol = holonomy_span(germ, pts[0], order=order)
    result = {"report": report.to_json(), "holonomy": hol}
    bounds = {
        "metric_degree": _germ_degree(germ),
        "points": points,
        "holonomy_order": order,
        "jet_order": 2,
    }
    return result, report.passed, bounds


def _run_classify(payload, seed, opts):
    if not isinstance(payload, dict):
        raise SchemaError("classify payload must be an object", "/")
    N = _frac_matrix(_field(payload, "N", "", "array"), "/N")
    g = _frac_matrix(_field(payload, "g", "", "array"), "/g")
    cs = characteristic_signatures(N, g)
    result = cs.to_json()
    if cs.nondegenerate():
        result["signature"] = list(global_signature(cs.shape, cs.sigs))
    if "generators" in payload:
        gens_doc = _field(payload, "generators", "", "array")
        gens = [
            _frac_matrix(m, f"/generators/{i}") for i, m in enumerate(gens_doc)
        ]
        result["case"] = identify_type(gens, g)
    bounds = {"dim": g.rows}
    return result, True, bounds


def _run_commutant(payload, seed, opts):
    if not isinstance(payload, dict):
        raise SchemaError("commutant payload must be an object", "/")
    case = _field(payload, "case", "", "string")
    shape = _shape_from(_field(payload, "shape", "", "object"), "/shape")
    result = {"case": case, "shape": shape.to_json()}
    try:
        result["commutant_dim"] = commutant_dim(case, shape)
    except CaseUnsupported:
        # complexified labels: only the bicommutant is reported
        pass
    bi = bicommutant(case, shape)
    result["bicommutant"] = {
        "dim": bi.dim,
        "decomposable": bi.decomposable,
        "flat_factor": bi.flat_factor,
        "exceptional": bi.exceptional,
    }
    return result, True, {}


def _run_cartan(payload, seed, opts):
    if not isinstance(payload, dict):
        raise SchemaError("cartan-test payload must be an object", "/")
    delta = _field(payload, "delta", "", "int")
    if "epsilon" not in payload:
        raise SchemaError("missing required field 'epsilon'", "/epsilon")
    epsilon = _norm_epsilon(payload["epsilon"])
    shape = None
    if payload.get("shape") is not None:
        shape = _shape_from(payload["shape"], "/shape")
    result = cartan_character_test(delta, epsilon, shape=shape)
    return result, bool(result["ordinary"]), {"delta": delta}


def _run_roundtrip(payload, seed, opts):
    if not isinstance(payload, dict):
        raise SchemaError("roundtrip payload must be an object", "/")
    shape = _shape_from(payload, "")
    degree = payload.get("degree", 2)
    if isinstance(degree, bool) or not isinstance(degree, int) or degree < 1:
        raise SchemaError("degree must be a positive int", "/degree")
    sf = random_seed_forms(shape, seed, degree=degree)
    germ = forge_nilpotent_metric(sf)

    points = _opt_count(opts, payload, "points", "points", 5)
    if points < 5:
        raise SchemaError("at least 5 points are required", "/points")
    order = _opt_count(opts, payload, "holonomy_order", "holonomy_order", 1)
    if order not in (0, 1, 2):
        raise SchemaError("holonomy order must be 0, 1 or 2", "/holonomy_order")

    # offset keeps the point draw independent of the seed-form draw
    pts = draw_regular_points(germ, points, seed + 1)
    report = identity_checks(germ, pts)
    hol = holonomy_span(germ, pts[0], order=order)
    result = {
        "seeds": sf.to_json(),
        "germ": germ.to_json(),
        "report": report.to_json(),
        "holonomy": hol,
    }
    passed = report.passed and hol["contained_in_commutant"]
    bounds = {
        "seed_degree": degree,
        "metric_degree": _germ_degree(germ),
        "points": points,
        "holonomy_order": order,
        "jet_order": 2,
    }
    return result, passed, bounds


_HANDLERS = {
    "forge": _run_forge,
    "verify": _run_verify,
    "classify": _run_classify,
    "commutant": _run_commutant,
    "cartan-test": _run_cartan,
    "roundtrip": _run_roundtrip,
}


# -- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nilgeom",
        description=(
            "Forge and verify exact-rational metric germs with prescribed "
            "parallel endomorphism fields. JSON arguments accept an inline "
            "document, a file path, or - for stdin."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0, help="u64 draw seed")
        sp.add_argument("--out", default=None, help="report file (default stdout)")

    def sampling(sp):
        sp.add_argument(
            "--points", type=int, default=None, help="sample point count (>= 5)"
        )
        sp.add_argument(
            "--holonomy-order",
            type=int,
            default=None,
            dest="holonomy_order",
            help="covariant-derivative order for the holonomy span (0, 1 or 2)",
        )

    sp = sub.add_parser("forge", help="construct a germ from boundary data")
    sp.add_argument("--kind", choices=FORGE_KINDS, default=None)
    sp.add_argument("--spec", required=True, help="forge payload JSON")
    common(sp)

    sp = sub.add_parser("verify", help="run the identity report on a germ")
    sp.add_argument("--germ", required=True, help="germ JSON")
    sampling(sp)
    common(sp)

    sp = sub.add_parser("classify", help="characteristic signatures of (N, g)")
    sp.add_argument("--spec", required=True, help="matrices JSON")
    common(sp)

    sp = sub.add_parser("commutant", help="commutant and bicommutant of a case")
    sp.add_argument("--spec", required=True, help="case and shape JSON")
    common(sp)

    sp = sub.add_parser("cartan-test", help="Cartan characters of the system")
    sp.add_argument("--delta", type=int, required=True)
    sp.add_argument("--epsilon", required=True, help="1, -1 or C")
    sp.add_argument("--shape", default=None, help="optional layered shape JSON")
    common(sp)

    sp = sub.add_parser("roundtrip", help="random forge then full verify")
    sp.add_argument("--spec", required=True, help="shape and degree JSON")
    sampling(sp)
    common(sp)

    sp = sub.add_parser("run", help="execute a job document")
    sp.add_argument("--spec", required=True, help="job JSON")
    sampling(sp)
    common(sp)

    return parser


def _job_from_args(args):
    """Resolve (command, payload, seed, opts, out) from parsed arguments."""
    opts = {
        "points": getattr(args, "points", None),
        "holonomy_order": getattr(args, "holonomy_order", None),
    }
    if args.command == "run":
        job = load_document(args.spec, "job")
        if not isinstance(job, dict):
            raise SchemaError("job must be an object", "/")
        command = _field(job, "command", "", "string")
        if command not in COMMANDS:
            raise SchemaError(f"unknown command {command!r}", "/command")
        payload = _field(job, "payload", "", "object")
        seed = job.get("seed", args.seed)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise SchemaError("seed must be a non-negative int", "/seed")
        out = args.out or job.get("output_path")
        if out is not None and not isinstance(out, str):
            raise SchemaError("expected string", "/output_path")
        return command, payload, seed, opts, out

    if args.command == "forge":
        payload = load_document(args.spec, "forge payload")
        if not isinstance(payload, dict):
            raise SchemaError("forge payload must be an object", "/")
        opts["kind"] = args.kind
    elif args.command == "verify":
        payload = load_document(args.germ, "germ")
        if not isinstance(payload, dict):
            raise SchemaError("germ must be an object", "/")
    elif args.command == "cartan-test":
        payload = {"delta": args.delta, "epsilon": args.epsilon}
        if args.shape is not None:
            payload["shape"] = load_document(args.shape, "shape")
    else:
        payload = load_document(args.spec, f"{args.command} payload")
    if args.seed < 0:
        raise SchemaError("seed must be a non-negative int", "/seed")
    return args.command, payload, args.seed, opts, args.out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        command, payload, seed, opts, out = _job_from_args(args)
        result, passed, bounds = _HANDLERS[command](payload, seed, opts)
    except SchemaError as exc:
        sys.stderr.write(
            _canon({"error": exc.message, "pointer": exc.pointer}) + "\n"
        )
        return 2
    except _INPUT_ERRORS as exc:
        sys.stderr.write(
            _canon({"error": f"{type(exc).__name__}: {exc}"}) + "\n"
        )
        return 2
    report = {
        "command": command,
        "spec_sha256": _payload_sha(payload),
        "seed": seed,
        "degree_bounds": bounds,
        "result": result,
        "passed": passed,
    }
    _emit(report, out)
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
