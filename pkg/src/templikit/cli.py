"""Batch interface: instance files, property checks and theorem verification.

Instances are stored as JSON with every integer rendered as a decimal string
(lossless for arbitrary precision) and matrices row-major with explicit
dimensions.  Serialization is canonical: serialize(parse(file)) reproduces
the file byte for byte.

Exit codes: 0 pass, 1 property fails, 2 invalid input, 3 hypothesis failure
(verify only), 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from .coeff import (
    FREE,
    InvalidInstanceError,
    Module,
    Morphism,
    Ring,
    RingExtension,
    TemplikitError,
)
from .constructors import builtin
from .deform import (
    DeformationPair,
    base_change_templicial,
    verify_degproj_lift,
    verify_thm_main,
    verify_wings_tensor,
)
from .kan import (
    check_deg_projective,
    check_levelwise,
    check_quasicategory,
    check_templicial_wings,
    ez_check,
)
from .quiver import Quiver, QuiverMorphism, tensor_layout
from .templicial import TemplicialModule, validate_templicial

FORMAT_VERSION = "1"


class UsageError(TemplikitError):
    pass


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _enc_ring(ring):
    out = {"kind": ring.kind}
    if ring.p is not None:
        out["p"] = str(ring.p)
    if ring.m is not None:
        out["m"] = str(ring.m)
    return out


def _dec_ring(obj):
    return Ring(obj["kind"],
                p=int(obj["p"]) if "p" in obj else None,
                m=int(obj["m"]) if "m" in obj else None)


def parse_ring_spec(text):
    """Ring descriptors: integers | rationals | prime-field:p | chain:p:m |
    dual-chain:p:m."""
    parts = text.split(":")
    kind = parts[0]
    try:
        if kind == "integers":
            return Ring.integers()
        if kind == "rationals":
            return Ring.rationals()
        if kind == "prime-field":
            return Ring.prime_field(int(parts[1]))
        if kind == "chain":
            return Ring.chain(int(parts[1]), int(parts[2]))
        if kind == "dual-chain":
            return Ring.dual_chain(int(parts[1]), int(parts[2]))
    except (IndexError, ValueError) as exc:
        raise UsageError(f"bad ring descriptor {text!r}") from exc
    raise UsageError(f"unknown ring kind {kind!r}")


def _enc_label(label):
    if isinstance(label, str):
        return {"s": label}
    if isinstance(label, bool):
        raise TemplikitError("boolean vertex labels unsupported")
    if isinstance(label, int):
        return {"i": str(label)}
    if isinstance(label, tuple):
        return {"t": [_enc_label(x) for x in label]}
    raise TemplikitError(f"unserializable vertex label {label!r}")


def _dec_label(obj):
    if "s" in obj:
        return obj["s"]
    if "i" in obj:
        return int(obj["i"])
    return tuple(_dec_label(x) for x in obj["t"])


def _enc_elt(ring, x):
    if ring.kind == "rationals":
        return f"{x.numerator}/{x.denominator}"
    if ring.kind == "dual-chain":
        return [str(c) for c in x]
    return str(x)


def _dec_elt(ring, obj):
    if ring.kind == "rationals":
        num, den = obj.split("/")
        return Fraction(int(num), int(den))
    if ring.kind == "dual-chain":
        return ring.reduce(tuple(int(c) for c in obj))
    return ring.reduce(int(obj))


def _enc_factors(module):
    return ["free" if f == FREE else str(f) for f in module.factors]


def _dec_factors(ring, obj):
    return Module(ring, tuple(FREE if f == "free" else int(f) for f in obj))


def _enc_quiver(quiver):
    return {
        "homs": [
            {"source": _enc_label(a), "target": _enc_label(b),
             "factors": _enc_factors(mod)}
            for (a, b), mod in quiver.homs
        ]
    }


def _dec_quiver(ring, vertices, obj):
    homs = {}
    for entry in obj["homs"]:
        a, b = _dec_label(entry["source"]), _dec_label(entry["target"])
        homs[(a, b)] = _dec_factors(ring, entry["factors"])
    return Quiver.build(ring, vertices, homs)


def _enc_qmorphism(f):
    ring = f.domain.ring
    return [
        {"source": _enc_label(a), "target": _enc_label(b),
         "rows": len(mor.matrix), "cols": mor.domain.ngens,
         "entries": [[_enc_elt(ring, x) for x in row] for row in mor.matrix]}
        for (a, b), mor in f.components
    ]


def _dec_qmorphism(ring, dom, cod, obj):
    comps = {}
    for entry in obj:
        a, b = _dec_label(entry["source"]), _dec_label(entry["target"])
        rows, cols = entry["rows"], entry["cols"]
        mat = tuple(tuple(_dec_elt(ring, x) for x in row) for row in entry["entries"])
        if len(mat) != rows or any(len(r) != cols for r in mat):
            raise TemplikitError(f"matrix dimensions inconsistent at ({a},{b})")
        comps[(a, b)] = Morphism(dom.hom(a, b), cod.hom(a, b), mat)
    return QuiverMorphism.build(dom, cod, comps)


def _enc_templicial(x):
    return {
        "ring": _enc_ring(x.ring),
        "vertices": [_enc_label(v) for v in x.vertices],
        "max_level": x.max_level,
        "levels": [_enc_quiver(q) for q in x.levels],
        "faces": [
            {"n": n, "j": j, "components": _enc_qmorphism(f)}
            for (n, j), f in x.faces
        ],
        "degeneracies": [
            {"n": n, "i": i, "components": _enc_qmorphism(f)}
            for (n, i), f in x.degeneracies
        ],
        "comultiplications": [
            {"k": k, "l": l, "components": _enc_qmorphism(f)}
            for (k, l), f in x.comults
        ],
    }


def _dec_templicial(obj):
    ring = _dec_ring(obj["ring"])
    vertices = tuple(_dec_label(v) for v in obj["vertices"])
    max_level = obj["max_level"]
    levels = tuple(_dec_quiver(ring, vertices, q) for q in obj["levels"])

    def level_quiver(n):
        from .quiver import unit_quiver

        return unit_quiver(ring, vertices) if n == 0 else levels[n - 1]

    faces = {}
    for entry in obj["faces"]:
        n, j = entry["n"], entry["j"]
        faces[(n, j)] = _dec_qmorphism(ring, level_quiver(n), level_quiver(n - 1),
                                       entry["components"])
    degens = {}
    for entry in obj["degeneracies"]:
        n, i = entry["n"], entry["i"]
        degens[(n, i)] = _dec_qmorphism(ring, level_quiver(n), level_quiver(n + 1),
                                        entry["components"])
    comults = {}
    for entry in obj["comultiplications"]:
        k, l = entry["k"], entry["l"]
        layout = tensor_layout(ring, vertices, (level_quiver(k), level_quiver(l)))
        comults[(k, l)] = _dec_qmorphism(ring, level_quiver(k + l), layout.quiver,
                                         entry["components"])
    return TemplicialModule.build(ring, vertices, max_level, levels,
                                  faces, degens, comults)


def serialize_instance(instance):
    if isinstance(instance, DeformationPair):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "deformation",
            "extension": {"source": _enc_ring(instance.extension.source),
                          "target": _enc_ring(instance.extension.target)},
            "deformed": _enc_templicial(instance.deformed),
            "special_fiber": _enc_templicial(instance.special_fiber),
        }
    return {"format_version": FORMAT_VERSION, "kind": "templicial",
            **_enc_templicial(instance)}


def parse_instance(obj):
    version = obj.get("format_version")
    if version != FORMAT_VERSION:
        raise TemplikitError(f"unsupported format_version {version!r}")
    kind = obj.get("kind")
    if kind == "templicial":
        return _dec_templicial(obj)
    if kind == "deformation":
        theta = RingExtension(_dec_ring(obj["extension"]["source"]),
                              _dec_ring(obj["extension"]["target"]))
        return DeformationPair(theta, _dec_templicial(obj["deformed"]),
                               _dec_templicial(obj["special_fiber"]))
    raise TemplikitError(f"unknown instance kind {kind!r}")


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def load_instance(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise TemplikitError(f"cannot read instance file {path}: {exc}") from exc
    return parse_instance(data)


def save_instance(path, instance):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(canonical_json(serialize_instance(instance)))


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def report_to_dict(report):
    return {
        "prop": report.prop,
        "passed": report.passed,
        "status": report.status,
        "note": report.note,
        "items": [
            {"indices": [str(x) for x in item.indices],
             "passed": item.passed,
             "detail": item.detail,
             "cokernel": None if item.cokernel is None else str(item.cokernel)}
            for item in report.items
        ],
        "children": [report_to_dict(c) for c in report.children],
    }


def render_report_text(obj, indent=0):
    pad = "  " * indent
    head = f"{pad}{obj['prop']}: {'PASS' if obj['passed'] else 'FAIL'}"
    if obj.get("status", "checked") != "checked":
        head += f" ({obj['status']})"
    if obj.get("note"):
        head += f" -- {obj['note']}"
    lines = [head]
    for item in obj.get("items", ()):
        mark = "pass" if item["passed"] else "FAIL"
        line = f"{pad}  ({','.join(item['indices'])}): {mark}"
        if item.get("detail"):
            line += f" [{item['detail']}]"
        if item.get("cokernel"):
            line += f" cokernel {item['cokernel']}"
        lines.append(line)
    for child in obj.get("children", ()):
        lines.append(render_report_text(child, indent + 1))
    return "\n".join(lines)


def emit_report(report, fmt, out=None):
    out = out or sys.stdout
    obj = {"format_version": FORMAT_VERSION, "report": report_to_dict(report)}
    if fmt == "json":
        out.write(canonical_json(obj))
    else:
        out.write(render_report_text(obj["report"]) + "\n")


def _report_exit(report):
    if report.status == "hypothesis-failure":
        return 3
    return 0 if report.passed else 1


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _default_level(instance, requested):
    x = instance.deformed if isinstance(instance, DeformationPair) else instance
    return min(requested, x.max_level) if requested else min(4, x.max_level)


def _cmd_validate(args):
    instance = load_instance(args.file)
    reports = []
    if isinstance(instance, DeformationPair):
        reports.append(("deformed", validate_templicial(instance.deformed)))
        reports.append(("special_fiber", validate_templicial(instance.special_fiber)))
    else:
        reports.append(("instance", validate_templicial(instance)))
    ok = all(rep.ok for _, rep in reports)
    for name, rep in reports:
        print(f"{name}: {'valid' if rep.ok else 'INVALID'}")
        for failure in rep.failures:
            print(f"  {failure}")
    return 0 if ok else 2


_PROPERTIES = {
    "kan": lambda x, n: check_quasicategory(x, n),
    "wings": lambda x, n: check_templicial_wings(x, n),
    "degproj": lambda x, n: check_deg_projective(x, n),
    "levelwise-flat": lambda x, n: check_levelwise(x, "flat", n),
    "ez": lambda x, n: ez_check(x, n),
}


def _cmd_check(args):
    instance = load_instance(args.file)
    if isinstance(instance, DeformationPair):
        instance = instance.deformed
    n = _default_level(instance, args.max_level)
    report = _PROPERTIES[args.property](instance, n)
    emit_report(report, args.format)
    return _report_exit(report)


def _cmd_basechange(args):
    instance = load_instance(args.file)
    if isinstance(instance, DeformationPair):
        raise TemplikitError("basechange expects a single templicial instance")
    target = parse_ring_spec(args.to)
    theta = RingExtension(instance.ring, target)
    save_instance(args.output, base_change_templicial(theta, instance))
    print(f"wrote {args.output}")
    return 0


def _cmd_example(args):
    instance = builtin(args.name, args.max_level)
    save_instance(args.output, instance)
    print(f"wrote {args.output}")
    return 0


def _cmd_verify(args):
    instance = load_instance(args.file)
    if args.theorem in ("main", "degproj-lift"):
        if not isinstance(instance, DeformationPair):
            raise TemplikitError(f"theorem {args.theorem} needs a deformation pair file")
        n = _default_level(instance, args.max_level)
        if args.theorem == "main":
            report = verify_thm_main(instance, n)
        else:
            report = verify_degproj_lift(instance, n)
    else:
        if isinstance(instance, DeformationPair):
            instance = instance.special_fiber
        n = _default_level(instance, args.max_level)
        ring = instance.ring
        if args.module:
            factors = tuple(FREE if f == "free" else int(f)
                            for f in args.module.split(","))
            module = Module(ring, factors)
        else:
            module = Module.free(ring, args.module_rank)
        report = verify_wings_tensor(instance, module, n)
    emit_report(report, args.format)
    return _report_exit(report)


def _cmd_report(args):
    if args.file:
        with open(args.file, "r", encoding="utf-8") as handle:
            obj = json.load(handle)
    else:
        obj = json.load(sys.stdin)
    if "report" not in obj:
        raise TemplikitError("not a report file")
    body = obj["report"]
    if args.format == "json":
        sys.stdout.write(canonical_json(obj))
    else:
        print(render_report_text(body))
    if body.get("status") == "hypothesis-failure":
        return 3
    return 0 if body.get("passed") else 1


def build_parser():
    parser = _Parser(prog="templikit",
                     description="validate and check templicial module instances")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("validate", help="validate an instance file")
    p.add_argument("file")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("check", help="check a structural property")
    p.add_argument("file")
    p.add_argument("--property", required=True, choices=sorted(_PROPERTIES))
    p.add_argument("--max-level", type=int, default=None)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("basechange", help="reduce an instance along a ring surjection")
    p.add_argument("file")
    p.add_argument("--to", required=True, metavar="RING")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_basechange)

    p = sub.add_parser("example", help="materialize a built-in example")
    p.add_argument("name", choices=("s0_times_2", "paper_P", "paper_P_deformed"))
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--max-level", type=int, default=None)
    p.set_defaults(func=_cmd_example)

    p = sub.add_parser("verify", help="verify a deformation theorem on an instance")
    p.add_argument("file")
    p.add_argument("--theorem", required=True,
                   choices=("main", "degproj-lift", "wings-tensor"))
    p.add_argument("--max-level", type=int, default=None)
    p.add_argument("--module-rank", type=int, default=1)
    p.add_argument("--module", default=None,
                   help="comma-separated factors, e.g. free,free,2")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("report", help="re-render a stored JSON report")
    p.add_argument("file", nargs="?")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None):
    threads = os.environ.get("TEMPLIKIT_THREADS")
    if threads is not None:
        try:
            if int(threads) < 1:
                raise ValueError
        except ValueError:
            print(f"ignoring invalid TEMPLIKIT_THREADS={threads!r}", file=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help()
            return 64
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 64
    except InvalidInstanceError as exc:
        print(f"invalid instance: {exc}", file=sys.stderr)
        if exc.report is not None:
            print(str(exc.report), file=sys.stderr)
        return 2
    except TemplikitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
