"""Horn, wing and degeneracy objects, and the structural property checkers.

Surjectivity of a module map implements "regular epimorphism": over module
categories the underlying-set functor preserves and reflects regular epis.
Horn and wing objects are computed as finite limits over the full index
diagrams (every commuting necklace map over the simplex), so no presentation
argument is needed for correctness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .coeff import (
    InvalidInstanceError,
    Module,
    ModuleDiagram,
    Morphism,
    analyze,
    cokernel_module,
    factor_through_colimit,
    factor_through_limit,
    finite_limit,
)
from .necklace import build_diagram, fint_surjections
from .quiver import Quiver, QuiverDiagram, QuiverMorphism, quiver_colimit
from .templicial import (
    evaluator,
    hom_necklicial,
    validate_necklicial,
    validate_templicial,
)


@dataclass(frozen=True)
class CheckItem:
    indices: tuple
    passed: bool
    detail: str = ""
    cokernel: Module | None = None

    def __str__(self):
        mark = "pass" if self.passed else "FAIL"
        extra = f" [{self.detail}]" if self.detail else ""
        coker = f" cokernel {self.cokernel}" if self.cokernel is not None else ""
        return f"{self.indices}: {mark}{extra}{coker}"


@dataclass(frozen=True)
class CheckReport:
    prop: str
    passed: bool
    items: tuple
    status: str = "checked"  # checked | hypothesis-failure | not-applicable
    note: str = ""
    children: tuple = field(default=())

    @staticmethod
    def from_items(prop, items, note="", children=()):
        ok = all(i.passed for i in items) and all(c.passed for c in children)
        return CheckReport(prop, ok, tuple(items), "checked", note, tuple(children))

    @staticmethod
    def hypothesis_failure(prop, note, children=()):
        return CheckReport(prop, False, (), "hypothesis-failure", note, tuple(children))

    def first_failure(self):
        for item in self.items:
            if not item.passed:
                return item
        for child in self.children:
            hit = child.first_failure()
            if hit is not None:
                return hit
        return None

    def __str__(self):
        head = f"{self.prop}: {'PASS' if self.passed else 'FAIL'}"
        if self.status != "checked":
            head += f" ({self.status})"
        if self.note:
            head += f" -- {self.note}"
        lines = [head]
        lines.extend(f"  {i}" for i in self.items)
        for child in self.children:
            lines.extend("  " + line for line in str(child).splitlines())
        return "\n".join(lines)


def _require_valid_necklicial(y):
    report = validate_necklicial(y)
    if not report.ok:
        raise InvalidInstanceError("necklicial module failed validation", report)


def _require_valid_templicial(x):
    report = validate_templicial(x)
    if not report.ok:
        raise InvalidInstanceError("templicial module failed validation", report)


# ---------------------------------------------------------------------------
# horn / wing objects as limits
# ---------------------------------------------------------------------------


def _limit_over_diagram(y, diagram):
    nodes = tuple(y.value(obj.source) for obj in diagram.objects)
    arrows = tuple((k, i, y.action(g)) for (i, k, g) in diagram.arrows)
    return finite_limit(ModuleDiagram(y.ring, nodes, arrows))


def _canonical_into_limit(y, diagram, limit, n):
    legs = [y.action(obj) for obj in diagram.objects]
    return factor_through_limit(limit, legs, y.level(n))


def horn_object(y, n, j):
    """(Lambda^j_n Y, canonical map Y_n -> Lambda) as a finite limit."""
    diagram = build_diagram("horn", n, j)
    limit = _limit_over_diagram(y, diagram)
    return limit.module, _canonical_into_limit(y, diagram, limit, n)


def wing_object(y, n):
    diagram = build_diagram("wings", n)
    limit = _limit_over_diagram(y, diagram)
    return limit.module, _canonical_into_limit(y, diagram, limit, n)


@dataclass(frozen=True)
class TruncatedWing:
    module: Module
    canonical: Morphism
    limit: object
    diagram: object


def truncated_wing_object(y, n, i):
    """W_n^{<=i} Y with its canonical map and limit data (0 <= i < n)."""
    diagram = build_diagram("truncated_wings", n, i)
    limit = _limit_over_diagram(y, diagram)
    return TruncatedWing(limit.module, _canonical_into_limit(y, diagram, limit, n),
                         limit, diagram)


# ---------------------------------------------------------------------------
# weak Kan / wings checkers
# ---------------------------------------------------------------------------


def check_weak_kan(y, max_level=None, *, assume_valid=False, label=()):
    """Surjectivity of Y_n -> Lambda^j_n Y for all 0 < j < n <= max_level."""
    if not assume_valid:
        _require_valid_necklicial(y)
    n_max = min(max_level or y.max_level, y.max_level)
    items = []
    for n in range(2, n_max + 1):
        for j in range(1, n):
            _, canonical = horn_object(y, n, j)
            coker = cokernel_module(canonical)
            if coker.is_zero:
                items.append(CheckItem(label + (n, j), True))
            else:
                items.append(CheckItem(label + (n, j), False,
                                       "canonical map not surjective", coker))
    return CheckReport.from_items("weak-kan", items)


def check_lifts_wings(y, max_level=None, *, assume_valid=False, label=()):
    """Surjectivity of Y_n -> W_n Y for all 2 <= n <= max_level."""
    if not assume_valid:
        _require_valid_necklicial(y)
    n_max = min(max_level or y.max_level, y.max_level)
    items = []
    for n in range(2, n_max + 1):
        _, canonical = wing_object(y, n)
        coker = cokernel_module(canonical)
        if coker.is_zero:
            items.append(CheckItem(label + (n,), True))
        else:
            items.append(CheckItem(label + (n,), False,
                                   "canonical map not surjective", coker))
    return CheckReport.from_items("lifts-wings", items)


def check_quasicategory(x, max_level=None, *, assume_valid=False):
    """Weak Kan for every hom necklicial module X_.(a, b)."""
    if not assume_valid:
        _require_valid_templicial(x)
    items = []
    for a in x.vertices:
        for b in x.vertices:
            y = hom_necklicial(x, a, b)
            report = check_weak_kan(y, max_level, assume_valid=True, label=(a, b))
            items.extend(report.items)
    return CheckReport.from_items("quasi-category", items)


def check_templicial_wings(x, max_level=None, *, assume_valid=False):
    """Lifts-wings for every hom necklicial module X_.(a, b)."""
    if not assume_valid:
        _require_valid_templicial(x)
    items = []
    for a in x.vertices:
        for b in x.vertices:
            y = hom_necklicial(x, a, b)
            report = check_lifts_wings(y, max_level, assume_valid=True, label=(a, b))
            items.extend(report.items)
    return CheckReport.from_items("templicial-lifts-wings", items)


# ---------------------------------------------------------------------------
# degenerate part and deg-projectivity
# ---------------------------------------------------------------------------


def degenerate_subobject(x, n):
    """(X^deg_n, can_n, X^nd_n) via the colimit over non-identity surjections."""
    ev = evaluator(x)
    diagram = build_diagram("degeneracy", n)
    nodes = tuple(x.level_quiver(s.target_dim) for s in diagram.objects)
    arrows = tuple((k, i, ev.fint_morphism(tau)) for (i, k, tau) in diagram.arrows)
    colim = quiver_colimit(QuiverDiagram(x.ring, x.vertices, nodes, arrows))
    legs = [ev.fint_morphism(s) for s in diagram.objects]
    can_comps = {}
    nd_homs = {}
    nd_proj_comps = {}
    level_n = x.level_quiver(n)
    for (a, b), hom_colim in colim.hom_colimits:
        hom_legs = [leg.comp(a, b) for leg in legs]
        can_ab = factor_through_colimit(hom_colim, hom_legs, level_n.hom(a, b))
        can_comps[(a, b)] = can_ab
        ana = analyze(can_ab)
        if not ana.cokernel.is_zero:
            nd_homs[(a, b)] = ana.cokernel
        nd_proj_comps[(a, b)] = ana.cokernel_projection
    nd_quiver = Quiver.build(x.ring, x.vertices, nd_homs)
    can = QuiverMorphism.build(colim.quiver, level_n, can_comps)
    nd_proj = QuiverMorphism.build(level_n, nd_quiver, nd_proj_comps)
    return colim.quiver, can, nd_quiver, nd_proj


def check_deg_projective(x, max_level=None, *, assume_valid=False):
    """can_n split mono with projective cokernel for all n <= max_level."""
    if not assume_valid:
        _require_valid_templicial(x)
    n_max = min(max_level or x.max_level, x.max_level)
    items = []
    for n in range(1, n_max + 1):
        _, can, _, _ = degenerate_subobject(x, n)
        for a in x.vertices:
            for b in x.vertices:
                ana = analyze(can.comp(a, b))
                if ana.injective and ana.cokernel.is_flat():
                    items.append(CheckItem((n, a, b), True))
                elif not ana.injective:
                    items.append(CheckItem((n, a, b), False,
                                           "can_n is not injective", ana.kernel))
                else:
                    items.append(CheckItem((n, a, b), False,
                                           "nondegenerate part not projective",
                                           ana.cokernel))
    return CheckReport.from_items("deg-projective", items)


def ez_check(x, max_level=None, *, assume_valid=False):
    """Eilenberg-Zilber decomposition X_n = sum over [n] ->> [m] of X^nd_m."""
    if not assume_valid:
        _require_valid_templicial(x)
    n_max = min(max_level or x.max_level, x.max_level)
    dp = check_deg_projective(x, n_max, assume_valid=True)
    if not dp.passed:
        return CheckReport("eilenberg-zilber", False, (), "not-applicable",
                           "instance is not deg-projective", (dp,))
    nd = {}
    for m in range(1, n_max + 1):
        _, _, nd_quiver, _ = degenerate_subobject(x, m)
        nd[m] = nd_quiver
    items = []
    for n in range(1, n_max + 1):
        surjections = fint_surjections(n)
        for a in x.vertices:
            for b in x.vertices:
                lhs = sorted(x.level_quiver(n).hom(a, b).factors)
                rhs = []
                for s in surjections:
                    m = s.target_dim
                    if m == 0:
                        if a == b:
                            rhs.append(0)
                    else:
                        rhs.extend(nd[m].hom(a, b).factors)
                if lhs == sorted(rhs):
                    items.append(CheckItem((n, a, b), True))
                else:
                    items.append(CheckItem(
                        (n, a, b), False,
                        f"invariant factors {lhs} != surjection-indexed sum {sorted(rhs)}"))
    return CheckReport.from_items("eilenberg-zilber", items,
                                  note=f"surjection counts: "
                                       f"{[len(fint_surjections(n)) for n in range(1, n_max + 1)]}")


def check_levelwise(x, which="flat", max_level=None, *, assume_valid=False):
    """Levelwise flatness (= projectivity = freeness for f.g. modules here)."""
    if which not in ("flat", "projective"):
        raise InvalidInstanceError(f"unknown levelwise property {which!r}")
    if not assume_valid:
        _require_valid_templicial(x)
    n_max = min(max_level or x.max_level, x.max_level)
    items = []
    for n in range(1, n_max + 1):
        for a in x.vertices:
            for b in x.vertices:
                mod = x.level_quiver(n).hom(a, b)
                if mod.is_flat():
                    items.append(CheckItem((n, a, b), True))
                else:
                    items.append(CheckItem((n, a, b), False,
                                           f"level module {mod} has torsion"))
    return CheckReport.from_items(
        f"levelwise-{which}", items,
        note="flat = projective = free for finitely generated modules "
             "over the supported rings")
