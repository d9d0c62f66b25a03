"""Truncated templicial modules and necklicial modules.

A templicial module stores level quivers X_1..X_N over a fixed vertex set
(X_0 is structurally the unit quiver), inner faces, degeneracies and
comultiplications.  Evaluation on necklaces sends (T,p) to the tensor of the
bead levels; a necklace map acts through its unique active/inert
factorization, the active part by face/degeneracy words and the inert part
by comultiplication words.  Strong unitality is built in: the counit and the
comultiplications with a zero index are not stored, they are the canonical
unit insertions.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

from .coeff import Module, Morphism, RingMismatchError, ShapeError, tensor, tensor_morphisms
from .necklace import (
    FintMap,
    all_necklace_maps,
    classify_and_factor,
    fint_delta,
    fint_factorize,
    fint_identity,
    fint_sigma,
    necklaces,
    simplex_necklace,
)
from .quiver import (
    QuiverMorphism,
    flatten_iso,
    tensor_layout,
    tensor_quiver_morphisms,
    unit_insertion_iso,
    unit_quiver,
)


@dataclass(frozen=True)
class ValidationFailure:
    check: str
    indices: tuple
    detail: str

    def __str__(self):
        return f"{self.check}{self.indices}: {self.detail}"


@dataclass(frozen=True)
class ValidationReport:
    subject: str
    failures: tuple

    @property
    def ok(self):
        return not self.failures

    def __str__(self):
        if self.ok:
            return f"{self.subject}: valid"
        lines = [f"{self.subject}: {len(self.failures)} violation(s)"]
        lines.extend(f"  {f}" for f in self.failures)
        return "\n".join(lines)


def _first_diff(lhs, rhs):
    """Human-readable location of the first differing matrix entry."""
    keys = sorted({k for k, _ in lhs.components} | {k for k, _ in rhs.components}, key=str)
    for a, b in keys:
        ml, mr = lhs.comp(a, b).matrix, rhs.comp(a, b).matrix
        if ml != mr:
            for i, (rl, rr) in enumerate(zip(ml, mr)):
                for j, (x, y) in enumerate(zip(rl, rr)):
                    if x != y:
                        return f"hom ({a},{b}) entry ({i},{j}): {x!r} != {y!r}"
            return f"hom ({a},{b}): shape difference"
    return "no difference"


@dataclass(frozen=True)
class TemplicialModule:
    """Truncated templicial module over a fixed vertex set.

    ``levels[n-1]`` is the quiver X_n for 1 <= n <= max_level; faces are
    keyed (n, j) for 0 < j < n, degeneracies (n, i) for 0 <= i <= n < N
    (including (0, 0): the unit map I_S -> X_1), comultiplications (k, l)
    for k, l >= 1 with k + l <= N, landing in the binary tensor layout.
    """

    ring: object
    vertices: tuple
    max_level: int
    levels: tuple
    faces: tuple          # sorted ((n, j), QuiverMorphism)
    degeneracies: tuple   # sorted ((n, i), QuiverMorphism)
    comults: tuple        # sorted ((k, l), QuiverMorphism)

    def __post_init__(self):
        n_levels = self.max_level
        if n_levels < 1:
            raise ShapeError("max_level must be at least 1")
        if len(self.levels) != n_levels:
            raise ShapeError(f"expected {n_levels} level quivers")
        for q in self.levels:
            if q.ring != self.ring or q.vertices != self.vertices:
                raise RingMismatchError("level quiver over wrong ring or vertices")
        fkeys = {k for k, _ in self.faces}
        expect = {(n, j) for n in range(2, n_levels + 1) for j in range(1, n)}
        if fkeys != expect:
            raise ShapeError(f"face keys {sorted(fkeys)} != expected {sorted(expect)}")
        for (n, j), f in self.faces:
            if f.domain != self.level_quiver(n) or f.codomain != self.level_quiver(n - 1):
                raise ShapeError(f"face ({n},{j}) has wrong endpoints")
        dkeys = {k for k, _ in self.degeneracies}
        expect = {(n, i) for n in range(0, n_levels) for i in range(0, n + 1)}
        if dkeys != expect:
            raise ShapeError(f"degeneracy keys {sorted(dkeys)} != expected {sorted(expect)}")
        for (n, i), f in self.degeneracies:
            if f.domain != self.level_quiver(n) or f.codomain != self.level_quiver(n + 1):
                raise ShapeError(f"degeneracy ({n},{i}) has wrong endpoints")
        ckeys = {k for k, _ in self.comults}
        expect = {(k, l) for k in range(1, n_levels) for l in range(1, n_levels)
                  if k + l <= n_levels}
        if ckeys != expect:
            raise ShapeError(f"comultiplication keys {sorted(ckeys)} != expected {sorted(expect)}")
        for (k, l), f in self.comults:
            target = tensor_layout(self.ring, self.vertices,
                                   (self.level_quiver(k), self.level_quiver(l))).quiver
            if f.domain != self.level_quiver(k + l) or f.codomain != target:
                raise ShapeError(f"comultiplication ({k},{l}) has wrong endpoints")

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.ring, self.vertices, self.max_level, self.levels,
                      self.faces, self.degeneracies, self.comults))
            object.__setattr__(self, "_hash", h)
        return h

    @staticmethod
    def build(ring, vertices, max_level, levels, faces, degeneracies, comults):
        return TemplicialModule(
            ring, tuple(vertices), max_level, tuple(levels),
            tuple(sorted(faces.items())), tuple(sorted(degeneracies.items())),
            tuple(sorted(comults.items())),
        )

    def level_quiver(self, n):
        if n == 0:
            return unit_quiver(self.ring, self.vertices)
        return self.levels[n - 1]

    def face(self, n, j):
        for key, f in self.faces:
            if key == (n, j):
                return f
        raise ShapeError(f"no face ({n},{j})")

    def degeneracy(self, n, i):
        for key, f in self.degeneracies:
            if key == (n, i):
                return f
        raise ShapeError(f"no degeneracy ({n},{i})")

    def comult(self, k, l):
        for key, f in self.comults:
            if key == (k, l):
                return f
        raise ShapeError(f"no comultiplication ({k},{l})")

    def with_comult(self, k, l, morphism):
        """Copy with one comultiplication replaced (used by deformations)."""
        comults = tuple(((a, b), morphism if (a, b) == (k, l) else f)
                        for (a, b), f in self.comults)
        return TemplicialModule(self.ring, self.vertices, self.max_level,
                                self.levels, self.faces, self.degeneracies, comults)


class TemplicialEvaluator:
    """Cached evaluation of a templicial module on necklaces and their maps."""

    def __init__(self, x):
        self.x = x
        self._fint = {}
        self._maps = {}
        self._words = {}

    def layout(self, necklace):
        beads = necklace.beads
        return tensor_layout(self.x.ring, self.x.vertices,
                             tuple(self.x.level_quiver(b) for b in beads))

    def eval_necklace(self, necklace):
        if necklace.dim > self.x.max_level:
            raise ShapeError(f"necklace dimension {necklace.dim} exceeds truncation")
        return self.layout(necklace).quiver

    def fint_morphism(self, f):
        """X(f): X_q -> X_p for f: [p] -> [q] in fint."""
        cached = self._fint.get(f)
        if cached is not None:
            return cached
        collapsed, missed = fint_factorize(f)
        q = f.target_dim
        morph = QuiverMorphism.identity(self.x.level_quiver(q))
        level = q
        for j in reversed(missed):
            morph = self.x.face(level, j).compose(morph)
            level -= 1
        for i in collapsed:
            morph = self.x.degeneracy(level, i).compose(morph)
            level += 1
        self._fint[f] = morph
        return morph

    def comult_word(self, n, parts):
        """X_n -> flat tensor of the part levels, peeling from the left."""
        parts = tuple(parts)
        key = (n, parts)
        cached = self._words.get(key)
        if cached is not None:
            return cached
        x = self.x
        if len(parts) == 1:
            morph = QuiverMorphism.identity(x.level_quiver(n))
        else:
            head = parts[0]
            mu = x.comult(head, n - head)
            rest = self.comult_word(n - head, parts[1:])
            rest_layout = tensor_layout(x.ring, x.vertices,
                                        tuple(x.level_quiver(b) for b in parts[1:]))
            paired = tensor_quiver_morphisms(
                x.ring, x.vertices,
                (QuiverMorphism.identity(x.level_quiver(head)), rest),
            )
            fwd, _ = flatten_iso(x.ring, x.vertices, (x.level_quiver(head), rest_layout))
            morph = fwd.compose(paired.compose(mu))
        self._words[key] = morph
        return morph

    def eval_map(self, f):
        """X(f): X_U -> X_T for a necklace map f: (T,p) -> (U,q)."""
        cached = self._maps.get(f)
        if cached is not None:
            return cached
        x = self.x
        if f.source.dim > x.max_level or f.target.dim > x.max_level:
            raise ShapeError(f"necklace map {f} exceeds truncation {x.max_level}")
        _, active, inert = classify_and_factor(f)

        # inert part (V,q) -> (U,q): comultiplication words refine each U-bead
        v_points = active.target.points
        u = inert.target
        words = []
        layouts = []
        upts = u.points
        for a, b in zip(upts, upts[1:]):
            sub = [t for t in v_points if a <= t <= b]
            parts = tuple(t2 - t1 for t1, t2 in zip(sub, sub[1:]))
            words.append(self.comult_word(b - a, parts))
            layouts.append(tensor_layout(x.ring, x.vertices,
                                         tuple(x.level_quiver(c) for c in parts)))
        if words:
            paired = tensor_quiver_morphisms(x.ring, x.vertices, tuple(words))
            fwd, _ = flatten_iso(x.ring, x.vertices, tuple(layouts))
            inert_eval = fwd.compose(paired)
        else:
            q0 = self.layout(u).quiver
            inert_eval = QuiverMorphism.identity(q0)

        # active part (T,p) -> (V,q): face/degeneracy words bead by bead
        tpts = active.source.points
        bead_maps = []
        for t1, t2 in zip(tpts, tpts[1:]):
            values = tuple(active.fint(t) - active.fint(t1) for t in range(t1, t2 + 1))
            bead_maps.append(FintMap(values))
        if bead_maps:
            word_morphs = tuple(self.fint_morphism(g) for g in bead_maps)
            tensored = tensor_quiver_morphisms(x.ring, x.vertices, word_morphs)
            unit_slots = {i for i, g in enumerate(bead_maps) if g.target_dim == 0}
            nonunit = tuple(x.level_quiver(g.target_dim) for g in bead_maps
                            if g.target_dim > 0)
            ins_fwd, _ = unit_insertion_iso(x.ring, x.vertices, nonunit, unit_slots)
            active_eval = tensored.compose(ins_fwd)
        else:
            active_eval = QuiverMorphism.identity(self.layout(active.source).quiver)

        result = active_eval.compose(inert_eval)
        self._maps[f] = result
        return result


_evaluators = weakref.WeakKeyDictionary()


def evaluator(x):
    ev = _evaluators.get(x)
    if ev is None:
        ev = TemplicialEvaluator(x)
        _evaluators[x] = ev
    return ev


def eval_necklace(x, necklace):
    return evaluator(x).eval_necklace(necklace)


def eval_map(x, f):
    return evaluator(x).eval_map(f)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def validate_templicial(x):
    """Exact check of the templicial axioms at truncation max_level.

    Simplicial identities among inner faces and degeneracies, coassociativity
    of the comultiplications, and colax naturality are verified by exact
    matrix equality.  Naturality is checked on the generating cofaces and
    codegeneracies in each tensor slot; squares for composite maps follow by
    pasting.  Counitality is structural (the zero-index comultiplications are
    not stored), so there is nothing to check for it.
    """
    n_max = x.max_level
    ev = evaluator(x)
    failures = []

    def record(check, indices, lhs, rhs):
        if lhs != rhs:
            failures.append(ValidationFailure(check, indices, _first_diff(lhs, rhs)))

    # d_i d_j = d_{j-1} d_i for i < j
    for n in range(3, n_max + 1):
        for j in range(2, n):
            for i in range(1, j):
                if i >= n - 1:
                    continue
                lhs = x.face(n - 1, i).compose(x.face(n, j))
                rhs = x.face(n - 1, j - 1).compose(x.face(n, i))
                record("d_i d_j = d_{j-1} d_i", (n, i, j), lhs, rhs)
    # s_i s_j = s_{j+1} s_i for i <= j
    for n in range(0, n_max - 1):
        for j in range(0, n + 1):
            for i in range(0, j + 1):
                lhs = x.degeneracy(n + 1, i).compose(x.degeneracy(n, j))
                rhs = x.degeneracy(n + 1, j + 1).compose(x.degeneracy(n, i))
                record("s_i s_j = s_{j+1} s_i", (n, i, j), lhs, rhs)
    # d_i s_j relations
    for n in range(0, n_max):
        for j in range(0, n + 1):
            for i in range(1, n + 1):
                sj = x.degeneracy(n, j)
                if i < j:
                    if 0 < i < n:
                        lhs = x.face(n + 1, i).compose(sj)
                        rhs = x.degeneracy(n - 1, j - 1).compose(x.face(n, i))
                        record("d_i s_j = s_{j-1} d_i", (n, i, j), lhs, rhs)
                elif i in (j, j + 1):
                    lhs = x.face(n + 1, i).compose(sj)
                    record("d_i s_j = id", (n, i, j), lhs,
                           QuiverMorphism.identity(x.level_quiver(n)))
                else:
                    if 0 < i - 1 < n and j <= n - 1:
                        lhs = x.face(n + 1, i).compose(sj)
                        rhs = x.degeneracy(n - 1, j).compose(x.face(n, i - 1))
                        record("d_i s_j = s_j d_{i-1}", (n, i, j), lhs, rhs)
    # coassociativity
    for k in range(1, n_max + 1):
        for l in range(1, n_max + 1):
            for m in range(1, n_max + 1):
                if k + l + m > n_max:
                    continue
                lhs = ev.comult_word(k + l + m, (k, l, m))
                # left-peeled composite (mu_{k,l} (x) id) o mu_{k+l,m}
                paired = tensor_quiver_morphisms(
                    x.ring, x.vertices,
                    (x.comult(k, l), QuiverMorphism.identity(x.level_quiver(m))),
                )
                kl_layout = tensor_layout(x.ring, x.vertices,
                                          (x.level_quiver(k), x.level_quiver(l)))
                fwd, _ = flatten_iso(x.ring, x.vertices, (kl_layout, x.level_quiver(m)))
                left = fwd.compose(paired.compose(x.comult(k + l, m)))
                record("coassociativity", (k, l, m), left, lhs)

    # colax naturality on generating maps in each slot
    def mu_general(k, l):
        if k >= 1 and l >= 1:
            return x.comult(k, l)
        if k == 0 and l == 0:
            fwd, _ = unit_insertion_iso(x.ring, x.vertices, (), {0, 1})
            return fwd
        if k == 0:
            fwd, _ = unit_insertion_iso(x.ring, x.vertices, (x.level_quiver(l),), {0})
            return fwd
        fwd, _ = unit_insertion_iso(x.ring, x.vertices, (x.level_quiver(k),), {1})
        return fwd

    def generators_into(k):
        gens = []
        for j in range(1, k):
            gens.append(fint_delta(k, j))
        if k + 1 <= n_max:
            for i in range(0, k + 1):
                gens.append(fint_sigma(k, i))
        return gens

    for k in range(0, n_max + 1):
        for l in range(0, n_max + 1):
            if k + l > n_max:
                continue
            for slot in (0, 1):
                target = k if slot == 0 else l
                for gen in generators_into(target):
                    kp = gen.source_dim if slot == 0 else k
                    lp = gen.source_dim if slot == 1 else l
                    if kp < 1 or lp < 1 or kp + lp > n_max:
                        continue
                    f = gen if slot == 0 else fint_identity(k)
                    g = gen if slot == 1 else fint_identity(l)
                    lhs = x.comult(kp, lp).compose(ev.fint_morphism(f.plus(g)))
                    rhs = tensor_quiver_morphisms(
                        x.ring, x.vertices,
                        (ev.fint_morphism(f), ev.fint_morphism(g)),
                    ).compose(mu_general(k, l))
                    record("colax naturality", (k, l, str(f), str(g)), lhs, rhs)

    return ValidationReport("templicial module", tuple(failures))


# ---------------------------------------------------------------------------
# necklicial modules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NecklicialModule:
    """Contravariant assignment of modules to necklaces of dimension <= N."""

    ring: object
    max_level: int
    values: tuple   # sorted ((Necklace, Module)) for every necklace dim <= N
    actions: tuple  # ((NecklaceMap, Morphism Y_U -> Y_T)) for every map

    def __post_init__(self):
        vals = dict(self.values)
        expect = {t for p in range(self.max_level + 1) for t in necklaces(p)}
        if set(vals) != expect:
            raise ShapeError("necklicial values must cover all necklaces up to truncation")
        for t, mod in self.values:
            if mod.ring != self.ring:
                raise RingMismatchError("necklicial value over wrong ring")
        for f, mor in self.actions:
            if mor.domain != vals[f.target] or mor.codomain != vals[f.source]:
                raise ShapeError(f"action of {f} has wrong endpoints")
        object.__setattr__(self, "_values_dict", vals)
        object.__setattr__(self, "_actions_dict", dict(self.actions))

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.ring, self.max_level, self.values, self.actions))
            object.__setattr__(self, "_hash", h)
        return h

    @staticmethod
    def build(ring, max_level, values, actions):
        vals = tuple(sorted(values.items(), key=lambda kv: kv[0].points))
        acts = tuple(sorted(actions.items(),
                            key=lambda kv: (kv[0].source.points, kv[0].target.points,
                                            kv[0].fint.values)))
        return NecklicialModule(ring, max_level, vals, acts)

    def value(self, necklace):
        return self._values_dict[necklace]

    def action(self, f):
        mor = self._actions_dict.get(f)
        if mor is None:
            raise ShapeError(f"no action stored for {f}")
        return mor

    def level(self, n):
        return self.value(simplex_necklace(n))


def hom_necklicial(x, a, b):
    """The necklicial module X_.(a, b) of a templicial module."""
    if a not in x.vertices or b not in x.vertices:
        raise ShapeError(f"unknown vertices ({a},{b})")
    ev = evaluator(x)
    values = {}
    for p in range(x.max_level + 1):
        for t in necklaces(p):
            values[t] = ev.layout(t).hom(a, b)
    actions = {}
    for f in all_necklace_maps(x.max_level):
        actions[f] = ev.eval_map(f).comp(a, b)
    return NecklicialModule.build(x.ring, x.max_level, values, actions)


def validate_necklicial(y):
    """Exhaustive functoriality check: identities and all composable pairs."""
    failures = []
    maps = [f for f, _ in y.actions]
    by_source = {}
    for f in maps:
        by_source.setdefault(f.source, []).append(f)
    for f in maps:
        if f.is_identity:
            act = y.action(f)
            if act != Morphism.identity(y.value(f.source)):
                failures.append(ValidationFailure(
                    "identity action", (str(f),), "Y(id) is not the identity matrix"))
    for f in maps:
        if f.is_identity:
            continue
        for g in by_source.get(f.target, ()):
            if g.is_identity:
                continue
            composite = g.compose(f)
            expected = y.action(composite)
            got = y.action(f).compose(y.action(g))
            if expected != got:
                failures.append(ValidationFailure(
                    "composition", (str(f), str(g)),
                    f"Y(g o f) != Y(f) o Y(g); first diff "
                    f"{_first_morphism_diff(expected, got)}"))
    return ValidationReport("necklicial module", tuple(failures))


def _first_morphism_diff(lhs, rhs):
    for i, (rl, rr) in enumerate(zip(lhs.matrix, rhs.matrix)):
        for j, (xv, yv) in enumerate(zip(rl, rr)):
            if xv != yv:
                return f"entry ({i},{j}): {xv!r} != {yv!r}"
    return "shape difference"


def tensor_external(y, module):
    """(Y (x) M)_T = Y_T (x) M with the actions tensored by the identity."""
    if module.ring != y.ring:
        raise RingMismatchError("tensor_external over mixed rings")
    ident = Morphism.identity(module)
    values = {t: tensor(mod, module) for t, mod in y.values}
    actions = {f: tensor_morphisms(mor, ident) for f, mor in y.actions}
    return NecklicialModule.build(y.ring, y.max_level, values, actions)


def base_change_necklicial(theta, y):
    values = {t: theta.base_change(mod) for t, mod in y.values}
    actions = {f: theta.base_change_morphism(mor) for f, mor in y.actions}
    return NecklicialModule.build(theta.target, y.max_level, values, actions)
