"""Templicial validation, necklace evaluation, hom extraction."""

import random

import pytest

from templikit.coeff import FREE, Module, Morphism, Ring, analyze, tensor
from templikit.constructors import (
    nerve,
    paper_p,
    s0_times_2,
    sset_simplex,
    free_templicial,
    truncated_polynomial_category,
    _constant_templicial,
)
from templikit.necklace import Necklace, all_necklace_maps, necklace_maps_between, necklaces
from templikit.quiver import Quiver, QuiverMorphism, tensor_layout
from templikit.templicial import (
    NecklicialModule,
    base_change_necklicial,
    evaluator,
    hom_necklicial,
    tensor_external,
    validate_necklicial,
    validate_templicial,
)

F2 = Ring.prime_field(2)
F3 = Ring.prime_field(3)
Z = Ring.integers()


def dual_numbers_nerve(max_level=3):
    # F_3[x]/(x^2): relation x^2 = 0
    cat = truncated_polynomial_category(F3, (F3.zero(), F3.zero()))
    return nerve(cat, max_level)


def test_nerve_level_ranks():
    x = dual_numbers_nerve(3)
    for n in (1, 2, 3):
        assert x.level_quiver(n).hom("*", "*").rank == 2 ** n


def test_nerve_unit_category():
    cat = truncated_polynomial_category(F3, (F3.zero(),))  # F_3 itself, rank 1
    x = nerve(cat, 3)
    assert validate_templicial(x).ok
    for n in (1, 2, 3):
        assert x.level_quiver(n).hom("*", "*").rank == 1


def test_nerve_validates():
    x = dual_numbers_nerve(3)
    assert validate_templicial(x).ok


def test_nerve_comults_invertible():
    x = dual_numbers_nerve(3)
    for (k, l), mu in x.comults:
        for (a, b), comp in mu.components:
            assert analyze(comp).is_iso


def test_path_category_nerve():
    s = ("a", "b")
    c = Quiver.build(F3, s, {(v, w): Module.free(F3, 1) for v in s for w in s
                             if (v, w) != ("b", "a")})
    pair = tensor_layout(F3, s, (c, c))
    comps = {}
    for v, w in (("a", "a"), ("a", "b"), ("b", "b")):
        dom = pair.hom(v, w)
        comps[(v, w)] = Morphism(dom, c.hom(v, w),
                                 ((F3.one(),) * dom.ngens,))
    from templikit.constructors import LinearCategory
    from templikit.quiver import unit_quiver

    units = QuiverMorphism.build(
        unit_quiver(F3, s), c,
        {(v, v): Morphism(Module.free(F3, 1), c.hom(v, v), ((1,),)) for v in s},
    )
    cat = LinearCategory(c, QuiverMorphism.build(pair.quiver, c, comps), units)
    cat.validate()
    x = nerve(cat, 3)
    assert validate_templicial(x).ok
    # N_2(a,b) = C(a,a) (x) C(a,b) + C(a,b) (x) C(b,b)
    assert x.level_quiver(2).hom("a", "b").rank == 2


def test_free_on_simplex():
    k = sset_simplex(1, 3)
    x = free_templicial(k, F2, 3)
    assert validate_templicial(x).ok
    assert x.level_quiver(2).hom((0,), (1,)).rank == 2
    point = free_templicial(sset_simplex(0, 3), F2, 3)
    assert validate_templicial(point).ok
    for n in (1, 2, 3):
        assert point.level_quiver(n).hom((0,), (0,)).rank == 1


def test_free_on_delta3():
    k = sset_simplex(3, 3)
    x = free_templicial(k, F3, 3)
    assert validate_templicial(x).ok


def test_paper_p_structure():
    x = paper_p(3)
    assert validate_templicial(x).ok
    # one nondegenerate 2-simplex alpha from a to c; two degenerate ones over h
    assert x.level_quiver(1).hom("a", "c").rank == 1
    assert x.level_quiver(2).hom("a", "c").rank == 3
    assert x.level_quiver(1).hom("a", "b1").rank == 1
    assert x.level_quiver(1).hom("a", "b2").rank == 1


def test_s0_times_2_validates():
    x = s0_times_2(3)
    assert validate_templicial(x).ok
    assert x.degeneracy(0, 0).comp("*", "*").matrix == ((2,),)
    assert x.comult(1, 1).comp("*", "*").matrix == ((2,),)


def test_s0_times_2_literal_reading_is_inconsistent():
    # with every comultiplication the identity, colax naturality fails on the
    # square for the collapse [1] -> [0]
    x = _constant_templicial(Z, 2, 1, 3)
    report = validate_templicial(x)
    assert not report.ok
    assert any(f.check == "colax naturality" for f in report.failures)


def test_validator_catches_mutations():
    x = dual_numbers_nerve(2)
    mu = x.comult(1, 1)
    comp = mu.comp("*", "*")
    rows = [list(r) for r in comp.matrix]
    rows[0][0] = (rows[0][0] + 1) % 3
    bad = x.with_comult(1, 1, QuiverMorphism.build(
        mu.domain, mu.codomain,
        {("*", "*"): Morphism(comp.domain, comp.codomain, tuple(tuple(r) for r in rows))},
    ))
    report = validate_templicial(bad)
    assert not report.ok


def test_eval_necklace_single_bead_is_level():
    x = dual_numbers_nerve(3)
    ev = evaluator(x)
    assert ev.eval_necklace(Necklace((0, 2))) == x.level_quiver(2)
    assert ev.eval_necklace(Necklace((0, 1, 3))).hom("*", "*").rank == 2 * 4


def test_eval_map_composition_property():
    x = paper_p(3)
    ev = evaluator(x)
    rng = random.Random(6)
    maps = all_necklace_maps(3)
    by_source = {}
    for f in maps:
        by_source.setdefault(f.source, []).append(f)
    checked = 0
    while checked < 60:
        f = rng.choice(maps)
        gs = by_source.get(f.target)
        if not gs:
            continue
        g = rng.choice(gs)
        lhs = ev.eval_map(g.compose(f))
        rhs = ev.eval_map(f).compose(ev.eval_map(g))
        assert lhs == rhs
        checked += 1


def test_hom_necklicial_values_and_validation():
    x = dual_numbers_nerve(2)
    y = hom_necklicial(x, "*", "*")
    assert y.value(Necklace((0, 1, 2))).rank == 4
    assert y.value(Necklace((0, 2))).rank == 4
    assert y.value(Necklace((0,))).rank == 1
    assert validate_necklicial(y).ok


def test_hom_necklicial_free_delta1():
    x = free_templicial(sset_simplex(1, 2), F2, 2)
    y = hom_necklicial(x, (0,), (1,))
    assert y.value(Necklace((0, 1))).rank == 1
    # paths 0 -> 0 -> 1 and 0 -> 1 -> 1 through (possibly degenerate) edges
    assert y.value(Necklace((0, 1, 2))).rank == 2


def test_necklicial_mutation_detected():
    x = dual_numbers_nerve(2)
    y = hom_necklicial(x, "*", "*")
    actions = dict(y.actions)
    target = next(f for f in actions
                  if not f.is_identity and not actions[f].is_zero_map
                  and f.source.dim >= 1)
    bad = dict(actions)
    bad[target] = Morphism.zero(actions[target].domain, actions[target].codomain)
    y_bad = NecklicialModule.build(y.ring, y.max_level, dict(y.values), bad)
    assert not validate_necklicial(y_bad).ok


def test_validators_agree_on_corpus():
    instances = [dual_numbers_nerve(2), paper_p(2), s0_times_2(2)]
    for x in instances:
        t_ok = validate_templicial(x).ok
        n_ok = all(
            validate_necklicial(hom_necklicial(x, a, b)).ok
            for a in x.vertices for b in x.vertices
        )
        assert t_ok == n_ok == True  # noqa: E712


def test_tensor_external():
    x = free_templicial(sset_simplex(1, 2), Z, 2)
    y = hom_necklicial(x, (0,), (1,))
    m = Module(Z, (2,))
    yt = tensor_external(y, m)
    for t, mod in y.values:
        assert yt.value(t).factors == tensor(mod, m).factors
    assert validate_necklicial(yt).ok
    doubled = tensor_external(y, Module.free(Z, 2))
    for t, mod in y.values:
        assert doubled.value(t).rank == 2 * mod.rank


def test_hom_necklicial_commutes_with_base_change():
    from templikit.coeff import RingExtension

    theta = RingExtension(Ring.chain(2, 2), Ring.prime_field(2))
    x = free_templicial(sset_simplex(2, 2), Ring.chain(2, 2), 2)
    from templikit.deform import base_change_templicial

    xk = base_change_templicial(theta, x)
    for a in ((0,), (1,)):
        lhs = hom_necklicial(xk, a, (2,))
        rhs = base_change_necklicial(theta, hom_necklicial(x, a, (2,)))
        assert lhs.values == rhs.values
        assert lhs.actions == rhs.actions
