"""Combinatorics of the finite interval category and the necklace category.

A necklace is a pair (T, p) with T a subset of {0,...,p} containing the
endpoints; maps are endpoint-preserving monotone maps f with U contained in
f(T).  This module also builds the index diagrams over which horn, wing,
truncated-wing and degenerate-part objects are computed as finite (co)limits.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, combinations_with_replacement

from .coeff import ShapeError


@dataclass(frozen=True)
class FintMap:
    """Endpoint-preserving monotone map [p] -> [q], stored by its values."""

    values: tuple

    def __post_init__(self):
        v = self.values
        if not v or v[0] != 0:
            raise ShapeError(f"fint map must send 0 to 0: {v}")
        if any(a > b for a, b in zip(v, v[1:])):
            raise ShapeError(f"fint map not monotone: {v}")

    @property
    def source_dim(self):
        return len(self.values) - 1

    @property
    def target_dim(self):
        return self.values[-1]

    def __call__(self, x):
        return self.values[x]

    @property
    def is_identity(self):
        return self.values == tuple(range(len(self.values)))

    @property
    def is_injective(self):
        return all(a < b for a, b in zip(self.values, self.values[1:]))

    @property
    def is_surjective(self):
        return set(self.values) == set(range(self.target_dim + 1))

    def compose(self, other):
        """self o other."""
        if other.target_dim != self.source_dim:
            raise ShapeError("fint composition mismatch")
        return FintMap(tuple(self.values[x] for x in other.values))

    def plus(self, other):
        """Monoidal sum [p]+[p'] -> [q]+[q'] glueing at the shared endpoint."""
        q = self.target_dim
        return FintMap(self.values + tuple(q + x for x in other.values[1:]))

    def __str__(self):
        return "(" + ",".join(map(str, self.values)) + ")"


def fint_identity(p):
    return FintMap(tuple(range(p + 1)))


def fint_delta(n, j):
    """Inner coface [n-1] -> [n] skipping j (0 < j < n)."""
    if not 0 < j < n:
        raise ShapeError(f"delta_{j} is not inner for [{n - 1}] -> [{n}]")
    return FintMap(tuple(x if x < j else x + 1 for x in range(n)))


def fint_sigma(n, i):
    """Codegeneracy [n+1] -> [n] repeating i (0 <= i <= n)."""
    if not 0 <= i <= n:
        raise ShapeError(f"sigma_{i} out of range for [{n + 1}] -> [{n}]")
    return FintMap(tuple(x if x <= i else x - 1 for x in range(n + 2)))


def fint_collapse(p):
    """The unique map [p] -> [0]."""
    return FintMap((0,) * (p + 1))


def fint_factorize(f):
    """Canonical word for f: all codegeneracies first, then inner cofaces.

    Returns ``(collapsed, missed)`` with ``collapsed`` the ascending indices i
    where f(i) = f(i+1) and ``missed`` the ascending inner values absent from
    the image, so that f = delta_{m_r} o ... o delta_{m_1} o sigma_{c_1} o ...
    o sigma_{c_s}.
    """
    v = f.values
    collapsed = tuple(i for i in range(len(v) - 1) if v[i] == v[i + 1])
    image = set(v)
    missed = tuple(j for j in range(f.target_dim + 1) if j not in image)
    return collapsed, missed


def fint_from_word(p, q, collapsed, missed):
    """Evaluate the canonical word back into a fint map (testing oracle)."""
    f = fint_identity(p)
    level = p
    for i in reversed(collapsed):
        f = fint_sigma(level - 1, i).compose(f)
        level -= 1
    for j in missed:
        f = fint_delta(level + 1, j).compose(f)
        level += 1
    return f


@lru_cache(maxsize=None)
def fint_maps(p, q):
    """All fint maps [p] -> [q], lexicographic in their value tuples."""
    if p == 0:
        return (FintMap((0,)),) if q == 0 else ()
    out = []
    for interior in combinations_with_replacement(range(q + 1), p - 1):
        values = (0,) + interior + (q,)
        if all(a <= b for a, b in zip(values, values[1:])):
            out.append(FintMap(values))
    return tuple(out)


@lru_cache(maxsize=None)
def fint_surjections(n):
    """All surjective fint maps out of [n], ordered by (target, values)."""
    out = []
    for m in range(n + 1):
        out.extend(f for f in fint_maps(n, m) if f.is_surjective)
    return tuple(out)


# ---------------------------------------------------------------------------
# necklaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Necklace:
    """A pair (T, p) stored as the sorted tuple of points of T."""

    points: tuple

    def __post_init__(self):
        pts = self.points
        if not pts or pts[0] != 0 or list(pts) != sorted(set(pts)):
            raise ShapeError(f"invalid necklace point set {pts}")

    @property
    def dim(self):
        return self.points[-1]

    @property
    def beads(self):
        """Bead dimensions, left to right (all positive)."""
        pts = self.points
        return tuple(b - a for a, b in zip(pts, pts[1:]))

    @property
    def is_simplex(self):
        return len(self.points) <= 2

    def __str__(self):
        return "({" + ",".join(map(str, self.points)) + "}," + str(self.dim) + ")"


def simplex_necklace(n):
    return Necklace((0,)) if n == 0 else Necklace((0, n))


def wedge(a, b):
    """(T, p) v (U, q) = (T u (p + U), p + q)."""
    p = a.dim
    return Necklace(a.points + tuple(p + u for u in b.points[1:]))


@lru_cache(maxsize=None)
def necklaces(p):
    """All necklaces of dimension p, ordered by point set (lexicographic)."""
    if p == 0:
        return (Necklace((0,)),)
    interior = range(1, p)
    out = []
    for r in range(p):
        for inner in combinations(interior, r):
            out.append(Necklace((0,) + inner + (p,)))
    return tuple(sorted(out, key=lambda t: t.points))


@dataclass(frozen=True)
class NecklaceMap:
    """A necklace map (T,p) -> (U,q): a fint map with U inside f(T)."""

    source: Necklace
    target: Necklace
    fint: FintMap

    def __post_init__(self):
        if self.fint.source_dim != self.source.dim or self.fint.target_dim != self.target.dim:
            raise ShapeError("necklace map dimensions inconsistent")
        image = {self.fint(t) for t in self.source.points}
        if not set(self.target.points) <= image:
            raise ShapeError(f"target points not contained in image of source points")

    @property
    def is_inert(self):
        return self.fint.is_identity

    @property
    def is_active(self):
        return {self.fint(t) for t in self.source.points} == set(self.target.points)

    @property
    def is_injective(self):
        return self.fint.is_injective

    @property
    def is_identity(self):
        return self.fint.is_identity and self.source == self.target

    def compose(self, other):
        """self o other (necklace maps compose like their fint parts)."""
        return NecklaceMap(other.source, self.target, self.fint.compose(other.fint))

    def __str__(self):
        return f"{self.source} -> {self.target} via {self.fint}"


def necklace_identity(t):
    return NecklaceMap(t, t, fint_identity(t.dim))


def classify_and_factor(f):
    """Unique decomposition of f as an inert map after an active map.

    Returns ``(info, active, inert)`` where info has the ``inert``/``active``
    flags and ``inert o active == f``.
    """
    mid = Necklace(tuple(sorted({f.fint(t) for t in f.source.points})))
    active = NecklaceMap(f.source, mid, f.fint)
    inert = NecklaceMap(mid, f.target, fint_identity(f.target.dim))
    return {"inert": f.is_inert, "active": f.is_active}, active, inert


@lru_cache(maxsize=None)
def necklace_maps_between(t, u):
    """All necklace maps (T,p) -> (U,q), ordered by underlying value tuples."""
    out = []
    tpoints = t.points
    upoints = set(u.points)
    for f in fint_maps(t.dim, u.dim):
        if upoints <= {f(x) for x in tpoints}:
            out.append(NecklaceMap(t, u, f))
    return tuple(out)


@lru_cache(maxsize=None)
def all_necklace_maps(max_dim):
    """Every necklace map between necklaces of dimension <= max_dim."""
    ts = [t for p in range(max_dim + 1) for t in necklaces(p)]
    out = []
    for t in ts:
        for u in ts:
            out.extend(necklace_maps_between(t, u))
    return tuple(out)


@lru_cache(maxsize=None)
def injective_into_simplex(n):
    """All injective necklace maps (T,p) -> Delta^n, deterministic order."""
    target = simplex_necklace(n)
    out = []
    for p in range(1, n + 1):
        for interior in combinations(range(1, n), p - 1):
            values = (0,) + interior + (n,)
            f = FintMap(values)
            for t in necklaces(p):
                out.append(NecklaceMap(t, target, f))
    if n == 0:
        return (necklace_identity(target),)
    return tuple(out)


@lru_cache(maxsize=None)
def inert_into_simplex(n):
    """All inert maps (T,n) -> Delta^n (including the identity)."""
    target = simplex_necklace(n)
    ident = fint_identity(n)
    return tuple(NecklaceMap(t, target, ident) for t in necklaces(n))


def enumerate_kind(kind, *params):
    """Uniform entry point for the enumerations used by the checkers."""
    if kind == "fint_maps":
        return fint_maps(*params)
    if kind == "necklaces":
        return necklaces(*params)
    if kind == "injective_into_simplex":
        return injective_into_simplex(*params)
    if kind == "inert_into_simplex":
        return inert_into_simplex(*params)
    if kind == "surjections":
        return fint_surjections(*params)
    raise ShapeError(f"unknown enumeration kind {kind!r}")


# ---------------------------------------------------------------------------
# index diagrams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndexDiagram:
    """Objects with commuting connecting maps over a common anchor.

    For horn/wing kinds the objects are necklace maps f_i into Delta^n and an
    arrow (i, k, g) satisfies f_k o g = f_i.  For the degeneracy kind the
    objects are surjections s_i out of [n] and an arrow (i, k, t) satisfies
    s_k = t o s_i.
    """

    kind: str
    objects: tuple
    arrows: tuple


def _arrow_between(fi, fk):
    """The unique g with fk o g = fi for injective fk, or None."""
    lookup = {}
    for x, y in enumerate(fk.fint.values):
        lookup.setdefault(y, x)
    vals = []
    for y in fi.fint.values:
        if y not in lookup:
            return None
        vals.append(lookup[y])
    try:
        return NecklaceMap(fi.source, fk.source, FintMap(tuple(vals)))
    except ShapeError:
        return None


def _slice_arrows(objects):
    arrows = []
    for i, fi in enumerate(objects):
        for k, fk in enumerate(objects):
            if i == k:
                continue
            g = _arrow_between(fi, fk)
            if g is not None:
                arrows.append((i, k, g))
    return tuple(arrows)


@lru_cache(maxsize=None)
def build_diagram(kind, n, extra=None):
    """Index diagrams for the finite-limit/colimit objects.

    kinds: ``horn`` (extra = j, 0 < j < n), ``wings`` (n >= 2),
    ``truncated_wings`` (extra = i, 0 <= i < n), ``wedge_intersection``
    (extra = i, 0 < i < n; the middle object of the wing pullback square)
    and ``degeneracy`` (n >= 1).
    """
    if kind == "horn":
        j = extra
        if not (isinstance(j, int) and 0 < j < n):
            raise ShapeError(f"horn({n},{j}) out of range")
        delta_j = NecklaceMap(simplex_necklace(n - 1), simplex_necklace(n), fint_delta(n, j))
        objects = tuple(
            f for f in injective_into_simplex(n)
            if not f.is_identity and f != delta_j
        )
        return IndexDiagram(kind, objects, _slice_arrows(objects))
    if kind == "wings":
        if n < 2:
            raise ShapeError(f"wings({n}) needs n >= 2")
        objects = tuple(f for f in inert_into_simplex(n) if not f.is_identity)
        return IndexDiagram(kind, objects, _slice_arrows(objects))
    if kind == "truncated_wings":
        i = extra
        if not (isinstance(i, int) and 0 <= i < n):
            raise ShapeError(f"truncated_wings({n},{i}) out of range")
        banned = set(range(i + 1, n))
        objects = tuple(
            f for f in inert_into_simplex(n)
            if not f.is_identity and not (set(f.source.points) & banned)
        )
        return IndexDiagram(kind, objects, _slice_arrows(objects))
    if kind == "wedge_intersection":
        i = extra
        if not (isinstance(i, int) and 0 < i < n):
            raise ShapeError(f"wedge_intersection({n},{i}) out of range")
        banned = set(range(i + 1, n))
        objects = tuple(
            f for f in inert_into_simplex(n)
            if i in f.source.points
            and not (set(f.source.points) & banned)
            and f.source.points != (0, i, n)
        )
        return IndexDiagram(kind, objects, _slice_arrows(objects))
    if kind == "degeneracy":
        if n < 1:
            raise ShapeError(f"degeneracy({n}) needs n >= 1")
        objects = tuple(s for s in fint_surjections(n) if not s.is_identity)
        arrows = []
        for i, si in enumerate(objects):
            for k, sk in enumerate(objects):
                if i == k:
                    continue
                # unique tau with sk = tau o si, if any
                vals = [None] * (si.target_dim + 1)
                ok = True
                for x in range(n + 1):
                    y = si(x)
                    if vals[y] is None:
                        vals[y] = sk(x)
                    elif vals[y] != sk(x):
                        ok = False
                        break
                if not ok:
                    continue
                try:
                    tau = FintMap(tuple(vals))
                except ShapeError:
                    continue
                if tau.compose(si) == sk:
                    arrows.append((i, k, tau))
        return IndexDiagram(kind, objects, tuple(arrows))
    raise ShapeError(f"unknown diagram kind {kind!r}")
