"""Exact linear algebra over the supported coefficient rings.

Rings: the integers, the rationals, prime fields F_p, chain rings Z/p^m and
dual chain rings F_p[e]/(e^m).  Finitely generated modules are stored in
invariant-factor normal form, morphisms as matrices of canonical ring
elements, and every operation (normal form, kernel, cokernel, tensor, base
change, finite limits and colimits) is computed exactly -- no floating point
anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd


class TemplikitError(Exception):
    """Base class for all library errors."""


class UnsupportedRingError(TemplikitError):
    """Requested a ring kind or ring pair outside the supported set."""


class RingMismatchError(TemplikitError):
    """Operands live over different rings or incompatible vertex data."""


class ShapeError(TemplikitError):
    """Matrix dimensions or factor data inconsistent with the declared modules."""


class InvalidInstanceError(TemplikitError):
    """An instance failed validation where a validated one was required."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


def _is_prime(p):
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


INTEGERS = "integers"
RATIONALS = "rationals"
PRIME_FIELD = "prime-field"
CHAIN = "chain"
DUAL_CHAIN = "dual-chain"

_KINDS = (INTEGERS, RATIONALS, PRIME_FIELD, CHAIN, DUAL_CHAIN)


@dataclass(frozen=True)
class Ring:
    """A supported coefficient ring.

    Elements are plain Python values: ``int`` for the integers, prime fields
    (canonical representative in ``[0, p)``) and chain rings (``[0, p^m)``),
    ``Fraction`` for the rationals, and a length-``m`` tuple of ints in
    ``[0, p)`` for dual chain rings (coefficient of e^i at index i).
    """

    kind: str
    p: int | None = None
    m: int | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise UnsupportedRingError(f"unsupported ring kind {self.kind!r}")
        if self.kind in (PRIME_FIELD, CHAIN, DUAL_CHAIN):
            if self.p is None or not _is_prime(self.p):
                raise UnsupportedRingError(f"{self.kind} requires a prime p, got {self.p!r}")
        else:
            if self.p is not None or self.m is not None:
                raise UnsupportedRingError(f"{self.kind} takes no parameters")
        if self.kind in (CHAIN, DUAL_CHAIN):
            if self.m is None or self.m < 1:
                raise UnsupportedRingError(f"{self.kind} requires nilpotency m >= 1, got {self.m!r}")
        if self.kind == PRIME_FIELD and self.m is not None:
            raise UnsupportedRingError("prime-field takes no nilpotency")
        if self.kind == CHAIN:
            object.__setattr__(self, "_pows", tuple(self.p ** e for e in range(self.m + 1)))

    # -- constructors -------------------------------------------------

    @staticmethod
    def integers():
        return Ring(INTEGERS)

    @staticmethod
    def rationals():
        return Ring(RATIONALS)

    @staticmethod
    def prime_field(p):
        return Ring(PRIME_FIELD, p=p)

    @staticmethod
    def chain(p, m):
        return Ring(CHAIN, p=p, m=m)

    @staticmethod
    def dual_chain(p, m):
        return Ring(DUAL_CHAIN, p=p, m=m)

    # -- structure ----------------------------------------------------

    @property
    def is_field(self):
        return self.kind in (RATIONALS, PRIME_FIELD)

    @property
    def is_chain_kind(self):
        return self.kind in (CHAIN, DUAL_CHAIN)

    @property
    def nilpotency(self):
        """m for chain kinds, None (meaning infinity) otherwise."""
        return self.m if self.is_chain_kind else None

    @property
    def uniformizer(self):
        if self.kind == CHAIN:
            return self.reduce(self.p)
        if self.kind == DUAL_CHAIN:
            return self.reduce(tuple(1 if i == 1 else 0 for i in range(max(self.m, 2))))
        raise UnsupportedRingError(f"{self} has no uniformizer")

    def __str__(self):
        if self.kind == INTEGERS:
            return "Z"
        if self.kind == RATIONALS:
            return "Q"
        if self.kind == PRIME_FIELD:
            return f"F{self.p}"
        if self.kind == CHAIN:
            return f"Z/{self.p}^{self.m}"
        return f"F{self.p}[e]/(e^{self.m})"

    # -- element arithmetic --------------------------------------------

    def zero(self):
        if self.kind == RATIONALS:
            return Fraction(0)
        if self.kind == DUAL_CHAIN:
            return (0,) * self.m
        return 0

    def one(self):
        if self.kind == RATIONALS:
            return Fraction(1)
        if self.kind == DUAL_CHAIN:
            return tuple(1 if i == 0 else 0 for i in range(self.m))
        return 1

    def reduce(self, x):
        """Canonical representative of an element-like value."""
        k = self.kind
        if k == INTEGERS:
            return int(x)
        if k == RATIONALS:
            return Fraction(x)
        if k == PRIME_FIELD:
            return int(x) % self.p
        if k == CHAIN:
            return int(x) % self._pows[self.m]
        if type(x) is tuple and len(x) == self.m:
            p = self.p
            for c in x:
                if not (type(c) is int and 0 <= c < p):
                    break
            else:
                return x
        coeffs = tuple(int(c) % self.p for c in x)
        if len(coeffs) < self.m:
            coeffs = coeffs + (0,) * (self.m - len(coeffs))
        return coeffs[: self.m]

    def from_int(self, n):
        if self.kind == DUAL_CHAIN:
            return self.reduce((n,))
        return self.reduce(n)

    def add(self, a, b):
        if self.kind == DUAL_CHAIN:
            p = self.p
            return tuple((x + y) % p for x, y in zip(a, b))
        return self.reduce(a + b)

    def neg(self, a):
        if self.kind == DUAL_CHAIN:
            p = self.p
            return tuple((-x) % p for x in a)
        return self.reduce(-a)

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        k = self.kind
        if k == DUAL_CHAIN:
            p, m = self.p, self.m
            if m == 2:
                a0, a1 = a
                b0, b1 = b
                return (a0 * b0 % p, (a0 * b1 + a1 * b0) % p)
            out = [0] * m
            for i, x in enumerate(a):
                if x:
                    for j in range(m - i):
                        y = b[j]
                        if y:
                            out[i + j] = (out[i + j] + x * y) % p
            return tuple(out)
        return self.reduce(a * b)

    def is_zero(self, a):
        if self.kind == DUAL_CHAIN:
            return not any(a)
        return a == 0

    def is_unit(self, a):
        k = self.kind
        if k == INTEGERS:
            return a in (1, -1)
        if k == RATIONALS:
            return a != 0
        if k in (PRIME_FIELD, CHAIN):
            return a % self.p != 0
        return a[0] % self.p != 0

    def inv(self, a):
        """Inverse of a unit."""
        k = self.kind
        if k == INTEGERS:
            if a in (1, -1):
                return a
            raise ZeroDivisionError(f"{a} is not a unit in Z")
        if k == RATIONALS:
            return Fraction(1) / a
        if k == PRIME_FIELD:
            return pow(a, -1, self.p)
        if k == CHAIN:
            return pow(a, -1, self._pows[self.m])
        p, m = self.p, self.m
        b = [pow(a[0], -1, p)]
        for n in range(1, m):
            acc = 0
            for i in range(1, n + 1):
                acc = (acc + a[i] * b[n - i]) % p
            b.append((-b[0] * acc) % p)
        return tuple(b)

    def valuation(self, a):
        """Uniformizer-adic valuation on chain kinds (m for zero)."""
        if self.kind == CHAIN:
            if a == 0:
                return self.m
            v, p = 0, self.p
            while a % p == 0:
                a //= p
                v += 1
            return v
        if self.kind == DUAL_CHAIN:
            for i, c in enumerate(a):
                if c:
                    return i
            return self.m
        raise UnsupportedRingError(f"no valuation on {self}")

    def divides(self, a, b):
        """Whether a | b in the ring (0 | b iff b = 0)."""
        k = self.kind
        if k == INTEGERS:
            return b == 0 if a == 0 else b % a == 0
        if self.is_field:
            return a != 0 or b == 0
        return self.valuation(b) >= self.valuation(a)

    def divide(self, b, a):
        """Exact quotient b / a; caller guarantees a | b."""
        k = self.kind
        if k == INTEGERS:
            return b // a
        if k == RATIONALS:
            return b / a
        if k == PRIME_FIELD:
            return (b * pow(a, -1, self.p)) % self.p
        if k == CHAIN:
            va = self.valuation(a)
            ua = a // self._pows[va]
            return self.reduce((b // self._pows[va]) * pow(ua, -1, self._pows[self.m]))
        va = self.valuation(a)
        ua = self.reduce(a[va:])
        shifted = self.reduce(b[va:])
        return self.mul(shifted, self.inv(ua))

    def pivot_key(self, a):
        """Smaller keys are better Smith pivots (valuation-style)."""
        if self.kind == INTEGERS:
            return abs(a)
        if self.is_field:
            return 0
        return self.valuation(a)

    def normalizing_unit(self, a):
        """Unit u with u*a the canonical associate (positive, 1, or pi^v)."""
        k = self.kind
        if k == INTEGERS:
            return -1 if a < 0 else 1
        if self.is_field:
            return self.inv(a)
        if k == CHAIN:
            v = self.valuation(a)
            return pow(a // self._pows[v], -1, self._pows[self.m])
        v = self.valuation(a)
        return self.inv(self.reduce(a[v:]))


# ---------------------------------------------------------------------------
# matrices (tuples of row tuples; rows index codomain generators)
# ---------------------------------------------------------------------------


def mat_identity(ring, n):
    one, zero = ring.one(), ring.zero()
    return tuple(tuple(one if i == j else zero for j in range(n)) for i in range(n))


def mat_zero(ring, rows, cols):
    zero = ring.zero()
    return tuple((zero,) * cols for _ in range(rows))


def mat_mul(ring, a, b):
    rows = len(a)
    inner = len(b)
    cols = len(b[0]) if inner else 0
    if rows and len(a[0]) != inner:
        raise ShapeError(f"cannot multiply {rows}x{len(a[0])} by {inner}x{cols}")
    zero = ring.zero()
    mul, add, is_zero = ring.mul, ring.add, ring.is_zero
    out = []
    for i in range(rows):
        arow = a[i]
        row = [zero] * cols
        for k in range(inner):
            x = arow[k]
            if is_zero(x):
                continue
            brow = b[k]
            for j in range(cols):
                y = brow[j]
                if not is_zero(y):
                    row[j] = add(row[j], mul(x, y))
        out.append(tuple(row))
    return tuple(out)


def mat_hstack(a, b):
    if not a:
        return b
    if not b:
        return a
    return tuple(ra + rb for ra, rb in zip(a, b))


def mat_transpose(a):
    if not a:
        return ()
    return tuple(zip(*a))


def mat_add(ring, a, b):
    add = ring.add
    return tuple(tuple(add(x, y) for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_neg(ring, a):
    neg = ring.neg
    return tuple(tuple(neg(x) for x in row) for row in a)


# ---------------------------------------------------------------------------
# Smith normal form
# ---------------------------------------------------------------------------


@dataclass
class SmithResult:
    """U*A*V = diag(d);  A = L*diag(d)*R with L = U^-1, R = V^-1."""

    d: list
    left: tuple | None = None          # L = U^-1
    right: tuple | None = None         # R = V^-1
    row_transform: tuple | None = None  # U
    col_transform: tuple | None = None  # V
    aug: tuple | None = None           # row ops applied to an augmented block


def smith(ring, matrix, *, left=False, right=False, row_t=False, col_t=False, aug=None):
    """Diagonalize ``matrix`` by invertible row and column operations.

    Deterministic pivoting: smallest nonzero valuation (absolute value over
    the integers), ties broken by lowest row then column index.  Diagonal
    entries come out as canonical associates in successive-divisibility
    order.
    """
    a = [list(row) for row in matrix]
    rows = len(a)
    cols = len(a[0]) if rows else 0
    u = [list(r) for r in mat_identity(ring, rows)] if row_t else None
    linv = [list(r) for r in mat_identity(ring, rows)] if left else None
    v = [list(r) for r in mat_identity(ring, cols)] if col_t else None
    rinv = [list(r) for r in mat_identity(ring, cols)] if right else None
    ag = [list(row) for row in aug] if aug is not None else None

    is_zero, mul, add, neg = ring.is_zero, ring.mul, ring.add, ring.neg
    # integer-backed rings get inline arithmetic in the hot loops: zero tests
    # by truthiness and (a + c*x) mod q with q = None meaning no reduction
    fast = ring.kind != DUAL_CHAIN
    if ring.kind == PRIME_FIELD:
        q = ring.p
    elif ring.kind == CHAIN:
        q = ring.p ** ring.m
    else:
        q = None

    def _axpy(dst, src, c, upto):
        if fast:
            if q is None:
                for j in range(upto):
                    x = src[j]
                    if x:
                        dst[j] = dst[j] + c * x
            else:
                for j in range(upto):
                    x = src[j]
                    if x:
                        dst[j] = (dst[j] + c * x) % q
        else:
            for j in range(upto):
                x = src[j]
                if any(x):
                    dst[j] = add(dst[j], mul(c, x))

    def row_swap(i, k):
        if i == k:
            return
        a[i], a[k] = a[k], a[i]
        if u is not None:
            u[i], u[k] = u[k], u[i]
        if ag is not None:
            ag[i], ag[k] = ag[k], ag[i]
        if linv is not None:
            for r in linv:
                r[i], r[k] = r[k], r[i]

    def row_axpy(i, k, c):
        # row i += c * row k
        if is_zero(c):
            return
        _axpy(a[i], a[k], c, cols)
        if u is not None:
            _axpy(u[i], u[k], c, rows)
        if ag is not None:
            _axpy(ag[i], ag[k], c, len(ag[i]))
        if linv is not None:
            nc = neg(c)
            for r in linv:
                x = r[i]
                if not is_zero(x):
                    r[k] = add(r[k], mul(nc, x))

    def row_scale(i, w):
        ai = a[i]
        for j in range(cols):
            if not is_zero(ai[j]):
                ai[j] = mul(w, ai[j])
        if u is not None:
            ui = u[i]
            for j in range(rows):
                if not is_zero(ui[j]):
                    ui[j] = mul(w, ui[j])
        if ag is not None:
            gi = ag[i]
            for j in range(len(gi)):
                if not is_zero(gi[j]):
                    gi[j] = mul(w, gi[j])
        if linv is not None:
            wi = ring.inv(w)
            for r in linv:
                if not is_zero(r[i]):
                    r[i] = mul(wi, r[i])

    def col_swap(j, k):
        if j == k:
            return
        for r in a:
            r[j], r[k] = r[k], r[j]
        if v is not None:
            for r in v:
                r[j], r[k] = r[k], r[j]
        if rinv is not None:
            rinv[j], rinv[k] = rinv[k], rinv[j]

    def col_axpy(j, k, c):
        # col j += c * col k
        if is_zero(c):
            return
        if fast:
            if q is None:
                for r in a:
                    x = r[k]
                    if x:
                        r[j] = r[j] + c * x
                if v is not None:
                    for r in v:
                        x = r[k]
                        if x:
                            r[j] = r[j] + c * x
            else:
                for r in a:
                    x = r[k]
                    if x:
                        r[j] = (r[j] + c * x) % q
                if v is not None:
                    for r in v:
                        x = r[k]
                        if x:
                            r[j] = (r[j] + c * x) % q
        else:
            for r in a:
                x = r[k]
                if any(x):
                    r[j] = add(r[j], mul(c, x))
            if v is not None:
                for r in v:
                    x = r[k]
                    if any(x):
                        r[j] = add(r[j], mul(c, x))
        if rinv is not None:
            nc = neg(c)
            rj, rk = rinv[j], rinv[k]
            for t in range(len(rj)):
                x = rj[t]
                if not is_zero(x):
                    rk[t] = add(rk[t], mul(nc, x))

    euclid = ring.kind == INTEGERS
    # over chain kinds and fields the minimal valuation of the remaining
    # submatrix never decreases, so the previous pivot's key is a sharp
    # early-exit bound; over Z remainders can shrink, keep the bound at 1
    bound = [1 if euclid else 0]
    pivot_key = ring.pivot_key

    def find_pivot(t):
        best = None
        best_key = None
        stop = bound[0]
        if fast:
            for i in range(t, rows):
                ai = a[i]
                for j in range(t, cols):
                    x = ai[j]
                    if not x:
                        continue
                    key = pivot_key(x)
                    if best is None or key < best_key:
                        best, best_key = (i, j), key
                        if key <= stop:
                            return best, best_key
            return (best, best_key) if best is not None else None
        for i in range(t, rows):
            ai = a[i]
            for j in range(t, cols):
                x = ai[j]
                if not any(x):
                    continue
                key = pivot_key(x)
                if best is None or key < best_key:
                    best, best_key = (i, j), key
                    if key <= stop:
                        return best, best_key
        return (best, best_key) if best is not None else None

    t = 0
    limit = min(rows, cols)
    while t < limit:
        found = find_pivot(t)
        if found is None:
            break
        if not euclid:
            bound[0] = max(bound[0], found[1])
        found = found[0]
        row_swap(t, found[0])
        col_swap(t, found[1])
        if euclid:
            while True:
                if a[t][t] < 0:
                    row_scale(t, -1)
                piv = a[t][t]
                dirty = False
                for i in range(t + 1, rows):
                    x = a[i][t]
                    if x:
                        row_axpy(i, t, -(x // piv))
                        if a[i][t]:
                            dirty = True
                if dirty:
                    found = find_pivot(t)[0]
                    row_swap(t, found[0])
                    col_swap(t, found[1])
                    continue
                for j in range(t + 1, cols):
                    x = a[t][j]
                    if x:
                        col_axpy(j, t, -(x // piv))
                        if a[t][j]:
                            dirty = True
                if dirty:
                    found = find_pivot(t)[0]
                    row_swap(t, found[0])
                    col_swap(t, found[1])
                    continue
                piv = a[t][t]
                bad = None
                for i in range(t + 1, rows):
                    ai = a[i]
                    for j in range(t + 1, cols):
                        if ai[j] % piv:
                            bad = i
                            break
                    if bad is not None:
                        break
                if bad is None:
                    break
                row_axpy(t, bad, 1)
        else:
            piv = a[t][t]
            for i in range(t + 1, rows):
                x = a[i][t]
                if not is_zero(x):
                    row_axpy(i, t, neg(ring.divide(x, piv)))
            for j in range(t + 1, cols):
                x = a[t][j]
                if not is_zero(x):
                    col_axpy(j, t, neg(ring.divide(x, piv)))
        t += 1

    d = []
    for i in range(limit):
        x = a[i][i]
        if is_zero(x):
            d.append(ring.zero())
            continue
        w = ring.normalizing_unit(x)
        if not is_zero(ring.sub(w, ring.one())):
            row_scale(i, w)
        d.append(a[i][i])

    return SmithResult(
        d=d,
        left=tuple(tuple(r) for r in linv) if linv is not None else None,
        right=tuple(tuple(r) for r in rinv) if rinv is not None else None,
        row_transform=tuple(tuple(r) for r in u) if u is not None else None,
        col_transform=tuple(tuple(r) for r in v) if v is not None else None,
        aug=tuple(tuple(r) for r in ag) if ag is not None else None,
    )


def normal_form(ring, matrix):
    """Public Smith decomposition: (d, L, R) with matrix = L * diag(d) * R.

    ``d`` is the tuple of diagonal invariant factors (canonical associates in
    successive-divisibility order); L and R are square invertible transforms.
    """
    if not isinstance(ring, Ring):
        raise UnsupportedRingError(f"not a supported ring: {ring!r}")
    res = smith(ring, matrix, left=True, right=True)
    return tuple(res.d), res.left, res.right


def invariant_factors(ring, matrix):
    return tuple(smith(ring, matrix).d)


def solve_linear(ring, a, b):
    """One X with A*X = B over the ring, or None if no solution exists."""
    rows = len(a)
    if len(b) != rows:
        raise ShapeError("solve_linear: row count mismatch")
    bcols = len(b[0]) if b else 0
    cols = len(a[0]) if rows else 0
    res = smith(ring, a, col_t=True, aug=b)
    d, v, bb = res.d, res.col_transform, res.aug
    zero = ring.zero()
    z = [[zero] * bcols for _ in range(cols)]
    for i in range(rows):
        di = d[i] if i < len(d) else None
        for j in range(bcols):
            rhs = bb[i][j]
            if di is None or ring.is_zero(di):
                if not ring.is_zero(rhs):
                    return None
            else:
                if not ring.divides(di, rhs):
                    return None
                z[i][j] = ring.divide(rhs, di)
    if cols == 0:
        return ()
    return mat_mul(ring, v, tuple(tuple(r) for r in z))


# ---------------------------------------------------------------------------
# modules
# ---------------------------------------------------------------------------

FREE = 0


def _factor_sort_key(f):
    # torsion ascending first, free factors (0) last
    return (1, 0) if f == FREE else (0, f)


def _canonical_factor(ring, f):
    """Normalize a raw cyclic order indicator; None means the factor is trivial."""
    if f == FREE:
        return FREE
    if ring.kind == INTEGERS:
        f = abs(f)
        return None if f == 1 else f
    if ring.is_field:
        raise UnsupportedRingError(f"no torsion factors over {ring}")
    if f <= 0:
        return None
    return FREE if f >= ring.m else f


@lru_cache(maxsize=None)
def _factor_order_elt(ring, f):
    """Generator annihilator as a ring element (zero for free generators)."""
    if f == FREE:
        return ring.zero()
    if ring.kind == INTEGERS:
        return f
    if ring.kind == CHAIN:
        return ring.reduce(ring.p ** f)
    return tuple(1 if t == f else 0 for t in range(ring.m))


@dataclass(frozen=True)
class Module:
    """Finitely generated module in invariant-factor normal form.

    ``factors`` lists cyclic orders: 0 means a free summand; over the
    integers a value d >= 2 means Z/d, over chain kinds an exponent
    1 <= e < m means R/(pi^e).  Torsion factors come first in ascending
    divisibility order, free factors last.
    """

    ring: Ring
    factors: tuple

    def __post_init__(self):
        for f in self.factors:
            if f == FREE:
                continue
            if self.ring.is_field:
                raise UnsupportedRingError(f"torsion factor over field {self.ring}")
            if self.ring.kind == INTEGERS and f < 2:
                raise ShapeError(f"invalid integer torsion order {f}")
            if self.ring.is_chain_kind and not 1 <= f < self.ring.m:
                raise ShapeError(f"invalid chain exponent {f} for {self.ring}")
        torsion = [f for f in self.factors if f != FREE]
        frees = len(self.factors) - len(torsion)
        if list(self.factors) != torsion + [FREE] * frees or torsion != sorted(torsion):
            raise ShapeError(f"factors not in normal form: {self.factors}")
        if self.ring.kind == INTEGERS:
            for a, b in zip(torsion, torsion[1:]):
                if b % a:
                    raise ShapeError(f"integer factors lack divisibility chain: {self.factors}")

    @staticmethod
    def free(ring, rank):
        return Module(ring, (FREE,) * rank)

    @staticmethod
    def zero(ring):
        return Module(ring, ())

    @property
    def rank(self):
        return sum(1 for f in self.factors if f == FREE)

    @property
    def ngens(self):
        return len(self.factors)

    @property
    def is_zero(self):
        return not self.factors

    def order_elt(self, i):
        return _factor_order_elt(self.ring, self.factors[i])

    def reduce_entry(self, i, x):
        """Canonical representative of x modulo the i-th generator order."""
        f = self.factors[i]
        r = self.ring
        x = r.reduce(x)
        if f == FREE:
            return x
        if r.kind == INTEGERS:
            return x % f
        if r.kind == CHAIN:
            return x % r._pows[f]
        if not any(x[f:]):
            return x
        return x[:f] + (0,) * (len(x) - f)

    def is_flat(self):
        """Flat = projective = free for f.g. modules over the supported rings."""
        return all(f == FREE for f in self.factors)

    def __str__(self):
        if not self.factors:
            return "0"
        parts = []
        for f in self.factors:
            if f == FREE:
                parts.append(str(self.ring))
            elif self.ring.kind == INTEGERS:
                parts.append(f"Z/{f}")
            elif self.ring.kind == CHAIN:
                parts.append(f"Z/{self.ring.p}^{f}" if f > 1 else f"Z/{self.ring.p}")
            else:
                parts.append(f"F{self.ring.p}[e]-span/(e^{f})")
        return " + ".join(parts)


def is_flat(module):
    return module.is_flat()


is_projective = is_flat


def _order_columns(module):
    """Relation matrix of the presentation: one column per torsion generator."""
    n = module.ngens
    zero = module.ring.zero()
    cols = []
    for i, f in enumerate(module.factors):
        if f != FREE:
            col = [zero] * n
            col[i] = module.order_elt(i)
            cols.append(col)
    return tuple(tuple(col[i] for col in cols) for i in range(n))


@dataclass(frozen=True)
class Morphism:
    """Matrix morphism between presented modules.

    ``matrix[i][j]`` is the coefficient of codomain generator i in the image
    of domain generator j.  Entries are stored reduced modulo the codomain
    generator orders; construction verifies the congruence condition making
    the map well defined on cyclic generators.
    """

    domain: Module
    codomain: Module
    matrix: tuple

    def __post_init__(self):
        if self.domain.ring != self.codomain.ring:
            raise RingMismatchError(f"{self.domain.ring} vs {self.codomain.ring}")
        rows, cols = self.codomain.ngens, self.domain.ngens
        if len(self.matrix) != rows or any(len(r) != cols for r in self.matrix):
            raise ShapeError(f"matrix shape mismatch, expected {rows}x{cols}")
        ring = self.ring
        reduced = tuple(
            tuple(self.codomain.reduce_entry(i, x) for x in row)
            for i, row in enumerate(self.matrix)
        )
        object.__setattr__(self, "matrix", reduced)
        for j in range(cols):
            od = self.domain.order_elt(j)
            if ring.is_zero(od):
                continue
            for i in range(rows):
                x = reduced[i][j]
                if ring.is_zero(x):
                    continue
                if not ring.divides(self.codomain.order_elt(i), ring.mul(od, x)):
                    raise ShapeError(
                        f"entry ({i},{j}) = {x!r} not congruence-valid "
                        f"({self.domain.factors[j]} -> {self.codomain.factors[i]})"
                    )

    @property
    def ring(self):
        return self.domain.ring

    @staticmethod
    def identity(module):
        return Morphism(module, module, mat_identity(module.ring, module.ngens))

    @staticmethod
    def zero(domain, codomain):
        return Morphism(domain, codomain, mat_zero(domain.ring, codomain.ngens, domain.ngens))

    def compose(self, other):
        """self o other."""
        if other.codomain != self.domain:
            raise ShapeError("composition mismatch")
        if self.domain.ngens == 0:
            return Morphism.zero(other.domain, self.codomain)
        return Morphism(other.domain, self.codomain, mat_mul(self.ring, self.matrix, other.matrix))

    def __add__(self, other):
        if self.domain != other.domain or self.codomain != other.codomain:
            raise ShapeError("morphism sum mismatch")
        return Morphism(self.domain, self.codomain, mat_add(self.ring, self.matrix, other.matrix))

    def __sub__(self, other):
        if self.domain != other.domain or self.codomain != other.codomain:
            raise ShapeError("morphism difference mismatch")
        return Morphism(self.domain, self.codomain,
                        mat_add(self.ring, self.matrix, mat_neg(self.ring, other.matrix)))

    def scale(self, c):
        mul = self.ring.mul
        return Morphism(
            self.domain, self.codomain,
            tuple(tuple(mul(c, x) for x in row) for row in self.matrix),
        )

    @property
    def is_zero_map(self):
        z = self.ring.is_zero
        return all(z(x) for row in self.matrix for x in row)


def _presentation(ring, ngens, relations):
    """Normal form of the module <ngens | relations> with witnessing isos.

    Returns (module, to_norm, from_norm): to_norm maps raw generator
    coordinates to normal-form coordinates, from_norm is a section of it.
    """
    if ngens == 0:
        return Module.zero(ring), (), ()
    res = smith(ring, relations, left=True, row_t=True)
    d = res.d
    kept = []
    factors = []
    for i in range(ngens):
        di = d[i] if i < len(d) else ring.zero()
        if ring.is_zero(di):
            kept.append(i)
            factors.append(FREE)
            continue
        if ring.is_unit(di):
            continue
        cf = _canonical_factor(ring, abs(di) if ring.kind == INTEGERS else ring.valuation(di))
        if cf is None:
            continue
        kept.append(i)
        factors.append(cf)
    order = sorted(range(len(factors)), key=lambda k: _factor_sort_key(factors[k]))
    kept = [kept[k] for k in order]
    factors = [factors[k] for k in order]
    module = Module(ring, tuple(factors))
    u = res.row_transform
    el = res.left
    to_norm = tuple(u[i] for i in kept)
    from_norm = tuple(tuple(el[i][k] for k in kept) for i in range(ngens))
    return module, to_norm, from_norm


def normalize_orders(ring, raw_factors):
    """Normal form of a direct sum of cyclics given by raw order indicators.

    Raw indicators use the Module conventions (0 = free); trivial factors
    must already be removed by the caller.  Returns (module, to_norm,
    from_norm) like :func:`_presentation`.
    """
    n = len(raw_factors)
    canonical = [_canonical_factor(ring, f) for f in raw_factors]
    if any(c is None for c in canonical):
        raise ShapeError("normalize_orders received a trivial factor")
    try:
        module = Module(ring, tuple(canonical))
        ident = mat_identity(ring, n)
        return module, ident, ident
    except ShapeError:
        pass
    # permutation path: sort factors; over Z also require a divisibility chain
    order = sorted(range(n), key=lambda k: _factor_sort_key(canonical[k]))
    sorted_f = [canonical[k] for k in order]
    ok = True
    if ring.kind == INTEGERS:
        torsion = [f for f in sorted_f if f != FREE]
        ok = all(b % a == 0 for a, b in zip(torsion, torsion[1:]))
    if ok:
        module = Module(ring, tuple(sorted_f))
        zero, one = ring.zero(), ring.one()
        to_norm = tuple(
            tuple(one if j == order[r] else zero for j in range(n)) for r in range(n)
        )
        from_norm = tuple(
            tuple(one if order[r] == i else zero for r in range(n)) for i in range(n)
        )
        return module, to_norm, from_norm
    rel_cols = []
    for i, f in enumerate(canonical):
        if f != FREE:
            col = [ring.zero()] * n
            col[i] = _factor_order_elt(ring, f)
            rel_cols.append(col)
    rel = tuple(tuple(col[i] for col in rel_cols) for i in range(n))
    return _presentation(ring, n, rel)


@dataclass(frozen=True)
class DirectSum:
    module: Module
    injections: tuple
    projections: tuple


def direct_sum(ring, modules):
    """Biproduct with injection/projection witnesses."""
    raw = []
    blocks = []
    for m in modules:
        if m.ring != ring:
            raise RingMismatchError("direct_sum over mixed rings")
        blocks.append((len(raw), m.ngens))
        raw.extend(m.factors)
    total = len(raw)
    zero, one = ring.zero(), ring.one()
    try:
        module = Module(ring, tuple(raw))
    except ShapeError:
        module = None
    if module is not None:
        # concatenation already canonical: block unit witnesses, no transforms
        injections = []
        projections = []
        for (start, size), m in zip(blocks, modules):
            inj = tuple(
                tuple(one if r == start + c else zero for c in range(size))
                for r in range(total)
            )
            injections.append(Morphism(m, module, inj))
            proj = tuple(
                tuple(one if start + r == c else zero for c in range(total))
                for r in range(size)
            )
            projections.append(Morphism(module, m, proj))
        return DirectSum(module, tuple(injections), tuple(projections))
    module, to_n, from_n = normalize_orders(ring, raw)
    injections = []
    projections = []
    for (start, size), m in zip(blocks, modules):
        inj = tuple(tuple(row[start:start + size]) for row in to_n)
        injections.append(Morphism(m, module, inj))
        proj = tuple(from_n[start + i] for i in range(size))
        projections.append(Morphism(module, m, proj))
    return DirectSum(module, tuple(injections), tuple(projections))


@dataclass(frozen=True)
class Analysis:
    kernel: Module
    kernel_inclusion: Morphism
    image: Module
    image_inclusion: Morphism
    cokernel: Module
    cokernel_projection: Morphism
    injective: bool
    surjective: bool
    split_mono: bool

    @property
    def is_iso(self):
        return self.injective and self.surjective


def _kernel_columns(ring, w, res):
    """Generators of ker(W) for W between free columns, from a smith run."""
    cols = len(w[0]) if w else 0
    d, v = res.d, res.col_transform
    gens = []
    for i in range(cols):
        di = d[i] if i < len(d) else ring.zero()
        if ring.is_zero(di):
            gens.append(tuple(v[r][i] for r in range(cols)))
        elif ring.is_chain_kind:
            e = ring.valuation(di)
            if 0 < e < ring.m:
                ann = _factor_order_elt(ring, ring.m - e) if ring.m - e < ring.m else ring.zero()
                col = tuple(ring.mul(v[r][i], ann) for r in range(cols))
                if any(not ring.is_zero(x) for x in col):
                    gens.append(col)
    return gens


def _coker_from_smith(ring, codomain, res):
    d = res.d
    t = codomain.ngens
    kept, factors = [], []
    for i in range(t):
        di = d[i] if i < len(d) else ring.zero()
        if ring.is_zero(di):
            kept.append(i)
            factors.append(FREE)
            continue
        if ring.is_unit(di):
            continue
        cf = _canonical_factor(ring, abs(di) if ring.kind == INTEGERS else ring.valuation(di))
        if cf is None:
            continue
        kept.append(i)
        factors.append(cf)
    order = sorted(range(len(factors)), key=lambda k: _factor_sort_key(factors[k]))
    kept = [kept[k] for k in order]
    factors = [factors[k] for k in order]
    coker = Module(ring, tuple(factors))
    u = res.row_transform
    proj = Morphism(codomain, coker, tuple(u[i] for i in kept))
    return coker, proj


def _kernel_generator_columns(ring, f):
    """Columns over R^s generating {x : f(x) = 0 in the presented codomain}."""
    s, t = f.domain.ngens, f.codomain.ngens
    if t == 0:
        return [tuple(ring.one() if r == i else ring.zero() for r in range(s))
                for i in range(s)]
    w = mat_hstack(f.matrix, _order_columns(f.codomain))
    res = smith(ring, w, col_t=True)
    cols = [col[:s] for col in _kernel_columns(ring, w, res)]
    return [c for c in cols if any(not ring.is_zero(x) for x in c)]


def kernel_data(f):
    """(kernel module, inclusion) without cokernel bookkeeping."""
    ring = f.ring
    m = f.domain
    s = m.ngens
    k0_cols = _kernel_generator_columns(ring, f)
    r = len(k0_cols)
    k0 = tuple(tuple(col[i] for col in k0_cols) for i in range(s))
    if r:
        wk = mat_hstack(k0, _order_columns(m))
        res_k = smith(ring, wk, col_t=True)
        rel_k_cols = [col[:r] for col in _kernel_columns(ring, wk, res_k)]
        rel_k = tuple(tuple(col[i] for col in rel_k_cols) for i in range(r))
    else:
        rel_k = ()
    ker, _, from_k = _presentation(ring, r, rel_k)
    incl = Morphism(ker, m, mat_mul(ring, k0, from_k) if r else mat_zero(ring, s, 0))
    return ker, incl, k0


def cokernel_data(f):
    """(cokernel module, projection) without kernel bookkeeping."""
    ring = f.ring
    n = f.codomain
    if n.ngens == 0:
        coker = Module.zero(ring)
        return coker, Morphism.zero(n, coker)
    w = mat_hstack(f.matrix, _order_columns(n))
    res = smith(ring, w, row_t=True)
    return _coker_from_smith(ring, n, res)


def analyze(f):
    """Kernel, image and cokernel of a morphism, with witnessing maps."""
    ring = f.ring
    m, n = f.domain, f.codomain
    s, t = m.ngens, n.ngens
    coker, coker_proj = cokernel_data(f)
    ker, incl, k0 = kernel_data(f)

    # image: generated by the columns of f, relations = the kernel columns
    rel_im = mat_identity(ring, s) if t == 0 else k0
    img, _, from_i = _presentation(ring, s, rel_im)
    img_incl = Morphism(img, n, mat_mul(ring, f.matrix, from_i) if s and t
                        else mat_zero(ring, t, img.ngens))

    injective = ker.is_zero
    surjective = coker.is_zero
    split = injective and coker.is_flat()
    return Analysis(ker, incl, img, img_incl, coker, coker_proj, injective, surjective, split)


def cokernel_module(f):
    """Invariant factors of coker(f) without transform bookkeeping."""
    ring = f.ring
    n = f.codomain
    if n.ngens == 0:
        return Module.zero(ring)
    w = mat_hstack(f.matrix, _order_columns(n))
    d = smith(ring, w).d
    factors = []
    for i in range(n.ngens):
        di = d[i] if i < len(d) else ring.zero()
        if ring.is_zero(di):
            factors.append(FREE)
            continue
        if ring.is_unit(di):
            continue
        cf = _canonical_factor(ring, abs(di) if ring.kind == INTEGERS else ring.valuation(di))
        if cf is not None:
            factors.append(cf)
    torsion = sorted(f_ for f_ in factors if f_ != FREE)
    return Module(ring, tuple(torsion) + (FREE,) * (len(factors) - len(torsion)))


def is_surjective(f):
    return cokernel_module(f).is_zero


# ---------------------------------------------------------------------------
# tensor products
# ---------------------------------------------------------------------------


def _tensor_factor(ring, a, b):
    """Order of the tensor of two cyclic factors; None if it is trivial."""
    if ring.is_field:
        return FREE
    if ring.kind == INTEGERS:
        if a == FREE and b == FREE:
            return FREE
        if a == FREE:
            return b
        if b == FREE:
            return a
        g = gcd(a, b)
        return None if g == 1 else g
    ea = a if a != FREE else ring.m
    eb = b if b != FREE else ring.m
    e = min(ea, eb)
    return FREE if e >= ring.m else e


@lru_cache(maxsize=None)
def _tensor_layout(m, n):
    """Raw generator pairs with nontrivial tensor order, plus normalization."""
    ring = m.ring
    pairs = []
    raw = []
    for i, a in enumerate(m.factors):
        for j, b in enumerate(n.factors):
            t = _tensor_factor(ring, a, b)
            if t is not None:
                pairs.append((i, j))
                raw.append(t)
    module, to_n, from_n = normalize_orders(ring, raw)
    return pairs, module, to_n, from_n


def tensor(m, n):
    """M (x) N in normal form (the valuation-min / gcd rule on cyclics)."""
    if m.ring != n.ring:
        raise RingMismatchError(f"{m.ring} vs {n.ring}")
    return _tensor_layout(m, n)[1]


def tensor_morphisms(f, g):
    """f (x) g with respect to the canonical tensor normal forms."""
    if f.ring != g.ring:
        raise RingMismatchError(f"{f.ring} vs {g.ring}")
    ring = f.ring
    dpairs, dom, _, dfrom = _tensor_layout(f.domain, g.domain)
    cpairs, cod, cto, _ = _tensor_layout(f.codomain, g.codomain)
    if not dpairs or not cpairs:
        return Morphism.zero(dom, cod)
    raw = tuple(
        tuple(ring.mul(f.matrix[ic][idx], g.matrix[jc][jdx]) for (idx, jdx) in dpairs)
        for (ic, jc) in cpairs
    )
    mat = mat_mul(ring, mat_mul(ring, cto, raw), dfrom)
    return Morphism(dom, cod, mat)


# ---------------------------------------------------------------------------
# ring extensions and base change
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RingExtension:
    """A supported surjective ring map theta: R -> k with nilpotent kernel."""

    source: Ring
    target: Ring
    kernel_exponent: int = field(init=False)
    small: bool = field(init=False)

    def __post_init__(self):
        r, k = self.source, self.target
        ok = False
        if r.kind == CHAIN and k.kind == CHAIN and r.p == k.p and r.m > k.m:
            ok = True
        elif r.kind == DUAL_CHAIN and k.kind == DUAL_CHAIN and r.p == k.p and r.m > k.m:
            ok = True
        elif r.kind in (CHAIN, DUAL_CHAIN) and k.kind == PRIME_FIELD and r.p == k.p:
            ok = True
        if not ok:
            raise UnsupportedRingError(f"no canonical surjection {r} -> {k}")
        mt = k.m if k.is_chain_kind else 1
        object.__setattr__(self, "kernel_exponent", -(-r.m // mt))
        object.__setattr__(self, "small", self.kernel_exponent <= 2)

    @property
    def target_nilpotency(self):
        return self.target.m if self.target.is_chain_kind else 1

    def reduce_element(self, x):
        r, k = self.source, self.target
        if r.kind == CHAIN:
            return k.reduce(x)
        if k.kind == PRIME_FIELD:
            return x[0] % k.p
        return k.reduce(x[: k.m])

    def lift_element(self, x):
        """Canonical-representative lift k -> R of a target element."""
        r, k = self.source, self.target
        if r.kind == CHAIN:
            return r.reduce(x)
        if k.kind == PRIME_FIELD:
            return r.reduce((x,))
        return r.reduce(tuple(x))

    def base_change_factor(self, f):
        if f == FREE:
            return FREE
        e = min(f, self.target_nilpotency)
        return FREE if e >= self.target_nilpotency else e

    def base_change(self, module):
        if module.ring != self.source:
            raise RingMismatchError(f"module over {module.ring}, extension from {self.source}")
        return Module(self.target, tuple(self.base_change_factor(f) for f in module.factors))

    def base_change_morphism(self, f):
        dom = self.base_change(f.domain)
        cod = self.base_change(f.codomain)
        mat = tuple(tuple(self.reduce_element(x) for x in row) for row in f.matrix)
        return Morphism(dom, cod, mat)

    def kernel_as_target_module(self):
        """I = Ker(theta) as a k-module (requires I^2 = 0)."""
        if not self.small:
            raise UnsupportedRingError("kernel is a target module only for small extensions")
        e = self.source.m - self.target_nilpotency
        if e == 0:
            return Module.zero(self.target)
        f = FREE if e >= self.target_nilpotency else e
        return Module(self.target, (f,))

    def view_module_over_source(self, module):
        """A k-module regarded as an R-module along theta.

        Free k-summands become R/(pi^mt) and k-torsion exponents are kept,
        which preserves the generator order (all exponents stay <= mt).
        """
        if module.ring != self.target:
            raise RingMismatchError("view_module_over_source expects a target module")
        mt = self.target_nilpotency
        factors = tuple(mt if f == FREE else f for f in module.factors)
        return Module(self.source, factors)

    def view_morphism_over_source(self, f):
        dom = self.view_module_over_source(f.domain)
        cod = self.view_module_over_source(f.codomain)
        mat = tuple(tuple(self.lift_element(x) for x in row) for row in f.matrix)
        return Morphism(dom, cod, mat)

    def small_factorization(self):
        """theta as a chain of small extensions, outermost source first."""
        if self.small:
            return (self,)
        r, k = self.source, self.target
        steps = []
        cur = r.m
        lower = k.m if k.is_chain_kind else 2
        while cur > lower:
            steps.append(RingExtension(Ring(r.kind, p=r.p, m=cur), Ring(r.kind, p=r.p, m=cur - 1)))
            cur -= 1
        if not k.is_chain_kind:
            steps.append(RingExtension(Ring(r.kind, p=r.p, m=2), k))
        return tuple(steps)


def base_change(extension, module):
    return extension.base_change(module)


# ---------------------------------------------------------------------------
# finite limits and colimits of module diagrams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModuleDiagram:
    """Finite diagram: nodes and arrows (src_index, tgt_index, Morphism)."""

    ring: Ring
    nodes: tuple
    arrows: tuple

    def __post_init__(self):
        for src, tgt, f in self.arrows:
            if f.domain != self.nodes[src] or f.codomain != self.nodes[tgt]:
                raise ShapeError(f"arrow {src}->{tgt} endpoints inconsistent with diagram")


@dataclass(frozen=True)
class LimitResult:
    module: Module
    cone: tuple            # projections limit -> node_i
    inclusion: Morphism    # into the direct sum of the nodes
    nodes_sum: DirectSum


@dataclass(frozen=True)
class ColimitResult:
    module: Module
    cocone: tuple          # injections node_i -> colimit
    projection: Morphism   # from the direct sum of the nodes
    nodes_sum: DirectSum


def _accumulate_block(ring, target, left, block):
    """target += left @ block, in place, exploiting sparsity of ``left``."""
    is_zero, mul, add = ring.is_zero, ring.mul, ring.add
    cols = len(block[0]) if block else 0
    for r, lrow in enumerate(left):
        trow = target[r]
        for k, x in enumerate(lrow):
            if is_zero(x):
                continue
            brow = block[k]
            for c in range(cols):
                y = brow[c]
                if not is_zero(y):
                    trow[c] = add(trow[c], mul(x, y))


def finite_limit(diagram):
    """Limit as the kernel of the difference map prod(nodes) -> prod(arrows)."""
    ring = diagram.ring
    nodes_sum = direct_sum(ring, diagram.nodes)
    arr_sum = direct_sum(ring, tuple(diagram.nodes[tgt] for _, tgt, _ in diagram.arrows))
    rows, cols = arr_sum.module.ngens, nodes_sum.module.ngens
    delta_rows = [[ring.zero()] * cols for _ in range(rows)]
    for a, (src, tgt, f) in enumerate(diagram.arrows):
        leg = f.compose(nodes_sum.projections[src]) - nodes_sum.projections[tgt]
        _accumulate_block(ring, delta_rows, arr_sum.injections[a].matrix, leg.matrix)
    delta = Morphism(nodes_sum.module, arr_sum.module,
                     tuple(tuple(r) for r in delta_rows))
    kernel, incl, _ = kernel_data(delta)
    cone = tuple(p.compose(incl) for p in nodes_sum.projections)
    return LimitResult(kernel, cone, incl, nodes_sum)


def finite_colimit(diagram):
    """Colimit as the cokernel of the difference map prod(arrows) -> prod(nodes)."""
    ring = diagram.ring
    nodes_sum = direct_sum(ring, diagram.nodes)
    arr_sum = direct_sum(ring, tuple(diagram.nodes[src] for src, _, _ in diagram.arrows))
    rows, cols = nodes_sum.module.ngens, arr_sum.module.ngens
    delta_rows = [[ring.zero()] * cols for _ in range(rows)]
    for a, (src, tgt, f) in enumerate(diagram.arrows):
        leg = nodes_sum.injections[tgt].compose(f) - nodes_sum.injections[src]
        _accumulate_block(ring, delta_rows, leg.matrix, arr_sum.projections[a].matrix)
    delta = Morphism(arr_sum.module, nodes_sum.module,
                     tuple(tuple(r) for r in delta_rows))
    coker, proj = cokernel_data(delta)
    cocone = tuple(proj.compose(inj) for inj in nodes_sum.injections)
    return ColimitResult(coker, cocone, proj, nodes_sum)


def factor_through_mono(inclusion, given):
    """u with inclusion o u = given (exact, unique when inclusion is mono)."""
    ring = inclusion.ring
    if given.codomain != inclusion.codomain:
        raise ShapeError("factor_through_mono: codomain mismatch")
    amat = mat_hstack(inclusion.matrix, _order_columns(inclusion.codomain))
    x = solve_linear(ring, amat, given.matrix)
    if x is None:
        raise ShapeError("map does not factor through the inclusion")
    u = Morphism(given.domain, inclusion.domain, tuple(x[: inclusion.domain.ngens]))
    if inclusion.compose(u).matrix != given.matrix:
        raise ShapeError("mono factorization verification failed")
    return u


def factor_through_epi(projection, given):
    """u with u o projection = given (exact, unique when projection is epi)."""
    ring = projection.ring
    if given.domain != projection.domain:
        raise ShapeError("factor_through_epi: domain mismatch")
    codomain = given.codomain
    mid = projection.codomain
    nds = projection.domain.ngens
    ncol = mid.ngens
    qmat = projection.matrix
    q_t = tuple(tuple(qmat[r][i] for r in range(ncol)) for i in range(nds))
    rows_of_u = []
    for jrow in range(codomain.ngens):
        b_col = tuple((given.matrix[jrow][i],) for i in range(nds))
        factor = codomain.factors[jrow]
        if factor == FREE:
            amat = q_t
        else:
            o = codomain.order_elt(jrow)
            extra = tuple(
                tuple(o if i == r else ring.zero() for r in range(nds))
                for i in range(nds)
            )
            amat = mat_hstack(q_t, extra)
        x = solve_linear(ring, amat, b_col)
        if x is None:
            raise ShapeError("map does not factor through the projection")
        rows_of_u.append(tuple(x[i][0] for i in range(ncol)))
    u = Morphism(mid, codomain, tuple(rows_of_u))
    if u.compose(projection).matrix != given.matrix:
        raise ShapeError("epi factorization verification failed")
    return u


def _stack_legs_into(ring, ds, legs, domain):
    rows = ds.module.ngens
    cols = domain.ngens
    out = [[ring.zero()] * cols for _ in range(rows)]
    for inj, leg in zip(ds.injections, legs):
        _accumulate_block(ring, out, inj.matrix, leg.matrix)
    return Morphism(domain, ds.module, tuple(tuple(r) for r in out))


def factor_through_limit(limit, legs, domain):
    """The unique u: domain -> limit with cone_i o u = legs[i]."""
    ds = limit.nodes_sum
    stacked = _stack_legs_into(limit.module.ring, ds, legs, domain)
    return factor_through_mono(limit.inclusion, stacked)


def factor_through_colimit(colimit, legs, codomain):
    """The unique u: colimit -> codomain with u o cocone_i = legs[i]."""
    ring = colimit.module.ring
    ds = colimit.nodes_sum
    rows = codomain.ngens
    cols = ds.module.ngens
    out = [[ring.zero()] * cols for _ in range(rows)]
    for proj, leg in zip(ds.projections, legs):
        _accumulate_block(ring, out, leg.matrix, proj.matrix)
    stacked = Morphism(ds.module, codomain, tuple(tuple(r) for r in out))
    u = factor_through_epi(colimit.projection, stacked)
    for coc, leg in zip(colimit.cocone, legs):
        if u.compose(coc).matrix != leg.matrix:
            raise ShapeError("colimit factorization verification failed")
    return u


def image_equals_kernel(incl, proj):
    """Exactness of  A --incl--> B --proj--> C  at B, decided constructively."""
    if not proj.compose(incl).is_zero_map:
        return False
    ker_incl = analyze(proj).kernel_inclusion
    try:
        u = factor_through_mono(ker_incl, incl)
    except ShapeError:
        return False
    return analyze(u).surjective
