"""Truncated arithmetic in the ring of integers of a nonarchimedean local field.

Three families are supported:

* ``F_q[[t]]`` (finite characteristic, ``e = 1``),
* ``Z_p`` and its unramified extensions (``e = 1``),
* general finite extensions ``K/Q_p`` with inertia degree ``f`` and
  ramification index ``e``.

Elements are stored by their coordinates in the basis
``{t1**k1 * t2**k2 : k1 < f, k2 < e}``.  Each coordinate is a Python int
whose base-``p`` digits are the digit sequence of that coordinate, truncated
to ``N`` digits.  In characteristic zero a coordinate is an integer modulo
``p**N``; in characteristic ``p`` it is a packed digit string with no carries
(digit ``j`` of coordinate ``k1`` is the ``k1``-th ``F_p`` component of the
coefficient of ``t**j``).

The absolute value is normalized so that the uniformizer has ``|pi| = q**-1``.
Digit ``j`` of coordinate ``(k1, k2)`` sits at uniformizer position
``j*e + k2``, so the carried uniformizer precision is ``cap = e*N``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import (
    FieldSpecError,
    HenselError,
    PrecisionExhausted,
    SpecMismatchError,
)

ZERO_CHAR = "zero"
FINITE_CHAR = "finite"


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def to_digits(value: int, p: int, length: int) -> list[int]:
    """Base-``p`` digits of ``value``, low to high, padded to ``length``."""
    out = []
    for _ in range(length):
        value, r = divmod(value, p)
        out.append(r)
    return out


def from_digits(digits: Iterable[int], p: int) -> int:
    value = 0
    for d in reversed(list(digits)):
        value = value * p + d
    return value


def vp(value: int, p: int, limit: int) -> int:
    """p-adic valuation of ``value`` capped at ``limit`` (0 maps to ``limit``)."""
    if value == 0:
        return limit
    v = 0
    while value % p == 0 and v < limit:
        value //= p
        v += 1
    return v


# --- polynomials over F_p (coefficient lists, low degree first) -----------


def _fp_trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _fp_mod(a: Sequence[int], m: Sequence[int], p: int) -> list[int]:
    a = _fp_trim([c % p for c in a])
    m = _fp_trim([c % p for c in m])
    inv_lead = pow(m[-1], -1, p)
    while len(a) >= len(m):
        coef = a[-1] * inv_lead % p
        shift = len(a) - len(m)
        for i, c in enumerate(m):
            a[shift + i] = (a[shift + i] - coef * c) % p
        _fp_trim(a)
    return a


def fp_poly_is_irreducible(poly: Sequence[int], p: int) -> bool:
    """Trial division by every monic polynomial of degree <= deg/2.

    Adequate for the desk-scale residue fields used here.
    """
    poly = _fp_trim([c % p for c in poly])
    deg = len(poly) - 1
    if deg < 1:
        return False
    for d in range(1, deg // 2 + 1):
        for low in itertools.product(range(p), repeat=d):
            if not _fp_mod(poly, list(low) + [1], p):
                return False
    return True


# --- field specification ---------------------------------------------------


@dataclass(frozen=True)
class BasisTable:
    """Products of basis monomials, ``products[a][b]`` the coordinate vector
    of ``basis[a] * basis[b]`` (index ``k1*e + k2``)."""

    products: tuple
    t1: tuple  # coordinates of t1 (Hensel-lifted generator) in the basis
    t2: tuple  # coordinates of t2 (uniformizer)


@dataclass(frozen=True)
class FieldSpec:
    characteristic: str
    p: int
    f: int
    e: int
    residue_poly: tuple
    eisenstein_coeffs: tuple
    N: int
    table: BasisTable | None = field(default=None, compare=False, repr=False)

    @property
    def q(self) -> int:
        return self.p**self.f

    @property
    def dim(self) -> int:
        return self.f * self.e

    @property
    def cap(self) -> int:
        """Uniformizer precision: every valuation at or above this is unknown."""
        return self.e * self.N

    @property
    def modulus(self) -> int:
        return self.p**self.N

    @property
    def is_zero_char(self) -> bool:
        return self.characteristic == ZERO_CHAR

    @property
    def is_Zp(self) -> bool:
        return self.is_zero_char and self.f == 1 and self.e == 1

    def name(self) -> str:
        if not self.is_zero_char:
            return f"F_{self.q}[[t]]/t^{self.N}"
        if self.dim == 1:
            return f"Z_{self.p}/p^{self.N}"
        return f"O_K(p={self.p},f={self.f},e={self.e})/p^{self.N}"

    # element constructors
    def zero(self) -> "Element":
        return Element(self, (0,) * self.dim)

    def one(self) -> "Element":
        return self.from_int(1)

    def from_int(self, n: int) -> "Element":
        coords = [0] * self.dim
        if self.is_zero_char:
            coords[0] = n % self.modulus
        else:
            coords[0] = n % self.p
        return Element(self, tuple(coords))

    def from_coords(self, coords: Sequence[int]) -> "Element":
        if len(coords) != self.dim:
            raise ValueError(f"expected {self.dim} coordinates, got {len(coords)}")
        if self.is_zero_char:
            return Element(self, tuple(c % self.modulus for c in coords))
        packed = []
        for c in coords:
            if c < 0:
                raise ValueError("characteristic-p coordinates are digit strings, not signed")
            packed.append(from_digits(to_digits(c, self.p, self.N), self.p))
        return Element(self, tuple(packed))

    def from_digits(self, digits: Sequence[Sequence[Sequence[int]]]) -> "Element":
        """Build from a digit tensor indexed ``[k1][k2][j]``."""
        coords = []
        for k1 in range(self.f):
            for k2 in range(self.e):
                ds = list(digits[k1][k2])
                if any(not 0 <= d < self.p for d in ds):
                    raise ValueError("digit out of range")
                coords.append(from_digits(ds[: self.N], self.p))
        return Element(self, tuple(coords))

    def uniformizer_power(self, k: int) -> "Element":
        """pi**k as an element (zero when ``k >= cap``)."""
        if k >= self.cap:
            return self.zero()
        j, k2 = divmod(k, self.e)
        coords = [0] * self.dim
        coords[k2] = self.p**j
        return Element(self, tuple(coords))

    def basis_element(self, k1: int, k2: int) -> "Element":
        coords = [0] * self.dim
        coords[k1 * self.e + k2] = 1
        return Element(self, tuple(coords))

    def position_count(self, lam: int) -> list[int]:
        """Per-coordinate number of low digits kept by truncation mod pi**lam."""
        e = self.e
        out = []
        for _k1 in range(self.f):
            for k2 in range(e):
                out.append(max(0, -(-(lam - k2) // e)))
        return out


def _validate_spec_inputs(characteristic, p, f, e, residue_poly, eisenstein_coeffs, N):
    if characteristic not in (ZERO_CHAR, FINITE_CHAR):
        raise FieldSpecError(f"characteristic must be 'zero' or 'finite', got {characteristic!r}")
    if not is_prime(p):
        raise FieldSpecError(f"p = {p} is not prime")
    if f < 1 or e < 1:
        raise FieldSpecError("f and e must be >= 1")
    if N < 1:
        raise FieldSpecError("precision N must be >= 1")
    if characteristic == FINITE_CHAR and e != 1:
        raise FieldSpecError("finite characteristic requires e = 1")
    rp = [c % p for c in residue_poly]
    _fp_trim(rp)
    if len(rp) - 1 != f:
        raise FieldSpecError(f"residue_poly must have degree f = {f}")
    if rp[-1] != 1:
        raise FieldSpecError("residue_poly must be monic")
    if not fp_poly_is_irreducible(rp, p):
        raise FieldSpecError(f"residue_poly {tuple(residue_poly)} is reducible over F_{p}")
    if rp[0] == 0:
        raise FieldSpecError("residue_poly must not vanish at 0")
    if e > 1:
        if len(eisenstein_coeffs) != e:
            raise FieldSpecError(f"need e = {e} Eisenstein coefficients, got {len(eisenstein_coeffs)}")
        for i, a in enumerate(eisenstein_coeffs):
            if len(a) != f:
                raise FieldSpecError("each Eisenstein coefficient needs f coordinates")
            if any(c % p for c in a):
                raise FieldSpecError(f"Eisenstein coefficient a_{i} is not divisible by p")
        a0 = eisenstein_coeffs[0]
        if all(c % (p * p) == 0 for c in a0):
            raise FieldSpecError("Eisenstein constant term must have valuation exactly 1")
    elif eisenstein_coeffs:
        raise FieldSpecError("eisenstein_coeffs only allowed when e > 1")
    return tuple(rp)


def make_field_spec(
    characteristic: str,
    p: int,
    f: int = 1,
    e: int = 1,
    residue_poly: Sequence[int] | None = None,
    eisenstein_coeffs: Sequence[Sequence[int]] = (),
    N: int = 8,
) -> FieldSpec:
    """Validate a field description and build its multiplication table.

    ``residue_poly`` defaults to ``x - 1`` when ``f == 1``.  In characteristic
    zero ``t1`` is the Hensel lift of ``x**(q-1) - 1`` from a root of the
    residue polynomial, and ``t2`` is certified as a root of the Eisenstein
    polynomial by the same Hensel routine.
    """
    if residue_poly is None:
        if f != 1:
            raise FieldSpecError("residue_poly is required when f > 1")
        residue_poly = (-1, 1)
    eis = tuple(tuple(int(c) for c in a) for a in eisenstein_coeffs)
    rp = _validate_spec_inputs(characteristic, p, f, e, residue_poly, eis, N)
    bare = FieldSpec(characteristic, p, f, e, rp, eis, N)
    if characteristic == FINITE_CHAR:
        table = _finite_char_table(bare)
    else:
        table = _zero_char_table(bare)
    return FieldSpec(characteristic, p, f, e, rp, eis, N, table)


def _finite_char_table(spec: FieldSpec) -> BasisTable:
    one = (1,)
    return BasisTable(products=((one,),), t1=(1,) + (0,) * (spec.dim - 1), t2=(1,))


def _poly_mulmod(a, b, g, M):
    """(a*b) mod (g, M) for coefficient lists; g monic of degree len(a)."""
    f = len(g) - 1
    prod = [0] * (2 * f - 1 if f else 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                prod[i + j] += x * y
    for k in range(len(prod) - 1, f - 1, -1):
        c = prod[k]
        if c:
            for i in range(f + 1):
                prod[k - f + i] -= c * g[i]
    return [c % M for c in prod[:f]]


def _solve_mod(matrix, rhs, p, M):
    """Solve matrix @ x = rhs mod M = p**N where matrix is invertible mod p."""
    n = len(matrix)
    a = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] % p), None)
        if piv is None:
            raise FieldSpecError("basis change matrix is singular mod p")
        a[col], a[piv] = a[piv], a[col]
        inv = pow(a[col][col], -1, M)
        a[col] = [v * inv % M for v in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                fac = a[r][col]
                a[r] = [(v - fac * w) % M for v, w in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


def _unramified_minpoly(spec: FieldSpec):
    """Monic minimal polynomial (mod p**N) of the Teichmuller generator t1."""
    p, f, M = spec.p, spec.f, spec.modulus
    if f == 1:
        # t1 is the Teichmuller lift of the residue root; basis is {1}
        root = (-spec.residue_poly[0]) % p
        prov = FieldSpec(ZERO_CHAR, p, 1, 1, spec.residue_poly, (), spec.N, BasisTable(products=(((1,),),), t1=(1,), t2=(1,)))
        x0 = prov.from_int(root)
        b = [prov.from_int(-1)] + [prov.zero()] * (spec.q - 2) + [prov.one()]
        t1 = hensel_lift(b, x0)
        return [(-t1.coords[0]) % M, 1], t1.coords[0]
    # provisional ring (Z/p^N)[x]/(g0), g0 the naive lift of the residue polynomial
    g0 = list(spec.residue_poly)
    prov_products = []
    for a in range(f):
        row = []
        for b in range(f):
            ea = [1 if i == a else 0 for i in range(f)]
            eb = [1 if i == b else 0 for i in range(f)]
            row.append(tuple(_poly_mulmod(ea, eb, g0, M)))
        prov_products.append(tuple(row))
    xcoords = tuple(1 if i == 1 else 0 for i in range(f))
    prov = FieldSpec(
        ZERO_CHAR, p, f, 1, spec.residue_poly, (), spec.N,
        BasisTable(products=tuple(prov_products), t1=xcoords, t2=(1,) + (0,) * (f - 1)),
    )
    x0 = Element(prov, xcoords)
    b = [prov.from_int(-1)] + [prov.zero()] * (spec.q - 2) + [prov.one()]
    t1 = hensel_lift(b, x0)
    powers = [prov.one()]
    for _ in range(f):
        powers.append(powers[-1] * t1)
    matrix = [[powers[k].coords[i] for k in range(f)] for i in range(f)]
    c = _solve_mod(matrix, list(powers[f].coords), p, M)
    # t1**f = sum c_k t1**k  ->  g(y) = y**f - sum c_k y**k
    return [(-ck) % M for ck in c] + [1], None


def _zero_char_table(spec: FieldSpec) -> BasisTable:
    p, f, e, M = spec.p, spec.f, spec.e, spec.modulus
    g, _ = _unramified_minpoly(spec)

    def lmul(a, b):
        return _poly_mulmod(a, b, g, M)

    # t1**k for k <= 2f-2 as L-vectors
    t1pow = [[1 if i == 0 else 0 for i in range(f)]]
    tvec = [1 if i == 1 else 0 for i in range(f)] if f > 1 else [t1pow[0][0]]
    for _ in range(2 * f - 2):
        t1pow.append(lmul(t1pow[-1], tvec) if f > 1 else [1])
    # t2**m for m <= 2e-2 as length-e vectors of L-vectors
    eis = [[c % M for c in a] for a in spec.eisenstein_coeffs]
    zero_l = [0] * f
    one_l = [1] + [0] * (f - 1)
    t2pow = [[one_l if i == 0 else zero_l for i in range(e)]]
    for _ in range(2 * e - 2):
        prev = t2pow[-1]
        shifted = [zero_l] + prev[:-1]
        top = prev[-1]
        if e > 1 and any(top):
            # t2**e = -(a_0 + a_1 t2 + ... + a_{e-1} t2**(e-1))
            shifted = [
                [(s - u) % M for s, u in zip(shifted[i], lmul(top, eis[i]))]
                for i in range(e)
            ]
        t2pow.append(shifted)
    products = []
    for a in range(f * e):
        a1, a2 = divmod(a, e)
        row = []
        for b in range(f * e):
            b1, b2 = divmod(b, e)
            lpart = t1pow[a1 + b1]
            vec = [0] * (f * e)
            for k2 in range(e):
                coeff = lmul(lpart, t2pow[a2 + b2][k2])
                for k1 in range(f):
                    vec[k1 * e + k2] = coeff[k1]
            row.append(tuple(vec))
        products.append(tuple(row))
    table = BasisTable(
        products=tuple(products),
        t1=tuple(1 if i == (e if f > 1 else 0) else 0 for i in range(f * e)),
        t2=tuple(1 if i == (1 if e > 1 else 0) else 0 for i in range(f * e)),
    )
    spec_t = FieldSpec(spec.characteristic, p, f, e, spec.residue_poly, spec.eisenstein_coeffs, spec.N, table)
    if e > 1:
        # certify t2 as the Hensel root of the Eisenstein polynomial
        s = Element(spec_t, table.t2)
        poly = [Element(spec_t, _lift_l(a, e)) for a in spec.eisenstein_coeffs] + [spec_t.one()]
        try:
            root = hensel_lift(poly, s)
        except HenselError as exc:
            raise FieldSpecError(f"precision N = {spec.N} too small to certify the Eisenstein root: {exc}") from exc
        if root != s:
            raise FieldSpecError("Eisenstein root did not lift to the basis uniformizer")
    return table


def _lift_l(a, e):
    """L-coordinates (length f) embedded as K-coordinates (k2 = 0)."""
    vec = []
    for c in a:
        vec.append(c)
        vec.extend([0] * (e - 1))
    return tuple(vec)


# --- elements --------------------------------------------------------------


class Element:
    """An element of R / pi**cap, immutable and hashable."""

    __slots__ = ("spec", "coords")

    def __init__(self, spec: FieldSpec, coords: tuple):
        self.spec = spec
        self.coords = coords

    def _other(self, other) -> "Element":
        if isinstance(other, Element):
            if other.spec != self.spec:
                raise SpecMismatchError(f"{self.spec.name()} vs {other.spec.name()}")
            return other
        if isinstance(other, int):
            return self.spec.from_int(other)
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.spec.from_int(other)
        if not isinstance(other, Element):
            return NotImplemented
        return self.spec == other.spec and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def __repr__(self):
        return f"Element({self.spec.name()}, {self.coords})"

    def __bool__(self):
        return any(self.coords)

    # arithmetic
    def __add__(self, other):
        other = self._other(other)
        if other is NotImplemented:
            return other
        return add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return neg(self)

    def __sub__(self, other):
        other = self._other(other)
        if other is NotImplemented:
            return other
        return sub(self, other)

    def __rsub__(self, other):
        other = self._other(other)
        if other is NotImplemented:
            return other
        return sub(other, self)

    def __mul__(self, other):
        other = self._other(other)
        if other is NotImplemented:
            return other
        return mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not elements of R")
        result = self.spec.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # digit views
    @property
    def digits(self) -> list:
        """Digit tensor ``[k1][k2][j]`` (base-p digits, low to high)."""
        s = self.spec
        return [
            [to_digits(self.coords[k1 * s.e + k2], s.p, s.N) for k2 in range(s.e)]
            for k1 in range(s.f)
        ]

    def key(self) -> tuple:
        """Row-major (k1, k2, j) digit tuple; lexicographic order of elements."""
        s = self.spec
        out = []
        for c in self.coords:
            out.extend(to_digits(c, s.p, s.N))
        return tuple(out)

    def valuation(self):
        return valuation(self)

    def truncate(self, lam: int) -> "Element":
        return truncate(self, lam)

    def inverse(self) -> "Element":
        return inverse(self)

    def to_int(self) -> int:
        """Integer value of a ``Z_p`` / constant-coordinate element."""
        return self.coords[0]


def _check(x: Element, y: Element):
    if x.spec != y.spec:
        raise SpecMismatchError(f"{x.spec.name()} vs {y.spec.name()}")


def _fp_digit_add(a: int, b: int, p: int, n: int, sign: int = 1) -> int:
    if p == 2:
        return a ^ b
    out = 0
    scale = 1
    for _ in range(n):
        if not a and not b:
            break
        a, da = divmod(a, p)
        b, db = divmod(b, p)
        out += ((da + sign * db) % p) * scale
        scale *= p
    return out


def add(x: Element, y: Element) -> Element:
    _check(x, y)
    s = x.spec
    if s.is_zero_char:
        M = s.modulus
        return Element(s, tuple((a + b) % M for a, b in zip(x.coords, y.coords)))
    return Element(s, tuple(_fp_digit_add(a, b, s.p, s.N) for a, b in zip(x.coords, y.coords)))


def neg(x: Element) -> Element:
    s = x.spec
    if s.is_zero_char:
        M = s.modulus
        return Element(s, tuple((-a) % M for a in x.coords))
    return Element(s, tuple(_fp_digit_add(0, a, s.p, s.N, -1) for a in x.coords))


def sub(x: Element, y: Element) -> Element:
    _check(x, y)
    s = x.spec
    if s.is_zero_char:
        M = s.modulus
        return Element(s, tuple((a - b) % M for a, b in zip(x.coords, y.coords)))
    return Element(s, tuple(_fp_digit_add(a, b, s.p, s.N, -1) for a, b in zip(x.coords, y.coords)))


def _fq_mul(a: list[int], b: list[int], g: tuple, p: int) -> list[int]:
    return _poly_mulmod(a, b, list(g), p)


def mul(x: Element, y: Element) -> Element:
    _check(x, y)
    s = x.spec
    if s.is_zero_char:
        M = s.modulus
        if s.dim == 1:
            return Element(s, (x.coords[0] * y.coords[0] % M,))
        table = s.table.products
        n = s.dim
        out = [0] * n
        for a, xa in enumerate(x.coords):
            if not xa:
                continue
            row = table[a]
            for b, yb in enumerate(y.coords):
                if not yb:
                    continue
                c = xa * yb
                for i, t in enumerate(row[b]):
                    if t:
                        out[i] += c * t
        return Element(s, tuple(v % M for v in out))
    # F_q[[t]]: truncated convolution of F_q-valued digit sequences
    p, N, f = s.p, s.N, s.f
    xs = [to_digits(c, p, N) for c in x.coords]
    ys = [to_digits(c, p, N) for c in y.coords]
    xd = [[xs[k][j] for k in range(f)] for j in range(N)]
    yd = [[ys[k][j] for k in range(f)] for j in range(N)]
    out = [[0] * f for _ in range(N)]
    for i in range(N):
        if not any(xd[i]):
            continue
        for j in range(N - i):
            if not any(yd[j]):
                continue
            if f == 1:
                out[i + j][0] = (out[i + j][0] + xd[i][0] * yd[j][0]) % p
            else:
                prod = _fq_mul(xd[i], yd[j], s.residue_poly, p)
                out[i + j] = [(u + v) % p for u, v in zip(out[i + j], prod)]
    coords = tuple(from_digits([out[j][k] for j in range(N)], p) for k in range(f))
    return Element(s, coords)


def valuation(x: Element):
    """Index of the first nonzero uniformizer digit, or ``None`` when every
    carried digit vanishes (valuation at least ``spec.cap``)."""
    s = x.spec
    best = None
    for idx, c in enumerate(x.coords):
        if c:
            k2 = idx % s.e
            v = vp(c, s.p, s.N) * s.e + k2
            if best is None or v < best:
                best = v
    return best


def abs_value(x: Element) -> Fraction:
    """``q**-valuation``; an element zero at precision returns 0."""
    v = valuation(x)
    if v is None:
        return Fraction(0)
    return Fraction(1, x.spec.q**v)


def truncate(x: Element, lam: int) -> Element:
    """Canonical representative of ``x`` modulo ``pi**lam``."""
    s = x.spec
    if lam >= s.cap:
        return x
    if lam <= 0:
        return s.zero()
    counts = s.position_count(lam)
    return Element(s, tuple(c % s.p**k for c, k in zip(x.coords, counts)))


def inverse(x: Element) -> Element:
    """Inverse of a unit by Newton iteration ``z <- z(2 - xz)``."""
    s = x.spec
    if valuation(x) != 0:
        raise ValueError("only units are invertible in R")
    if s.is_Zp:
        return Element(s, (pow(x.coords[0], -1, s.modulus),))
    z = truncate(x ** (s.q - 2), 1)
    two = s.from_int(2)
    prec = 1
    while prec < s.cap:
        z = z * (two - x * z)
        prec *= 2
    return z


# --- Hensel lifting --------------------------------------------------------


def poly_eval(poly: Sequence[Element], x: Element) -> Element:
    acc = x.spec.zero()
    for c in reversed(poly):
        acc = acc * x + c
    return acc


def poly_deriv(poly: Sequence[Element]) -> list[Element]:
    return [c * i for i, c in enumerate(poly)][1:]


def _divide_by_p_power(x: Element, k: int) -> Element:
    s = x.spec
    pk = s.p**k
    if any(c % pk for c in x.coords):
        raise HenselError("inexact division during Newton step")
    return Element(s, tuple(c // pk for c in x.coords))


def hensel_lift(poly: Sequence[Element], x0: Element, alpha: int | None = None, max_steps: int = 64) -> Element:
    """Newton iteration from ``x0`` to a root of ``poly`` modulo ``pi**cap``.

    Requires ``|poly(x0)| < |poly'(x0)|**2`` with ``|poly'(x0)| = q**-alpha``
    certified at the working precision.
    """
    s = x0.spec
    poly = [c if isinstance(c, Element) else s.from_int(c) for c in poly]
    dpoly = poly_deriv(poly)
    value = poly_eval(poly, x0)
    if valuation(value) is None:
        return x0
    dval = valuation(poly_eval(dpoly, x0))
    if dval is None:
        raise HenselError("derivative vanishes at working precision; |poly'(x0)| not certified")
    if alpha is not None and alpha != dval:
        raise HenselError(f"derivative valuation is {dval}, not the claimed {alpha}")
    if not valuation(value) > 2 * dval:
        raise HenselError(
            f"|poly(x0)| = q^-{valuation(value)} is not below |poly'(x0)|^2 = q^-{2 * dval}"
        )
    if dval and (not s.is_zero_char or s.e != 1):
        raise HenselError("Newton steps with non-unit derivative are supported only for e = 1, characteristic 0")
    x = x0
    for _ in range(max_steps):
        value = poly_eval(poly, x)
        if valuation(value) is None:
            return x
        d = poly_eval(dpoly, x)
        if dval:
            k = dval // s.e
            step = _divide_by_p_power(value, k) * inverse(_divide_by_p_power(d, k))
        else:
            step = value * inverse(d)
        x = x - step
    raise PrecisionExhausted("Newton iteration did not reach the working precision")


# --- balls ----------------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    """Closed ball ``center + pi**lam R**n`` with a canonical center."""

    center: tuple
    lam: int

    @property
    def spec(self) -> FieldSpec:
        return self.center[0].spec

    @property
    def n(self) -> int:
        return len(self.center)

    def key(self) -> tuple:
        return tuple(c.key() for c in self.center)

    def contains(self, x) -> bool:
        return ball_contains(self, x)

    def contains_ball(self, other: "Ball") -> bool:
        if other.lam < self.lam:
            return False
        return all(truncate(c, self.lam) == d for c, d in zip(other.center, self.center))

    def radius(self) -> Fraction:
        return Fraction(1, self.spec.q**self.lam)

    def __repr__(self):
        s = self.spec
        if s.dim == 1:
            cs = ",".join(str(c.coords[0]) for c in self.center)
        else:
            cs = ",".join(str(c.coords) for c in self.center)
        return f"Ball(({cs}), lam={self.lam})"


def _as_tuple(x) -> tuple:
    if isinstance(x, Element):
        return (x,)
    return tuple(x)


def ball_of(x, lam: int) -> Ball:
    x = _as_tuple(x)
    s = x[0].spec
    if lam > s.cap:
        raise PrecisionExhausted(f"radius exponent {lam} exceeds precision cap {s.cap}")
    if lam < 0:
        raise ValueError("radius exponent must be nonnegative")
    return Ball(tuple(truncate(c, lam) for c in x), lam)


def ball_contains(B: Ball, x) -> bool:
    x = _as_tuple(x)
    return all(truncate(c, B.lam) == d for c, d in zip(x, B.center))


def _digit_slots(spec: FieldSpec, lam: int, lam2: int) -> list[tuple[int, int]]:
    """(coordinate index, p-power) for every digit at uniformizer positions
    ``lam <= pos < lam2``, ordered row-major by (k1, k2, j)."""
    slots = []
    e = spec.e
    for k1 in range(spec.f):
        for k2 in range(e):
            for j in range(spec.N):
                if lam <= j * e + k2 < lam2:
                    slots.append((k1 * e + k2, j))
    return slots


def subdivide(B: Ball, lam2: int) -> list[Ball]:
    """All ``q**(n*(lam2-lam))`` children of radius exponent ``lam2``, sorted
    by the lexicographic order of their center digit tensors."""
    s = B.spec
    if lam2 < B.lam:
        raise ValueError("subdivision exponent must be >= the ball's exponent")
    if lam2 > s.cap:
        raise PrecisionExhausted(f"radius exponent {lam2} exceeds precision cap {s.cap}")
    slots = _digit_slots(s, B.lam, lam2)
    p = s.p
    per_coord = []
    for c in B.center:
        options = []
        for digits in itertools.product(range(p), repeat=len(slots)):
            coords = list(c.coords)
            for (idx, j), d in zip(slots, digits):
                if d:
                    coords[idx] += d * p**j
            options.append(Element(s, tuple(coords)))
        per_coord.append(options)
    children = [Ball(tuple(combo), lam2) for combo in itertools.product(*per_coord)]
    children.sort(key=Ball.key)
    return children


def enumerate_balls(spec: FieldSpec, n: int, lam: int) -> list[Ball]:
    root = Ball(tuple(spec.zero() for _ in range(n)), 0)
    return subdivide(root, lam)
