"""Heights on R, bounded-height enumeration and negation representatives.

The height of a coordinate is the index of its top nonzero base-``p`` digit
(the degree, for ``F_q[[t]]``); the height of an element is the maximum over
its basis coordinates.  Zero has height 0.  At finite precision an element
whose digits reach past a caller-supplied cutoff is reported as ``None``
("infinite at this precision").
"""

from __future__ import annotations

import functools
import itertools
import random
from dataclasses import dataclass

from .errors import PrecisionExhausted
from .field import Element, FieldSpec, add, make_field_spec, mul, neg, sub, valuation


def coord_height(c: int, p: int) -> int:
    h = 0
    c //= p
    while c:
        c //= p
        h += 1
    return h


def height(x: Element, cutoff: int | None = None):
    """Height of ``x``, or ``None`` when it exceeds ``cutoff``."""
    p = x.spec.p
    h = max(coord_height(c, p) for c in x.coords) if any(x.coords) else 0
    if cutoff is not None and h > cutoff:
        return None
    return h


def enumerate_height_leq(spec: FieldSpec, h: int) -> list[Element]:
    """Every element of height at most ``h``, in lexicographic digit order."""
    if h < 0:
        return []
    if h + 1 > spec.N:
        raise PrecisionExhausted(f"height {h} needs {h + 1} digits, field carries {spec.N}")
    p = spec.p
    powers = [p**j for j in range(h + 1)]
    per_coord = [
        sum(d * pw for d, pw in zip(digits, powers))
        for digits in itertools.product(range(p), repeat=h + 1)
    ]
    # itertools.product varies the last digit fastest; reorder so the
    # sequence follows the row-major digit tuple (low digit first).
    per_coord = sorted(per_coord, key=lambda c: [(c // pw) % p for pw in powers])
    return [Element(spec, combo) for combo in itertools.product(per_coord, repeat=spec.dim)]


def neg_representatives(spec: FieldSpec) -> list[Element]:
    """The ``2**(e*f)`` elements ``sum eps * (-1) * t1**k1 * t2**k2``."""
    if not spec.is_zero_char:
        raise ValueError("negation representatives are only needed in characteristic zero")
    minus_one = spec.modulus - 1
    return [
        Element(spec, tuple(minus_one if b else 0 for b in bits))
        for bits in itertools.product((0, 1), repeat=spec.dim)
    ]


def differs_only_in_lsd(x: Element, y: Element, d: int) -> bool:
    """True iff the coordinates of ``x`` and ``y`` agree at every digit ``j >= d``."""
    if x.spec != y.spec:
        raise ValueError("elements of different fields")
    if d > x.spec.N:
        raise PrecisionExhausted(f"cannot compare beyond {x.spec.N} digits")
    pd = x.spec.p**d
    return all(a // pd == b // pd for a, b in zip(x.coords, y.coords))


def perturbation_holds(x: Element, y: Element, delta: Element) -> bool:
    """Whether ``|(-x + delta) - y| >= |delta|``."""
    vd = valuation(delta)
    if vd is None:
        raise ValueError("delta must be nonzero at the working precision")
    v = valuation(sub(add(neg(x), delta), y))
    return v is not None and v <= vd


def nonzero_valuation_bound(spec: FieldSpec, h: int) -> int:
    """Largest valuation a nonzero element of height <= h can have."""
    return spec.e * h + spec.e - 1


@dataclass(frozen=True)
class HeightProfile:
    """Additive and multiplicative height slack of a field.

    ``C_mul`` is ``None`` when some measured product ran past the precision
    (the slack is not finite at this precision).
    """

    spec: FieldSpec
    C_add: int
    C_mul: int | None
    measured_h: int
    pairs_checked: int


def _measure_pairs(spec: FieldSpec, hmax: int, limit: int, seed: int):
    elems = [x for x in enumerate_height_leq(spec, hmax) if any(x.coords)]
    total = len(elems) ** 2
    if total <= limit:
        return itertools.product(elems, repeat=2), total
    rng = random.Random(seed)
    return ((rng.choice(elems), rng.choice(elems)) for _ in range(limit)), limit


def with_precision(spec: FieldSpec, N: int) -> FieldSpec:
    """The same field carried to ``N`` digits."""
    return make_field_spec(
        spec.characteristic, spec.p, spec.f, spec.e, spec.residue_poly, spec.eisenstein_coeffs, N
    )


@functools.lru_cache(maxsize=None)
def height_profile(spec: FieldSpec, hmax: int = 2, limit: int = 20000, seed: int = 0) -> HeightProfile:
    """Measure ``C_mul`` over products of heights <= ``hmax``.

    Exhaustive when there are at most ``limit`` pairs, otherwise a seeded
    random sample of that many pairs.
    """
    C_add = 1 if spec.is_zero_char else 0
    # measure in a wider copy of the field so products cannot wrap around
    wide = with_precision(spec, max(spec.N, 2 * hmax + 2) + 16)
    cutoff = wide.N - 2
    pairs, count = _measure_pairs(wide, hmax, limit, seed)
    worst = 0
    for x, y in pairs:
        hx, hy = height(x), height(y)
        hp = height(mul(x, y), cutoff=cutoff)
        if hp is None:
            return HeightProfile(spec, C_add, None, hmax, count)
        worst = max(worst, hp - hx - hy)
    return HeightProfile(spec, C_add, worst, hmax, count)
