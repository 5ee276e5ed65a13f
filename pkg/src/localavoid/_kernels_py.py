"""Pure-Python versions of the enumeration kernels.

Same signatures and results as the compiled ``_kernels`` module; used when
the extension is not built or a modulus does not fit in 62 bits.
"""

import itertools


def _factor_tables(terms, columns, modulus):
    tables = []
    offset = 0
    for col in columns:
        n = len(col[0]) if col else 0
        table = []
        for pt in col:
            row = []
            for _coef, exps in terms:
                acc = 1
                for k in range(n):
                    ek = exps[offset + k]
                    if ek:
                        acc = acc * pow(pt[k], ek, modulus) % modulus
                row.append(acc)
            table.append(row)
        tables.append(table)
        offset += n
    return tables


def _val(value, p, cap):
    if value == 0:
        return cap
    v = 0
    while value % p == 0 and v < cap:
        value //= p
        v += 1
    return v


def product_max_valuation(terms, columns, modulus, p, cap, groups=None, stop_at=None):
    """Largest p-adic valuation of a polynomial over a Cartesian product.

    ``terms`` is a list of ``(coef, exps)`` with integer coefficients modulo
    ``modulus`` and exponent tuples laid out variable-major; ``columns[i]`` is
    the list of points (tuples of residues) for variable ``i``.  Tuples whose
    ``groups`` labels all agree are skipped.  Returns
    ``(max_valuation, index_tuple, checked)``; ``max_valuation`` is ``-1``
    when nothing was checked.  Stops early once ``stop_at`` is reached.
    """
    if any(len(c) == 0 for c in columns):
        return -1, None, 0
    tables = _factor_tables(terms, columns, modulus)
    coefs = [c % modulus for c, _ in terms]
    nterms = len(coefs)
    best, arg, checked = -1, None, 0
    ranges = [range(len(c)) for c in columns]
    for idx in itertools.product(*ranges):
        if groups is not None:
            g0 = groups[0][idx[0]]
            if all(groups[i][j] == g0 for i, j in enumerate(idx)):
                continue
        total = 0
        for t in range(nterms):
            acc = coefs[t]
            for i, j in enumerate(idx):
                acc = acc * tables[i][j][t]
            total += acc
        v = _val(total % modulus, p, cap)
        checked += 1
        if v > best:
            best, arg = v, idx
            if stop_at is not None and best >= stop_at:
                break
    return best, arg, checked
