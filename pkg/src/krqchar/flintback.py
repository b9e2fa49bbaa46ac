"""F-polynomial recursion on python-flint multivariate polynomials.

Same homomorphic images as :func:`krqchar.cluster.separated_values` (z -> 1,
coefficients outside a window -> 0, optionally modulo total degree > D), but
the arithmetic runs in FLINT.  Used for the large KR characters where the
exchange products reach tens of millions of terms.
"""

from __future__ import annotations

from typing import Iterable

from .cluster import MutationTrace, TermCapExceeded
from .laurent import LaurentPoly, VarId
from .quiverbuild import Vertex

try:
    import flint
except ImportError:  # pragma: no cover - exercised only without python-flint
    flint = None

__all__ = ["available", "f_polynomials"]


def available() -> bool:
    return flint is not None


def _graded_ops(ctx, top: int):
    zero = ctx.from_dict({})

    def mul(a, b):
        out = [zero] * (top + 1)
        for i, x in enumerate(a):
            if x.is_zero():
                continue
            for j in range(top + 1 - i):
                if not b[j].is_zero():
                    out[i + j] = out[i + j] + x * b[j]
        return out

    def div(a, b):
        q = []
        for n in range(top + 1):
            acc = a[n]
            for j in range(1, n + 1):
                if not b[j].is_zero() and not q[n - j].is_zero():
                    acc = acc - b[j] * q[n - j]
            q.append(acc)
        return q

    def lift(p, deg):
        out = [zero] * (top + 1)
        if deg <= top:
            out[deg] = p
        return out

    def flat(a):
        total = zero
        for x in a:
            total = total + x
        return total

    return mul, div, lift, flat


def _plain_ops(ctx):
    def div(a, b):
        q, r = divmod(a, b)
        if not r.is_zero():
            raise ArithmeticError("inexact exchange division")
        return q

    return (lambda a, b: a * b), div, (lambda p, deg: p), (lambda a: a)


def f_polynomials(trace: MutationTrace, targets: Iterable[tuple], window=None, max_degree: int | None = None, term_cap: int | None = None) -> dict:
    """F-polynomial (as a LaurentPoly in principal variables) for each target."""
    if flint is None:
        raise RuntimeError("python-flint is not installed")
    if not trace.principal:
        raise ValueError("the trace must carry principal coefficients")
    cap = trace.term_cap if term_cap is None else term_cap
    targets = list(targets)
    steps = sorted(trace.closure(targets), key=trace._position)
    coeff_keys = set()
    for s in steps:
        st = trace.steps[s]
        for (key, _), _m in st.ins + st.outs:
            if not isinstance(key, Vertex) and (window is None or window(Vertex(key[1], key[2]))):
                coeff_keys.add(key)
    order = sorted(coeff_keys, key=lambda k: (k[2], k[1]))
    index = {k: a for a, k in enumerate(order)}
    nvars = max(1, len(order))
    ctx = flint.fmpz_mpoly_ctx.get(("y", nvars), "lex")
    zero_exp = (0,) * nvars
    one = ctx.from_dict({zero_exp: 1})
    if max_degree is None:
        mul, div, lift, flat = _plain_ops(ctx)
    else:
        mul, div, lift, flat = _graded_ops(ctx, max_degree)

    vals: dict = {}

    def get(t):
        v = vals.get(t)
        if v is not None:
            return v
        key = t[0]
        if isinstance(key, Vertex):
            v = lift(one, 0)
        elif key in index:
            e = [0] * nvars
            e[index[key]] = 1
            v = lift(ctx.from_dict({tuple(e): 1}), 1)
        else:
            v = lift(ctx.from_dict({}), 0)
        vals[t] = v
        return v

    unit = lift(one, 0)
    for s in steps:
        st = trace.steps[s]
        a = b = unit
        for dep, m in st.ins:
            for _ in range(m):
                a = mul(a, get(dep))
        for dep, m in st.outs:
            for _ in range(m):
                b = mul(b, get(dep))
        num = [x + y for x, y in zip(a, b)] if max_degree is not None else a + b
        val = div(num, get((s[0], s[1] - 1)))
        size = sum(len(x) for x in val) if max_degree is not None else len(val)
        if size > cap:
            raise TermCapExceeded(f"{size} terms at {s!r}")
        vals[s] = val

    out = {}
    for t in targets:
        poly = flat(get(t))
        terms = []
        for exps, c in poly.to_dict().items():
            mono = {VarId("principal", order[a][1], order[a][2]): int(e) for a, e in enumerate(exps) if e}
            terms.append((int(c), mono))
        out[t] = LaurentPoly.from_terms(terms)
    return out
