"""Sparse Laurent polynomials with exact integer coefficients.

Variables are indexed by :class:`VarId` triples ``(family, node, shift)``.
Internally a monomial is packed into one Python integer: the exponent of
the k-th registered variable is a signed 16-bit digit at position k.  With
balanced digits, integer addition is monomial multiplication and the
integer order is a lexicographic monomial order, which is what the exact
division routine needs.  Slot numbers depend on registration order, so
nothing slot-dependent ever leaves this module: serialization and printing
go through the sparse ``VarId`` form in a canonical order.
"""

from __future__ import annotations

import heapq
import json
from fractions import Fraction
from typing import Callable, Iterable, Mapping, NamedTuple

import numpy as np

__all__ = [
    "FAMILIES",
    "VarId",
    "LaurentPoly",
    "Y",
    "z",
    "v",
    "InexactDivisionError",
    "parse_text",
]

FAMILIES = ("Y", "z", "v", "principal")
_FAMILY_RANK = {f: i for i, f in enumerate(FAMILIES)}
_PREFIX = {"Y": "Y", "z": "z", "v": "v", "principal": "y"}

_BITS = 16
_BASE = 1 << _BITS
_HALF = 1 << (_BITS - 1)


class VarId(NamedTuple):
    family: str
    node: int
    shift: int

    def sort_key(self) -> tuple[int, int, int]:
        return (_FAMILY_RANK[self.family], self.node, self.shift)


class InexactDivisionError(ArithmeticError):
    """Raised when a polynomial division leaves a nonzero remainder."""


_VARS: list[VarId] = []
_INDEX: dict[VarId, int] = {}
_BIAS: list[int] = [0]


def _slot(var: VarId) -> int:
    k = _INDEX.get(var)
    if k is None:
        if var.family not in _FAMILY_RANK:
            raise ValueError(f"unknown variable family {var.family!r}")
        k = len(_VARS)
        _VARS.append(var)
        _INDEX[var] = k
    return k


def _unit(var: VarId) -> int:
    return 1 << (_BITS * _slot(var))


def _bias(n: int) -> int:
    while len(_BIAS) <= n:
        m = len(_BIAS)
        _BIAS.append(_BIAS[-1] + (_HALF << (_BITS * (m - 1))))
    return _BIAS[n]


def _decode_one(key: int) -> dict[int, int]:
    out = {}
    k = 0
    while key:
        d = key & (_BASE - 1)
        if d >= _HALF:
            d -= _BASE
        if d:
            out[k] = d
        key = (key - d) >> _BITS
        k += 1
    return out


def _decode_many(keys: list[int]) -> np.ndarray:
    """Exponent matrix (terms x registered variables) of packed monomials."""
    n = len(_VARS)
    if not keys or n == 0:
        return np.zeros((len(keys), n), dtype=np.int64)
    bias = _bias(n)
    nbytes = 2 * n
    buf = b"".join((k + bias).to_bytes(nbytes, "little") for k in keys)
    arr = np.frombuffer(buf, dtype="<u2").reshape(len(keys), n)
    return arr.astype(np.int64) - _HALF


def _encode_many(arr: np.ndarray) -> list[int]:
    n = arr.shape[1]
    if n == 0:
        return [0] * arr.shape[0]
    if arr.size and (arr.min() < -_HALF or arr.max() >= _HALF):
        raise OverflowError("exponent outside the supported 16-bit range")
    bias = _bias(n)
    raw = (arr + _HALF).astype("<u2")
    return [int.from_bytes(row.tobytes(), "little") - bias for row in raw]


def _encode_sparse(exps: Mapping[VarId, int]) -> int:
    key = 0
    for var, e in exps.items():
        if e:
            if not -_HALF <= e < _HALF:
                raise OverflowError("exponent outside the supported 16-bit range")
            key += e * _unit(var)
    return key


def _sparse(key: int) -> tuple[tuple[VarId, int], ...]:
    d = _decode_one(key)
    return tuple(sorted(((_VARS[k], e) for k, e in d.items()), key=lambda p: p[0].sort_key()))


class LaurentPoly:
    """Immutable sparse Laurent polynomial over ``VarId`` variables."""

    __slots__ = ("_t",)

    def __init__(self, terms: Mapping[int, int] | None = None, *, _trusted: bool = False):
        if terms is None:
            self._t = {}
        elif _trusted:
            self._t = terms
        else:
            self._t = {k: c for k, c in terms.items() if c}

    # construction -------------------------------------------------------
    @classmethod
    def zero(cls) -> "LaurentPoly":
        return cls()

    @classmethod
    def one(cls) -> "LaurentPoly":
        return cls({0: 1}, _trusted=True)

    @classmethod
    def constant(cls, c: int) -> "LaurentPoly":
        return cls({0: int(c)})

    @classmethod
    def var(cls, family: str, node: int, shift: int, e: int = 1) -> "LaurentPoly":
        return cls({_encode_sparse({VarId(family, node, shift): e}): 1}, _trusted=True)

    @classmethod
    def monomial(cls, exps: Mapping[VarId, int] | Iterable[tuple[VarId, int]], coeff: int = 1) -> "LaurentPoly":
        if not isinstance(exps, Mapping):
            acc: dict[VarId, int] = {}
            for var, e in exps:
                acc[var] = acc.get(var, 0) + e
            exps = acc
        return cls({_encode_sparse(exps): int(coeff)})

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[int, Mapping[VarId, int] | Iterable[tuple[VarId, int]]]]) -> "LaurentPoly":
        out = cls()
        acc = out._t
        for c, exps in terms:
            if not isinstance(exps, Mapping):
                d: dict[VarId, int] = {}
                for var, e in exps:
                    d[var] = d.get(var, 0) + e
                exps = d
            k = _encode_sparse(exps)
            nv = acc.get(k, 0) + int(c)
            if nv:
                acc[k] = nv
            else:
                acc.pop(k, None)
        return out

    # basic protocol -----------------------------------------------------
    def __len__(self) -> int:
        return len(self._t)

    def __bool__(self) -> bool:
        return bool(self._t)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int):
            other = LaurentPoly.constant(other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self._t == other._t

    def __hash__(self) -> int:
        return hash(frozenset(self._t.items()))

    def __repr__(self) -> str:
        return f"LaurentPoly({self.to_text()!r})"

    def __str__(self) -> str:
        return self.to_text()

    def is_monomial(self) -> bool:
        return len(self._t) == 1

    def is_constant(self) -> bool:
        return not self._t or (len(self._t) == 1 and 0 in self._t)

    def coefficient(self, exps: Mapping[VarId, int]) -> int:
        return self._t.get(_encode_sparse(exps), 0)

    def constant_term(self) -> int:
        return self._t.get(0, 0)

    # arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> "LaurentPoly":
        if isinstance(other, LaurentPoly):
            return other
        if isinstance(other, int):
            return LaurentPoly.constant(other)
        return NotImplemented

    def __add__(self, other) -> "LaurentPoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self._t, other._t
        if len(a) < len(b):
            a, b = b, a
        out = dict(a)
        for k, c in b.items():
            nv = out.get(k, 0) + c
            if nv:
                out[k] = nv
            else:
                del out[k]
        return LaurentPoly(out, _trusted=True)

    __radd__ = __add__

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly({k: -c for k, c in self._t.items()}, _trusted=True)

    def __sub__(self, other) -> "LaurentPoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "LaurentPoly":
        return (-self) + other

    def __mul__(self, other) -> "LaurentPoly":
        if isinstance(other, int):
            if other == 0:
                return LaurentPoly()
            return LaurentPoly({k: c * other for k, c in self._t.items()}, _trusted=True)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self._t, other._t
        if len(a) < len(b):
            a, b = b, a
        if len(b) == 1:
            (kb, cb), = b.items()
            if cb == 1:
                return LaurentPoly({ka + kb: ca for ka, ca in a.items()}, _trusted=True)
            return LaurentPoly({ka + kb: ca * cb for ka, ca in a.items()}, _trusted=True)
        out: dict[int, int] = {}
        get = out.get
        aitems = list(a.items())
        for kb, cb in b.items():
            for ka, ca in aitems:
                k = ka + kb
                old = get(k)
                if old is None:
                    out[k] = ca * cb
                else:
                    nv = old + ca * cb
                    if nv:
                        out[k] = nv
                    else:
                        del out[k]
        return LaurentPoly(out, _trusted=True)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "LaurentPoly":
        if n < 0:
            if not self.is_monomial():
                raise ValueError("negative powers are only defined for monomials")
            (k, c), = self._t.items()
            if c not in (1, -1):
                raise ValueError("monomial with non-unit coefficient is not invertible")
            return LaurentPoly({-k * (-n): c ** (-n)}, _trusted=True)
        result = LaurentPoly.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def inverse_monomial(self) -> "LaurentPoly":
        return self ** -1

    def divide_exact(self, other: "LaurentPoly") -> "LaurentPoly":
        """Exact quotient ``self / other``; raises if a remainder is left."""
        if not other._t:
            raise ZeroDivisionError("division by the zero polynomial")
        if not self._t:
            return LaurentPoly()
        g = other._t
        if len(g) == 1:
            (kg, cg), = g.items()
            out = {}
            for k, c in self._t.items():
                q, r = divmod(c, cg)
                if r:
                    raise InexactDivisionError("coefficient not divisible")
                out[k - kg] = q
            return LaurentPoly(out, _trusted=True)
        gl = sorted(g.items(), reverse=True)
        lead_k, lead_c = gl[0]
        low_bound = min(self._t) - gl[-1][0]
        rest = gl[1:]
        rem = dict(self._t)
        heap = [-k for k in rem]
        heapq.heapify(heap)
        quot: dict[int, int] = {}
        pop = heapq.heappop
        push = heapq.heappush
        while rem:
            while True:
                k = -pop(heap)
                if k in rem:
                    break
            c = rem.pop(k)
            qk = k - lead_k
            if qk < low_bound:
                raise InexactDivisionError("division does not terminate: not exact")
            qc, r = divmod(c, lead_c)
            if r:
                raise InexactDivisionError("leading coefficient not divisible")
            quot[qk] = qc
            for gk, gc in rest:
                key = qk + gk
                old = rem.get(key)
                if old is None:
                    rem[key] = -qc * gc
                    push(heap, -key)
                else:
                    nv = old - qc * gc
                    if nv:
                        rem[key] = nv
                    else:
                        del rem[key]
        return LaurentPoly(quot, _trusted=True)

    def __truediv__(self, other) -> "LaurentPoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self.divide_exact(other)

    # inspection ---------------------------------------------------------
    def terms(self) -> list[tuple[int, tuple[tuple[VarId, int], ...]]]:
        """Terms as ``(coeff, ((var, e), ...))`` in canonical order."""
        out = [(c, _sparse(k)) for k, c in self._t.items()]
        out.sort(key=lambda t: tuple((v.sort_key(), e) for v, e in t[1]))
        return out

    def variables(self) -> set[VarId]:
        if not self._t:
            return set()
        arr = _decode_many(list(self._t))
        used = np.nonzero(np.any(arr != 0, axis=0))[0]
        return {_VARS[k] for k in used}

    def monomials(self) -> list["LaurentPoly"]:
        return [LaurentPoly({k: 1}, _trusted=True) for k in self._t]

    def exponent_dict(self) -> dict[VarId, int]:
        """Sparse exponents of a monomial."""
        if len(self._t) != 1:
            raise ValueError("not a monomial")
        (k,) = self._t
        return dict(_sparse(k))

    def coefficient_sum(self) -> int:
        return sum(self._t.values())

    def max_abs_exponent(self) -> int:
        if not self._t:
            return 0
        return int(np.abs(_decode_many(list(self._t))).max(initial=0))

    # variable-level transformations ------------------------------------
    def _columns(self) -> tuple[list[int], list[int], np.ndarray]:
        keys = list(self._t)
        coeffs = [self._t[k] for k in keys]
        return keys, coeffs, _decode_many(keys)

    def filter_terms(self, keep: Callable[[dict[VarId, int]], bool]) -> "LaurentPoly":
        return LaurentPoly({k: c for k, c in self._t.items() if keep(dict(_sparse(k)))}, _trusted=True)

    def drop_if_positive(self, columns: Callable[[VarId], bool]) -> "LaurentPoly":
        """Drop every term with a nonzero exponent on a variable selected by ``columns``."""
        if not self._t:
            return self
        keys, coeffs, arr = self._columns()
        sel = [k for k, var in enumerate(_VARS[: arr.shape[1]]) if columns(var)]
        if not sel:
            return self
        bad = np.any(arr[:, sel] != 0, axis=1)
        return LaurentPoly({k: c for k, c, b in zip(keys, coeffs, bad) if not b}, _trusted=True)

    def map_vars(self, fn: Callable[[VarId], VarId]) -> "LaurentPoly":
        """Rename variables; ``fn`` must be injective on the variables present."""
        if not self._t:
            return self
        keys, coeffs, arr = self._columns()
        n = arr.shape[1]
        used = np.nonzero(np.any(arr != 0, axis=0))[0]
        targets = {int(k): _slot(fn(_VARS[k])) for k in used}
        if len(set(targets.values())) != len(targets):
            raise ValueError("variable map is not injective on the support")
        m = max(len(_VARS), n)
        new = np.zeros((arr.shape[0], m), dtype=np.int64)
        for src, dst in targets.items():
            new[:, dst] += arr[:, src]
        return LaurentPoly(dict(zip(_encode_many(new), coeffs)), _trusted=True)

    def substitute(self, images: Callable[[VarId], "LaurentPoly | None"] | Mapping[VarId, "LaurentPoly"]) -> "LaurentPoly":
        """Ring homomorphism sending each variable to a Laurent polynomial.

        Variables mapped to ``None`` (or absent from a mapping) are kept.
        Negative exponents require monomial images.
        """
        if not self._t:
            return self
        get = images.get if isinstance(images, Mapping) else images
        keys, coeffs, arr = self._columns()
        used = [int(k) for k in np.nonzero(np.any(arr != 0, axis=0))[0]]
        img: dict[int, LaurentPoly] = {}
        mono_img: dict[int, int] = {}
        for k in used:
            p = get(_VARS[k])
            if p is None:
                mono_img[k] = 1 << (_BITS * k)
            elif p.is_monomial() and next(iter(p._t.values())) == 1:
                mono_img[k] = next(iter(p._t))
            else:
                img[k] = p
        if not img:
            out: dict[int, int] = {}
            for row, c in zip(arr, coeffs):
                key = 0
                for k in used:
                    e = row[k]
                    if e:
                        key += int(e) * mono_img[k]
                nv = out.get(key, 0) + c
                if nv:
                    out[key] = nv
                else:
                    out.pop(key, None)
            return LaurentPoly(out, _trusted=True)
        total = LaurentPoly()
        cache: dict[tuple[int, int], LaurentPoly] = {}
        for row, c in zip(arr, coeffs):
            key = 0
            term = LaurentPoly.constant(c)
            for k in used:
                e = int(row[k])
                if not e:
                    continue
                if k in mono_img:
                    key += e * mono_img[k]
                else:
                    pw = cache.get((k, e))
                    if pw is None:
                        pw = img[k] ** e
                        cache[(k, e)] = pw
                    term = term * pw
            total = total + term * LaurentPoly({key: 1}, _trusted=True)
        return total

    def shift(self, p: int, family: str = "Y") -> "LaurentPoly":
        """Spectral shift: every variable of ``family`` has its shift raised by ``p``."""
        if p == 0:
            return self
        return self.map_vars(lambda var: VarId(var.family, var.node, var.shift + p) if var.family == family else var)

    def specialize(self, values: Callable[[VarId], int | None]) -> "LaurentPoly":
        """Evaluate the variables for which ``values`` returns an integer (must be 1 or -1 if
        the exponent can be negative); the rest stay symbolic."""

        def img(var):
            val = values(var)
            return None if val is None else LaurentPoly.constant(val)

        return self.substitute(img)

    def evaluate(self, values: Mapping[VarId, Fraction | int]) -> Fraction:
        total = Fraction(0)
        for c, exps in self.terms():
            t = Fraction(c)
            for var, e in exps:
                t *= Fraction(values[var]) ** e
            total += t
        return total

    # output -------------------------------------------------------------
    def sorted_terms(self, key: Callable[[tuple[tuple[VarId, int], ...]], object] | None = None):
        ts = self.terms()
        if key is not None:
            ts.sort(key=lambda t: (key(t[1]), tuple((v.sort_key(), e) for v, e in t[1])))
        return ts

    def to_text(self, key=None) -> str:
        ts = self.sorted_terms(key)
        if not ts:
            return "0"
        parts = []
        for idx, (c, exps) in enumerate(ts):
            mono = _text_monomial(exps)
            mag = abs(c)
            if not mono:
                body = str(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{mag}{mono}"
            if idx == 0:
                parts.append(("-" if c < 0 else "") + body)
            else:
                parts.append((" - " if c < 0 else " + ") + body)
        return "".join(parts)

    def to_latex(self, key=None) -> str:
        ts = self.sorted_terms(key)
        if not ts:
            return "0"
        parts = []
        for idx, (c, exps) in enumerate(ts):
            mono = " ".join(
                f"{_PREFIX[v.family]}_{{{v.node},{v.shift}}}" + (f"^{{{e}}}" if e != 1 else "") for v, e in exps
            )
            mag = abs(c)
            body = mono if (mono and mag == 1) else (f"{mag} {mono}".strip())
            sign = "-" if c < 0 else ("" if idx == 0 else "+")
            parts.append(f"{sign} {body}".strip() if idx else (sign + body))
        return " ".join(parts)

    def to_json_obj(self) -> dict:
        return {
            "terms": [
                {
                    "coeff": str(c),
                    "exps": [{"family": v.family, "node": v.node, "shift": v.shift, "e": e} for v, e in exps],
                }
                for c, exps in self.terms()
            ]
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), separators=(",", ":"))

    @classmethod
    def from_json_obj(cls, obj: dict) -> "LaurentPoly":
        return cls.from_terms(
            (int(t["coeff"]), [(VarId(x["family"], int(x["node"]), int(x["shift"])), int(x["e"])) for x in t["exps"]])
            for t in obj["terms"]
        )

    @classmethod
    def from_json(cls, text: str) -> "LaurentPoly":
        return cls.from_json_obj(json.loads(text))


def _text_monomial(exps: tuple[tuple[VarId, int], ...]) -> str:
    out = []
    for idx, (var, e) in enumerate(exps):
        f = f"{_PREFIX[var.family]}[{var.node},{var.shift}]"
        if e != 1:
            f += f"^{e}"
            if idx + 1 < len(exps):
                f += " "
        out.append(f)
    return "".join(out)


def Y(i: int, r: int, e: int = 1) -> LaurentPoly:
    return LaurentPoly.var("Y", i, r, e)


def z(i: int, r: int, e: int = 1) -> LaurentPoly:
    return LaurentPoly.var("z", i, r, e)


def v(i: int, r: int, e: int = 1) -> LaurentPoly:
    return LaurentPoly.var("v", i, r, e)


def parse_text(text: str) -> LaurentPoly:
    """Parse the plain-text form produced by :meth:`LaurentPoly.to_text`."""
    import re

    fam = {pre: f for f, pre in _PREFIX.items()}
    text = text.strip()
    if text == "0":
        return LaurentPoly()
    terms: list[tuple[int, list[tuple[VarId, int]]]] = []
    pos = 0
    sign = 1
    n = len(text)
    factor_re = re.compile(r"([Yzvy])\[(-?\d+),(-?\d+)\](?:\^(-?\d+))?\s?")
    coeff_re = re.compile(r"(\d+)")
    while pos < n:
        while pos < n and text[pos] == " ":
            pos += 1
        if text[pos] in "+-":
            sign = -1 if text[pos] == "-" else 1
            pos += 1
            while pos < n and text[pos] == " ":
                pos += 1
        c = 1
        m = coeff_re.match(text, pos)
        if m:
            c = int(m.group(1))
            pos = m.end()
        exps = []
        while pos < n:
            m = factor_re.match(text, pos)
            if not m:
                break
            exps.append((VarId(fam[m.group(1)], int(m.group(2)), int(m.group(3))), int(m.group(4) or 1)))
            pos = m.end()
        terms.append((sign * c, exps))
        sign = 1
        while pos < n and text[pos] == " ":
            pos += 1
    return LaurentPoly.from_terms(terms)
