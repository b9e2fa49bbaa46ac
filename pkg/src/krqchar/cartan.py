"""Finite-type Cartan data.

Node numbering (the long/short pattern is fixed by the worked examples):

======  ===============================  ==========================
type    symmetrizer d                    double/triple bond
======  ===============================  ==========================
A_n     all 1                            none
B_n     (2, ..., 2, 1)                   c_{n,n-1} = -2
C_n     (1, ..., 1, 2)                   c_{n-1,n} = -2
D_n     all 1                            fork at n-2 with n-1 and n
E_n     all 1                            Bourbaki: 1-3-4-5-...-n, 2-4
F_4     (1, 1, 2, 2)                     c_{2,3} = -2
G_2     (3, 1)                           c_{2,1} = -3
======  ===============================  ==========================

Indices are 1-based everywhere outside this module.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

__all__ = ["CartanData", "cartan_data", "positive_roots", "parse_type"]

_DUAL_COXETER = {
    "A": lambda n: n + 1,
    "B": lambda n: 2 * n - 1,
    "C": lambda n: n + 1,
    "D": lambda n: 2 * n - 2,
}
_EXCEPTIONAL_H = {("E", 6): 12, ("E", 7): 18, ("E", 8): 30, ("F", 4): 9, ("G", 2): 4}
_MIN_RANK = {"A": 1, "B": 2, "C": 2, "D": 4}


def parse_type(label: str) -> tuple[str, int]:
    m = re.fullmatch(r"\s*([A-Ga-g])_?(\d+)\s*", label)
    if not m:
        raise ValueError(f"cannot parse Cartan type {label!r}")
    letter, n = m.group(1).upper(), int(m.group(2))
    if letter in _MIN_RANK:
        if n < _MIN_RANK[letter]:
            raise ValueError(f"type {letter} needs rank >= {_MIN_RANK[letter]}")
    elif (letter, n) not in _EXCEPTIONAL_H:
        raise ValueError(f"no exceptional type {letter}{n}")
    return letter, n


def _edges(letter: str, n: int) -> list[tuple[int, int]]:
    if letter in "ABCFG":
        return [(i, i + 1) for i in range(1, n)]
    if letter == "D":
        return [(i, i + 1) for i in range(1, n - 2)] + [(n - 2, n - 1), (n - 2, n)]
    # E_n
    return [(1, 3), (3, 4), (4, 5), (2, 4)] + [(i, i + 1) for i in range(5, n)]


def _matrix_and_d(letter: str, n: int) -> tuple[list[list[int]], list[int]]:
    C = [[2 if i == j else 0 for j in range(n)] for i in range(n)]
    for a, b in _edges(letter, n):
        C[a - 1][b - 1] = C[b - 1][a - 1] = -1
    d = [1] * n
    if letter == "B":
        d = [2] * (n - 1) + [1]
        C[n - 1][n - 2] = -2
    elif letter == "C":
        d = [1] * (n - 1) + [2]
        C[n - 2][n - 1] = -2
    elif letter == "F":
        d = [1, 1, 2, 2]
        C[1][2] = -2
    elif letter == "G":
        d = [3, 1]
        C[1][0] = -3
    return C, d


def _nu(letter: str, n: int) -> tuple[int, ...]:
    perm = list(range(1, n + 1))
    if letter == "A":
        perm = [n + 1 - i for i in range(1, n + 1)]
    elif letter == "D" and n % 2 == 1:
        perm[n - 2], perm[n - 1] = n, n - 1
    elif letter == "E" and n == 6:
        perm = [6, 2, 5, 4, 3, 1]
    return tuple(perm)


@dataclass(frozen=True)
class CartanData:
    """Cartan matrix C (rows c_ij), symmetrizer d, B = DC and derived constants."""

    letter: str
    rank: int
    C: tuple[tuple[int, ...], ...]
    d: tuple[int, ...]
    nu_table: tuple[int, ...]
    dual_coxeter: int
    B: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        n = self.rank
        B = tuple(tuple(self.d[i] * self.C[i][j] for j in range(n)) for i in range(n))
        object.__setattr__(self, "B", B)

    @property
    def label(self) -> str:
        return f"{self.letter}{self.rank}"

    @property
    def n(self) -> int:
        return self.rank

    @property
    def nodes(self) -> range:
        return range(1, self.rank + 1)

    @property
    def t(self) -> int:
        return max(self.d)

    @property
    def h_dual(self) -> int:
        return self.dual_coxeter

    @property
    def b_max(self) -> int:
        return max(self.bii(i) for i in self.nodes)

    def c(self, i: int, j: int) -> int:
        return self.C[i - 1][j - 1]

    def b(self, i: int, j: int) -> int:
        return self.B[i - 1][j - 1]

    def di(self, i: int) -> int:
        return self.d[i - 1]

    def bii(self, i: int) -> int:
        return 2 * self.d[i - 1]

    def nu(self, i: int) -> int:
        return self.nu_table[i - 1]

    def neighbours(self, i: int) -> list[int]:
        return [j for j in self.nodes if j != i and self.c(i, j) != 0]

    def is_simply_laced(self) -> bool:
        return self.t == 1

    def fundamental_weights_in_roots(self) -> tuple[tuple[Fraction, ...], ...]:
        """Row i holds w_i in the basis of simple roots.

        Uses alpha_i = sum_j c_ji w_j, so the rows of (C^T)^{-1} are the w_i.
        """
        return _weights_in_roots(self.label)

    def fundamental_weight_heights(self) -> tuple[Fraction, ...]:
        """Height of each fundamental weight written in simple roots."""
        return tuple(sum(row) for row in self.fundamental_weights_in_roots())

    def __str__(self) -> str:
        return self.label


def _invert(M: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(M)
    A = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for col in range(n):
        piv = next(r for r in range(col, n) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        p = A[col][col]
        A[col] = [x / p for x in A[col]]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return [row[n:] for row in A]


@lru_cache(maxsize=None)
def cartan_data(type_label: str) -> CartanData:
    """Cartan data for a label such as ``"B3"`` or ``"g2"``."""
    letter, n = parse_type(type_label)
    C, d = _matrix_and_d(letter, n)
    h = _DUAL_COXETER[letter](n) if letter in _DUAL_COXETER else _EXCEPTIONAL_H[(letter, n)]
    return CartanData(letter, n, tuple(tuple(r) for r in C), tuple(d), _nu(letter, n), h)


@lru_cache(maxsize=None)
def _weights_in_roots(label: str) -> tuple[tuple[Fraction, ...], ...]:
    cd = cartan_data(label)
    n = cd.rank
    inv = _invert([[Fraction(cd.C[j][i]) for j in range(n)] for i in range(n)])
    return tuple(tuple(row) for row in inv)


def _pairing(cd: CartanData, beta: tuple[int, ...], j: int) -> int:
    """<alpha_j^vee, beta> = sum_i c_{ji} beta_i."""
    return sum(cd.C[j][i] * beta[i] for i in range(cd.rank))


@lru_cache(maxsize=None)
def _positive_roots(label: str) -> tuple[tuple[int, ...], ...]:
    cd = cartan_data(label)
    n = cd.rank
    simple = [tuple(int(i == j) for i in range(n)) for j in range(n)]
    roots = set(simple)
    layer = list(simple)
    while layer:
        nxt = []
        for beta in layer:
            for j in range(n):
                # length of the alpha_j-string below beta
                p = 0
                down = list(beta)
                while True:
                    down[j] -= 1
                    if tuple(down) in roots:
                        p += 1
                    else:
                        break
                q = p - _pairing(cd, beta, j)
                if q > 0:
                    up = list(beta)
                    up[j] += 1
                    up = tuple(up)
                    if up not in roots:
                        roots.add(up)
                        nxt.append(up)
        layer = nxt
    return tuple(sorted(roots, key=lambda r: (sum(r), r)))


def positive_roots(cd: CartanData) -> list[tuple[int, ...]]:
    """Positive roots in the simple-root basis, by saturation along root strings."""
    return list(_positive_roots(cd.label))
