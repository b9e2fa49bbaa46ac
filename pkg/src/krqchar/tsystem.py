"""T-system equations for every Cartan type and their check on KR characters.

The equation for (i, k, r) reads

    T(i, k, r + d_i) T(i, k, r - d_i) = T(i, k - 1, r + d_i) T(i, k + 1, r - d_i) + S(i, k, r)

with T(i, 0, r) = 1.  S(i, k, r) is a product of T's at neighbouring nodes;
its shape depends on d_i and on t.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .cartan import CartanData, cartan_data
from .krchar import KREngine, KRLabel, engine_for
from .laurent import LaurentPoly
from .quiverbuild import in_w

__all__ = [
    "TSystemTerm",
    "s_term",
    "tsystem_equation",
    "TSystemReport",
    "verify_tsystem",
    "rank_two_reduction",
]


@dataclass(frozen=True)
class TSystemTerm:
    lhs: tuple[KRLabel, KRLabel]
    first_rhs: tuple[KRLabel, KRLabel]
    s_term: tuple[KRLabel, ...]

    def labels(self) -> set[KRLabel]:
        return set(self.lhs) | set(self.first_rhs) | set(self.s_term)

    def __str__(self) -> str:
        def t(lab):
            return f"T({lab.node},{lab.level},{lab.shift})"

        s = " ".join(t(lab) for lab in self.s_term) or "1"
        return f"{t(self.lhs[0])} {t(self.lhs[1])} = {t(self.first_rhs[0])} {t(self.first_rhs[1])} + {s}"


def s_term(cd: CartanData, i: int, k: int, r: int) -> tuple[KRLabel, ...]:
    if k < 1:
        raise ValueError("k must be >= 1")
    di = cd.di(i)
    out: list[KRLabel] = []
    if di >= 2:
        for j in cd.neighbours(i):
            if cd.c(j, i) == -1:
                out.append(KRLabel(j, k, r))
            else:
                out.append(KRLabel(j, di * k, r - di + 1))
    elif cd.t <= 2:
        l, odd = divmod(k, 2)
        for j in cd.neighbours(i):
            if cd.c(i, j) == -1:
                out.append(KRLabel(j, k, r))
            elif cd.c(i, j) == -2:
                out += [KRLabel(j, l + odd, r), KRLabel(j, l, r + 2)]
            else:
                raise ValueError(f"unexpected Cartan entry {cd.c(i, j)}")
    else:
        # t = 3: the short node of G2
        (j,) = cd.neighbours(i)
        l, rem = divmod(k, 3)
        out += [KRLabel(j, l + (rem >= 1), r), KRLabel(j, l + (rem >= 2), r + 2), KRLabel(j, l, r + 4)]
    return tuple(sorted(out))


def tsystem_equation(cd: CartanData, i: int, k: int, r: int) -> TSystemTerm:
    if k < 1:
        raise ValueError("k must be >= 1")
    di = cd.di(i)
    return TSystemTerm(
        lhs=(KRLabel(i, k, r + di), KRLabel(i, k, r - di)),
        first_rhs=(KRLabel(i, k - 1, r + di), KRLabel(i, k + 1, r - di)),
        s_term=s_term(cd, i, k, r),
    )


def rank_two_reduction(cd: CartanData, i: int, j: int) -> tuple[CartanData, dict[int, int]]:
    """The rank-two type spanned by adjacent nodes i, j and the node map into it."""
    if cd.c(i, j) == 0:
        raise ValueError("nodes are not adjacent")
    if cd.di(i) == cd.di(j):
        return cartan_data("A2"), {i: 1, j: 2}
    longer, shorter = (i, j) if cd.di(i) > cd.di(j) else (j, i)
    sub = cartan_data("G2" if cd.di(longer) == 3 * cd.di(shorter) else "B2")
    return sub, {longer: 1, shorter: 2}


@dataclass
class TSystemReport:
    type_label: str
    entries: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(e["ok"] for e in self.entries)

    def to_json_obj(self) -> list[dict]:
        return [{"node": e["node"], "level": e["level"], "shift": e["shift"], "ok": e["ok"]} for e in self.entries]

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2)


def _shifts(cd: CartanData, i: int, base: int) -> list[int]:
    """The r in one period 2t ending at ``base`` for which the equation lives in W."""
    return [r for r in range(base - 2 * cd.t + 1, base + 1) if in_w(cd, i, r + cd.di(i))]


def verify_tsystem(cd: CartanData, k_max: int, base: int | None = None, nodes=None, engine: KREngine | None = None) -> TSystemReport:
    """Check the equations for all nodes, 1 <= k <= k_max and r in one period.

    Characters are complete ones, so every check is an identity in Z[Y^{+-1}].
    """
    eng = engine or engine_for(cd)
    if base is None:
        base = -4 * cd.t * cd.h_dual
    nodes = list(nodes or cd.nodes)
    eqs = [(i, k, r, tsystem_equation(cd, i, k, r)) for i in nodes for k in range(1, k_max + 1) for r in _shifts(cd, i, base)]
    labels = set()
    for *_, eq in eqs:
        labels |= {(lab.node, lab.level, lab.shift) for lab in eq.labels()}
    chars = eng.complete_many(sorted(labels))

    def T(lab: KRLabel) -> LaurentPoly:
        return chars[(lab.node, lab.level, lab.shift)]

    report = TSystemReport(cd.label)
    for i, k, r, eq in eqs:
        lhs = T(eq.lhs[0]) * T(eq.lhs[1])
        rhs = T(eq.first_rhs[0]) * T(eq.first_rhs[1])
        s = LaurentPoly.one()
        for lab in eq.s_term:
            s = s * T(lab)
        ok = lhs == rhs + s
        report.entries.append({"node": i, "level": k, "shift": r, "ok": ok, "equation": str(eq)})
    return report
