"""Quivers on I x Z: the semi-infinite quiver G^- (and its relabelling Gamma^-),
finite windows of it, and the column schedule used for mutation.

Two labellings of the same vertex set are in use.  ``V`` labels come from the
doubly-infinite quiver, where an arrow ``(i, r) -> (j, r + b_ij)`` exists
whenever ``b_ij != 0``.  ``W`` labels are obtained by ``psi(i, r) = (i, r + d_i)``;
in W labels an oblique arrow reads ``(i, s) -> (j, s + b_ij + d_j - d_i)``
and a vertical one ``(i, s) -> (i, s + b_ii)``.

Of the two connected components of the doubly-infinite quiver we keep the one
whose W labels put an *anchor node* at even shifts: node 2 for A_n with
n >= 3, node n otherwise.  This reproduces the standard pictures in types
A_2, A_3, B_2, B_3, C_3, F_4 and G_2 and is a convention elsewhere.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Hashable, Iterable, NamedTuple

from .cartan import CartanData

__all__ = [
    "Vertex",
    "LabeledQuiver",
    "MutationSchedule",
    "w_parity",
    "in_w",
    "in_v",
    "psi",
    "psi_inv",
    "guard_band",
    "default_depth",
    "build_g_minus",
    "build_gamma_minus",
    "build_gamma_tilde_window",
    "column_index",
    "columns",
    "column_order",
    "column_vertices",
    "mutation_schedule",
]


class Vertex(NamedTuple):
    node: int
    shift: int

    def name(self) -> str:
        return f"{self.node}_{self.shift}"


def _anchor(cd: CartanData) -> int:
    if cd.letter == "A" and cd.rank >= 3:
        return 2
    return cd.rank


def w_parity(cd: CartanData) -> dict[int, int]:
    """Parity p_i with (i, s) in W iff s = p_i mod 2."""
    a = _anchor(cd)
    par = {a: 0}
    stack = [a]
    while stack:
        i = stack.pop()
        for j in cd.neighbours(i):
            pj = (par[i] + cd.b(i, j) + cd.di(j) - cd.di(i)) % 2
            if j in par:
                if par[j] != pj:
                    raise AssertionError("inconsistent parity propagation")
            else:
                par[j] = pj
                stack.append(j)
    return par


def in_w(cd: CartanData, i: int, s: int) -> bool:
    return (s - w_parity(cd)[i]) % 2 == 0


def in_v(cd: CartanData, i: int, r: int) -> bool:
    return in_w(cd, i, r + cd.di(i))


def psi(cd: CartanData, v: tuple[int, int]) -> Vertex:
    return Vertex(v[0], v[1] + cd.di(v[0]))


def psi_inv(cd: CartanData, v: tuple[int, int]) -> Vertex:
    return Vertex(v[0], v[1] - cd.di(v[0]))


def guard_band(cd: CartanData) -> int:
    return 2 * cd.t * cd.h_dual + 2 * cd.b_max


def default_depth(cd: CartanData, passes: int, k_max: int) -> int:
    return -(2 * cd.t * passes + 2 * cd.t * cd.h_dual + cd.b_max * (2 * k_max + 2))


class LabeledQuiver:
    """Finite quiver with an arrow multiset and a set of frozen vertices.

    Vertices are arbitrary hashable keys (``Vertex`` for the main quiver).
    Arrows are stored as adjacency counters in both directions.
    """

    __slots__ = ("vertices", "frozen", "out", "inn")

    def __init__(self, vertices: Iterable[Hashable], arrows: Iterable[tuple[Hashable, Hashable]] = (), frozen: Iterable[Hashable] = ()):
        self.vertices = set(vertices)
        self.frozen = set(frozen)
        self.out: dict[Hashable, Counter] = defaultdict(Counter)
        self.inn: dict[Hashable, Counter] = defaultdict(Counter)
        for u, w in arrows:
            self.add_arrows(u, w, 1)

    def copy(self) -> "LabeledQuiver":
        q = LabeledQuiver.__new__(LabeledQuiver)
        q.vertices = set(self.vertices)
        q.frozen = set(self.frozen)
        q.out = defaultdict(Counter, {u: Counter(c) for u, c in self.out.items() if c})
        q.inn = defaultdict(Counter, {u: Counter(c) for u, c in self.inn.items() if c})
        return q

    def add_arrows(self, u, w, m: int) -> None:
        """Add m arrows u -> w (m may be negative: then arrows w -> u), cancelling 2-cycles."""
        if u == w:
            raise ValueError("loops are not allowed")
        if u not in self.vertices or w not in self.vertices:
            raise KeyError("arrow endpoint outside the vertex set")
        net = self.out[u][w] - self.out[w][u] + m
        for a, b in ((u, w), (w, u)):
            self.out[a].pop(b, None)
            self.inn[b].pop(a, None)
        if net > 0:
            self.out[u][w] = net
            self.inn[w][u] = net
        elif net < 0:
            self.out[w][u] = -net
            self.inn[u][w] = -net

    def arrows(self) -> Counter:
        c = Counter()
        for u, targets in self.out.items():
            for w, m in targets.items():
                if m:
                    c[(u, w)] = m
        return c

    def arrow_count(self, u, w) -> int:
        return self.out[u][w] if u in self.out else 0

    def mutable(self) -> set:
        return self.vertices - self.frozen

    def mutate(self, k) -> None:
        """Quiver mutation at k, in place."""
        if k in self.frozen or k not in self.vertices:
            raise ValueError(f"cannot mutate at {k!r}")
        ins = list(self.inn[k].items())
        outs = list(self.out[k].items())
        frozen = self.frozen
        for u, a in ins:
            for w, b in outs:
                if u == w or (u in frozen and w in frozen):
                    continue
                self.add_arrows(u, w, a * b)
        # reverse the arrows at k
        for u, a in ins:
            del self.out[u][k]
        for w, b in outs:
            del self.inn[w][k]
        self.out[k] = Counter(dict(ins))
        self.inn[k] = Counter(dict(outs))
        for u, a in ins:
            self.inn[u][k] = a
        for w, b in outs:
            self.out[w][k] = b

    def restrict(self, keep: Iterable[Hashable]) -> "LabeledQuiver":
        keep = set(keep) & self.vertices
        q = LabeledQuiver(keep, frozen=self.frozen & keep)
        for (u, w), m in self.arrows().items():
            if u in keep and w in keep:
                q.out[u][w] = m
                q.inn[w][u] = m
        return q

    def relabel(self, fn) -> "LabeledQuiver":
        q = LabeledQuiver((fn(x) for x in self.vertices), frozen=(fn(x) for x in self.frozen))
        if len(q.vertices) != len(self.vertices):
            raise ValueError("relabelling is not injective")
        for (u, w), m in self.arrows().items():
            q.out[fn(u)][fn(w)] = m
            q.inn[fn(w)][fn(u)] = m
        return q

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LabeledQuiver):
            return NotImplemented
        return self.vertices == other.vertices and self.arrows() == other.arrows() and self.frozen == other.frozen

    def same_arrows(self, other: "LabeledQuiver") -> bool:
        return self.vertices == other.vertices and self.arrows() == other.arrows()

    def to_dot(self, name: str = "Q") -> str:
        def nm(x):
            if isinstance(x, Vertex):
                return x.name()
            return "_".join(str(p) for p in x)

        def key(x):
            return (str(type(x)), tuple(x))

        lines = [f"digraph {name} {{"]
        for x in sorted(self.vertices, key=key):
            shape = "box" if x in self.frozen else "ellipse"
            lines.append(f'  "{nm(x)}" [shape={shape}];')
        for (u, w), m in sorted(self.arrows().items(), key=lambda t: (key(t[0][0]), key(t[0][1]))):
            for _ in range(m):
                lines.append(f'  "{nm(u)}" -> "{nm(w)}";')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_json_obj(self) -> dict:
        return {
            "vertices": [list(x) for x in sorted(self.vertices, key=tuple)],
            "frozen": [list(x) for x in sorted(self.frozen, key=tuple)],
            "arrows": [[list(u), list(w), m] for (u, w), m in sorted(self.arrows().items())],
        }


def _w_window(cd: CartanData, depth: int) -> list[Vertex]:
    par = w_parity(cd)
    verts = []
    for i in cd.nodes:
        s = 0 if par[i] == 0 else -1
        while s >= depth:
            verts.append(Vertex(i, s))
            s -= 2
    return verts


def build_g_minus(cd: CartanData, depth: int, guard: int | None = None) -> LabeledQuiver:
    """G^- restricted to shifts >= depth, W labels.

    Vertices with shift < depth + guard are frozen (default guard from
    :func:`guard_band`; pass ``guard=0`` for no frozen band).
    """
    if depth >= 0:
        raise ValueError("depth must be negative")
    g = guard_band(cd) if guard is None else guard
    verts = _w_window(cd, depth)
    vs = set(verts)
    arrows = []
    for (i, s) in verts:
        up = Vertex(i, s + cd.bii(i))
        if up in vs:
            arrows.append((Vertex(i, s), up))
        for j in cd.neighbours(i):
            tgt = Vertex(j, s + cd.b(i, j) + cd.di(j) - cd.di(i))
            if tgt in vs:
                arrows.append((Vertex(i, s), tgt))
    frozen = [x for x in verts if x.shift < depth + g]
    return LabeledQuiver(verts, arrows, frozen)


def build_gamma_minus(cd: CartanData, depth: int, guard: int | None = None) -> LabeledQuiver:
    """Same graph as :func:`build_g_minus`, V labels."""
    return build_g_minus(cd, depth, guard).relabel(lambda x: psi_inv(cd, x))


def build_gamma_tilde_window(cd: CartanData, lo: int, hi: int) -> LabeledQuiver:
    """The doubly-infinite quiver on I x [lo, hi] (both components), V labels."""
    verts = [Vertex(i, r) for i in cd.nodes for r in range(lo, hi + 1)]
    vs = set(verts)
    arrows = []
    for (i, r) in verts:
        for j in cd.nodes:
            if cd.b(i, j) != 0:
                tgt = Vertex(j, r + cd.b(i, j))
                if tgt in vs:
                    arrows.append((Vertex(i, r), tgt))
    return LabeledQuiver(verts, arrows)


def column_index(cd: CartanData, i: int, r: int) -> int:
    """k_{i,r}: position of (i, r) in its column, counted from the top."""
    if r > 0 or not in_w(cd, i, r):
        raise ValueError(f"({i},{r}) is not in W^-")
    return -r // cd.bii(i) + 1


def columns(cd: CartanData) -> list[Vertex]:
    """Top vertices of all columns of G^- (d_i columns for node i)."""
    par = w_parity(cd)
    tops = []
    for i in cd.nodes:
        s = 0 if par[i] == 0 else -1
        for _ in range(cd.di(i)):
            tops.append(Vertex(i, s))
            s -= 2
    return tops


@dataclass(frozen=True)
class MutationSchedule:
    """One pass of the column schedule: column visits in order, each read top to bottom."""

    column_order: tuple[Vertex, ...]
    runs: tuple[tuple[Vertex, ...], ...]

    @property
    def sequence(self) -> tuple[Vertex, ...]:
        return tuple(x for run in self.runs for x in run)

    @property
    def pass_length(self) -> int:
        return sum(len(run) for run in self.runs)


def column_order(cd: CartanData) -> list[Vertex]:
    """Order of the t*n column visits in one pass (by the column's top vertex)."""
    labels = {top: top.shift for top in columns(cd)}
    order = []
    for _ in range(cd.t * cd.n):
        top = max(labels, key=lambda c: (labels[c], -c.node))
        order.append(top)
        labels[top] -= cd.bii(top.node)
    return order


def column_vertices(cd: CartanData, top: Vertex, quiver: LabeledQuiver) -> list[Vertex]:
    out = []
    s = top.shift
    b = cd.bii(top.node)
    while True:
        x = Vertex(top.node, s)
        if x not in quiver.vertices:
            break
        if x not in quiver.frozen:
            out.append(x)
        s -= b
    return out


def mutation_schedule(cd: CartanData, depth: int, quiver: LabeledQuiver | None = None) -> MutationSchedule:
    """The sequence of one pass restricted to the non-frozen part of the window."""
    if quiver is None:
        quiver = build_g_minus(cd, depth)
    order = column_order(cd)
    runs = tuple(tuple(column_vertices(cd, top, quiver)) for top in order)
    return MutationSchedule(tuple(order), runs)
