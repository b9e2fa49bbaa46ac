"""The quiver with potential on Gamma^-, its truncated Jacobian algebras and
the generic-kernel modules whose F-polynomials give KR q-characters.

Vertices use V labels ``(i, r)``.  Arrows of Gamma^- are oblique
``(i, r) -> (j, r + b_ij)`` and vertical ``(i, r) -> (i, r + b_ii)``.
For every ``(i, m)`` and neighbour ``j`` the potential has the cycle

    (i, m) -> (j, m + b_ij) -> (i, m + 2 b_ij) -> ... vertical ... -> (i, m)

with |c_ij| vertical arrows.  Vertical arrows get weight b_ii and oblique
ones D - |b_ij|, which makes every cycle weigh 2D and every relation
homogeneous.  The truncated algebra is then computed one weight at a time:
``A_w(v, x)`` is spanned by ``a * A_{w - w(a)}(head a, x)`` modulo the
relations starting at ``v``.  Since arrows weigh at most ``max_w``, once
``max_w`` consecutive weights vanish every higher weight vanishes too.

The injective ``I_x`` has ``I_x(v) = A(v, x)^*``; an arrow ``a: u -> w``
acts by the transpose of ``q -> a q``.  ``Hom(I_x, I_y)`` is ``A(y, x)``,
with ``p`` acting by ``phi -> (q -> phi(q p))``.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple

import flint

from .cartan import CartanData, positive_roots
from .laurent import LaurentPoly, VarId
from .quiverbuild import Vertex, in_v

__all__ = [
    "Arrow",
    "BoundQuiver",
    "Potential",
    "RelationSet",
    "AlgebraBasis",
    "BoundQuiverRep",
    "NonGenericSampling",
    "PointCountError",
    "DEFAULT_SEED",
    "bound_quiver",
    "normal_shape",
    "build_potential",
    "cyclic_derivatives",
    "truncated_algebra",
    "injective_module",
    "kernel_depth",
    "generic_kernel",
    "g_vector",
    "km_module",
    "module_fpolynomial",
    "v_monomial",
    "evaluate_v",
    "geometric_qcharacter",
    "module_qcharacter",
    "cluster_fpolynomial",
    "ungraded_dimension_vector",
    "dimension_vector_sum_check",
]

DEFAULT_SEED = 0xC1057E2


class NonGenericSampling(RuntimeError):
    """Random homomorphisms kept disagreeing on the kernel's F-polynomial."""


class PointCountError(ArithmeticError):
    """Point counts of a quiver Grassmannian did not fit a polynomial."""


class Arrow(NamedTuple):
    source: Vertex
    target: Vertex

    @property
    def vertical(self) -> bool:
        return self.source.node == self.target.node

    def __str__(self) -> str:
        return f"({self.source.node},{self.source.shift})->({self.target.node},{self.target.shift})"


# ---------------------------------------------------------------------------
# quiver, potential, relations


@dataclass(frozen=True)
class BoundQuiver:
    """Gamma^- cut at shifts >= depth, with arrow weights."""

    cd: CartanData
    depth: int
    vertices: tuple[Vertex, ...]
    arrows: tuple[Arrow, ...]

    @cached_property
    def vertex_set(self) -> frozenset:
        return frozenset(self.vertices)

    @cached_property
    def out_arrows(self) -> dict[Vertex, list[Arrow]]:
        out = {x: [] for x in self.vertices}
        for a in self.arrows:
            out[a.source].append(a)
        return out

    @cached_property
    def in_arrows(self) -> dict[Vertex, list[Arrow]]:
        inn = {x: [] for x in self.vertices}
        for a in self.arrows:
            inn[a.target].append(a)
        return inn

    @cached_property
    def cycle_weight(self) -> int:
        offdiag = [abs(self.cd.b(i, j)) for i in self.cd.nodes for j in self.cd.neighbours(i)]
        return 2 * (max(offdiag, default=0) + 2)

    def weight(self, a: Arrow) -> int:
        if a.vertical:
            return self.cd.bii(a.source.node)
        return self.cycle_weight // 2 - abs(self.cd.b(a.source.node, a.target.node))

    @cached_property
    def max_weight(self) -> int:
        return max((self.weight(a) for a in self.arrows), default=1)


def bound_quiver(cd: CartanData, depth: int) -> BoundQuiver:
    if depth >= 0:
        raise ValueError("depth must be negative")
    verts = []
    for i in cd.nodes:
        for r in range(-cd.di(i), depth - 1, -1):
            if in_v(cd, i, r):
                verts.append(Vertex(i, r))
    vs = set(verts)
    arrows = []
    for x in verts:
        i, r = x
        up = Vertex(i, r + cd.bii(i))
        if up in vs:
            arrows.append(Arrow(x, up))
        for j in cd.neighbours(i):
            y = Vertex(j, r + cd.b(i, j))
            if y in vs:
                arrows.append(Arrow(x, y))
    return BoundQuiver(cd, depth, tuple(sorted(verts, key=lambda x: (-x.shift, x.node))), tuple(arrows))


@dataclass(frozen=True)
class Potential:
    quiver: BoundQuiver
    cycles: tuple[tuple[Arrow, ...], ...]

    def __len__(self) -> int:
        return len(self.cycles)


def build_potential(cd: CartanData, depth: int) -> Potential:
    """One cycle per (i, m) in the window and neighbour j, if it fits."""
    q = bound_quiver(cd, depth)
    cycles = []
    for (i, m) in q.vertices:
        for j in cd.neighbours(i):
            b = cd.b(i, j)
            low = Vertex(i, m + 2 * b)
            if low not in q.vertex_set:
                continue
            mid = Vertex(j, m + b)
            cyc = [Arrow(Vertex(i, m), mid), Arrow(mid, low)]
            s = low.shift
            for _ in range(abs(cd.c(i, j))):
                cyc.append(Arrow(Vertex(i, s), Vertex(i, s + cd.bii(i))))
                s += cd.bii(i)
            assert s == m
            cycles.append(tuple(cyc))
    return Potential(q, tuple(cycles))


@dataclass(frozen=True)
class RelationSet:
    """``relations[a]`` is the cyclic derivative of S by ``a``: a list of
    (coefficient, path) with paths running from head(a) to tail(a)."""

    quiver: BoundQuiver
    relations: Mapping[Arrow, tuple[tuple[int, tuple[Arrow, ...]], ...]]

    def __len__(self) -> int:
        return len(self.relations)

    def __iter__(self):
        return iter(self.relations.items())


def cyclic_derivatives(p: Potential) -> RelationSet:
    acc: dict[Arrow, list] = {}
    for cyc in p.cycles:
        for pos, a in enumerate(cyc):
            acc.setdefault(a, []).append((1, cyc[pos + 1:] + cyc[:pos]))
    return RelationSet(p.quiver, {a: tuple(terms) for a, terms in acc.items()})


# ---------------------------------------------------------------------------
# exact linear algebra


def _rref(rows: list[dict[int, object]], ncols: int) -> tuple[list[int], list[list]]:
    """Pivot columns and the nonzero rows of the reduced row echelon form."""
    if not rows or not ncols:
        return [], []
    m = flint.fmpq_mat(len(rows), ncols)
    for r, row in enumerate(rows):
        for c, val in row.items():
            m[r, c] = val
    red, rank = m.rref()
    out, pivots = [], []
    for r in range(rank):
        row = [red[r, c] for c in range(ncols)]
        pivots.append(next(c for c, x in enumerate(row) if x != 0))
        out.append(row)
    return pivots, out


def _nullspace(rows: list[list], ncols: int) -> tuple[list[int], list[list]]:
    """Free columns and a basis of the nullspace, one vector per free column
    (with a 1 there and 0 at the other free columns)."""
    pivots, red = _rref([{c: x for c, x in enumerate(row) if x != 0} for row in rows], ncols)
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for f in free:
        vec = [flint.fmpq(0)] * ncols
        vec[f] = flint.fmpq(1)
        for p, row in zip(pivots, red):
            vec[p] = -row[f]
        basis.append(vec)
    return free, basis


def _matmul(a: list[list], b: list[list], inner: int) -> list[list]:
    ncols = len(b[0]) if b else 0
    return [[sum((row[k] * b[k][c] for k in range(inner) if row[k] != 0), flint.fmpq(0)) for c in range(ncols)] for row in a]


def _to_fraction(x) -> Fraction:
    return Fraction(int(x.p), int(x.q))


# ---------------------------------------------------------------------------
# graded normal forms


class _Comp:
    """A_w(v, x): its spanning set, normal-form basis and quotient map."""

    __slots__ = ("pre", "index", "basis", "proj", "paths")

    def __init__(self):
        self.pre: list[tuple[Arrow, int]] = []
        self.index: dict[tuple[Arrow, int], int] = {}
        self.basis: list[int] = []
        self.proj: list[dict[int, object]] = []
        self.paths: list[tuple[Arrow, ...]] = []

    @property
    def dim(self) -> int:
        return len(self.paths)


def _trivial() -> _Comp:
    c = _Comp()
    c.paths = [()]
    return c


def normal_shape(cd: CartanData, path: tuple[Arrow, ...]) -> bool:
    """A vertical run, then runs that each follow an oblique arrow j -> k and
    have fewer than |c_kj| vertical arrows.  In simply laced types: all
    vertical arrows come first."""
    prev = None
    run = 0
    for a in path:
        if a.vertical:
            if prev is not None:
                run += 1
                if run >= abs(cd.c(prev.target.node, prev.source.node)):
                    return False
        else:
            prev, run = a, 0
    return True


class AlgebraBasis:
    """Normal-form basis of A_depth, computed lazily one target at a time."""

    def __init__(self, cd: CartanData, depth: int):
        self.cd = cd
        self.depth = depth
        self.potential = build_potential(cd, depth)
        self.relations = cyclic_derivatives(self.potential)
        self.quiver = self.potential.quiver
        self._slices: dict[Vertex, dict[tuple[Vertex, int], _Comp]] = {}

    # -- construction -------------------------------------------------
    def _slice(self, x: Vertex) -> dict[tuple[Vertex, int], _Comp]:
        sl = self._slices.get(x)
        if sl is None:
            if x not in self.quiver.vertex_set:
                raise ValueError(f"vertex {tuple(x)} is outside the window")
            sl = self._slices[x] = self._build(x)
        return sl

    def _build(self, x: Vertex) -> dict[tuple[Vertex, int], _Comp]:
        q = self.quiver
        comps: dict[tuple[Vertex, int], _Comp] = {(x, 0): _trivial()}
        rel = self.relations.relations
        cw = q.cycle_weight
        last, w = 0, 0
        while w - last <= q.max_weight:
            w += 1
            for v in q.vertices:
                c = _Comp()
                for a in q.out_arrows[v]:
                    sub = comps.get((a.target, w - q.weight(a)))
                    if sub is not None:
                        for j in range(sub.dim):
                            c.index[(a, j)] = len(c.pre)
                            c.pre.append((a, j))
                if not c.pre:
                    continue
                rows = []
                for b in q.in_arrows[v]:
                    terms = rel.get(b)
                    if not terms:
                        continue
                    sub = comps.get((b.source, w - (cw - q.weight(b))))
                    if sub is None:
                        continue
                    for beta in range(sub.dim):
                        row: dict[int, object] = {}
                        for coeff, path in terms:
                            vec = self._lift(comps, path[1:], {beta: flint.fmpq(1)}, b.source, w - (cw - q.weight(b)))
                            for j, val in vec.items():
                                k = c.index[(path[0], j)]
                                row[k] = row.get(k, 0) + coeff * val
                        row = {k: val for k, val in row.items() if val != 0}
                        if row:
                            rows.append(row)
                self._reduce(c, comps, rows, w)
                if c.dim:
                    comps[(v, w)] = c
                    last = w
        return comps

    def _nf_path(self, comps, entry: tuple[Arrow, int], w: int) -> tuple[Arrow, ...]:
        a, j = entry
        return (a,) + comps[(a.target, w - self.quiver.weight(a))].paths[j]

    def _reduce(self, c: _Comp, comps, rows: list[dict], w: int) -> None:
        n = len(c.pre)
        paths = [self._nf_path(comps, e, w) for e in c.pre]
        # entries not of normal shape sit first, so rref eliminates them first
        order = sorted(range(n), key=lambda k: (normal_shape(self.cd, paths[k]), k))
        place = {k: p for p, k in enumerate(order)}
        pivots, red = _rref([{place[k]: val for k, val in row.items()} for row in rows], n)
        pivset = set(pivots)
        keep = [order[p] for p in range(n) if p not in pivset]
        bpos = {k: b for b, k in enumerate(keep)}
        c.basis = keep
        c.paths = [paths[k] for k in keep]
        c.proj = [None] * n
        for k in keep:
            c.proj[k] = {bpos[k]: flint.fmpq(1)}
        for p, row in zip(pivots, red):
            c.proj[order[p]] = {bpos[order[q]]: -row[q] for q in range(n) if q not in pivset and row[q] != 0}

    def _lift(self, comps, path: tuple[Arrow, ...], vec: dict[int, object], end: Vertex, w: int) -> dict[int, object]:
        """Coordinates in A(start of path, x) of path * (vec in A_w(end, x))."""
        q = self.quiver
        for a in reversed(path):
            w += q.weight(a)
            c = comps.get((a.source, w))
            if c is None:
                return {}
            out: dict[int, object] = {}
            for j, val in vec.items():
                for pos, coeff in c.proj[c.index[(a, j)]].items():
                    out[pos] = out.get(pos, 0) + val * coeff
            vec = {k: val for k, val in out.items() if val != 0}
            if not vec:
                return {}
        return vec

    # -- queries ------------------------------------------------------
    def basis_keys(self, v: Vertex, x: Vertex) -> list[tuple[int, int]]:
        """(weight, position) of the normal forms of paths v -> x."""
        sl = self._slice(Vertex(*x))
        return sorted((w, j) for (u, w), c in sl.items() if u == v for j in range(c.dim))

    def dim(self, v: Vertex, x: Vertex) -> int:
        return len(self.basis_keys(Vertex(*v), x))

    def path(self, v: Vertex, x: Vertex, key: tuple[int, int]) -> tuple[Arrow, ...]:
        w, j = key
        return self._slice(Vertex(*x))[(Vertex(*v), w)].paths[j]

    def normal_forms(self, v: Vertex, x: Vertex) -> list[tuple[Arrow, ...]]:
        return [self.path(v, x, key) for key in self.basis_keys(Vertex(*v), x)]

    def support(self, x: Vertex) -> dict[Vertex, int]:
        """dim A(v, x) for every v with a nonzero space."""
        out: dict[Vertex, int] = {}
        for (u, _), c in self._slice(Vertex(*x)).items():
            out[u] = out.get(u, 0) + c.dim
        return out

    def multiply(self, path: tuple[Arrow, ...], x: Vertex, vec: Mapping[tuple[int, int], object]) -> dict[tuple[int, int], object]:
        """path * (vec in A(end of path, x)) in the basis of A(start, x)."""
        x = Vertex(*x)
        sl = self._slice(x)
        end = path[-1].target if path else None
        by_w: dict[int, dict[int, object]] = {}
        for (w, j), val in vec.items():
            by_w.setdefault(w, {})[j] = val
        out: dict[tuple[int, int], object] = {}
        shift = sum(self.quiver.weight(a) for a in path)
        for w, sub in by_w.items():
            if not path:
                res = sub
            else:
                res = self._lift(sl, path, sub, end, w)
            for j, val in res.items():
                out[(w + shift, j)] = val
        return out

    def total_dimension(self) -> int:
        return sum(sum(self.support(x).values()) for x in self.quiver.vertices)

    def max_weight_reached(self, x: Vertex) -> int:
        return max(w for (_, w) in self._slice(Vertex(*x)))


def truncated_algebra(cd: CartanData, depth: int) -> AlgebraBasis:
    return AlgebraBasis(cd, depth)


# ---------------------------------------------------------------------------
# representations


@dataclass
class BoundQuiverRep:
    """A representation of (Gamma^-_depth, J).  ``maps[a]`` has shape
    dims[target] x dims[source]; vertices with zero space are omitted."""

    cd: CartanData
    relations: RelationSet
    dims: dict[Vertex, int]
    maps: dict[Arrow, list[list[Fraction]]] = field(default_factory=dict)

    @property
    def total_dim(self) -> int:
        return sum(self.dims.values())

    def support(self) -> list[Vertex]:
        return sorted((x for x, d in self.dims.items() if d), key=lambda x: (-x.shift, x.node))

    def dimension_vector(self) -> dict[Vertex, int]:
        return {x: d for x, d in self.dims.items() if d}

    def matrix(self, a: Arrow) -> list[list[Fraction]]:
        m = self.maps.get(a)
        if m is not None:
            return m
        return [[Fraction(0)] * self.dims.get(a.source, 0) for _ in range(self.dims.get(a.target, 0))]

    def arrows(self) -> list[Arrow]:
        return [a for a in self.relations.quiver.arrows if self.dims.get(a.source) and self.dims.get(a.target)]

    def path_matrix(self, path: tuple[Arrow, ...]) -> list[list[Fraction]]:
        start = path[0].source
        d = self.dims.get(start, 0)
        m = [[Fraction(int(r == c)) for c in range(d)] for r in range(d)]
        for a in path:
            nxt = self.matrix(a)
            m = [[sum((row[k] * m[k][c] for k in range(len(m)) if row[k]), Fraction(0)) for c in range(d)] for row in nxt]
        return m

    def relations_hold(self) -> bool:
        for _, terms in self.relations:
            total = None
            for coeff, path in terms:
                m = self.path_matrix(path)
                m = [[coeff * x for x in row] for row in m]
                total = m if total is None else [[x + y for x, y in zip(r1, r2)] for r1, r2 in zip(total, m)]
            if total and any(x for row in total for x in row):
                return False
        return True

    def direct_sum(self, other: "BoundQuiverRep") -> "BoundQuiverRep":
        dims = {x: self.dims.get(x, 0) + other.dims.get(x, 0) for x in set(self.dims) | set(other.dims)}
        maps = {}
        for a in set(self.maps) | set(other.maps):
            m1, m2 = self.matrix(a), other.matrix(a)
            s1, s2 = self.dims.get(a.source, 0), other.dims.get(a.source, 0)
            rows = [r + [Fraction(0)] * s2 for r in m1] + [[Fraction(0)] * s1 + r for r in m2]
            if rows and any(x for r in rows for x in r):
                maps[a] = rows
        return BoundQuiverRep(self.cd, self.relations, {x: d for x, d in dims.items() if d}, maps)

    # -- export -------------------------------------------------------
    def to_json_obj(self) -> dict:
        return {
            "vertices": [{"node": x.node, "shift": x.shift, "dim": self.dims[x]} for x in self.support()],
            "arrows": [
                {
                    "from": [a.source.node, a.source.shift],
                    "to": [a.target.node, a.target.shift],
                    "matrix": [[str(x) for x in row] for row in self.matrix(a)],
                }
                for a in self.arrows()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2)

    def to_dot(self, name: str = "K") -> str:
        lines = [f"digraph {name} {{", "  rankdir=BT;"]
        for x in self.support():
            label = f"({x.node},{x.shift})" + (f" [{self.dims[x]}]" if self.dims[x] > 1 else "")
            lines.append(f'  "{x.node}_{x.shift}" [label="{label}"];')
        for a in self.arrows():
            if any(x for row in self.matrix(a) for x in row):
                lines.append(f'  "{a.source.node}_{a.source.shift}" -> "{a.target.node}_{a.target.shift}";')
        lines.append("}")
        return "\n".join(lines)


def _injective_parts(alg: AlgebraBasis, x: Vertex):
    """Bases of I_x(v) and the arrow matrices (as fmpq rows)."""
    q = alg.quiver
    keys = {v: alg.basis_keys(v, x) for v in q.vertices}
    keys = {v: ks for v, ks in keys.items() if ks}
    pos = {v: {k: n for n, k in enumerate(ks)} for v, ks in keys.items()}
    mats = {}
    for a in q.arrows:
        u, w = a.source, a.target
        if u not in keys or w not in keys:
            continue
        rows = []
        for k in keys[w]:
            img = alg.multiply((a,), x, {k: flint.fmpq(1)})
            row = [flint.fmpq(0)] * len(keys[u])
            for kk, val in img.items():
                row[pos[u][kk]] = val
            rows.append(row)
        if any(val != 0 for row in rows for val in row):
            mats[a] = rows
    return keys, pos, mats


def _as_rep(alg: AlgebraBasis, dims: dict, mats: dict) -> BoundQuiverRep:
    maps = {a: [[_to_fraction(val) for val in row] for row in m] for a, m in mats.items()}
    return BoundQuiverRep(alg.cd, alg.relations, {x: d for x, d in dims.items() if d}, maps)


def injective_module(alg: AlgebraBasis, i: int, m: int) -> BoundQuiverRep:
    x = Vertex(i, m)
    if x not in alg.quiver.vertex_set:
        raise ValueError(f"({i},{m}) is not a vertex of the window")
    keys, _, mats = _injective_parts(alg, x)
    return _as_rep(alg, {v: len(ks) for v, ks in keys.items()}, mats)


# ---------------------------------------------------------------------------
# generic kernels


def kernel_depth(cd: CartanData, lowest: int) -> int:
    """Window depth used for kernels whose injectives sit at shifts >= lowest."""
    return lowest - 2 * cd.t * cd.h_dual


def _kernel(alg: AlgebraBasis, sources: list[Vertex], targets: list[Vertex], rng: random.Random, span: int):
    """Kernel of a random map from sum I_x (x in sources) to sum I_y (y in targets)."""
    src = [_injective_parts(alg, x) for x in sources]
    tgt_keys = [{v: alg.basis_keys(v, y) for v in alg.quiver.vertices} for y in targets]
    # random element of A(y, x) for every pair, by weight
    coeffs = {}
    for a, x in enumerate(sources):
        for b, y in enumerate(targets):
            coeffs[(a, b)] = {k: flint.fmpq(rng.randint(-span, span)) for k in alg.basis_keys(y, x)}
    verts = sorted(set().union(*(ks for ks, _, _ in src)) if src else set(), key=lambda v: (-v.shift, v.node))
    offsets, kernels = {}, {}
    for v in verts:
        off, n = [], 0
        for ks, _, _ in src:
            off.append(n)
            n += len(ks.get(v, ()))
        offsets[v] = off
        rows = []
        for b, y in enumerate(targets):
            for qk in tgt_keys[b].get(v, ()):
                qpath = alg.path(v, y, qk)
                row = [flint.fmpq(0)] * n
                for a, x in enumerate(sources):
                    img = alg.multiply(qpath, x, coeffs[(a, b)])
                    posx = src[a][1].get(v, {})
                    for kk, val in img.items():
                        row[off[a] + posx[kk]] += val
                rows.append(row)
        free, basis = _nullspace(rows, n)
        if basis:
            kernels[v] = (free, basis)
    dims = {v: len(kb[1]) for v, kb in kernels.items()}
    mats = {}
    for arr in alg.quiver.arrows:
        u, w = arr.source, arr.target
        if u not in kernels or w not in kernels:
            continue
        # block-diagonal action on the sum, applied to the kernel basis at u
        imgs = []
        for vec in kernels[u][1]:
            out = [flint.fmpq(0)] * sum(len(ks.get(w, ())) for ks, _, _ in src)
            for a, (ks, _, m) in enumerate(src):
                blk = m.get(arr)
                if blk is None:
                    continue
                nu = len(ks[u])
                seg = vec[offsets[u][a]:offsets[u][a] + nu]
                for r, row in enumerate(blk):
                    out[offsets[w][a] + r] = sum((row[c] * seg[c] for c in range(nu) if seg[c] != 0), flint.fmpq(0))
            imgs.append(out)
        free_w = kernels[w][0]
        # kernel vectors at w are read off on their free coordinates
        mat = [[imgs[c][f] for c in range(len(imgs))] for f in free_w]
        if any(val != 0 for row in mat for val in row):
            mats[arr] = mat
    return dims, mats


def generic_kernel(alg: AlgebraBasis, i: int, k: int, m: int, rng_seed: int = DEFAULT_SEED, samples: int = 3) -> BoundQuiverRep:
    """The module K^{(i)}_{k,m}: kernel of a generic map I_{i,m} -> I_{i,m-k b_ii}."""
    return _generic(alg, [Vertex(i, m)], [Vertex(i, m - k * alg.cd.bii(i))], rng_seed, samples)


def _generic(alg: AlgebraBasis, sources: list[Vertex], targets: list[Vertex], rng_seed: int, samples: int) -> BoundQuiverRep:
    for v in sources + targets:
        if v not in alg.quiver.vertex_set:
            raise ValueError(f"{tuple(v)} is outside the window at depth {alg.depth}")
    if not sources:
        return BoundQuiverRep(alg.cd, alg.relations, {})
    rng = random.Random(rng_seed)
    span = 13
    for _ in range(3):
        draws = [_as_rep(alg, *_kernel(alg, sources, targets, rng, span)) for _ in range(samples)]
        sizes = [r.total_dim for r in draws]
        best = draws[sizes.index(min(sizes))]
        Fs = {module_fpolynomial(r) for r in draws}
        if len(Fs) == 1:
            _check_margin(alg, best)
            return best
        span *= 10
    raise NonGenericSampling(f"F-polynomials disagree across draws for {sources} -> {targets}")


def _check_margin(alg: AlgebraBasis, rep: BoundQuiverRep) -> None:
    cd = alg.cd
    if rep.dims and min(x.shift for x in rep.support()) < alg.depth + cd.t * cd.h_dual:
        raise ValueError(f"kernel reaches the bottom band of the window at depth {alg.depth}; use a deeper window")


def g_vector(cd: CartanData, m: LaurentPoly) -> dict[Vertex, int]:
    """Exponents of m rewritten through Y_{i,r} = z_{i,r} / z_{i,r+b_ii}, z_{>0} = 1."""
    if not m.is_monomial():
        raise ValueError("expected a monomial")
    g: dict[Vertex, int] = {}
    for var, e in m.exponent_dict().items():
        if var.family != "Y":
            raise ValueError("expected a monomial in Y")
        if e < 0:
            raise ValueError("monomial is not dominant")
        if var.shift > 0:
            raise ValueError("monomial is not in Y^-")
        up = var.shift + cd.bii(var.node)
        g[Vertex(var.node, var.shift)] = g.get(Vertex(var.node, var.shift), 0) + e
        if up <= 0:
            g[Vertex(var.node, up)] = g.get(Vertex(var.node, up), 0) - e
    return {x: e for x, e in g.items() if e}


def km_module(alg: AlgebraBasis, m: LaurentPoly, rng_seed: int = DEFAULT_SEED, samples: int = 3) -> BoundQuiverRep:
    """K(m): generic kernel from I(m)^- to I(m)^+, in V labels (i, r - d_i)."""
    cd = alg.cd
    g = g_vector(cd, m)
    plus = [Vertex(x.node, x.shift - cd.di(x.node)) for x, e in sorted(g.items()) if e > 0 for _ in range(e)]
    minus = [Vertex(x.node, x.shift - cd.di(x.node)) for x, e in sorted(g.items()) if e < 0 for _ in range(-e)]
    return _generic(alg, minus, plus, rng_seed, samples)


# ---------------------------------------------------------------------------
# F-polynomials


def v_monomial(dimvec: Mapping[Vertex, int]) -> LaurentPoly:
    return LaurentPoly.monomial({VarId("v", x.node, x.shift): e for x, e in dimvec.items() if e})


def _nonzero(m: list[list[Fraction]]) -> bool:
    return any(x for row in m for x in row)


def _closed_subsets(rep: BoundQuiverRep) -> LaurentPoly:
    """Sum over arrow-closed subsets of the support (all spaces of dim <= 1)."""
    verts = rep.support()
    idx = {x: n for n, x in enumerate(verts)}
    succ = [0] * len(verts)
    pred = [0] * len(verts)
    for a in rep.arrows():
        if _nonzero(rep.matrix(a)):
            succ[idx[a.source]] |= 1 << idx[a.target]
            pred[idx[a.target]] |= 1 << idx[a.source]

    def closure(adj, n):
        seen, stack = 1 << n, [n]
        while stack:
            u = stack.pop()
            nb = adj[u] & ~seen
            seen |= nb
            while nb:
                low = nb & -nb
                stack.append(low.bit_length() - 1)
                nb ^= low
        return seen

    up = [closure(succ, n) for n in range(len(verts))]
    down = [closure(pred, n) for n in range(len(verts))]
    full = (1 << len(verts)) - 1
    terms = []

    def walk(ins: int, outs: int) -> None:
        undecided = full & ~(ins | outs)
        if not undecided:
            terms.append((1, {VarId("v", verts[n].node, verts[n].shift): 1 for n in range(len(verts)) if ins >> n & 1}))
            return
        n = (undecided & -undecided).bit_length() - 1
        walk(ins | up[n], outs)
        walk(ins, outs | down[n])

    walk(0, 0)
    return LaurentPoly.from_terms(terms)


_PRIMES = [29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97]


def _subspaces(d: int, p: int) -> list[tuple[tuple[int, ...], ...]]:
    """All subspaces of F_p^d as reduced echelon bases."""
    out = []
    for k in range(d + 1):
        for piv in itertools.combinations(range(d), k):
            free = [(r, c) for r in range(k) for c in range(piv[r] + 1, d) if c not in piv]
            for vals in itertools.product(range(p), repeat=len(free)):
                rows = [[0] * d for _ in range(k)]
                for r, c in enumerate(piv):
                    rows[r][c] = 1
                for (r, c), val in zip(free, vals):
                    rows[r][c] = val
                out.append(tuple(tuple(r) for r in rows))
    return out


def _in_span(vec: list[int], basis: tuple[tuple[int, ...], ...], p: int) -> bool:
    vec = list(vec)
    for row in basis:
        c = next(n for n, x in enumerate(row) if x)
        if vec[c]:
            f = vec[c]
            vec = [(x - f * y) % p for x, y in zip(vec, row)]
    return not any(vec)


def _reduce_mod(m: list[list[Fraction]], p: int) -> list[list[int]] | None:
    out = []
    for row in m:
        r = []
        for x in row:
            if x.denominator % p == 0:
                return None
            r.append(x.numerator * pow(x.denominator, -1, p) % p)
        out.append(r)
    return out


def _rank_q(m: list[list[Fraction]]) -> int:
    if not m or not m[0]:
        return 0
    return flint.fmpq_mat(len(m), len(m[0]), [flint.fmpq(x.numerator, x.denominator) for row in m for x in row]).rank()


def _rank_p(m: list[list[int]], p: int) -> int:
    if not m or not m[0]:
        return 0
    return flint.nmod_mat(len(m), len(m[0]), [x for row in m for x in row], p).rank()


def _count_points(rep: BoundQuiverRep, p: int) -> dict[tuple[int, ...], int] | None:
    """Number of F_p-points of every nonempty Gr_e, or None for a bad prime."""
    verts = rep.support()
    mats = {}
    for a in rep.arrows():
        m = rep.matrix(a)
        if not _nonzero(m):
            continue
        mp = _reduce_mod(m, p)
        if mp is None or _rank_p(mp, p) != _rank_q(m):
            return None
        mats[a] = mp
    # visit vertices so that each one meets its decided neighbours early
    order, seen = [], set()
    nbrs = {x: set() for x in verts}
    for a in mats:
        nbrs[a.source].add(a.target)
        nbrs[a.target].add(a.source)
    for start in verts:
        if start in seen:
            continue
        stack = [start]
        seen.add(start)
        while stack:
            x = stack.pop(0)
            order.append(x)
            for y in sorted(nbrs[x], key=lambda y: (-y.shift, y.node)):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
    pos = {x: n for n, x in enumerate(order)}
    checks = {x: [] for x in order}
    for a, m in mats.items():
        later = a.source if pos[a.source] > pos[a.target] else a.target
        checks[later].append((a, m))
    spaces = {x: _subspaces(rep.dims[x], p) for x in order}
    index = {x: verts.index(x) for x in order}
    counts: dict[tuple[int, ...], int] = {}
    choice: dict[Vertex, tuple] = {}
    evec = [0] * len(verts)

    def ok(x) -> bool:
        for a, m in checks[x]:
            src, tgt = choice[a.source], choice[a.target]
            for vec in src:
                img = [sum(r[c] * vec[c] for c in range(len(vec))) % p for r in m]
                if any(img) and not _in_span(img, tgt, p):
                    return False
        return True

    def walk(n: int) -> None:
        if n == len(order):
            key = tuple(evec)
            counts[key] = counts.get(key, 0) + 1
            return
        x = order[n]
        for sp in spaces[x]:
            choice[x] = sp
            if ok(x):
                evec[index[x]] = len(sp)
                walk(n + 1)
        del choice[x]
        evec[index[x]] = 0

    walk(0)
    return counts


def _interpolate_at_one(points: list[tuple[int, int]]) -> Fraction:
    total = Fraction(0)
    for a, (xa, ya) in enumerate(points):
        term = Fraction(ya)
        for b, (xb, _) in enumerate(points):
            if a != b:
                term *= Fraction(1 - xb, xa - xb)
        total += term
    return total


def _lagrange_value(points: list[tuple[int, int]], x: int) -> Fraction:
    total = Fraction(0)
    for a, (xa, ya) in enumerate(points):
        term = Fraction(ya)
        for b, (xb, _) in enumerate(points):
            if a != b:
                term *= Fraction(x - xb, xa - xb)
        total += term
    return total


def _point_count_fpoly(rep: BoundQuiverRep, max_total_dim: int = 24) -> LaurentPoly:
    if rep.total_dim > max_total_dim:
        raise ValueError(f"point counting is capped at total dimension {max_total_dim}")
    verts = rep.support()
    dims = [rep.dims[x] for x in verts]
    top = max((sum(e * (d - e) for d in dims for e in [d // 2]),), default=0)
    need = top + 2
    tables: list[tuple[int, dict]] = []
    for p in _PRIMES:
        c = _count_points(rep, p)
        if c is not None:
            tables.append((p, c))
        if len(tables) == need:
            break
    if len(tables) < need:
        raise PointCountError("not enough primes of good reduction")
    keys = set().union(*(c for _, c in tables))
    terms = []
    for e in keys:
        deg = sum(k * (d - k) for k, d in zip(e, dims))
        pts = [(p, c.get(e, 0)) for p, c in tables]
        fit, check = pts[: deg + 1], pts[deg + 1:]
        for x, y in check:
            if _lagrange_value(fit, x) != y:
                raise PointCountError(f"counts for dimension vector {e} are not polynomial of degree <= {deg}")
        chi = _interpolate_at_one(fit)
        if chi.denominator != 1:
            raise PointCountError(f"non-integral Euler characteristic for {e}")
        if chi:
            terms.append((int(chi), {VarId("v", x.node, x.shift): k for x, k in zip(verts, e) if k}))
    return LaurentPoly.from_terms(terms)


def module_fpolynomial(rep: BoundQuiverRep, method: str = "auto") -> LaurentPoly:
    """F_M = sum_e chi(Gr_e(M)) prod v^e."""
    if method not in ("auto", "closed_subsets", "point_count"):
        raise ValueError(f"unknown method {method!r}")
    if not rep.support():
        return LaurentPoly.one()
    small = all(d <= 1 for d in rep.dims.values())
    if method == "closed_subsets" or (method == "auto" and small):
        if not small:
            raise ValueError("closed-subset enumeration needs spaces of dimension <= 1")
        return _closed_subsets(rep)
    return _point_count_fpoly(rep)


# ---------------------------------------------------------------------------
# q-characters


def _a_inverse(cd: CartanData, i: int, r: int) -> LaurentPoly:
    di = cd.di(i)
    exps: dict[VarId, int] = {VarId("Y", i, r - di): -1}
    exps[VarId("Y", i, r + di)] = exps.get(VarId("Y", i, r + di), 0) - 1
    for j in cd.neighbours(i):
        c = -cd.c(j, i)
        for s in range(r - c + 1, r + c, 2):
            exps[VarId("Y", j, s)] = exps.get(VarId("Y", j, s), 0) + 1
    return LaurentPoly.monomial(exps)


def evaluate_v(cd: CartanData, F: LaurentPoly) -> LaurentPoly:
    """Substitute v_{i,r} := A_{i,r}^{-1}."""
    return F.substitute(lambda var: _a_inverse(cd, var.node, var.shift) if var.family == "v" else None)


def module_qcharacter(cd: CartanData, m: LaurentPoly, rep: BoundQuiverRep) -> LaurentPoly:
    return m * evaluate_v(cd, module_fpolynomial(rep))


def geometric_qcharacter(cd: CartanData, i: int, k: int, r: int, alg: AlgebraBasis | None = None, rng_seed: int = DEFAULT_SEED) -> LaurentPoly:
    """prod_{s=1..k} Y_{i, r-(2s-1)d_i} times F of K^{(i)}_{k,r} at v = A^{-1}.

    This is the truncated q-character of W^{(i)}_{k, r-(2k-1)d_i}.
    """
    if not in_v(cd, i, r) or r > -cd.di(i):
        raise ValueError(f"({i},{r}) is not a vertex of Gamma^-")
    if alg is None or alg.depth > kernel_depth(cd, r - k * cd.bii(i)):
        alg = truncated_algebra(cd, kernel_depth(cd, r - k * cd.bii(i)))
    rep = generic_kernel(alg, i, k, r, rng_seed)
    top = LaurentPoly.monomial({VarId("Y", i, r - (2 * s - 1) * cd.di(i)): 1 for s in range(1, k + 1)})
    return module_qcharacter(cd, top, rep)


def cluster_fpolynomial(cd: CartanData, i: int, k: int, r: int, engine=None) -> LaurentPoly:
    """F-polynomial of the cluster variable carrying W^{(i)}_{k, r-(2k-1)d_i},
    from the principal-coefficient recursion, in the v variables."""
    from .cluster import separated_values
    from .krchar import KREngine, _passes_for, kr_location

    eng = engine or KREngine(cd, "separated")
    s = r - (2 * k - 1) * cd.di(i)
    loc = kr_location(cd, i, k, s)
    eng._ensure_trace(_passes_for(cd, i, loc[1]), k)
    eng._certify([loc])
    _, F = separated_values(eng.trace, [loc])[loc]
    return F.map_vars(lambda var: VarId("v", var.node, var.shift - cd.di(var.node)))


def ungraded_dimension_vector(cd: CartanData, rep: BoundQuiverRep) -> tuple[int, ...]:
    out = [0] * cd.rank
    for x, d in rep.dims.items():
        out[x.node - 1] += d
    return tuple(out)


def dimension_vector_sum_check(cd: CartanData, rng_seed: int = DEFAULT_SEED) -> bool:
    """Sum over i of the ungraded dimension vectors of K^{(i)}_{1,r} against
    the sum of the positive roots."""
    total = [0] * cd.rank
    for i in cd.nodes:
        r = cd.di(i) - cd.t * cd.h_dual
        while not in_v(cd, i, r):
            r -= 1
        alg = truncated_algebra(cd, kernel_depth(cd, r - cd.bii(i)))
        dv = ungraded_dimension_vector(cd, generic_kernel(alg, i, 1, r, rng_seed))
        total = [a + b for a, b in zip(total, dv)]
    expected = [sum(col) for col in zip(*positive_roots(cd))]
    return total == expected
