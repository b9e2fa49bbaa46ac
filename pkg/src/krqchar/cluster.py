"""Seeds on G^-, mutation with exact exchange division, principal coefficients.

Two evaluation styles are offered.  :func:`mutate` and :func:`run_schedule`
act eagerly on a whole :class:`Seed`.  :class:`MutationTrace` first runs the
schedule on the quiver alone, recording for every step which neighbour
*versions* enter the exchange relation; cluster variables are then computed
on demand, so a target only costs the exchanges it actually depends on.
Both styles perform literally the same exchange relations.

Principal coefficients follow the convention that makes
``x = z^g F(yhat)`` hold with ``yhat_v = prod_{v->w} z_w / prod_{u->v} z_u``:
each mutable vertex v gets a frozen companion ``("p", i, s)`` and one arrow
``v -> ("p", i, s)``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

from .cartan import CartanData
from .laurent import LaurentPoly, VarId
from .quiverbuild import (
    LabeledQuiver,
    MutationSchedule,
    Vertex,
    build_g_minus,
    in_w,
    mutation_schedule,
)

__all__ = [
    "Seed",
    "z_in_Y",
    "z_substitution",
    "initial_seed",
    "mutate",
    "run_schedule",
    "yhat_monomial",
    "g_and_F",
    "principal_key",
    "MutationTrace",
    "TermCapExceeded",
    "separated_values",
    "g_monomials",
    "yhat_in_Y",
    "recombine",
]


class TermCapExceeded(RuntimeError):
    """A cluster variable grew beyond the configured term cap."""


def principal_key(x: Vertex) -> tuple:
    return ("p", x.node, x.shift)


def z_in_Y(cd: CartanData, i: int, r: int) -> LaurentPoly:
    """z_{i,r} = prod_{k>=0, r + k b_ii <= 0} Y_{i, r + k b_ii}; 1 for r > 0."""
    if not in_w(cd, i, r):
        raise ValueError(f"({i},{r}) is not in W")
    exps = {}
    s = r
    while s <= 0:
        exps[VarId("Y", i, s)] = 1
        s += cd.bii(i)
    return LaurentPoly.monomial(exps)


def z_substitution(cd: CartanData, poly: LaurentPoly) -> LaurentPoly:
    """Rewrite a polynomial in z-variables into Y-variables."""

    def img(var: VarId):
        if var.family != "z":
            return None
        if var.shift > 0 and in_w(cd, var.node, var.shift):
            return LaurentPoly.one()
        return z_in_Y(cd, var.node, var.shift)

    return poly.substitute(img)


def _initial_var(cd: CartanData, x: Vertex, family: str) -> LaurentPoly:
    if family == "z":
        return LaurentPoly.var("z", x.node, x.shift)
    if family == "Y":
        return z_in_Y(cd, x.node, x.shift)
    raise ValueError("family must be 'z' or 'Y'")


@dataclass
class Seed:
    """Quiver plus cluster variables (value semantics: operations return copies)."""

    cd: CartanData
    quiver: LabeledQuiver
    vars: dict
    family: str = "Y"
    principal: bool = False
    depth: int = 0

    def copy(self) -> "Seed":
        return Seed(self.cd, self.quiver.copy(), dict(self.vars), self.family, self.principal, self.depth)

    def __getitem__(self, x) -> LaurentPoly:
        return self.vars[x]

    def main_quiver(self) -> LabeledQuiver:
        """The quiver without the principal companions."""
        return self.quiver.restrict(x for x in self.quiver.vertices if isinstance(x, Vertex))

    def to_json_obj(self) -> dict:
        q = self.quiver
        return {
            "type": self.cd.label,
            "depth": self.depth,
            "family": self.family,
            "quiver": q.to_json_obj(),
            "vars": [
                {"vertex": list(x), "value": self.vars[x].to_json_obj()}
                for x in sorted(self.vars, key=lambda t: (len(t), tuple(str(p) for p in t)))
            ],
        }


def initial_seed(cd: CartanData, depth: int, principal: bool = False, family: str = "Y", guard: int | None = None) -> Seed:
    q = build_g_minus(cd, depth, guard)
    vars_ = {x: _initial_var(cd, x, family) for x in q.vertices}
    if principal:
        mutable = sorted(q.mutable())
        for x in mutable:
            p = principal_key(x)
            q.vertices.add(p)
            q.frozen.add(p)
            vars_[p] = LaurentPoly.var("principal", x.node, x.shift)
        for x in mutable:
            q.add_arrows(x, principal_key(x), 1)
    return Seed(cd, q, vars_, family, principal, depth)


def _exchange(quiver: LabeledQuiver, vars_: Mapping, k) -> LaurentPoly:
    p_in = LaurentPoly.one()
    for u, m in quiver.inn[k].items():
        p_in = p_in * (vars_[u] ** m if m != 1 else vars_[u])
    p_out = LaurentPoly.one()
    for w, m in quiver.out[k].items():
        p_out = p_out * (vars_[w] ** m if m != 1 else vars_[w])
    return (p_in + p_out).divide_exact(vars_[k])


def mutate(seed: Seed, v, *, in_place: bool = False) -> Seed:
    """Seed mutation at a non-frozen vertex."""
    s = seed if in_place else seed.copy()
    if v not in s.quiver.vertices:
        raise KeyError(f"{v!r} is not a vertex")
    if v in s.quiver.frozen:
        raise ValueError(f"{v!r} is frozen")
    new = _exchange(s.quiver, s.vars, v)
    s.quiver.mutate(v)
    s.vars[v] = new
    return s


def run_schedule(seed: Seed, schedule: MutationSchedule | Iterable, passes: int = 1) -> Seed:
    """Apply ``passes`` passes of the schedule (a MutationSchedule or any vertex list)."""
    seq = schedule.sequence if isinstance(schedule, MutationSchedule) else tuple(schedule)
    s = seed.copy()
    for _ in range(passes):
        for x in seq:
            mutate(s, x, in_place=True)
    return s


def yhat_monomial(seed: Seed, v: Vertex, family: str = "z") -> LaurentPoly:
    """prod_{v->w} z_w / prod_{u->v} z_u over the non-principal neighbours of v."""
    q = seed.quiver
    if v in q.frozen:
        raise ValueError("frozen-band vertex: neighbourhood is incomplete")
    exps: Counter = Counter()
    for w, m in q.out[v].items():
        if isinstance(w, Vertex):
            exps[VarId("z", w.node, w.shift)] += m
    for u, m in q.inn[v].items():
        if isinstance(u, Vertex):
            exps[VarId("z", u.node, u.shift)] -= m
    mono = LaurentPoly.monomial(exps)
    if family == "Y":
        return z_substitution(seed.cd, mono)
    return mono


def _y_to_z_monomial(cd: CartanData, exps: Mapping[VarId, int]) -> dict[VarId, int]:
    out: Counter = Counter()
    for var, e in exps.items():
        if var.family != "Y":
            raise ValueError("expected a Y-monomial")
        out[VarId("z", var.node, var.shift)] += e
        up = var.shift + cd.bii(var.node)
        if up <= 0:
            out[VarId("z", var.node, up)] -= e
    return {k: e for k, e in out.items() if e}


def g_and_F(seed: Seed, v, value: LaurentPoly | None = None) -> tuple[dict[Vertex, int], LaurentPoly]:
    """(g-vector, F-polynomial) of the cluster variable at v.

    The g-vector is indexed by W^- vertices; the F-polynomial is returned in the
    v-family, with the coefficient of vertex (i, s) renamed v_{i, s - d_i}.
    """
    if not seed.principal:
        raise ValueError("principal coefficients are not tracked in this seed")
    x = seed.vars[v] if value is None else value
    return _g_and_F(seed.cd, x, seed.family)


def _g_and_F(cd: CartanData, x: LaurentPoly, family: str) -> tuple[dict[Vertex, int], LaurentPoly]:
    lead = x.drop_if_positive(lambda var: var.family == "principal")
    if not lead.is_monomial() or next(iter(lead._t.values())) != 1:
        raise AssertionError("coefficient-free part is not a single monomial")
    exps = lead.exponent_dict()
    if family == "Y":
        exps = _y_to_z_monomial(cd, exps)
    g = {Vertex(var.node, var.shift): e for var, e in exps.items()}
    F = x.specialize(lambda var: 1 if var.family in ("z", "Y") else None)
    F = F.map_vars(lambda var: VarId("v", var.node, var.shift - cd.di(var.node)))
    return g, F


# ---------------------------------------------------------------------------
# lazy evaluation along a recorded schedule


@dataclass(frozen=True)
class Step:
    vertex: Hashable
    version: int  # version of ``vertex`` produced by this step
    ins: tuple  # ((key, version), multiplicity) for arrows into vertex
    outs: tuple


@dataclass
class MutationTrace:
    """Schedule replay on the quiver only; cluster variables evaluated on demand."""

    cd: CartanData
    depth: int
    passes: int
    principal: bool = False
    family: str = "Y"
    guard: int | None = None
    term_cap: int = 10**6
    steps: dict = field(default_factory=dict)
    quivers_after_pass: list = field(default_factory=list)
    initial: LabeledQuiver | None = None
    values: dict = field(default_factory=dict)
    evaluated: set = field(default_factory=set)

    def __post_init__(self):
        seed = initial_seed(self.cd, self.depth, self.principal, self.family, self.guard)
        self._seed = seed
        q = seed.quiver.copy()
        self.initial = seed.quiver.copy()
        sched = mutation_schedule(self.cd, self.depth, q)
        self.schedule = sched
        version: Counter = Counter()
        for _ in range(self.passes):
            for x in sched.sequence:
                ins = tuple(sorted((((u, version[u]), m) for u, m in q.inn[x].items()), key=_step_sort))
                outs = tuple(sorted((((w, version[w]), m) for w, m in q.out[x].items()), key=_step_sort))
                version[x] += 1
                self.steps[(x, version[x])] = Step(x, version[x], ins, outs)
                q.mutate(x)
            self.quivers_after_pass.append(q.copy())
        self.final_versions = dict(version)

    def versions_after_pass(self, p: int) -> dict:
        """Version of each vertex after p full passes."""
        counts: Counter = Counter()
        seq = self.schedule.sequence
        for _ in range(p):
            for x in seq:
                counts[x] += 1
        return counts

    def initial_value(self, key) -> LaurentPoly:
        return self._seed.vars[key]

    def closure(self, targets: Iterable[tuple]) -> set:
        """All steps (key, version >= 1) needed to evaluate the targets."""
        need = set()
        stack = [t for t in targets if t[1] > 0]
        while stack:
            t = stack.pop()
            if t in need:
                continue
            if t not in self.steps:
                raise KeyError(f"{t!r} is not reached by the recorded schedule")
            need.add(t)
            st = self.steps[t]
            for (dep, _m) in st.ins + st.outs:
                if dep[1] > 0 and dep not in need:
                    stack.append(dep)
            prev = (t[0], t[1] - 1)
            if prev[1] > 0 and prev not in need:
                stack.append(prev)
        return need

    def value(self, key, version: int) -> LaurentPoly:
        """Cluster variable at ``key`` after its ``version``-th mutation."""
        t = (key, version)
        if t in self.values:
            return self.values[t]
        if version == 0:
            val = self.initial_value(key)
            self.values[t] = val
            return val
        order = sorted(self.closure([t]), key=lambda s: self._position(s))
        for s in order:
            if s in self.values:
                continue
            st = self.steps[s]
            p_in = LaurentPoly.one()
            for dep, m in st.ins:
                p_in = p_in * self._get(dep) ** m
            p_out = LaurentPoly.one()
            for dep, m in st.outs:
                p_out = p_out * self._get(dep) ** m
            val = (p_in + p_out).divide_exact(self._get((s[0], s[1] - 1)))
            if len(val) > self.term_cap:
                raise TermCapExceeded(f"{len(val)} terms at {s!r}")
            self.values[s] = val
            self.evaluated.add(s)
        return self.values[t]

    def _get(self, t) -> LaurentPoly:
        if t in self.values:
            return self.values[t]
        if t[1] == 0:
            val = self.initial_value(t[0])
            self.values[t] = val
            return val
        raise KeyError(t)

    def _position(self, s) -> int:
        pos = getattr(self, "_pos", None)
        if pos is None:
            pos = {}
            for idx, key in enumerate(self.steps):
                pos[key] = idx
            self._pos = pos
        return pos[s]

    def stable_against(self, other: "MutationTrace", targets: Iterable[tuple]) -> bool:
        """True if every step needed for the targets has identical exchange data in ``other``."""
        for s in self.closure(targets):
            if s not in other.steps or other.steps[s] != self.steps[s]:
                return False
        return True

    def g_and_F(self, key, version: int) -> tuple[dict[Vertex, int], LaurentPoly]:
        if not self.principal:
            raise ValueError("principal coefficients are not tracked")
        return _g_and_F(self.cd, self.value(key, version), self.family)


def _step_sort(item):
    (key, ver), m = item
    return (len(key), tuple(str(p) for p in key), ver)


# ---------------------------------------------------------------------------
# separated evaluation: F-polynomials and g-monomials along a recorded trace


# Multigraded truncation: an F-value is a dict from node-degree vectors to
# homogeneous components, and anything beyond ``caps`` is discarded.


def _fits(k: tuple, caps: tuple) -> bool:
    return all(a <= c for a, c in zip(k, caps))


def _gmul(a: dict, b: dict, caps: tuple) -> dict:
    out: dict = {}
    for ka, x in a.items():
        for kb, y in b.items():
            k = tuple(p + q for p, q in zip(ka, kb))
            if _fits(k, caps):
                prod = x * y
                out[k] = out[k] + prod if k in out else prod
    return {k: v for k, v in out.items() if v}


def _gadd(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out[k] + v if k in out else v
    return {k: v for k, v in out.items() if v}


def _gdiv(a: dict, b: dict, caps: tuple) -> dict:
    """a / b modulo the degrees beyond ``caps``; b must have constant part 1."""
    zero_deg = (0,) * len(caps)
    if b.get(zero_deg) != LaurentPoly.one():
        raise ArithmeticError("divisor is not a unit of the graded quotient")
    rest = [(kb, y) for kb, y in b.items() if kb != zero_deg]
    pending = dict(a)
    q: dict = {}
    while pending:
        level = min(sum(k) for k in pending)
        for k in [k for k in pending if sum(k) == level]:
            val = pending.pop(k)
            if not val:
                continue
            q[k] = val
            for kb, y in rest:
                kk = tuple(p + r for p, r in zip(k, kb))
                if _fits(kk, caps):
                    sub = y * val
                    pending[kk] = pending[kk] - sub if kk in pending else -sub
    return q


def separated_values(trace: MutationTrace, targets: Iterable[tuple], window=None, degree_caps: Mapping[int, int] | None = None, term_cap: int | None = None) -> dict:
    """(g-monomial in z, F-polynomial in principal variables) for each target.

    Ring homomorphisms are applied to the principal-coefficient exchange
    relations: z -> 1 gives the F-polynomial recursion in Z[y], y -> 0 gives the
    monomial z^g.  ``window(vertex)`` selects the coefficients that are kept
    (the others are sent to 0) and ``degree_caps`` works modulo all monomials
    whose degree in the coefficients of some node j exceeds ``degree_caps[j]``.
    Each of these is a ring homomorphism under which every F (constant term 1)
    stays a unit, so the recursion remains exact in the image.  A target's F
    is unchanged as long as its support fits the window and the caps.
    """
    if not trace.principal:
        raise ValueError("the trace must carry principal coefficients")
    cd = trace.cd
    cap = trace.term_cap if term_cap is None else term_cap
    targets = list(targets)
    zero, one = LaurentPoly.zero(), LaurentPoly.one()
    if degree_caps is None:
        # a single component of huge degree: no truncation
        caps = None
    else:
        caps = tuple(degree_caps.get(j, 0) for j in cd.nodes)
    F: dict = {}
    G: dict = {}
    zero_deg = (0,) * cd.n

    def init(key):
        if isinstance(key, Vertex):
            F[(key, 0)] = {zero_deg: one}
            G[(key, 0)] = LaurentPoly.var("z", key.node, key.shift)
            return
        x = Vertex(key[1], key[2])
        deg = tuple(int(j == x.node) for j in cd.nodes)
        keep = (window is None or window(x)) and (caps is None or _fits(deg, caps))
        F[(key, 0)] = {deg: LaurentPoly.var("principal", x.node, x.shift)} if keep else {}
        G[(key, 0)] = zero

    def get(t):
        if t not in F:
            init(t[0])
        return F[t], G[t]

    if caps is None:
        def flat(d):
            total = zero
            for v in d.values():
                total = total + v
            return total

        def mul(a, b):
            return {zero_deg: flat(a) * flat(b)}

        def div(a, b):
            return {zero_deg: flat(a).divide_exact(flat(b))}
    else:
        def mul(a, b):
            return _gmul(a, b, caps)

        def div(a, b):
            return _gdiv(a, b, caps)

    for s in sorted(trace.closure(targets), key=trace._position):
        st = trace.steps[s]
        f_in = f_out = {zero_deg: one}
        g_in = g_out = one
        for dep, m in st.ins:
            f, g = get(dep)
            for _ in range(m):
                f_in = mul(f_in, f)
            g_in = g_in * g**m
        for dep, m in st.outs:
            f, g = get(dep)
            for _ in range(m):
                f_out = mul(f_out, f)
            g_out = g_out * g**m
        f_old, g_old = get((s[0], s[1] - 1))
        g_sum = g_in + g_out
        if not g_sum.is_monomial():
            raise AssertionError(f"sign-coherence fails at {s!r}")
        val = div(_gadd(f_in, f_out), f_old)
        size = sum(len(v) for v in val.values())
        if size > cap:
            raise TermCapExceeded(f"{size} terms at {s!r}")
        F[s] = val
        G[s] = g_sum * g_old.inverse_monomial()
    out = {}
    for t in targets:
        f, g = get(t)
        total = zero
        for v in f.values():
            total = total + v
        out[t] = (g, total)
    return out


def g_monomials(trace: MutationTrace, targets: Iterable[tuple]) -> dict:
    """z^g for each target: the image of the exchange relations under y -> 0."""
    if not trace.principal:
        raise ValueError("the trace must carry principal coefficients")
    targets = list(targets)
    zero, one = LaurentPoly.zero(), LaurentPoly.one()
    G: dict = {}

    def get(t):
        if t not in G:
            key = t[0]
            G[t] = LaurentPoly.var("z", key.node, key.shift) if isinstance(key, Vertex) else zero
        return G[t]

    for s in sorted(trace.closure(targets), key=trace._position):
        st = trace.steps[s]
        g_in = g_out = one
        for dep, m in st.ins:
            g_in = g_in * get(dep) ** m
        for dep, m in st.outs:
            g_out = g_out * get(dep) ** m
        g_sum = g_in + g_out
        if not g_sum.is_monomial():
            raise AssertionError(f"sign-coherence fails at {s!r}")
        G[s] = g_sum * get((s[0], s[1] - 1)).inverse_monomial()
    return {t: get(t) for t in targets}


def yhat_in_Y(cd: CartanData, quiver: LabeledQuiver, v: Vertex) -> LaurentPoly:
    """yhat_v of the initial quiver written in Y-variables."""
    exps: Counter = Counter()
    for w, m in quiver.out[v].items():
        if isinstance(w, Vertex):
            exps[VarId("z", w.node, w.shift)] += m
    for u, m in quiver.inn[v].items():
        if isinstance(u, Vertex):
            exps[VarId("z", u.node, u.shift)] -= m
    return z_substitution(cd, LaurentPoly.monomial(exps))


def recombine(cd: CartanData, quiver: LabeledQuiver, g: LaurentPoly, F: LaurentPoly) -> LaurentPoly:
    """z^g F(yhat) in Y-variables, for the initial quiver ``quiver``."""
    cache: dict = {}

    def img(var: VarId):
        if var.family != "principal":
            return None
        if var not in cache:
            cache[var] = yhat_in_Y(cd, quiver, Vertex(var.node, var.shift))
        return cache[var]

    return z_substitution(cd, g) * F.substitute(img)
