"""Command-line front end.

Shifts on the command line are those of the highest monomial, i.e. the s of
W^{(i)}_{k,s}.  ``module`` and ``fpoly`` translate them to the generic kernel
K^{(i)}_{k, s + (2k-1) d_i}.

Exit status: 0 on success, 1 when a verification fails, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import krchar, qpa, tsystem
from .cartan import cartan_data, parse_type
from .laurent import LaurentPoly, parse_text
from .quiverbuild import build_g_minus, build_gamma_minus, guard_band

__all__ = ["build_parser", "run", "main"]


class UsageError(Exception):
    pass


def _type(label: str) -> str:
    try:
        parse_type(label)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return label.upper()


def _add_label(p, level_default=1, need_shift=True):
    p.add_argument("--node", type=int, required=True, help="node i of the Dynkin diagram (1-based)")
    p.add_argument("--level", type=int, default=level_default, help=f"level k (default {level_default})")
    p.add_argument("--shift", type=int, required=need_shift, help="shift s of the highest monomial Y_{i,s}...Y_{i,s+(k-1)b_ii}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="krqchar", description="q-characters of Kirillov-Reshetikhin modules by cluster mutation and by quiver Grassmannians.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, formats, default):
        p.add_argument("--type", dest="type_label", type=_type, required=True, help="Cartan type, e.g. A3, B2, G2")
        p.add_argument("--format", choices=formats, default=default, help=f"output format (default {default})")
        p.add_argument("--figure", metavar="PATH", help="also render a figure to PATH (png, pdf or svg)")

    p = sub.add_parser("char", help="KR q-character")
    common(p, ["text", "json", "latex"], "text")
    _add_label(p)
    p.add_argument("--mode", choices=["complete", "truncated"], default="complete", help="complete character, or its truncation to Y^- (default complete)")
    p.add_argument("--backend", choices=list(krchar.BACKENDS), default=None, help="arithmetic backend (default: flint when installed)")
    p.add_argument("--depth", type=int, default=None, help="override the depth of the quiver window")

    p = sub.add_parser("verify-tsystem", help="check T-system equations on complete characters")
    common(p, ["json", "text"], "json")
    p.add_argument("--max-level", type=int, default=2, help="largest k (default 2)")
    p.add_argument("--backend", choices=list(krchar.BACKENDS), default=None)

    p = sub.add_parser("verify-periodicity", help="replay mutation passes and compare with G^-")
    common(p, ["json", "text"], "json")
    p.add_argument("--passes", type=int, default=2, help="number of passes (default 2)")
    p.add_argument("--depth", type=int, default=None)

    for name, what in (("module", "generic kernel module"), ("fpoly", "F-polynomial of the generic kernel")):
        p = sub.add_parser(name, help=what)
        common(p, ["text", "json", "dot"] if name == "module" else ["text", "json", "latex"], "text")
        p.add_argument("--node", type=int, help="node i (KR case)")
        p.add_argument("--level", type=int, default=1, help="level k (default 1)")
        p.add_argument("--shift", type=int, help="shift s of the KR module W^{(i)}_{k,s}")
        p.add_argument("--monomial", help='dominant monomial m for K(m), e.g. "Y[1,-7]Y[2,-4]"')
        p.add_argument("--seed", type=int, default=qpa.DEFAULT_SEED, help=f"seed of the random homomorphisms (default {qpa.DEFAULT_SEED})")
        p.add_argument("--depth", type=int, default=None, help="window depth of the truncated algebra")
        if name == "fpoly":
            p.add_argument("--route", choices=["geometric", "cluster", "both"], default="geometric", help="geometric (module), cluster (principal coefficients) or both, with a comparison")

    p = sub.add_parser("quiver", help="finite window of G^- or Gamma^-")
    common(p, ["text", "json", "dot"], "text")
    p.add_argument("--depth", type=int, required=True, help="lowest shift kept (negative)")
    p.add_argument("--labels", choices=["W", "V"], default="W", help="W labels (G^-) or V labels (Gamma^-)")
    p.add_argument("--guard", type=int, default=None, help="width of the frozen band (default 2*t*h_dual + 2*b_max)")
    return ap


# ---------------------------------------------------------------------------


def _emit_poly(cd, poly: LaurentPoly, fmt: str, out) -> None:
    if any(var.family == "Y" for var in poly.variables()):
        key = krchar.character_order_key(cd)
    else:
        key = lambda exps: sum(e for _, e in exps)  # noqa: E731
    if fmt == "text":
        print(poly.to_text(key), file=out)
    elif fmt == "latex":
        print(poly.to_latex(key), file=out)
    else:
        obj = poly.to_json_obj()
        obj["terms"] = [{"coeff": str(c), "exps": [{"family": v.family, "node": v.node, "shift": v.shift, "e": e} for v, e in exps]} for c, exps in poly.sorted_terms(key)]
        print(json.dumps(obj, indent=2), file=out)


def _cmd_char(a, out) -> int:
    cd = cartan_data(a.type_label)
    if a.level < 0:
        raise UsageError("--level must be >= 0")
    if a.depth is not None:
        eng = krchar.KREngine(cd, a.backend or krchar.default_backend(), depth_override=a.depth)
    else:
        eng = krchar.engine_for(cd, a.backend)
    poly = krchar.kr_qcharacter(cd, (a.node, a.level, a.shift), a.mode, eng)
    _emit_poly(cd, poly, a.format, out)
    if a.figure:
        from .plotting import plot_character_weights

        plot_character_weights(cd, poly, a.figure, f"{cd.label} W({a.node})_{{{a.level},{a.shift}}}, {a.mode}")
    return 0


def _cmd_tsystem(a, out) -> int:
    cd = cartan_data(a.type_label)
    if a.max_level < 1:
        raise UsageError("--max-level must be >= 1")
    rep = tsystem.verify_tsystem(cd, a.max_level, engine=krchar.engine_for(cd, a.backend))
    if a.format == "json":
        print(json.dumps({"type": cd.label, "ok": rep.ok, "entries": rep.to_json_obj()}, indent=2), file=out)
    else:
        for e in rep.entries:
            print(f"{'ok  ' if e['ok'] else 'FAIL'} {e['equation']}", file=out)
        print(f"{cd.label}: {sum(e['ok'] for e in rep.entries)}/{len(rep.entries)} equations hold", file=out)
    if a.figure:
        from .plotting import plot_report_grid

        plot_report_grid(rep.entries, "node", "level", a.figure, f"T-system, {cd.label}")
    return 0 if rep.ok else 1


def _cmd_periodicity(a, out) -> int:
    cd = cartan_data(a.type_label)
    rep = krchar.verify_periodicity(cd, a.passes, a.depth)
    if a.format == "json":
        print(json.dumps(rep.to_json_obj(), indent=2), file=out)
    else:
        for p, (q, s) in enumerate(zip(rep.quiver_ok, rep.shift_ok), start=1):
            print(f"pass {p}: quiver {'ok' if q else 'FAIL'}, shift by {rep.shift_per_pass} {'ok' if s else 'FAIL'}", file=out)
        for f in rep.failures:
            print(f"  {f}", file=out)
    if a.figure:
        from .plotting import plot_report_grid

        rows = [{"check": "quiver", "pass": p, "ok": q} for p, q in enumerate(rep.quiver_ok, 1)]
        rows += [{"check": "shift", "pass": p, "ok": s} for p, s in enumerate(rep.shift_ok, 1)]
        plot_report_grid(rows, "check", "pass", a.figure, f"periodicity, {cd.label}")
    return 0 if rep.ok else 1


def _kernel_request(a):
    """(cd, algebra, rep, highest monomial, title) for module/fpoly."""
    cd = cartan_data(a.type_label)
    if a.monomial:
        if a.node is not None or a.shift is not None:
            raise UsageError("give either --monomial or --node/--shift")
        m = parse_text(a.monomial)
        g = qpa.g_vector(cd, m)
        lowest = min((x.shift - cd.di(x.node) for x in g), default=-1)
        alg = qpa.truncated_algebra(cd, a.depth or qpa.kernel_depth(cd, lowest))
        return cd, alg, qpa.km_module(alg, m, a.seed), m, f"K({a.monomial})", None
    if a.node is None or a.shift is None:
        raise UsageError("--node and --shift are required without --monomial")
    if a.level < 1:
        raise UsageError("--level must be >= 1")
    i, k, s = a.node, a.level, a.shift
    r = s + (2 * k - 1) * cd.di(i)
    alg = qpa.truncated_algebra(cd, a.depth or qpa.kernel_depth(cd, r - k * cd.bii(i)))
    rep = qpa.generic_kernel(alg, i, k, r, a.seed)
    m = krchar.highest_monomial(cd, i, k, s)
    return cd, alg, rep, m, f"K({i})_{{{k},{r}}}", (i, k, r)


def _cmd_module(a, out) -> int:
    cd, _, rep, _, title, _ = _kernel_request(a)
    if not rep.relations_hold():
        print("relations fail on the computed module", file=sys.stderr)
        return 1
    if a.format == "json":
        print(rep.to_json(), file=out)
    elif a.format == "dot":
        print(rep.to_dot(), file=out)
    else:
        print(f"{title}  total dimension {rep.total_dim}", file=out)
        for x in rep.support():
            print(f"  ({x.node},{x.shift}) dim {rep.dims[x]}", file=out)
        for arr in rep.arrows():
            mat = rep.matrix(arr)
            if any(v for row in mat for v in row):
                print(f"  {arr}: {[[str(v) for v in row] for row in mat]}", file=out)
    if a.figure:
        from .plotting import plot_module

        plot_module(rep, a.figure, f"{cd.label} {title}")
    return 0


def _cmd_fpoly(a, out) -> int:
    cd, _, rep, _, title, kr = _kernel_request(a)
    status = 0
    if a.route in ("geometric", "both"):
        F = qpa.module_fpolynomial(rep)
    if a.route in ("cluster", "both"):
        if kr is None:
            raise UsageError("the cluster route needs a KR label (--node/--shift)")
        Fc = qpa.cluster_fpolynomial(cd, *kr)
        if a.route == "cluster":
            F = Fc
        elif Fc != F:
            print("geometric and cluster F-polynomials differ", file=sys.stderr)
            status = 1
    _emit_poly(cd, F, a.format, out)
    if a.figure:
        from .plotting import plot_module

        plot_module(rep, a.figure, f"{cd.label} {title}")
    return status


def _cmd_quiver(a, out) -> int:
    cd = cartan_data(a.type_label)
    if a.depth >= 0:
        raise UsageError("--depth must be negative")
    guard = guard_band(cd) if a.guard is None else a.guard
    q = build_g_minus(cd, a.depth, guard) if a.labels == "W" else build_gamma_minus(cd, a.depth, guard)
    if a.format == "json":
        print(json.dumps(q.to_json_obj(), indent=2), file=out)
    elif a.format == "dot":
        print(q.to_dot(f"{cd.label}_{a.labels}"), file=out, end="")
    else:
        arrows = q.arrows()
        print(f"{cd.label}, {a.labels} labels, {len(q.vertices)} vertices ({len(q.frozen)} frozen), {sum(arrows.values())} arrows", file=out)
        for (u, w), mlt in sorted(arrows.items()):
            print(f"  ({u[0]},{u[1]}) -> ({w[0]},{w[1]})" + (f" x{mlt}" if mlt > 1 else ""), file=out)
    if a.figure:
        from .plotting import plot_quiver

        plot_quiver(q, a.figure, f"{cd.label}, {a.labels} labels")
    return 0


_COMMANDS = {
    "char": _cmd_char,
    "verify-tsystem": _cmd_tsystem,
    "verify-periodicity": _cmd_periodicity,
    "module": _cmd_module,
    "fpoly": _cmd_fpoly,
    "quiver": _cmd_quiver,
}


def run(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args, out)
    except (UsageError, ValueError) as exc:
        print(f"krqchar {args.command}: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
