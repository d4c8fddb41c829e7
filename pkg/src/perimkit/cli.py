"""Command-line front end: ``perimkit {audit,decompose,extreme,carpet-study,verify}``.

Findings (a hypothesis that fails on a model) exit 0; contract violations
exit nonzero: 1 failed verification, 2 bad input, 3 cap exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import math
import os
import random
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .bv_core import (
    BVFunction,
    CellSet,
    coarea_decompose,
    essential_boundary,
    perimeter,
    tv,
)
from .decomposition import (
    DEFAULT_CAPS,
    CapExceeded,
    check_liouville_equivalence,
    decompose,
    is_simple,
    saturation_properties,
    saturation_report,
)
from .extreme_points import build_instance, compare
from .space_model import (
    ModelError,
    SpaceModel,
    audit_condition_1_4,
    audit_isotropy,
    audit_pi_constants,
    build_from_string,
    build_sierpinski_carpet,
    carpet_diagnostic_abscissas,
    carpet_strip_ratio,
    oracle_ramp_relaxation,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    model: str | None
    caps: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_CAPS))
    seed: int = 0
    out: str | None = None
    fmt: str = "table"


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        return f"{x:.6g}"
    if isinstance(x, (list, tuple)):
        return " ".join(_fmt(v) for v in x)
    if x is None:
        return "-"
    return str(x)


class Report:
    """Titled sections of rows rendered as aligned text or CSV."""

    def __init__(self):
        self.sections: list[tuple[str, list[str], list[list]]] = []

    def add(self, title: str, header: Sequence[str], rows: Sequence[Sequence]):
        self.sections.append((title, list(header), [list(r) for r in rows]))

    def render(self, fmt: str) -> str:
        buf = io.StringIO()
        if fmt == "csv":
            w = csv.writer(buf, lineterminator="\n")
            for title, header, rows in self.sections:
                w.writerow(["section"] + header)
                for r in rows:
                    w.writerow([title] + [_fmt(v) for v in r])
            return buf.getvalue()
        for title, header, rows in self.sections:
            buf.write(f"== {title}\n")
            cells = [header] + [[_fmt(v) for v in r] for r in rows]
            widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
            for r in cells:
                buf.write("  ".join(v.ljust(wd) for v, wd in zip(r, widths)).rstrip() + "\n")
            buf.write("\n")
        return buf.getvalue()


def _emit(cfg: RunConfig, report: Report, name: str) -> None:
    text = report.render(cfg.fmt)
    if cfg.out is None:
        sys.stdout.write(text)
        return
    d = Path(cfg.out)
    d.mkdir(parents=True, exist_ok=True)
    target = d / f"{name}.{'csv' if cfg.fmt == 'csv' else 'txt'}"
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, target)


def parse_cell_list(model: SpaceModel, text: str) -> CellSet:
    """``"0,3-5"`` style lists; ``eK`` names all cells of edge ``K`` on metric graphs."""
    ids: set[int] = set()
    text = text.strip()
    if not text:
        return CellSet.empty(model)
    graph = model.metadata.get("graph")
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok[0] in "eE" and tok[1:].isdigit():
            if graph is None:
                raise ModelError(f"edge token {tok!r} needs a metric-graph model")
            k = int(tok[1:]) - 1
            if not 0 <= k < len(graph["edge_cells"]):
                raise ModelError(f"no edge {tok!r}")
            ids.update(graph["edge_cells"][k])
        elif "-" in tok:
            a, b = tok.split("-", 1)
            ids.update(range(int(a), int(b) + 1))
        else:
            ids.add(int(tok))
    return CellSet.from_ids(model, sorted(ids))


def _caps_from_env(caps: dict[str, int]) -> dict[str, int]:
    env = os.environ.get("PERIMKIT_CAPS", "")
    for item in filter(None, (s.strip() for s in env.split(","))):
        k, _, v = item.partition("=")
        if k not in caps:
            raise ModelError(f"unknown cap {k!r} in PERIMKIT_CAPS")
        caps[k] = int(v)
    return caps


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_audit(cfg: RunConfig, args) -> int:
    model = build_from_string(cfg.model)
    rep = Report()
    viol = audit_isotropy(model)
    rep.add(
        "isotropy",
        ["atom", "degree", "theta_interior", "status"],
        [[v.atom, v.degree, list(v.interior_values), "violation"] for v in viol] or [["-", "-", "-", "isotropic"]],
    )
    c14 = audit_condition_1_4(model, budget=args.samples * 100, seed=cfg.seed)
    rows = [[c14.mode, c14.pairs_checked, "pass" if c14.passed else "fail", "-", "-", "-", "-"]]
    for t in c14.counterexamples[:5]:
        rows.append([c14.mode, c14.pairs_checked, "counterexample", list(t.E), list(t.F), list(t.atoms), t.mass])
    rep.add("condition_1_4", ["mode", "pairs", "status", "E", "F", "atoms", "h_mass"], rows)
    if model.geometry is not None:
        diam = sorted(d for d in model.geometry.diameters if d != float("inf"))
        base = diam[len(diam) // 2]
        radii = [base * k for k in (1.01, 2.01, 3.01)]
        pi = audit_pi_constants(model, radii, samples=args.samples, seed=cfg.seed)
        rep.add(
            "pi_estimates",
            ["quantity", "estimate", "witness"],
            [
                ["doubling", pi.doubling, pi.doubling_witness],
                ["poincare", pi.poincare, pi.poincare_witness],
                ["relative_isoperimetric", pi.isoperimetric, pi.isoperimetric_witness],
                ["exponent_s", pi.exponent, None],
            ],
        )
    _emit(cfg, rep, "audit")
    return EXIT_OK


def cmd_decompose(cfg: RunConfig, args) -> int:
    model = build_from_string(cfg.model)
    E = parse_cell_list(model, args.set)
    r = decompose(E, args.algorithm, alpha=args.alpha, cap=cfg.caps["brute"])
    rep = Report()
    rep.add(
        "summary",
        ["set", "perimeter", "sum_components", "algorithm", "provenance", "isotropic"],
        [[list(E.ids), r.perimeter, sum(r.component_perimeters, Fraction(0)), r.algorithm, r.provenance, r.isotropic]],
    )
    rep.add("components", ["index", "cells", "measure", "perimeter"], r.as_rows())
    if r.notes:
        rep.add("notes", ["note"], [[n] for n in r.notes])
    if args.saturate:
        s = saturation_report(E)
        rows = [["complement", list(c.ids), "infinite" if inf else "finite"] for c, inf in s.complement_components]
        rows += [["hole", list(h.ids), "finite"] for h in s.holes]
        rows.append(["sat", list(s.sat.ids), "saturated" if s.saturated else "not-saturated"])
        rows.append(["simple", list(E.ids), s.simple])
        rep.add("saturation", ["kind", "cells", "flag"], rows)
    _emit(cfg, rep, "decompose")
    return EXIT_OK


def cmd_extreme(cfg: RunConfig, args) -> int:
    model = build_from_string(cfg.model)
    K = parse_cell_list(model, args.support)
    inst = build_instance(K, free_cap=cfg.caps["free"], pattern_cap=cfg.caps["patterns"])
    r = compare(inst, args.method)
    rep = Report()
    rep.add("hypotheses", ["name", "holds"], sorted(r.hypotheses.items()))
    rep.add("verdicts", ["name", "holds"], sorted(r.verdicts.items()))
    rep.add(
        "vertices",
        ["vertex", "tv", "set", "sign", "class"],
        [[list(c.vector), c.tv, list(c.indicator_set.ids) if c.indicator_set else None, c.sign, c.kind] for c in r.classes],
    )
    rep.add("predicted", ["vector", "set", "sign"], [[list(v), list(E.ids), s] for v, E, s in r.predicted])
    if r.mismatches:
        rep.add("mismatches", ["detail"], [[m] for m in r.mismatches])
    _emit(cfg, rep, "extreme")
    return EXIT_OK


def carpet_study(levels: Sequence[int], a: Sequence[Fraction], eps: Fraction, depth: int = 1) -> list[list]:
    """Rows ``(level, abscissa, ratio, components)``; the test set is the
    closed left half (cells whose centre has ``x <= 1/2``)."""
    rows = []
    xs = carpet_diagnostic_abscissas(depth)
    for level in levels:
        model = build_sierpinski_carpet(a, level)
        holes = model.metadata["holes"]
        n = model.metadata["grid_shape"][0]
        left = [i for i, (ix, _) in enumerate(model.metadata["cell_keys"]) if 2 * ix + 1 <= n]
        comps = len(decompose(CellSet.from_ids(model, left), "fast", verify=False).components)
        for x in xs:
            rows.append([level, x, carpet_strip_ratio(holes, x, eps), comps])
    return rows


def cmd_carpet_study(cfg: RunConfig, args) -> int:
    lo, _, hi = args.levels.partition("-")
    levels = list(range(int(lo), int(hi or lo) + 1))
    if args.a:
        a = [Fraction(t) for t in args.a.split(",")]
    else:
        a = [Fraction(1, 3**i * i) for i in range(1, max(levels) + 1)]
    eps = Fraction(args.eps)
    rows = carpet_study(levels, a, eps, args.depth)
    rep = Report()
    rep.add("carpet_study", ["level", "abscissa", "ratio", "components"], rows)
    _emit(cfg, rep, "carpet_study")
    return EXIT_OK


def _verify_suites(model: SpaceModel, caps: dict[str, int], seed: int, samples: int) -> list[list]:
    rng = random.Random(seed)
    bounded = [c.id for c in model.cells if not c.unbounded]
    out = []

    def suite(name, checks):
        fails = sum(1 for ok in checks if not ok)
        out.append([name, len(checks), fails, "pass" if fails == 0 else "FAIL"])

    def rand_set():
        return CellSet.from_ids(model, [c for c in bounded if rng.random() < 0.5])

    sets = [rand_set() for _ in range(samples)]
    suite("complementation", [perimeter(E) == perimeter(E.complement()) for E in sets])
    suite(
        "strong_subadditivity",
        [perimeter(E | F) + perimeter(E & F) <= perimeter(E) + perimeter(F) for E, F in zip(sets, sets[1:])],
    )
    suite(
        "representation",
        [
            sum((model.atoms[a].h_weight * model.atoms[a].theta(E.occupancy(a)) for a in essential_boundary(E).ids), Fraction(0))
            == perimeter(E)
            for E in sets
        ],
    )
    checks = []
    for _ in range(samples):
        vals = [Fraction(rng.randint(-9, 9), rng.randint(1, 4)) if not c.unbounded else 0 for c in model.cells]
        f = BVFunction(model, tuple(vals))
        checks.append(sum((p.perimeter * p.length for p in coarea_decompose(f)), Fraction(0)) == tv(f))
    suite("coarea", checks)
    checks = []
    for r in range(1, min(len(bounded), caps["brute"]) + 1):
        if math.comb(len(bounded), r) <= 2000:
            combos = itertools.combinations(bounded, r)
        else:
            combos = (sorted(rng.sample(bounded, r)) for _ in range(samples))
        for combo in combos:
            E = CellSet.from_ids(model, combo)
            parts = {
                alg: decompose(E, alg, cap=caps["brute"], verify=False).partition for alg in ("fast", "brute", "xi-atoms")
            }
            checks.append(len(set(parts.values())) == 1)
    suite("oracle_equivalence", checks)
    if "graph" in model.metadata:
        suite("ramp_oracle", [oracle_ramp_relaxation(model, E) == perimeter(E) for E in sets])
    if model.has_unbounded:
        checks = []
        for E in sets[: max(1, samples // 4)]:
            if not E:
                continue
            for F in decompose(E, "fast", verify=False).components:
                checks.append(all(saturation_properties(F, [E]).values()))
        suite("saturation", checks)
    checks = []
    for E in sets[: max(1, samples // 4)]:
        if E and len(E) <= caps["brute"]:
            checks.append(check_liouville_equivalence(E, trials=20, seed=seed).consistent)
    suite("liouville", checks)
    checks = []
    for E in sets[: max(1, samples // 4)]:
        if E and E.is_finite:
            res = is_simple(E, cap=caps["regions"])
            checks.append(all(v is not False for v in res.cross_checks.values()))
    suite("simple_cross_checks", checks)
    return out


SHIPPED = ["grid:3x3", "grid:4x4", "star:3", "star:4", "star:3:1:2", "path:4", "strip:4x2", "carpet:1"]


def cmd_verify(cfg: RunConfig, args) -> int:
    models = [cfg.model] if cfg.model else SHIPPED
    rep = Report()
    rows = []
    failed = False
    for spec in models:
        model = build_from_string(spec)
        for row in _verify_suites(model, cfg.caps, cfg.seed, args.samples):
            rows.append([spec] + row)
            failed |= row[-1] != "pass"
    rep.add("verify", ["model", "suite", "checks", "failures", "status"], rows)
    _emit(cfg, rep, "verify")
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="perimkit", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="grid:WxH[:side] | star:D[:len[:res]] | carpet:L:a1,.. | strip:LxH | path:N | file:PATH")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="directory for report files (stdout when omitted)")
    common.add_argument("--format", choices=["table", "csv"], default="table")
    for cap in DEFAULT_CAPS:
        common.add_argument(f"--cap-{cap}", type=int, dest=f"cap_{cap}")
    sub = p.add_subparsers(dest="command", required=True)
    a = sub.add_parser("audit", parents=[common], help="isotropy, triple-boundary condition, PI estimates")
    a.add_argument("--samples", type=int, default=10)
    d = sub.add_parser("decompose", parents=[common], help="essential components of a set")
    d.add_argument("--set", required=True, help="cell ids, e.g. 0,1,4-6 or e1,e2 on metric graphs")
    d.add_argument("--algorithm", choices=["fast", "brute", "xi-atoms", "variational"], default="fast")
    d.add_argument("--alpha", type=float)
    d.add_argument("--saturate", action="store_true")
    e = sub.add_parser("extreme", parents=[common], help="vertices of the BV unit ball on a support")
    e.add_argument("--support", required=True)
    e.add_argument("--method", choices=["arrangement", "cdd"], default="arrangement")
    c = sub.add_parser("carpet-study", parents=[common], help="strip ratios and component counts across levels")
    c.add_argument("--levels", default="1-4")
    c.add_argument("--a", help="comma-separated hole sides a_1,a_2,... (default 3^-i/i)")
    c.add_argument("--eps", default=str(Fraction(1, 2 * 3**5)))
    c.add_argument("--depth", type=int, default=1)
    v = sub.add_parser("verify", parents=[common], help="run invariant suites (default: shipped models)")
    v.add_argument("--samples", type=int, default=40)
    return p


COMMANDS = {
    "audit": cmd_audit,
    "decompose": cmd_decompose,
    "extreme": cmd_extreme,
    "carpet-study": cmd_carpet_study,
    "verify": cmd_verify,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        caps = _caps_from_env(dict(DEFAULT_CAPS))
        for k in DEFAULT_CAPS:
            v = getattr(args, f"cap_{k}", None)
            if v is not None:
                caps[k] = v
        cfg = RunConfig(args.command, args.model, caps, args.seed, args.out, args.format)
        if cfg.command in ("audit", "decompose", "extreme") and not cfg.model:
            raise ModelError(f"{cfg.command} needs --model")
        return COMMANDS[cfg.command](cfg, args)
    except CapExceeded as exc:
        print(f"perimkit: cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ModelError, ValueError) as exc:
        print(f"perimkit: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
