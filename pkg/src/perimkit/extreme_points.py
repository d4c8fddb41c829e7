"""Vertices of the BV unit ball ``{f supported in K : TV(f) <= 1}`` on a model.

Each atom contributes ``h * max_w <w, f>`` where ``w`` ranges over the
ordering vectors ``w[pi(i)] = theta(i) - theta(i-1)`` (the Lovasz extension
of the concave table ``k -> theta(k)``).  The ball is therefore the polytope
cut out by ``<c, f> <= 1`` for every ``c`` in the Minkowski sum of the
per-atom piece sets.  Vertices are found exactly from the rays of the
breakpoint arrangement (cddlib double description serves as a cross-check on
small instances) and compared with the normalised indicators of simple sets.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import cdd

from .bv_core import BVFunction, CellSet, perimeter, tv
from .decomposition import (
    DEFAULT_CAPS,
    CapExceeded,
    is_indecomposable,
    is_isotropic,
    is_simple,
    satisfies_condition_1_4,
)
from .space_model import ModelError, SpaceModel, mask_of

__all__ = [
    "BVBallInstance",
    "VertexClass",
    "ExtremePointReport",
    "build_instance",
    "enumerate_vertices",
    "predict_vertices",
    "is_midpoint_extreme",
    "compare",
]

Vec = tuple[Fraction, ...]


def _is_concave(t: Sequence[Fraction]) -> bool:
    return all(t[k - 1] + t[k + 1] <= 2 * t[k] for k in range(1, len(t) - 1))


@dataclass
class BVBallInstance:
    model: SpaceModel
    K: CellSet
    free: tuple[int, ...]
    pieces: tuple[tuple[Vec, ...], ...]
    hyperplanes: tuple[Vec, ...]
    pattern_cap: int = DEFAULT_CAPS["patterns"]

    @property
    def dim(self) -> int:
        return len(self.free)

    def function(self, v: Sequence[Fraction]) -> BVFunction:
        vals = [Fraction(0)] * self.model.n_cells
        for c, x in zip(self.free, v):
            vals[c] = Fraction(x)
        return BVFunction(self.model, tuple(vals))

    def vector(self, f: BVFunction) -> Vec:
        return tuple(Fraction(f.values[c]) for c in self.free)

    @property
    def patterns(self) -> int:
        n = 1
        for p in _merged_piece_sets(self):
            n *= len(p)
        return n

    def constraints(self) -> tuple[Vec, ...]:
        """Minkowski sum of the per-atom piece sets (one row per pattern)."""
        sets = _merged_piece_sets(self)
        if self.patterns > self.pattern_cap:
            raise CapExceeded(f"{self.patterns} sign patterns exceed cap {self.pattern_cap}")
        sums: set[Vec] = {tuple([Fraction(0)] * self.dim)}
        for p in sets:
            sums = {tuple(x + y for x, y in zip(s, w)) for s in sums for w in p}
        return tuple(sorted(sums))


def _atom_pieces(model: SpaceModel, a: int, pos: dict[int, int]) -> tuple[Vec, ...]:
    atom = model.atoms[a]
    t = atom.theta_table
    n = len(pos)
    out = set()
    for perm in itertools.permutations(atom.incident):
        w = [Fraction(0)] * n
        for i, c in enumerate(perm, start=1):
            if c in pos:
                w[pos[c]] += atom.h_weight * (t[i] - t[i - 1])
        out.add(tuple(w))
    return tuple(sorted(out))


def _merged_piece_sets(inst: BVBallInstance) -> list[tuple[Vec, ...]]:
    """Merge symmetric segments ``{w, -w}`` along a common direction; the
    Minkowski sum of parallel centred segments is one longer segment."""
    segments: dict[Vec, Fraction] = {}
    general = []
    for pieces in inst.pieces:
        if len(pieces) == 2 and all(x == -y for x, y in zip(*pieces)):
            u = pieces[0]
            g = next(x for x in u if x != 0)
            direction = tuple(x / abs(g) for x in u)
            if direction[next(i for i, x in enumerate(direction) if x != 0)] < 0:
                direction = tuple(-x for x in direction)
            segments[direction] = segments.get(direction, Fraction(0)) + abs(g)
        else:
            general.append(pieces)
    out = [(tuple(s * x for x in d), tuple(-s * x for x in d)) for d, s in sorted(segments.items())]
    return out + general


def build_instance(K: CellSet, free_cap: int | None = None, pattern_cap: int | None = None) -> BVBallInstance:
    """Piece sets and breakpoint hyperplanes for functions supported in ``K``."""
    model = K.model
    free_cap = DEFAULT_CAPS["free"] if free_cap is None else free_cap
    pattern_cap = DEFAULT_CAPS["patterns"] if pattern_cap is None else pattern_cap
    if not K.is_finite:
        raise ModelError("support must be bounded")
    free = K.ids
    if len(free) > free_cap:
        raise CapExceeded(f"{len(free)} free cells exceed cap {free_cap}")
    if not free:
        return BVBallInstance(model, K, (), (), (), pattern_cap)
    for a in model.atoms_touching(K.mask):
        if not _is_concave(model.atoms[a].theta_table):
            raise ModelError(f"atom {a}: theta table is not concave, TV ball is not a polytope of this form")
    # TV is a norm iff every K cell reaches a non-K cell through weighted atoms
    parent = list(range(model.n_cells))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for at in model.atoms:
        if at.h_weight > 0:
            for c in at.incident[1:]:
                parent[find(c)] = find(at.incident[0])
    outside_roots = {find(c) for c in range(model.n_cells) if c not in K}
    if any(find(c) not in outside_roots for c in free):
        raise ModelError("TV is not a norm on functions supported in K (no weighted path to the complement)")
    pos = {c: i for i, c in enumerate(free)}
    n = len(free)
    pieces = []
    planes: set[Vec] = set()
    for a in model.atoms_touching(K.mask):
        atom = model.atoms[a]
        if atom.h_weight == 0:
            continue
        pieces.append(_atom_pieces(model, a, pos))
        for u, v in itertools.combinations(atom.incident, 2):
            if u not in pos and v not in pos:
                continue
            row = [Fraction(0)] * n
            if u in pos:
                row[pos[u]] += 1
            if v in pos:
                row[pos[v]] -= 1
            planes.add(_primitive(row))
    return BVBallInstance(model, K, free, tuple(pieces), tuple(sorted(planes)), pattern_cap)


def _primitive(row: Sequence[Fraction]) -> Vec:
    """Scale to the primitive integer vector with positive leading entry."""
    den = 1
    for x in row:
        den = den * x.denominator // math.gcd(den, x.denominator)
    ints = [int(x * den) for x in row]
    g = 0
    for x in ints:
        g = math.gcd(g, x)
    ints = [x // g for x in ints]
    lead = next(x for x in ints if x != 0)
    if lead < 0:
        ints = [-x for x in ints]
    return tuple(Fraction(x) for x in ints)


def _nullspace_1d(rows: Sequence[Vec], n: int) -> Vec | None:
    """Generator of the nullspace when it is one-dimensional, else ``None``."""
    m = [list(r) for r in rows]
    pivots = []
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        pv = m[r][col]
        m[r] = [x / pv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
    if r != n - 1:
        return None
    freecol = next(c for c in range(n) if c not in pivots)
    v = [Fraction(0)] * n
    v[freecol] = Fraction(1)
    for i, pc in enumerate(pivots):
        v[pc] = -m[i][freecol]
    return _primitive(v)


def _value(pieces: Sequence[Vec], f: Sequence[Fraction]) -> list[Fraction]:
    return [sum((a * b for a, b in zip(w, f)), Fraction(0)) for w in pieces]


def _active_rank(inst: BVBallInstance, f: Sequence[Fraction]) -> int:
    """Rank of the constraint rows active at ``f`` (those attaining TV(f)).

    Active rows are the sums of per-atom maximisers, so their span is one
    such sum plus the spans of the differences between maximisers.
    """
    base = [Fraction(0)] * inst.dim
    rows = []
    for pieces in inst.pieces:
        vals = _value(pieces, f)
        top = max(vals)
        arg = [w for w, v in zip(pieces, vals) if v == top]
        base = [a + b for a, b in zip(base, arg[0])]
        rows.extend(tuple(x - y for x, y in zip(w, arg[0])) for w in arg[1:])
    return _rank([tuple(base)] + rows)


def enumerate_vertices(instance: BVBallInstance, method: str = "arrangement") -> list[Vec]:
    """Exact vertex list of the ball, sorted.

    ``arrangement``: TV is linear between the hyperplanes ``f_u = f_v`` (and
    ``f_u = 0``) of each atom, so every vertex lies on a ray cut out by
    ``dim - 1`` independent hyperplanes.  Each ray is normalised to TV = 1 and
    kept when its active constraints have full rank.  ``cdd``: double
    description on the explicit inequality system (exponential; small
    instances only).
    """
    if instance.dim == 0:
        return []
    if method == "cdd":
        return _enumerate_cdd(instance)
    if method != "arrangement":
        raise ModelError(f"unknown method {method!r}")
    n = instance.dim
    rays: set[Vec] = set()
    planes = instance.hyperplanes
    if n == 1:
        rays.add((Fraction(1),))
    else:
        for combo in itertools.combinations(planes, n - 1):
            r = _nullspace_1d(combo, n)
            if r is not None:
                rays.add(r)
    out = set()
    for r in rays:
        for sgn in (1, -1):
            d = tuple(sgn * x for x in r)
            t = tv(instance.function(d))
            if t == 0:
                raise ModelError("TV vanishes on a nonzero function: not a norm")
            f = tuple(x / t for x in d)
            if _active_rank(instance, f) == n:
                out.add(f)
    return sorted(out)


def _enumerate_cdd(instance: BVBallInstance) -> list[Vec]:
    rows = [[1] + [-x for x in c] for c in instance.constraints()]
    mat = cdd.Matrix(rows, number_type="fraction")
    mat.rep_type = cdd.RepType.INEQUALITY
    gens = cdd.Polyhedron(mat).get_generators()
    out = []
    for i in range(gens.row_size):
        row = gens[i]
        if row[0] != 1:
            raise ModelError("ball is unbounded: TV is not a norm on this support")
        out.append(tuple(Fraction(x) for x in row[1:]))
    return sorted(set(out))


def predict_vertices(instance: BVBallInstance, region_cap: int | None = None) -> list[tuple[Vec, CellSet, int]]:
    """``(+-1_E / P(E), E, sign)`` for every simple nonempty ``E`` inside ``K``."""
    model = instance.model
    out = []
    free = instance.free
    for r in range(1, len(free) + 1):
        for combo in itertools.combinations(free, r):
            E = CellSet(model, mask_of(combo))
            if not is_simple(E, cap=region_cap, cross_check=False).simple:
                continue
            p = perimeter(E)
            for s in (1, -1):
                v = tuple(Fraction(s, 1) / p if c in E else Fraction(0) for c in free)
                out.append((v, E, s))
    out.sort(key=lambda t: t[0])
    return out


def _rank(rows: list[Vec]) -> int:
    m = [list(r) for r in rows]
    rank = 0
    ncols = len(m[0]) if m else 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        pv = m[rank][col]
        for i in range(len(m)):
            if i != rank and m[i][col] != 0:
                f = m[i][col] / pv
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
    return rank


def is_midpoint_extreme(instance: BVBallInstance, v: Sequence[Fraction]) -> bool:
    """``v`` lies in the ball and is not the midpoint of two distinct members.

    For a polytope this holds exactly when ``TV(v) = 1`` and the constraint
    rows active at ``v`` have full rank.
    """
    if instance.dim == 0 or tv(instance.function(v)) != 1:
        return False
    return _active_rank(instance, v) == instance.dim


@dataclass
class VertexClass:
    vector: Vec
    tv: Fraction
    indicator_set: CellSet | None
    sign: int
    kind: str  # simple | indecomposable-not-simple | decomposable | other


@dataclass
class ExtremePointReport:
    instance: BVBallInstance
    vertices: list[Vec]
    predicted: list[tuple[Vec, CellSet, int]]
    classes: list[VertexClass]
    hypotheses: dict[str, bool]
    verdicts: dict[str, bool]
    mismatches: list[str] = field(default_factory=list)

    @property
    def hypotheses_hold(self) -> bool:
        return all(self.hypotheses.values())


def _classify(instance: BVBallInstance, v: Vec) -> VertexClass:
    model = instance.model
    f = instance.function(v)
    t = tv(f)
    nz = {x for x in v if x != 0}
    if len(nz) != 1:
        return VertexClass(v, t, None, 0, "other")
    lam = nz.pop()
    E = CellSet(model, mask_of(c for c, x in zip(instance.free, v) if x != 0))
    sign = 1 if lam > 0 else -1
    if abs(lam) != 1 / perimeter(E):
        return VertexClass(v, t, E, sign, "other")
    if is_simple(E, cross_check=False).simple:
        kind = "simple"
    elif is_indecomposable(E).indecomposable:
        kind = "indecomposable-not-simple"
    else:
        kind = "decomposable"
    return VertexClass(v, t, E, sign, kind)


def compare(instance: BVBallInstance, method: str = "arrangement") -> ExtremePointReport:
    """Enumerated vertices against the simple-set prediction.

    Verdicts are reported separately for each inclusion so that a one-sided
    failure can be attributed.
    """
    model = instance.model
    verts = enumerate_vertices(instance, method)
    pred = predict_vertices(instance)
    classes = [_classify(instance, v) for v in verts]
    vset = set(verts)
    pset = {p[0] for p in pred}
    Kc = instance.K.complement()
    hyp = {
        "isotropic": is_isotropic(model),
        "condition_1_4": satisfies_condition_1_4(model),
        "complement_connected": bool(Kc) and bool(is_indecomposable(Kc)),
    }
    verdicts = {
        "tv_one": all(c.tv == 1 for c in classes),
        "symmetric": all(tuple(-x for x in v) in vset for v in verts),
        "ext_indicators": all(c.kind != "other" for c in classes),
        "ext_in_indecomposable": all(c.kind in ("simple", "indecomposable-not-simple") for c in classes),
        "simple_in_ext": pset <= vset,
        "simple_midpoint_extreme": all(is_midpoint_extreme(instance, p[0]) for p in pred),
        "equal": vset == pset,
    }
    mism = []
    for c in classes:
        if c.vector not in pset:
            where = f" = {c.sign:+d} 1_{{{' '.join(map(str, c.indicator_set.ids))}}}/P" if c.indicator_set else ""
            mism.append(f"vertex ({' '.join(map(str, c.vector))}){where} not predicted: {c.kind}")
    for v, E, s in pred:
        if v not in vset:
            mism.append(f"prediction {s:+d} 1_{{{' '.join(map(str, E.ids))}}}/P not a vertex")
    return ExtremePointReport(instance, verts, pred, classes, hyp, verdicts, mism)
