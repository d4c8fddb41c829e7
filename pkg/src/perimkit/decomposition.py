"""Additive splits, indecomposable components, holes, saturation and simple sets.

Perimeter additivity ``P(E, B) = P(F, B) + P(E \\ F, B)`` is decided atom by
atom: theta tables are subadditive, so the global identity holds exactly when
every atom of ``B`` satisfies ``theta(k_F) + theta(k_G) = theta(k_E)``.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from .bv_core import (
    AtomSet,
    BVFunction,
    CellSet,
    essential_boundary,
    essential_interior,
    perimeter,
    tv,
)
from .space_model import ModelError, SpaceModel, audit_isotropy, iter_bits, mask_of

__all__ = [
    "CapExceeded",
    "DEFAULT_CAPS",
    "SplitCertificate",
    "IndecomposabilityResult",
    "DecompositionReport",
    "XiFamily",
    "SaturationReport",
    "SimplicityResult",
    "LiouvilleReport",
    "AhlforsRecord",
    "is_additive_split",
    "is_indecomposable",
    "decompose",
    "maximality_witnesses",
    "enumerate_additive_partitions",
    "xi_sigma_algebra",
    "complement_components",
    "holes",
    "saturate",
    "is_saturated",
    "saturation_report",
    "saturation_properties",
    "is_simple",
    "check_liouville_equivalence",
    "ahlfors_unique_infinite_component",
    "is_isotropic",
    "satisfies_condition_1_4",
]


class CapExceeded(ModelError):
    """An exhaustive search would exceed its configured size cap."""


DEFAULT_CAPS = {"brute": 22, "xi": 18, "regions": 24, "patterns": 2**20, "free": 8}

_CHUNK = 1 << 16


def is_isotropic(model: SpaceModel) -> bool:
    key = "isotropic"
    if key not in model._cache:
        model._cache[key] = not audit_isotropy(model)
    return model._cache[key]


def satisfies_condition_1_4(model: SpaceModel) -> bool:
    """Local certificate: the triple-boundary condition can only fail at an
    atom of degree >= 3 with positive weight (three boundaries need
    ``0 < k_E, k_F`` and ``k_E + k_F < d``)."""
    return not any(a.degree >= 3 and a.h_weight > 0 for a in model.atoms)


def _atoms_mask(model: SpaceModel, B: AtomSet | None) -> int:
    if B is None:
        return (1 << model.n_atoms) - 1
    if B.model is not model:
        raise ModelError("atom set belongs to a different model")
    return B.mask


# ---------------------------------------------------------------------------
# split certificates
# ---------------------------------------------------------------------------


@dataclass
class SplitCertificate:
    E: CellSet
    F: CellSet
    G: CellSet
    B: AtomSet | None
    ledger: dict[int, Fraction]
    valid: bool
    first_violation: int | None = None
    boundary_consistent: bool | None = None

    @property
    def defect(self) -> Fraction:
        return sum(self.ledger.values(), Fraction(0))


def is_additive_split(E: CellSet, F: CellSet, B: AtomSet | None = None) -> SplitCertificate:
    """Per-atom ledger ``h * (theta_F + theta_G - theta_E)`` on ``B``.

    On isotropic models the verdict is cross-checked against the boundary
    criterion: the split is additive iff the boundaries of ``F`` and ``G``
    share no h-mass inside ``B``.
    """
    if not F.issubset(E):
        raise ModelError("F must be a subset of E")
    model = E.model
    G = E - F
    bm = _atoms_mask(model, B)
    ledger = {}
    first = None
    shared = False
    am, cb, scale = model.atom_masks, model.contrib, model.scale
    zero = Fraction(0)
    for a in model.atoms_touching(E.mask):  # atoms away from E have kE = 0
        if not (bm >> a) & 1:
            continue
        d = model.atoms[a].degree
        kE, kF, kG = (E.mask & am[a]).bit_count(), (F.mask & am[a]).bit_count(), (G.mask & am[a]).bit_count()
        val = cb[a][kF] + cb[a][kG] - cb[a][kE]
        assert val >= 0, "theta tables are subadditive"
        ledger[a] = Fraction(val, scale) if val else zero
        if val and first is None:
            first = a
        if 0 < kF < d and 0 < kG < d and model.atoms[a].h_weight > 0:
            shared = True
    valid = first is None
    boundary = (not shared) == valid if is_isotropic(model) else None
    return SplitCertificate(E, F, G, B, ledger, valid, first, boundary)


def _relevant_atoms(model: SpaceModel, support: int, ref: int, bm: int) -> list[int]:
    """Atoms of ``bm`` touching ``support`` where some local split could fail."""
    out = []
    for a in model.atoms_touching(support):
        if not (bm >> a) & 1:
            continue
        atom = model.atoms[a]
        if atom.h_weight == 0:
            continue
        kE = model.occupancy(ref, a)
        if atom.is_flexible(kE):
            continue
        out.append(a)
    return out


def _additive_subsets(
    model: SpaceModel, support: int, ref: int, bm: int, first_only: bool, include_full: bool = False
) -> Iterator[int]:
    """Yield masks ``F`` with ``min(support) in F``, ``F`` a proper subset of
    ``support``, that split ``ref`` additively on the atoms ``bm``.

    Rows are enumerated in increasing order of the bit pattern over the
    remaining cells of ``support``.
    """
    cells = list(iter_bits(support))
    m = len(cells)
    if m == 0:
        return
    rest = cells[1:]
    atoms = _relevant_atoms(model, support, ref, bm)
    total = 1 << (m - 1)
    stop = total if include_full else total - 1
    if not atoms:
        for idx in range(stop):
            yield (1 << cells[0]) | sum(1 << rest[j] for j in range(m - 1) if (idx >> j) & 1)
            if first_only:
                return
        return
    inc = model.incidence[np.ix_(atoms, cells)]  # (A, m)
    kE = np.array([model.occupancy(ref, a) for a in atoms], dtype=np.int64)
    tab = model.contrib_table[atoms]  # (A, D+1)
    rows = np.arange(len(atoms))[None, :]
    base = tab[np.arange(len(atoms)), kE]
    shifts = np.arange(m - 1, dtype=np.int64)
    for start in range(0, stop, _CHUNK):
        idx = np.arange(start, min(stop, start + _CHUNK), dtype=np.int64)
        bits = (idx[:, None] >> shifts[None, :]) & 1
        kF = bits @ inc[:, 1:].T + inc[:, 0][None, :]
        kG = kE[None, :] - kF
        defect = tab[rows, kF] + tab[rows, kG] - base[None, :]
        ok = np.nonzero(~np.any(defect != 0, axis=1))[0]
        for r in ok:
            i = int(idx[r])
            yield (1 << cells[0]) | sum(1 << rest[j] for j in range(m - 1) if (i >> j) & 1)
            if first_only:
                return


def _check_cap(n: int, cap: int, what: str) -> None:
    if n > cap:
        raise CapExceeded(f"{what}: {n} cells exceeds cap {cap}")


# ---------------------------------------------------------------------------
# indecomposability
# ---------------------------------------------------------------------------


@dataclass
class IndecomposabilityResult:
    indecomposable: bool
    witness: SplitCertificate | None
    mode: str

    def __bool__(self) -> bool:
        return self.indecomposable


def _rigid_classes(model: SpaceModel, mask: int, bm: int) -> list[int] | None:
    """Union-find classes of ``mask`` joined at rigid atoms, or ``None`` when
    some touching atom is neither rigid nor flexible at its occupancy."""
    parent = {c: c for c in iter_bits(mask)}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a in model.atoms_touching(mask):
        if not (bm >> a) & 1:
            continue
        atom = model.atoms[a]
        inside = model.atom_masks[a] & mask
        k = inside.bit_count()
        if k < 2 or atom.h_weight == 0 or atom.is_flexible(k):
            continue
        if not atom.is_rigid(k):
            return None
        cs = list(iter_bits(inside))
        r0 = find(cs[0])
        for c in cs[1:]:
            parent[find(c)] = r0
    groups: dict[int, int] = {}
    for c in parent:
        r = find(c)
        groups[r] = groups.get(r, 0) | (1 << c)
    return sorted(groups.values(), key=lambda g: (g & -g))


def is_indecomposable(
    E: CellSet, B: AtomSet | None = None, mode: str = "fast", cap: int | None = None
) -> IndecomposabilityResult:
    """Decide indecomposability of ``E`` in ``B``.

    ``brute`` enumerates every bipartition (``|E| <= cap``).  ``fast`` uses
    connectivity through rigid atoms and falls back to ``brute`` when some
    atom admits both additive and non-additive local splits.
    """
    if mode not in ("fast", "brute"):
        raise ModelError(f"unknown mode {mode!r}")
    model = E.model
    cap = DEFAULT_CAPS["brute"] if cap is None else cap
    bm = _atoms_mask(model, B)
    key = ("indec", E.mask, bm, mode)
    if key in model._cache:
        return model._cache[key]
    res = None
    if len(E) <= 1:
        res = IndecomposabilityResult(True, None, mode)
    elif mode == "fast":
        classes = _rigid_classes(model, E.mask, bm)
        if classes is not None:
            if len(classes) == 1:
                res = IndecomposabilityResult(True, None, "fast")
            else:
                cert = is_additive_split(E, CellSet(model, classes[0]), B)
                assert cert.valid
                res = IndecomposabilityResult(False, cert, "fast")
    if res is None:
        _check_cap(len(E), cap, "brute-force indecomposability")
        F = next(_additive_subsets(model, E.mask, E.mask, bm, first_only=True), None)
        if F is None:
            res = IndecomposabilityResult(True, None, "brute" if mode == "brute" else "fast->brute")
        else:
            cert = is_additive_split(E, CellSet(model, F), B)
            assert cert.valid
            res = IndecomposabilityResult(False, cert, "brute" if mode == "brute" else "fast->brute")
    model._cache[key] = res
    return res


# ---------------------------------------------------------------------------
# decomposition
# ---------------------------------------------------------------------------


def _canonical(model: SpaceModel, masks: Iterable[int]) -> tuple[int, ...]:
    def key(m):
        meas = model.mask_measure(m)
        return (-meas if meas != math.inf else -math.inf, (m & -m).bit_length())

    return tuple(sorted(masks, key=key))


@dataclass
class DecompositionReport:
    input: CellSet
    components: tuple[CellSet, ...]
    perimeter: Fraction
    component_perimeters: tuple[Fraction, ...]
    algorithm: str
    provenance: str
    isotropic: bool
    verified: bool
    notes: tuple[str, ...] = ()
    maximality: list = field(default_factory=list)

    @property
    def ledger_ok(self) -> bool:
        return sum(self.component_perimeters, Fraction(0)) == self.perimeter

    @property
    def partition(self) -> frozenset[int]:
        return frozenset(c.mask for c in self.components)

    def as_rows(self) -> list[tuple[int, list[int], Fraction, Fraction]]:
        return [
            (i, list(c.ids), c.measure, p) for i, (c, p) in enumerate(zip(self.components, self.component_perimeters))
        ]


def _brute_parts(model: SpaceModel, mask: int, bm: int, cap: int) -> tuple[int, ...]:
    key = ("brute_parts", mask, bm)
    if key in model._cache:
        return model._cache[key]
    if mask.bit_count() <= 1:
        out = (mask,) if mask else ()
    else:
        _check_cap(mask.bit_count(), cap, "brute decomposition")
        F = next(_additive_subsets(model, mask, mask, bm, first_only=True), None)
        if F is None:
            out = (mask,)
        else:
            out = _brute_parts(model, F, bm, cap) + _brute_parts(model, mask & ~F, bm, cap)
    model._cache[key] = out
    return out


def _fast_parts(model: SpaceModel, mask: int, bm: int, cap: int) -> tuple[tuple[int, ...], str]:
    classes = _rigid_classes(model, mask, bm)
    if classes is not None:
        return tuple(classes), "fast"
    # mixed atoms: components of the rigid-join graph are still indecomposable
    # only if their union is additive; otherwise fall back
    return _brute_parts(model, mask, bm, cap), "fast->brute"


def _xi_parts(model: SpaceModel, mask: int, bm: int, cap: int) -> tuple[tuple[int, ...], list[int]]:
    """Refine ``{E}`` by members of Xi(E) until no atom of the generated
    algebra contains a proper nonempty member."""
    atoms = [mask]
    generators = []
    changed = True
    while changed:
        changed = False
        nxt = []
        for A in atoms:
            if A.bit_count() > 1:
                _check_cap(A.bit_count(), cap, "xi-atom refinement")
                F = next(_additive_subsets(model, A, mask, bm, first_only=True), None)
            else:
                F = None
            if F is None:
                nxt.append(A)
            else:
                generators.append(F)
                nxt.extend([F, A & ~F])
                changed = True
        atoms = nxt
    return tuple(atoms), generators


def _variational_parts(
    model: SpaceModel, mask: int, bm: int, cap: int, alpha: float
) -> tuple[tuple[int, ...], bool]:
    """Greedy recursion maximising ``m(F)^(1/alpha) + m(G)^(1/alpha)``.

    Within the cap every additive bipartition is scored.  Beyond it the
    search runs over unions of rigid-join classes and is flagged heuristic.
    """
    if mask.bit_count() <= 1:
        return ((mask,) if mask else ()), True
    w = 1.0 / alpha
    if mask.bit_count() <= cap:
        cand = list(_additive_subsets(model, mask, mask, bm, first_only=False))
        exact = True
    else:
        classes = _rigid_classes(model, mask, bm)
        if classes is None or len(classes) - 1 > cap:
            raise CapExceeded("variational search beyond cap without rigid classes")
        cand = []
        for idx in range(1 << (len(classes) - 1)):
            F = classes[0] | sum(classes[j + 1] for j in range(len(classes) - 1) if (idx >> j) & 1)
            if F != mask and _is_additive_mask(model, mask, F, bm):
                cand.append(F)
        exact = False
    if not cand:
        return (mask,), exact
    best, score = None, -1.0
    for F in cand:
        s = float(model.mask_measure(F)) ** w + float(model.mask_measure(mask & ~F)) ** w
        if s > score + 1e-15:
            best, score = F, s
    left, e1 = _variational_parts(model, best, bm, cap, alpha)
    right, e2 = _variational_parts(model, mask & ~best, bm, cap, alpha)
    return left + right, exact and e1 and e2


def _is_additive_mask(model: SpaceModel, E: int, F: int, bm: int) -> bool:
    G = E & ~F
    cb = model.contrib
    am = model.atom_masks
    for a in model.atoms_touching(E):
        if (bm >> a) & 1:
            kE, kF, kG = (E & am[a]).bit_count(), (F & am[a]).bit_count(), (G & am[a]).bit_count()
            if cb[a][kF] + cb[a][kG] != cb[a][kE]:
                return False
    return True


def _default_alpha(model: SpaceModel) -> float:
    s = float(model.metadata.get("dimension") or 2)
    s = max(s, 2.0)
    return (1.0 + s / (s - 1.0)) / 2.0


def decompose(
    E: CellSet,
    algorithm: str = "fast",
    alpha: float | None = None,
    B: AtomSet | None = None,
    cap: int | None = None,
    allow_infinite: bool = False,
    verify: bool = True,
) -> DecompositionReport:
    """Partition ``E`` into indecomposable pieces with additive perimeter.

    Components are ordered by decreasing measure, ties by smallest cell id.
    ``verify`` re-checks the perimeter ledger and the indecomposability of
    each component.
    """
    model = E.model
    if not E.is_finite and not allow_infinite:
        raise ModelError("decompose needs a set of finite measure")
    cap = DEFAULT_CAPS["brute"] if cap is None else cap
    bm = _atoms_mask(model, B)
    notes = []
    if algorithm == "fast":
        parts, prov = _fast_parts(model, E.mask, bm, cap)
    elif algorithm == "brute":
        parts, prov = _brute_parts(model, E.mask, bm, cap), "brute"
    elif algorithm == "xi-atoms":
        parts, gens = _xi_parts(model, E.mask, bm, cap)
        prov = f"xi-atoms ({len(gens)} generators)"
    elif algorithm == "variational":
        a = _default_alpha(model) if alpha is None else float(alpha)
        if a <= 1:
            raise ModelError("alpha must exceed 1")
        parts, exact = _variational_parts(model, E.mask, bm, cap, a)
        prov = f"variational (alpha={a:g})"
        if not exact:
            notes.append("heuristic: search ran over rigid classes beyond the cap")
    else:
        raise ModelError(f"unknown algorithm {algorithm!r}")
    parts = _canonical(model, parts)
    comps = tuple(CellSet(model, m) for m in parts)
    per = tuple(perimeter(c, B) for c in comps)
    total = perimeter(E, B)
    iso = is_isotropic(model)
    if not iso:
        notes.append("model is not isotropic: uniqueness of the partition is not guaranteed")
    ok = True
    if verify:
        ok = sum(per, Fraction(0)) == total and all(is_indecomposable(c, B, "fast", cap) for c in comps)
        if not ok:
            raise AssertionError("decomposition failed verification")
    return DecompositionReport(E, comps, total, per, algorithm, prov, iso, ok, tuple(notes))


def maximality_witnesses(
    report: DecompositionReport, candidates: Iterable[CellSet] | None = None, cap: int = 12
) -> list[tuple[CellSet, list[int]]]:
    """For each indecomposable ``F`` inside ``E`` list the components containing it.

    Without ``candidates`` every nonempty subset of ``E`` is tried (``|E| <= cap``).
    The decomposition is maximal when every list has exactly one entry.
    """
    E = report.input
    model = E.model
    if candidates is None:
        _check_cap(len(E), cap, "maximality enumeration")
        cells = E.ids
        cands = []
        for r in range(1, len(cells) + 1):
            for combo in itertools.combinations(cells, r):
                cands.append(CellSet(model, mask_of(combo)))
    else:
        cands = list(candidates)
    out = []
    for F in cands:
        if not F.issubset(E) or not F:
            continue
        if not is_indecomposable(F):
            continue
        hits = [i for i, c in enumerate(report.components) if F.issubset(c)]
        out.append((F, hits))
    report.maximality = out
    return out


def enumerate_additive_partitions(E: CellSet, cap: int = 14, limit: int | None = None) -> list[frozenset[int]]:
    """Every partition of ``E`` into indecomposable blocks with additive perimeter.

    Subadditivity makes ``sum P(blocks) >= P(E)`` hold for every partial
    choice, so the block containing the smallest remaining cell must split
    the remainder additively; the search only branches on such blocks.
    """
    model = E.model
    _check_cap(len(E), cap, "partition search")
    bm = (1 << model.n_atoms) - 1
    memo: dict[int, list[tuple[int, ...]]] = {}

    def rec(R: int) -> list[tuple[int, ...]]:
        if R == 0:
            return [()]
        if R in memo:
            return memo[R]
        out = []
        for blk in _additive_subsets(model, R, R, bm, first_only=False, include_full=True):
            if not is_indecomposable(CellSet(model, blk)):
                continue
            for tail in rec(R & ~blk):
                out.append((blk,) + tail)
                if limit is not None and len(out) >= limit:
                    break
        memo[R] = out
        return out

    return [frozenset(p) for p in rec(E.mask)]


# ---------------------------------------------------------------------------
# the sigma-algebra of additive subsets
# ---------------------------------------------------------------------------


@dataclass
class XiFamily:
    E: CellSet
    members: tuple[CellSet, ...]
    atoms: tuple[CellSet, ...]
    closed: bool
    localization_checked: int
    localization_ok: bool


def _all_additive(model: SpaceModel, E: int, bm: int) -> list[int]:
    """Every ``F`` inside ``E`` (empty and full included) splitting ``E`` additively."""
    if E == 0:
        return [0]
    out = set()
    for F in _additive_subsets(model, E, E, bm, first_only=False, include_full=True):
        out.add(F)
        out.add(E & ~F)
    return sorted(out)


def xi_sigma_algebra(E: CellSet, B: AtomSet | None = None, cap: int | None = None, local_limit: int = 256) -> XiFamily:
    """All ``F`` inside ``E`` with ``P(E, B) = P(F, B) + P(E \\ F, B)``.

    Closure is certified by checking that the minimal nonempty members
    partition ``E`` and that the family is exactly the set of their unions.
    Localisation (members of the family inside ``G`` are exactly the additive
    subsets of ``G``) is checked for up to ``local_limit`` members ``G``.
    """
    model = E.model
    cap = DEFAULT_CAPS["xi"] if cap is None else cap
    _check_cap(len(E), cap, "xi sigma-algebra")
    bm = _atoms_mask(model, B)
    fam = _all_additive(model, E.mask, bm)
    fam_set = set(fam)
    nonempty = [m for m in fam if m]
    atoms = [m for m in nonempty if not any(o != m and o & ~m == 0 for o in nonempty)]
    cover = 0
    disjoint = True
    for a in atoms:
        if cover & a:
            disjoint = False
        cover |= a
    closed = disjoint and cover == E.mask and len(fam_set) == (1 << len(atoms))
    if closed:
        closed = all(all((m & a) in (0, a) for a in atoms) for m in fam)
    checked = 0
    loc_ok = True
    for G in sorted(fam_set, key=lambda m: (m.bit_count(), m))[:local_limit]:
        inner = {F for F in fam_set if F & ~G == 0}
        direct = set(_all_additive(model, G, bm))
        checked += 1
        if inner != direct:
            loc_ok = False
    members = tuple(CellSet(model, m) for m in sorted(fam_set, key=lambda m: (m.bit_count(), m)))
    atom_sets = tuple(CellSet(model, m) for m in _canonical(model, atoms))
    return XiFamily(E, members, atom_sets, closed, checked, loc_ok)


# ---------------------------------------------------------------------------
# holes and saturation
# ---------------------------------------------------------------------------


def _require_unbounded(model: SpaceModel) -> None:
    if not model.has_unbounded:
        raise ModelError("holes and saturation need an unbounded cell (infinite total measure)")


def complement_components(E: CellSet) -> list[tuple[CellSet, bool]]:
    """Components of the complement with an ``infinite`` flag (contains an unbounded cell)."""
    model = E.model
    key = ("ccomp", E.mask)
    if key not in model._cache:
        rep = decompose(E.complement(), "fast", allow_infinite=True, verify=False)
        model._cache[key] = [(c, not c.is_finite) for c in rep.components]
    return model._cache[key]


def _holes_of_indecomposable(F: CellSet) -> list[CellSet]:
    return [c for c, inf in complement_components(F) if not inf]


def holes(E: CellSet) -> list[CellSet]:
    """Finite-measure components of the complement of each component of ``E``.

    For indecomposable ``E`` these are the finite components of ``E^c``.
    """
    _require_unbounded(E.model)
    if not E:
        return []
    out: list[CellSet] = []
    for F in decompose(E, "fast", verify=False).components:
        for h in _holes_of_indecomposable(F):
            if h not in out:
                out.append(h)
    return out


def saturate(E: CellSet) -> CellSet:
    _require_unbounded(E.model)
    sat = CellSet.empty(E.model)
    if not E:
        return sat
    for F in decompose(E, "fast", verify=False).components:
        sat = sat | F
        for h in _holes_of_indecomposable(F):
            sat = sat | h
    return sat


def is_saturated(E: CellSet) -> bool:
    return saturate(E) == E


@dataclass
class SaturationReport:
    E: CellSet
    complement_components: list[tuple[CellSet, bool]]
    holes: list[CellSet]
    sat: CellSet
    saturated: bool
    simple: bool | None


def saturation_report(E: CellSet, with_simple: bool = True) -> SaturationReport:
    _require_unbounded(E.model)
    comps = complement_components(E)
    hs = holes(E)
    sat = saturate(E)
    simple = is_simple(E, cross_check=False).simple if with_simple else None
    return SaturationReport(E, comps, hs, sat, sat == E, simple)


def saturation_properties(E: CellSet, others: Sequence[CellSet] = ()) -> dict[str, bool]:
    """Check the saturation properties for an indecomposable finite ``E``.

    i) each hole is saturated; ii) ``sat(E)`` is indecomposable and
    saturated; iii) ``bd sat(E)`` minus ``bd E`` has zero h-mass and
    ``P(sat E) <= P(E)``; iv) ``E`` inside ``sat(F)`` implies ``sat(E)``
    inside ``sat(F)`` for each ``F`` in ``others``.  Also every component
    of ``E^c`` has boundary inside ``bd E`` up to zero h-mass.
    """
    _require_unbounded(E.model)
    res: dict[str, bool] = {}
    hs = holes(E)
    res["i_holes_saturated"] = all(is_saturated(h) for h in hs)
    s = saturate(E)
    res["ii_sat_indecomposable"] = bool(is_indecomposable(s))
    res["ii_sat_saturated"] = saturate(s) == s
    extra = essential_boundary(s) - essential_boundary(E)
    res["iii_boundary_inclusion"] = extra.h_mass == 0
    res["iii_perimeter_decreases"] = perimeter(s) <= perimeter(E)
    iv = True
    for F in others:
        sF = saturate(F)
        if E.issubset(sF) and not s.issubset(sF):
            iv = False
    res["iv_monotone"] = iv
    bE = essential_boundary(E)
    res["component_boundaries"] = all(
        (essential_boundary(c) - bE).h_mass == 0 for c in decompose(E, "fast", verify=False).components
    ) and all((essential_boundary(c) - bE).h_mass == 0 for c, _ in complement_components(E))
    return res


# ---------------------------------------------------------------------------
# simple sets
# ---------------------------------------------------------------------------


@dataclass
class SimplicityResult:
    simple: bool
    witness: CellSet | None
    regions: tuple[CellSet, ...]
    nontrivial_unions: int
    cross_checks: dict[str, bool | None]

    def __bool__(self) -> bool:
        return self.simple


def _regions(E: CellSet) -> list[int]:
    model = E.model
    bd = essential_boundary(E)
    parent = list(range(model.n_cells))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a in model.atoms:
        if a.id in bd or a.h_weight == 0:
            continue
        r0 = find(a.incident[0])
        for c in a.incident[1:]:
            parent[find(c)] = r0
    groups: dict[int, int] = {}
    for c in range(model.n_cells):
        r = find(c)
        groups[r] = groups.get(r, 0) | (1 << c)
    return sorted(groups.values(), key=lambda g: (g & -g))


def is_simple(E: CellSet, cap: int | None = None, cross_check: bool = True) -> SimplicityResult:
    """Simplicity via the regions left after deleting the atoms of ``bd E``.

    The sets ``F`` with ``bd F`` inside ``bd E`` (up to zero h-mass) are the
    unions of these regions, and ``E`` is one of them.  ``E`` is simple when
    every such union is one of ``{}, X, E, E^c``.  The preferred witness is
    ``E`` together with the finite regions of ``E^c``, then a single region
    of ``E``, then the first nontrivial union in bit order.
    """
    model = E.model
    cap = DEFAULT_CAPS["regions"] if cap is None else cap
    regs = _regions(E)
    if len(regs) > cap:
        raise CapExceeded(f"{len(regs)} regions exceed cap {cap}")
    full = model.full_mask
    trivial = {0, full, E.mask, full & ~E.mask}
    nontrivial = (1 << len(regs)) - len(trivial)
    witness = None
    if nontrivial > 0:
        inner = [r for r in regs if r & E.mask]
        outer = [r for r in regs if not r & E.mask]
        finite_out = [r for r in outer if not r & model.unbounded_mask]
        cand = [E.mask | sum(finite_out)] + inner
        for c in cand:
            if c not in trivial:
                witness = c
                break
        if witness is None:
            for idx in range(1, 1 << len(regs)):
                c = sum(regs[j] for j in range(len(regs)) if (idx >> j) & 1)
                if c not in trivial:
                    witness = c
                    break
    simple = witness is None
    checks: dict[str, bool | None] = {}
    if cross_check and E and E.mask != full:
        iso = is_isotropic(model)
        cond = satisfies_condition_1_4(model)
        both = None
        if iso:
            both = bool(is_indecomposable(E)) and bool(is_indecomposable(E.complement()))
        checks["simple_implies_indecomposable"] = (both if simple else None) if iso else None
        checks["indecomposable_implies_simple"] = (simple if both else None) if (iso and cond) else None
        if iso and model.metadata.get("ahlfors") and E.is_finite:
            rhs = bool(is_indecomposable(E)) and is_saturated(E)
            checks["ahlfors_characterization"] = simple == rhs
        else:
            checks["ahlfors_characterization"] = None
    return SimplicityResult(
        simple,
        None if witness is None else CellSet(model, witness),
        tuple(CellSet(model, r) for r in regs),
        nontrivial,
        checks,
    )


# ---------------------------------------------------------------------------
# Liouville-type characterisation of indecomposability
# ---------------------------------------------------------------------------


@dataclass
class LiouvilleReport:
    E: CellSet
    indecomposable: bool
    hypotheses_hold: bool
    split_witness: BVFunction | None
    split_witness_ok: bool | None
    trials: int
    counterexamples: list[BVFunction]

    @property
    def consistent(self) -> bool:
        """Both directions agree with the characterisation where its hypotheses hold."""
        if not self.indecomposable:
            return bool(self.split_witness_ok)
        if self.hypotheses_hold:
            return not self.counterexamples
        return True


def _nonconstant_on(f: BVFunction, E: CellSet) -> bool:
    return len({f.values[c] for c in E}) > 1


def check_liouville_equivalence(E: CellSet, trials: int = 1000, seed: int = 0, exhaustive_cap: int = 10) -> LiouvilleReport:
    """Test "indecomposable iff every f with |Df|(E^1) = 0 is constant on E".

    Direction i: a split ``F`` yields ``f = 1_F`` with no variation on
    ``E^1`` that is nonconstant on ``E``.  Direction ii: functions that are
    constant across each weighted ``E^1`` atom are sampled (group
    indicators, random values, and all 0/1 patterns when few groups) and
    any that is nonconstant on ``E`` is recorded.
    """
    model = E.model
    res = is_indecomposable(E)
    e1 = essential_interior(E)
    hyp = is_isotropic(model) and satisfies_condition_1_4(model)
    wit = None
    wit_ok = None
    if not res.indecomposable:
        F = res.witness.F
        wit = BVFunction.indicator(F)
        wit_ok = tv(wit, e1) == 0 and _nonconstant_on(wit, E)
    # groups of E glued by weighted E^1 atoms
    parent = {c: c for c in E}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a in e1.ids:
        atom = model.atoms[a]
        if atom.h_weight == 0:
            continue
        r0 = find(atom.incident[0])
        for c in atom.incident[1:]:
            parent[find(c)] = r0
    groups: dict[int, list[int]] = {}
    for c in E:
        groups.setdefault(find(c), []).append(c)
    glist = sorted(groups.values())
    rng = random.Random(seed)
    outside = [c.id for c in model.cells if not c.unbounded and c.id not in E]
    counter: list[BVFunction] = []
    n = 0

    def make(gvals: Sequence, outvals: Sequence) -> BVFunction:
        vals = [0] * model.n_cells
        for g, v in zip(glist, gvals):
            for c in g:
                vals[c] = v
        for c, v in zip(outside, outvals):
            vals[c] = v
        return BVFunction(model, tuple(vals))

    def probe(f: BVFunction):
        nonlocal n
        n += 1
        assert tv(f, e1) == 0
        if _nonconstant_on(f, E):
            counter.append(f)

    zeros = [0] * len(outside)
    for i in range(len(glist)):
        if n >= trials:
            break
        probe(make([1 if j == i else 0 for j in range(len(glist))], zeros))
    if len(glist) <= exhaustive_cap:
        for bits in itertools.product((0, 1), repeat=len(glist)):
            if n >= trials:
                break
            probe(make(bits, zeros))
    while n < trials:
        gv = [Fraction(rng.randint(-20, 20), rng.randint(1, 5)) for _ in glist]
        ov = [Fraction(rng.randint(-20, 20), rng.randint(1, 5)) for _ in outside]
        probe(make(gv, ov))
    return LiouvilleReport(E, res.indecomposable, hyp, wit, wit_ok, n, counter)


# ---------------------------------------------------------------------------
# unique infinite complement component
# ---------------------------------------------------------------------------


@dataclass
class AhlforsRecord:
    E: CellSet
    infinite_components: list[CellSet]
    unique: bool
    ahlfors_model: bool

    @property
    def counterexample(self) -> bool:
        return not self.unique


def ahlfors_unique_infinite_component(E: CellSet) -> AhlforsRecord:
    """Infinite-measure components of ``E^c``.

    On framed grids exactly one is expected; on the strip a crossing set
    leaves one on each side, which is recorded as a counterexample.
    """
    if not E.is_finite:
        raise ModelError("E must have finite measure")
    _require_unbounded(E.model)
    inf = [c for c, infinite in complement_components(E) if infinite]
    return AhlforsRecord(E, inf, len(inf) == 1, bool(E.model.metadata.get("ahlfors")))
