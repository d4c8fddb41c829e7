"""Discrete perimeter spaces: cells with measures glued by weighted interface atoms.

A :class:`SpaceModel` is a finite list of cells (each with a measure, possibly
``math.inf`` for exterior regions) together with interface atoms.  An atom
touches ``d >= 2`` cells and carries a codimension-one weight ``h`` plus a
table ``theta[k]`` giving the boundary density when ``k`` of its incident
cells belong to a set.  The perimeter of a cell set in an atom set ``B`` is

    P(E, B) = sum over atoms a in B of h_a * theta_a(k_a(E)).

All weights are kept as :class:`fractions.Fraction` so that every identity in
the package can be checked exactly.
"""
from __future__ import annotations

import heapq
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

Number = Fraction | int | float

__all__ = [
    "Cell",
    "InterfaceAtom",
    "Geometry",
    "SpaceModel",
    "BallIndex",
    "ModelError",
    "build_grid",
    "build_metric_graph",
    "build_star",
    "build_path",
    "build_sierpinski_carpet",
    "build_strip",
    "build_from_string",
    "carpet_strip_ratio",
    "carpet_diagnostic_abscissas",
    "covering_ball_ratio",
    "vertex_h_weight",
    "oracle_ramp_relaxation",
    "audit_isotropy",
    "audit_condition_1_4",
    "audit_pi_constants",
    "ball",
    "load_model",
    "save_model",
    "model_to_json",
    "model_from_json",
]


class ModelError(ValueError):
    """Raised when a model or builder input violates its contract."""


def as_fraction(x: Number | str) -> Fraction:
    """Exact conversion; floats are converted bit-for-bit."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ModelError(f"non-finite value {x!r}")
        return Fraction(x)
    return Fraction(x)


def _frac_str(x: Fraction) -> str | int:
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Cell:
    id: int
    measure: Fraction | float
    unbounded: bool = False


@dataclass(frozen=True)
class InterfaceAtom:
    id: int
    incident: tuple[int, ...]
    h_weight: Fraction
    theta_table: tuple[Fraction, ...]

    @property
    def degree(self) -> int:
        return len(self.incident)

    def theta(self, k: int) -> Fraction:
        return self.theta_table[k]

    def is_rigid(self, k: int) -> bool:
        """No proper split of ``k`` occupied cells is additive at this atom."""
        t = self.theta_table
        return all(t[j] + t[k - j] > t[k] for j in range(1, k))

    def is_flexible(self, k: int) -> bool:
        """``theta`` is linear on ``0..k``, so every partition of ``k``
        occupied cells (into any number of parts) is additive here."""
        t = self.theta_table
        return all(t[j] == j * t[1] for j in range(2, k + 1))


@dataclass(frozen=True)
class Geometry:
    """Per-cell hints for ball audits.

    ``coords`` holds cell centres (``None`` for cells without a position);
    ``diameters`` holds a length scale per cell.  Adjacent bounded cells are
    at Euclidean distance when both have coordinates, otherwise at the mean
    of their diameters.
    """

    diameters: tuple[float, ...]
    coords: tuple[tuple[float, float] | None, ...] | None = None


@dataclass(frozen=True, eq=False)
class SpaceModel:
    cells: tuple[Cell, ...]
    atoms: tuple[InterfaceAtom, ...]
    metadata: Mapping = field(default_factory=dict)
    geometry: Geometry | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    # -- construction -----------------------------------------------------
    @classmethod
    def create(
        cls,
        cells: Sequence[tuple[Number, bool]],
        atoms: Iterable[tuple[Sequence[int], Number, Sequence[Number]]],
        metadata: Mapping | None = None,
        geometry: Geometry | None = None,
        symmetric: bool = False,
    ) -> "SpaceModel":
        """Build a validated model with canonical atom order.

        ``cells`` is a list of ``(measure, unbounded)``; ``atoms`` a list of
        ``(incident, h, theta)``.  Atoms are sorted by sorted incidence (then
        weight, then table) and renumbered.
        """
        cell_objs = []
        for i, (m, unb) in enumerate(cells):
            if unb:
                cell_objs.append(Cell(i, math.inf, True))
            else:
                cell_objs.append(Cell(i, as_fraction(m), False))
        specs = []
        for inc, h, theta in atoms:
            inc_t = tuple(sorted(int(c) for c in inc))
            specs.append((inc_t, as_fraction(h), tuple(as_fraction(t) for t in theta)))
        specs.sort()
        atom_objs = tuple(InterfaceAtom(j, inc, h, th) for j, (inc, h, th) in enumerate(specs))
        model = cls(tuple(cell_objs), atom_objs, dict(metadata or {}), geometry)
        model.validate(symmetric=symmetric)
        return model

    def validate(self, symmetric: bool = False) -> None:
        n = len(self.cells)
        if n == 0:
            raise ModelError("model has no cells")
        for i, c in enumerate(self.cells):
            if c.id != i:
                raise ModelError("cell ids must be contiguous 0..n-1")
            if c.unbounded:
                if c.measure != math.inf:
                    raise ModelError(f"unbounded cell {i} must have infinite measure")
            elif not (isinstance(c.measure, Fraction) and c.measure > 0):
                raise ModelError(f"bounded cell {i} needs positive measure, got {c.measure!r}")
        for a in self.atoms:
            d = a.degree
            if d < 2:
                raise ModelError(f"atom {a.id} has degree {d} < 2")
            if len(set(a.incident)) != d:
                raise ModelError(f"atom {a.id} lists a cell twice")
            if any(c < 0 or c >= n for c in a.incident):
                raise ModelError(f"atom {a.id} references a missing cell")
            if a.h_weight < 0:
                raise ModelError(f"atom {a.id} has negative weight")
            t = a.theta_table
            if len(t) != d + 1:
                raise ModelError(f"atom {a.id}: theta table needs {d + 1} entries")
            if t[0] != 0 or t[d] != 0:
                raise ModelError(f"atom {a.id}: theta must vanish at k=0 and k=d")
            if any(t[k] <= 0 for k in range(1, d)):
                raise ModelError(f"atom {a.id}: theta must be positive for 0<k<d")
            for k1 in range(1, d):
                for k2 in range(1, d - k1 + 1):
                    if t[k1 + k2] > t[k1] + t[k2]:
                        raise ModelError(f"atom {a.id}: theta is not subadditive")
            if symmetric and any(t[k] != t[d - k] for k in range(d + 1)):
                raise ModelError(f"atom {a.id}: theta is not symmetric")
        if self.geometry is not None:
            if len(self.geometry.diameters) != n:
                raise ModelError("geometry hints do not match the cell count")
        # connectivity of the cell adjacency graph
        parent = list(range(n))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a in self.atoms:
            r0 = find(a.incident[0])
            for c in a.incident[1:]:
                parent[find(c)] = r0
        if len({find(i) for i in range(n)}) != 1:
            raise ModelError("cell adjacency graph is disconnected")

    # -- derived structure -------------------------------------------------
    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @cached_property
    def full_mask(self) -> int:
        return (1 << self.n_cells) - 1

    @cached_property
    def unbounded_mask(self) -> int:
        return sum(1 << c.id for c in self.cells if c.unbounded)

    @cached_property
    def atom_masks(self) -> tuple[int, ...]:
        return tuple(sum(1 << c for c in a.incident) for a in self.atoms)

    @cached_property
    def cell_atoms(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in self.cells]
        for a in self.atoms:
            for c in a.incident:
                out[c].append(a.id)
        return tuple(tuple(x) for x in out)

    @cached_property
    def scale(self) -> int:
        """Common denominator of all ``h * theta`` values."""
        dens = [1]
        for a in self.atoms:
            dens.extend((a.h_weight * t).denominator for t in a.theta_table)
        return reduce(math.lcm, dens)

    @cached_property
    def contrib(self) -> tuple[tuple[int, ...], ...]:
        """``contrib[a][k] = scale * h_a * theta_a(k)`` as exact integers."""
        L = self.scale
        out = []
        for a in self.atoms:
            row = []
            for t in a.theta_table:
                v = a.h_weight * t * L
                assert v.denominator == 1
                row.append(int(v))
            out.append(tuple(row))
        return tuple(out)

    @cached_property
    def contrib_table(self) -> np.ndarray:
        """Padded 2-D version of :attr:`contrib` for vectorised gathers."""
        dmax = max((a.degree for a in self.atoms), default=1)
        big = max((max(r) for r in self.contrib), default=0)
        safe = big * max(self.n_atoms, 1) * 4 < 2**62
        tab = np.zeros((max(self.n_atoms, 1), dmax + 1), dtype=np.int64 if safe else object)
        for i, row in enumerate(self.contrib):
            tab[i, : len(row)] = row
        return tab

    @cached_property
    def incidence(self) -> np.ndarray:
        inc = np.zeros((self.n_atoms, self.n_cells), dtype=np.int64)
        for a in self.atoms:
            inc[a.id, list(a.incident)] = 1
        return inc

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([a.degree for a in self.atoms], dtype=np.int64)

    @cached_property
    def bounded_measures(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(0) if c.unbounded else c.measure for c in self.cells)

    def mask_measure(self, mask: int) -> Fraction | float:
        if mask & self.unbounded_mask:
            return math.inf
        return sum((self.cells[i].measure for i in iter_bits(mask)), Fraction(0))

    def occupancy(self, mask: int, atom: int) -> int:
        return (mask & self.atom_masks[atom]).bit_count()

    def perimeter_scaled(self, mask: int, atoms: Iterable[int] | None = None) -> int:
        am = self.atom_masks
        cb = self.contrib
        ids = range(self.n_atoms) if atoms is None else atoms
        return sum(cb[a][(mask & am[a]).bit_count()] for a in ids)

    def atoms_touching(self, mask: int) -> list[int]:
        seen: set[int] = set()
        for c in iter_bits(mask):
            seen.update(self.cell_atoms[c])
        return sorted(seen)

    def cell_adjacency(self) -> list[list[int]]:
        adj: list[set[int]] = [set() for _ in self.cells]
        for a in self.atoms:
            for u in a.incident:
                adj[u].update(v for v in a.incident if v != u)
        return [sorted(s) for s in adj]

    @property
    def has_unbounded(self) -> bool:
        return self.unbounded_mask != 0

    @property
    def builder(self) -> str:
        return str(self.metadata.get("builder", "explicit"))

    def __repr__(self) -> str:  # keep reprs short in test output
        return f"SpaceModel({self.builder}, cells={self.n_cells}, atoms={self.n_atoms})"


def iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(ids: Iterable[int]) -> int:
    m = 0
    for i in ids:
        m |= 1 << int(i)
    return m


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

_DEG2 = (Fraction(0), Fraction(1), Fraction(0))


def build_grid(
    width: int,
    height: int,
    cell_side: Number = 1,
    weight_fn: Callable[[int, int], Number] | None = None,
    frame: bool = False,
) -> SpaceModel:
    """Weighted square grid; cell ``(x, y)`` has id ``y * width + x``.

    With ``frame=True`` a single unbounded exterior cell (id ``width*height``)
    surrounds the grid and every outer edge becomes its own atom.
    """
    if width < 1 or height < 1:
        raise ModelError("grid dimensions must be at least 1")
    side = as_fraction(cell_side)
    if side <= 0:
        raise ModelError("cell side must be positive")
    w = {}
    for y in range(height):
        for x in range(width):
            wt = as_fraction(1 if weight_fn is None else weight_fn(x, y))
            if wt <= 0:
                raise ModelError(f"nonpositive weight at ({x}, {y})")
            w[x, y] = wt
    cid = lambda x, y: y * width + x  # noqa: E731
    cells = [(w[x, y] * side * side, False) for y in range(height) for x in range(width)]
    atoms = []
    for y in range(height):
        for x in range(width):
            if x + 1 < width:
                atoms.append(((cid(x, y), cid(x + 1, y)), side * (w[x, y] + w[x + 1, y]) / 2, _DEG2))
            if y + 1 < height:
                atoms.append(((cid(x, y), cid(x, y + 1)), side * (w[x, y] + w[x, y + 1]) / 2, _DEG2))
    fs = float(side)
    coords: list[tuple[float, float] | None] = [
        ((x + 0.5) * fs, (y + 0.5) * fs) for y in range(height) for x in range(width)
    ]
    diams = [fs] * (width * height)
    if frame:
        ext = width * height
        cells.append((0, True))
        for y in range(height):
            for x in range(width):
                outer = (x == 0) + (x == width - 1) + (y == 0) + (y == height - 1)
                for _ in range(outer):
                    atoms.append(((cid(x, y), ext), side * w[x, y], _DEG2))
        coords.append(None)
        diams.append(math.inf)
    meta = {
        "builder": "grid",
        "params": {"width": width, "height": height, "cell_side": _frac_str(side), "frame": frame},
        "grid_shape": (width, height),
        "ahlfors": 2 if frame else None,
        "dimension": 2,
    }
    return SpaceModel.create(cells, atoms, meta, Geometry(tuple(diams), tuple(coords)), symmetric=True)


def build_metric_graph(
    vertices: Sequence,
    edges: Sequence[tuple],
    resolution: int = 1,
) -> SpaceModel:
    """Metric graph model.

    Each edge ``(u, v, length)`` becomes ``resolution`` segment cells of
    measure ``length / resolution`` (ordered from ``u`` to ``v``).  Junctions
    between consecutive segments are degree-2 atoms; every vertex of degree
    ``d >= 2`` is one atom with ``h = 1`` and ``theta(k) = min(k, d - k)``.
    Leaves carry no atom (a single incident stub never sees a boundary).
    """
    if resolution < 1:
        raise ModelError("resolution must be at least 1")
    vlist = list(vertices)
    vindex = {v: i for i, v in enumerate(vlist)}
    if len(vindex) != len(vlist):
        raise ModelError("duplicate vertex labels")
    stubs: dict[int, list[int]] = {i: [] for i in range(len(vlist))}
    cells = []
    atoms = []
    edge_cells = []
    diams = []
    for ei, e in enumerate(edges):
        if len(e) != 3:
            raise ModelError("edges must be (u, v, length)")
        u, v, length = e
        if u not in vindex or v not in vindex:
            raise ModelError(f"edge {ei} has a dangling endpoint")
        if u == v:
            raise ModelError(f"edge {ei} is a self-loop")
        ln = as_fraction(length)
        if ln <= 0:
            raise ModelError(f"edge {ei} has nonpositive length")
        seg = ln / resolution
        ids = list(range(len(cells), len(cells) + resolution))
        for _ in ids:
            cells.append((seg, False))
            diams.append(float(seg))
        for a, b in zip(ids, ids[1:]):
            atoms.append(((a, b), 1, _DEG2))
        stubs[vindex[u]].append(ids[0])
        stubs[vindex[v]].append(ids[-1])
        edge_cells.append(tuple(ids))
    if not cells:
        raise ModelError("metric graph needs at least one edge")
    vertex_stubs = []
    for i, v in enumerate(vlist):
        d = len(stubs[i])
        if d < 1:
            raise ModelError(f"vertex {v!r} has degree 0")
        vertex_stubs.append(tuple(stubs[i]))
        if d >= 2:
            table = [min(k, d - k) for k in range(d + 1)]
            atoms.append((stubs[i], vertex_h_weight(d), table))
    meta = {
        "builder": "metric_graph",
        "params": {
            "vertices": [str(v) for v in vlist],
            "edges": [[str(u), str(v), _frac_str(as_fraction(ln))] for u, v, ln in edges],
            "resolution": resolution,
        },
        "graph": {"vertex_stubs": tuple(vertex_stubs), "edge_cells": tuple(edge_cells)},
        "dimension": 1,
    }
    return SpaceModel.create(cells, atoms, meta, Geometry(tuple(diams)), symmetric=True)


def build_star(degree: int, length: Number = 1, resolution: int = 1) -> SpaceModel:
    """Star with centre ``V`` and edges ``e1..ed``; edge ``i`` owns cells ``i*res..``."""
    if degree < 1:
        raise ModelError("star degree must be at least 1")
    verts = ["V"] + [f"L{i + 1}" for i in range(degree)]
    edges = [("V", f"L{i + 1}", length) for i in range(degree)]
    m = build_metric_graph(verts, edges, resolution)
    m.metadata["builder"] = "star"
    m.metadata["params"] = {"degree": degree, "length": _frac_str(as_fraction(length)), "resolution": resolution}
    return m


def build_path(n_edges: int, length: Number = 1, resolution: int = 1) -> SpaceModel:
    if n_edges < 1:
        raise ModelError("path needs at least one edge")
    verts = list(range(n_edges + 1))
    m = build_metric_graph(verts, [(i, i + 1, length) for i in range(n_edges)], resolution)
    m.metadata["builder"] = "path"
    m.metadata["params"] = {"n_edges": n_edges, "length": _frac_str(as_fraction(length)), "resolution": resolution}
    return m


def build_strip(length: int, height: int) -> SpaceModel:
    """``length x height`` grid of side ``1/height`` inside an infinite strip.

    The strip continues to infinity on both ends; each end is one unbounded
    cell.  Top and bottom edges are the boundary of the space and carry no atom.
    """
    if length < 1 or height < 1:
        raise ModelError("strip dimensions must be at least 1")
    side = Fraction(1, height)
    base = build_grid(length, height, side)
    n = length * height
    cells = [(c.measure, False) for c in base.cells] + [(0, True), (0, True)]
    atoms = [(a.incident, a.h_weight, a.theta_table) for a in base.atoms]
    left, right = n, n + 1
    for y in range(height):
        atoms.append(((y * length, left), side, _DEG2))
        atoms.append(((y * length + length - 1, right), side, _DEG2))
    geo = Geometry(base.geometry.diameters + (math.inf, math.inf), base.geometry.coords + (None, None))
    meta = {
        "builder": "strip",
        "params": {"length": length, "height": height},
        "grid_shape": (length, height),
        "ahlfors": None,
        "dimension": 2,
    }
    return SpaceModel.create(cells, atoms, meta, geo, symmetric=True)


# -- carpet -------------------------------------------------------------------


def _overlap(a0: Fraction, a1: Fraction, b0: Fraction, b1: Fraction) -> Fraction:
    return max(Fraction(0), min(a1, b1) - max(a0, b0))


def carpet_holes(a: Sequence[Number], level: int) -> list[tuple[Fraction, Fraction, Fraction]]:
    """Open square holes ``(x0, y0, size)`` of the level-``level`` pre-carpet.

    Step ``j`` visits every square of side ``3**-(j-1)`` whose interior misses
    all earlier holes and removes a centred open square of side ``a[j-1]``.
    """
    if level < 0:
        raise ModelError("carpet level must be nonnegative")
    if len(a) < level:
        raise ModelError(f"need {level} hole sizes, got {len(a)}")
    sizes = [as_fraction(x) for x in a[:level]]
    for j, s in enumerate(sizes, start=1):
        if s < 0 or s > Fraction(1, 3**j):
            raise ModelError(f"hole size a_{j} = {s} outside [0, 3^-{j}]")
        if j > 1 and s > sizes[j - 2]:
            raise ModelError("hole sizes must be nonincreasing")
    holes: list[tuple[Fraction, Fraction, Fraction]] = []
    for j, s in enumerate(sizes, start=1):
        parent = Fraction(1, 3 ** (j - 1))
        n = 3 ** (j - 1)
        new = []
        for iy in range(n):
            for ix in range(n):
                x0, y0 = ix * parent, iy * parent
                hit = any(
                    _overlap(x0, x0 + parent, hx, hx + hs) > 0 and _overlap(y0, y0 + parent, hy, hy + hs) > 0
                    for hx, hy, hs in holes
                )
                if hit:
                    continue
                if s > 0:
                    new.append((x0 + (parent - s) / 2, y0 + (parent - s) / 2, s))
        holes.extend(new)
    return holes


def build_sierpinski_carpet(a: Sequence[Number], level: int) -> SpaceModel:
    """Grid model of the level-``level`` fat carpet pre-fractal.

    Cells are the ``3**level`` squared grid squares minus their overlap with
    the holes (fully removed squares are dropped).  Atoms are shared edges
    with ``h`` equal to the edge length lying outside the holes.  A hole size
    of zero removes nothing, which reproduces the plain grid.
    """
    holes = carpet_holes(a, level)
    n = 3**level
    side = Fraction(1, n)
    area = {(ix, iy): side * side for ix in range(n) for iy in range(n)}
    # horizontal-neighbour edge removed lengths keyed by left cell, vertical by lower cell
    cut_v: dict[tuple[int, int], Fraction] = {}
    cut_h: dict[tuple[int, int], Fraction] = {}
    for hx, hy, hs in holes:
        ix0, ix1 = int(hx / side), min(n - 1, int((hx + hs) / side))
        iy0, iy1 = int(hy / side), min(n - 1, int((hy + hs) / side))
        for ix in range(ix0, ix1 + 1):
            ox = _overlap(ix * side, (ix + 1) * side, hx, hx + hs)
            if ox == 0:
                continue
            for iy in range(iy0, iy1 + 1):
                oy = _overlap(iy * side, (iy + 1) * side, hy, hy + hs)
                if oy == 0:
                    continue
                area[ix, iy] -= ox * oy
        # edges strictly inside the open hole
        for ix in range(ix0, ix1 + 1):
            xe = (ix + 1) * side  # vertical line between ix and ix+1
            if ix + 1 < n and hx < xe < hx + hs:
                for iy in range(iy0, iy1 + 1):
                    oy = _overlap(iy * side, (iy + 1) * side, hy, hy + hs)
                    if oy:
                        cut_v[ix, iy] = cut_v.get((ix, iy), Fraction(0)) + oy
        for iy in range(iy0, iy1 + 1):
            ye = (iy + 1) * side
            if iy + 1 < n and hy < ye < hy + hs:
                for ix in range(ix0, ix1 + 1):
                    ox = _overlap(ix * side, (ix + 1) * side, hx, hx + hs)
                    if ox:
                        cut_h[ix, iy] = cut_h.get((ix, iy), Fraction(0)) + ox
    keep = [(ix, iy) for iy in range(n) for ix in range(n) if area[ix, iy] > 0]
    index = {key: i for i, key in enumerate(keep)}
    cells = [(area[k], False) for k in keep]
    atoms = []
    for (ix, iy), i in index.items():
        right = index.get((ix + 1, iy))
        if right is not None:
            h = side - cut_v.get((ix, iy), Fraction(0))
            if h > 0:
                atoms.append(((i, right), h, _DEG2))
        up = index.get((ix, iy + 1))
        if up is not None:
            h = side - cut_h.get((ix, iy), Fraction(0))
            if h > 0:
                atoms.append(((i, up), h, _DEG2))
    fs = float(side)
    coords = tuple(((ix + 0.5) * fs, (iy + 0.5) * fs) for ix, iy in keep)
    meta = {
        "builder": "carpet",
        "params": {"a": [_frac_str(as_fraction(x)) for x in a[:level]], "level": level},
        "holes": tuple(holes),
        "cell_keys": tuple(keep),
        "grid_shape": (n, n),
        "dimension": 2,
    }
    return SpaceModel.create(cells, atoms, meta, Geometry((fs,) * len(keep), coords), symmetric=True)


def carpet_strip_ratio(holes: Sequence[tuple[Fraction, Fraction, Fraction]], x: Number, eps: Number) -> Fraction:
    """``m(I_{x,eps}) / eps`` for the vertical strip ``(x-eps, x+eps) x [0, 1]``."""
    x, eps = as_fraction(x), as_fraction(eps)
    lo, hi = max(Fraction(0), x - eps), min(Fraction(1), x + eps)
    removed = sum((_overlap(lo, hi, hx, hx + hs) * hs for hx, hy, hs in holes), Fraction(0))
    return ((hi - lo) - removed) / eps


def carpet_diagnostic_abscissas(depth: int) -> list[Fraction]:
    """Abscissas ``sum x_i 3^-i + 3^-n / 2`` for all ``n <= depth``, sorted."""
    out = set()
    for n in range(depth + 1):
        for digits in itertools.product(range(3), repeat=n):
            x = sum((Fraction(d, 3 ** (i + 1)) for i, d in enumerate(digits)), Fraction(0))
            out.add(x + Fraction(1, 2 * 3**n))
    return sorted(out)


# ---------------------------------------------------------------------------
# model strings and spec files
# ---------------------------------------------------------------------------


def _parse_dims(s: str) -> tuple[int, int]:
    try:
        w, h = s.lower().split("x")
        return int(w), int(h)
    except ValueError as exc:
        raise ModelError(f"bad dimensions {s!r}, expected WxH") from exc


def build_from_string(spec: str) -> SpaceModel:
    """Builder mini-grammar used by the CLI.

    ``grid:WxH[:side]`` (framed), ``star:D[:len[:res]]``,
    ``carpet:level:a1,a2,...``, ``strip:LxH``, ``path:N[:len[:res]]``,
    ``file:PATH``.
    """
    kind, _, rest = spec.partition(":")
    parts = rest.split(":") if rest else []
    try:
        if kind == "grid":
            w, h = _parse_dims(parts[0])
            side = Fraction(parts[1]) if len(parts) > 1 else 1
            return build_grid(w, h, side, frame=True)
        if kind == "star":
            d = int(parts[0])
            ln = Fraction(parts[1]) if len(parts) > 1 else 1
            res = int(parts[2]) if len(parts) > 2 else 1
            return build_star(d, ln, res)
        if kind == "path":
            k = int(parts[0])
            ln = Fraction(parts[1]) if len(parts) > 1 else 1
            res = int(parts[2]) if len(parts) > 2 else 1
            return build_path(k, ln, res)
        if kind == "carpet":
            level = int(parts[0])
            if len(parts) > 1 and parts[1]:
                a = [Fraction(t) for t in parts[1].split(",")]
            else:
                a = [Fraction(1, 3**i) for i in range(1, level + 1)]
            return build_sierpinski_carpet(a, level)
        if kind == "strip":
            ln, h = _parse_dims(parts[0])
            return build_strip(ln, h)
        if kind == "file":
            return load_model(rest)
    except (IndexError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, ModelError):
            raise
        raise ModelError(f"cannot parse model string {spec!r}: {exc}") from exc
    raise ModelError(f"unknown model kind {kind!r}")


_BUILDERS = {
    "grid": lambda p: build_grid(
        int(p["width"]), int(p["height"]), Fraction(str(p.get("cell_side", 1))), frame=bool(p.get("frame", False))
    ),
    "star": lambda p: build_star(int(p["degree"]), Fraction(str(p.get("length", 1))), int(p.get("resolution", 1))),
    "path": lambda p: build_path(int(p["n_edges"]), Fraction(str(p.get("length", 1))), int(p.get("resolution", 1))),
    "metric_graph": lambda p: build_metric_graph(
        p["vertices"], [(u, v, Fraction(str(ln))) for u, v, ln in p["edges"]], int(p.get("resolution", 1))
    ),
    "carpet": lambda p: build_sierpinski_carpet([Fraction(str(x)) for x in p["a"]], int(p["level"])),
    "strip": lambda p: build_strip(int(p["length"]), int(p["height"])),
}


def model_to_json(model: SpaceModel) -> str:
    """Canonical explicit serialisation (cells by id, atoms by sorted incidence)."""
    doc = {
        "cells": [
            {"id": c.id, "unbounded": True} if c.unbounded else {"id": c.id, "measure": _frac_str(c.measure)}
            for c in model.cells
        ],
        "atoms": [
            {"incident": list(a.incident), "h": _frac_str(a.h_weight), "theta": [_frac_str(t) for t in a.theta_table]}
            for a in model.atoms
        ],
    }
    if "source" in model.metadata:
        doc["source"] = model.metadata["source"]
    elif "builder" in model.metadata:
        doc["source"] = {"builder": model.metadata["builder"], "params": model.metadata.get("params", {})}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def model_from_json(text: str) -> SpaceModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"spec file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelError("spec file must hold a JSON object")
    if "cells" not in doc:
        if "builder" not in doc:
            raise ModelError("spec file needs either 'cells'/'atoms' or 'builder'/'params'")
        name = doc["builder"]
        if name not in _BUILDERS:
            raise ModelError(f"unknown builder {name!r}")
        try:
            return _BUILDERS[name](doc.get("params", {}))
        except (KeyError, TypeError) as exc:
            raise ModelError(f"bad params for builder {name!r}: {exc}") from exc
    try:
        cells_doc = sorted(doc["cells"], key=lambda c: int(c["id"]))
        if [int(c["id"]) for c in cells_doc] != list(range(len(cells_doc))):
            raise ModelError("cell ids must be contiguous 0..n-1")
        cells = [
            (0, True) if c.get("unbounded", False) else (Fraction(str(c["measure"])), False) for c in cells_doc
        ]
        atoms = [
            (a["incident"], Fraction(str(a["h"])), [Fraction(str(t)) for t in a["theta"]])
            for a in doc.get("atoms", [])
        ]
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, ModelError):
            raise
        raise ModelError(f"malformed spec file: {exc}") from exc
    meta = {"builder": "explicit"}
    if "source" in doc:
        meta["source"] = doc["source"]
    return SpaceModel.create(cells, atoms, meta)


def load_model(path: str | Path) -> SpaceModel:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ModelError(f"cannot read spec file {p}: {exc}") from exc
    return model_from_json(text)


def save_model(model: SpaceModel, path: str | Path) -> None:
    Path(path).write_text(model_to_json(model))


# ---------------------------------------------------------------------------
# H-weight and theta-table oracles for metric graphs
# ---------------------------------------------------------------------------


def covering_ball_ratio(degree: int, offset: Number, radius: Number) -> Fraction:
    """``length(B_r(p)) / (2r)`` for ``p`` at distance ``offset < r`` from a
    vertex of the given degree along one of its edges (edges assumed longer
    than ``2r``).  A leaf has degree 1."""
    d, s, r = degree, as_fraction(offset), as_fraction(radius)
    if not 0 <= s < r:
        raise ModelError("covering ball must contain the vertex")
    if d == 1:
        length = r + s
    else:
        length = r + s + (d - 1) * (r - s)
    return length / (2 * r)


def vertex_h_weight(degree: int) -> Fraction:
    """Infimum of :func:`covering_ball_ratio` over balls containing the vertex.

    The ratio is affine in the offset, so the infimum over ``[0, r)`` is the
    smaller of the value at 0 and the limit at ``r``.
    """
    r = Fraction(1)
    at0 = covering_ball_ratio(degree, 0, r)
    if degree == 1:
        lim = Fraction(1)  # (r + s) / 2r -> 1
    else:
        lim = (r + r + (degree - 1) * 0) / (2 * r)
    return min(at0, lim)


def oracle_ramp_relaxation(model: SpaceModel, E) -> Fraction:
    """Perimeter of a union of segments via per-vertex ramp minimisation.

    Every vertex (and every junction between consecutive segments) is
    assigned a level ``c`` in ``[0, 1]``; the Lipschitz ramp on each incident
    stub costs ``|1_E(stub) - c|`` in the limit of vanishing ramp width.  The
    cost is affine in ``c``; it is evaluated at ``0``, ``1/2`` and ``1`` and
    the affine identity is asserted before taking the endpoint minimum.
    """
    from .bv_core import CellSet

    graph = model.metadata.get("graph")
    if graph is None:
        raise ModelError("ramp oracle needs a metric-graph model")
    mask = E.mask if isinstance(E, CellSet) else int(E)
    inside = lambda c: (mask >> c) & 1  # noqa: E731
    junctions = [pair for ec in graph["edge_cells"] for pair in zip(ec, ec[1:])]
    groups = [(st, len(st)) for st in graph["vertex_stubs"]] + [(j, 2) for j in junctions]
    total = Fraction(0)
    for stubs, d in groups:
        n1 = sum(inside(c) for c in stubs)
        n0 = d - n1
        cost = lambda c: n1 * (1 - c) + n0 * c  # noqa: E731
        c0, ch, c1 = cost(Fraction(0)), cost(Fraction(1, 2)), cost(Fraction(1))
        assert ch == (c0 + c1) / 2, "ramp cost must be affine in the vertex level"
        total += vertex_h_weight(d) * min(c0, c1) if d >= 2 else 0
    return total


# ---------------------------------------------------------------------------
# audits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IsotropyViolation:
    atom: int
    degree: int
    interior_values: tuple[Fraction, ...]


def audit_isotropy(model: SpaceModel) -> list[IsotropyViolation]:
    """Atoms whose theta table is not constant on ``1..d-1``."""
    out = []
    for a in model.atoms:
        inner = a.theta_table[1:-1]
        if len(set(inner)) > 1:
            out.append(IsotropyViolation(a.id, a.degree, tuple(inner)))
    return out


@dataclass(frozen=True)
class TriplePair:
    E: tuple[int, ...]
    F: tuple[int, ...]
    atoms: tuple[int, ...]
    mass: Fraction


@dataclass
class Condition14Report:
    passed: bool
    mode: str
    pairs_checked: int
    counterexamples: list[TriplePair]
    local_certificate: bool

    @property
    def witness(self) -> TriplePair | None:
        return self.counterexamples[0] if self.counterexamples else None


def _triple_mass(model: SpaceModel, lab: np.ndarray) -> np.ndarray:
    """h-mass (scaled to integers) of the triple boundary for label rows."""
    inc = model.incidence
    d = model.degrees
    kE = (lab == 1).astype(np.int64) @ inc.T
    kF = (lab == 2).astype(np.int64) @ inc.T
    kU = kE + kF
    hit = (kE > 0) & (kE < d) & (kF > 0) & (kF < d) & (kU < d)
    return hit.astype(np.int64) @ _h_scaled(model)[0]


def _h_scaled(model: SpaceModel) -> tuple[np.ndarray, int]:
    key = "h_scaled"
    if key not in model._cache:
        L = reduce(math.lcm, [a.h_weight.denominator for a in model.atoms], 1)
        model._cache[key] = (np.array([int(a.h_weight * L) for a in model.atoms], dtype=np.int64), L)
    return model._cache[key]


def audit_condition_1_4(
    model: SpaceModel, budget: int = 20000, seed: int = 0, exhaustive_cap: int = 12, keep: int = 10
) -> Condition14Report:
    """Search disjoint pairs ``(E, F)`` whose three essential boundaries meet
    in positive h-mass.

    Exhaustive over all ``3**n`` labelings when ``n <= exhaustive_cap``,
    otherwise ``budget`` random labelings.  Counterexamples are listed in
    canonical order: total size, then ``E`` ids, then ``F`` ids.
    """
    n = model.n_cells
    local = not any(a.degree >= 3 and a.h_weight > 0 for a in model.atoms)
    if model.n_atoms == 0:
        return Condition14Report(True, "exhaustive", 3**n if n <= exhaustive_cap else 0, [], True)
    if n <= exhaustive_cap:
        mode = "exhaustive"
        lab = np.array(list(itertools.product(range(3), repeat=n)), dtype=np.int8)[:, ::-1]
    else:
        mode = "random"
        rng = np.random.default_rng(seed)
        lab = rng.integers(0, 3, size=(budget, n), dtype=np.int8)
    hs, L = _h_scaled(model)
    bad_rows = []
    chunk = 1 << 15
    for s in range(0, len(lab), chunk):
        part = lab[s : s + chunk]
        mass = _triple_mass(model, part)
        for r in np.nonzero(mass)[0]:
            bad_rows.append(part[r])
    found = []
    for row in bad_rows:
        E = tuple(int(i) for i in np.nonzero(row == 1)[0])
        F = tuple(int(i) for i in np.nonzero(row == 2)[0])
        found.append((len(E) + len(F), E, F))
    found.sort()
    dedup = []
    seen = set()
    for _, E, F in found:
        if (E, F) in seen:
            continue
        seen.add((E, F))
        dedup.append((E, F))
        if len(dedup) >= keep:
            break
    out = []
    d = model.degrees
    for E, F in dedup:
        row = np.zeros((1, n), dtype=np.int8)
        row[0, list(E)] = 1
        row[0, list(F)] = 2
        kE = (row == 1).astype(np.int64) @ model.incidence.T
        kF = (row == 2).astype(np.int64) @ model.incidence.T
        hit = ((kE > 0) & (kE < d) & (kF > 0) & (kF < d) & (kE + kF < d))[0]
        ids = tuple(int(i) for i in np.nonzero(hit)[0] if model.atoms[i].h_weight > 0)
        out.append(TriplePair(E, F, ids, sum((model.atoms[i].h_weight for i in ids), Fraction(0))))
    return Condition14Report(not bad_rows, mode, len(lab), out, local)


@dataclass(frozen=True)
class BallIndex:
    center: int
    radius: float
    members: tuple[int, ...]
    measure: Fraction
    boundary_atoms: tuple[int, ...]

    @property
    def mask(self) -> int:
        return mask_of(self.members)


def _cell_distances(model: SpaceModel, center: int) -> list[float]:
    """Dijkstra over bounded cells; edge length from the geometry hints."""
    geo = model.geometry
    if geo is None:
        raise ModelError("model has no geometry hints")
    key = ("adj",)
    if key not in model._cache:
        adj: list[dict[int, float]] = [dict() for _ in model.cells]
        for a in model.atoms:
            for u, v in itertools.combinations(a.incident, 2):
                if model.cells[u].unbounded or model.cells[v].unbounded:
                    continue
                cu = geo.coords[u] if geo.coords else None
                cv = geo.coords[v] if geo.coords else None
                if cu is not None and cv is not None:
                    w = math.dist(cu, cv)
                else:
                    w = (geo.diameters[u] + geo.diameters[v]) / 2
                if w < adj[u].get(v, math.inf):
                    adj[u][v] = adj[v][u] = w
        model._cache[key] = adj
    adj = model._cache[key]
    dist = [math.inf] * model.n_cells
    dist[center] = 0.0
    heap = [(0.0, center)]
    while heap:
        du, u = heapq.heappop(heap)
        if du > dist[u]:
            continue
        for v, w in adj[u].items():
            nd = du + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def ball(model: SpaceModel, center: int, radius: float) -> BallIndex:
    """Open path-distance ball ``{cells at distance < radius}``."""
    if model.cells[center].unbounded:
        raise ModelError("balls are centred at bounded cells")
    key = ("dist", center)
    if key not in model._cache:
        model._cache[key] = _cell_distances(model, center)
    dist = model._cache[key]
    members = tuple(i for i, dv in enumerate(dist) if dv < radius)
    m = mask_of(members)
    bnd = tuple(
        a
        for a in range(model.n_atoms)
        if 0 < (m & model.atom_masks[a]).bit_count() < model.atoms[a].degree
    )
    return BallIndex(center, radius, members, model.mask_measure(m), bnd)


@dataclass
class PIAudit:
    doubling: float
    doubling_witness: tuple[int, float] | None
    poincare: float
    poincare_witness: tuple | None
    isoperimetric: float
    isoperimetric_witness: tuple | None
    exponent: float
    samples: int


def audit_pi_constants(
    model: SpaceModel,
    radii: Sequence[float],
    centers: Sequence[int] | None = None,
    samples: int = 20,
    seed: int = 0,
) -> PIAudit:
    """Empirical doubling, Poincare (lambda = 1) and relative isoperimetric ratios.

    ``|Df|(B)`` and ``P(E, B)`` count atoms whose incident cells all lie in
    ``B``.  The isoperimetric exponent ``s`` is ``max(2, log2 C_D)`` with
    ``C_D`` the doubling estimate.  All values are estimates, never
    certified constants.
    """
    if model.geometry is None:
        raise ModelError("audit_pi_constants needs geometry hints")
    rng = np.random.default_rng(seed)
    bounded = [c.id for c in model.cells if not c.unbounded]
    if centers is None:
        centers = bounded
    meas = np.array([float(m) for m in model.bounded_measures])

    def inner_atoms(mask: int) -> list[int]:
        return [a for a in range(model.n_atoms) if model.atom_masks[a] & ~mask == 0]

    doubling, dwit = 0.0, None
    for x in centers:
        for r in radii:
            b1 = ball(model, x, r)
            b2 = ball(model, x, 2 * r)
            ratio = float(b2.measure) / float(b1.measure)
            if ratio > doubling:
                doubling, dwit = ratio, (x, r)
    s = max(2.0, math.log2(doubling)) if doubling > 0 else 2.0

    poinc, pwit = 0.0, None
    iso, iwit = 0.0, None
    for x in centers:
        for r in radii:
            b = ball(model, x, r)
            b2 = ball(model, x, 2 * r)
            idx = np.array(b.members)
            atoms_b = inner_atoms(b.mask)
            atoms_b2 = inner_atoms(b2.mask)
            mB = float(b.measure)
            for t in range(samples):
                if t % 2 == 0:
                    vals = rng.random(model.n_cells)
                else:
                    vals = (rng.random(model.n_cells) < 0.5).astype(float)
                vals[[c.id for c in model.cells if c.unbounded]] = 0.0
                w = meas[idx]
                mean = float(np.dot(w, vals[idx]) / mB)
                num = float(np.dot(w, np.abs(vals[idx] - mean)))
                tvb = _float_tv(model, vals, atoms_b)
                if num > 1e-15:
                    ratio = math.inf if tvb == 0 else num / (r * tvb)
                    if ratio > poinc:
                        poinc, pwit = ratio, (x, r, t)
                # relative isoperimetric on the level set {vals > 1/2}
                E = vals > 0.5
                mE = float(np.dot(w, E[idx]))
                mEc = mB - mE
                num = min(mE, mEc)
                if num > 1e-15:
                    pe = _float_tv(model, E.astype(float), atoms_b2)
                    denom = (r**s / mB) ** (1 / (s - 1)) * pe ** (s / (s - 1))
                    ratio = math.inf if denom == 0 else num / denom
                    if ratio > iso:
                        iso, iwit = ratio, (x, r, t)
    return PIAudit(doubling, dwit, poinc, pwit, iso, iwit, s, samples)


def _float_tv(model: SpaceModel, vals: np.ndarray, atoms: Iterable[int]) -> float:
    total = 0.0
    for a in atoms:
        at = model.atoms[a]
        v = sorted((vals[c] for c in at.incident), reverse=True)
        th = at.theta_table
        total += float(at.h_weight) * sum(float(th[j]) * (v[j - 1] - v[j]) for j in range(1, at.degree))
    return total
