"""Cell sets, atom sets and BV functions on a :class:`SpaceModel`."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .space_model import ModelError, SpaceModel, iter_bits, mask_of

__all__ = [
    "CellSet",
    "AtomSet",
    "BVFunction",
    "LevelPiece",
    "SimpleApproximation",
    "DivergenceWitness",
    "UnsupportedModel",
    "perimeter",
    "essential_boundary",
    "essential_interior",
    "half_density_set",
    "theta_map",
    "tv",
    "coarea_decompose",
    "simple_approximation",
    "tv_via_divergence",
]


class UnsupportedModel(ModelError):
    """The requested operation is not defined on this kind of model."""


def _same_model(*objs) -> SpaceModel:
    model = objs[0].model
    for o in objs[1:]:
        if o.model is not model:
            raise ModelError("objects belong to different models")
    return model


@dataclass(frozen=True)
class CellSet:
    """A set of cells stored as a bitmask over cell ids."""

    model: SpaceModel
    mask: int

    def __post_init__(self):
        if self.mask < 0 or self.mask > self.model.full_mask:
            raise ModelError("cell mask out of range")

    @classmethod
    def from_ids(cls, model: SpaceModel, ids: Iterable[int]) -> "CellSet":
        ids = list(ids)
        if any(i < 0 or i >= model.n_cells for i in ids):
            raise ModelError("cell id out of range")
        return cls(model, mask_of(ids))

    @classmethod
    def empty(cls, model: SpaceModel) -> "CellSet":
        return cls(model, 0)

    @classmethod
    def full(cls, model: SpaceModel) -> "CellSet":
        return cls(model, model.full_mask)

    def __hash__(self):
        return hash((id(self.model), self.mask))

    def __eq__(self, other):
        return isinstance(other, CellSet) and other.model is self.model and other.mask == self.mask

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(iter_bits(self.mask))

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __iter__(self):
        return iter_bits(self.mask)

    def __contains__(self, cell: int) -> bool:
        return bool((self.mask >> cell) & 1)

    def __bool__(self) -> bool:
        return self.mask != 0

    def __or__(self, other: "CellSet") -> "CellSet":
        _same_model(self, other)
        return CellSet(self.model, self.mask | other.mask)

    def __and__(self, other: "CellSet") -> "CellSet":
        _same_model(self, other)
        return CellSet(self.model, self.mask & other.mask)

    def __sub__(self, other: "CellSet") -> "CellSet":
        _same_model(self, other)
        return CellSet(self.model, self.mask & ~other.mask)

    def complement(self) -> "CellSet":
        return CellSet(self.model, self.model.full_mask & ~self.mask)

    def issubset(self, other: "CellSet") -> bool:
        _same_model(self, other)
        return self.mask & ~other.mask == 0

    @property
    def measure(self) -> Fraction | float:
        return self.model.mask_measure(self.mask)

    @property
    def is_finite(self) -> bool:
        return not self.mask & self.model.unbounded_mask

    @property
    def min_id(self) -> int:
        return (self.mask & -self.mask).bit_length() - 1

    def occupancy(self, atom: int) -> int:
        return self.model.occupancy(self.mask, atom)

    def __repr__(self) -> str:
        return f"CellSet({list(self.ids)})"


@dataclass(frozen=True)
class AtomSet:
    model: SpaceModel
    mask: int

    @classmethod
    def from_ids(cls, model: SpaceModel, ids: Iterable[int]) -> "AtomSet":
        ids = list(ids)
        if any(i < 0 or i >= model.n_atoms for i in ids):
            raise ModelError("atom id out of range")
        return cls(model, mask_of(ids))

    @classmethod
    def all(cls, model: SpaceModel) -> "AtomSet":
        return cls(model, (1 << model.n_atoms) - 1)

    def __hash__(self):
        return hash((id(self.model), self.mask, "atoms"))

    def __eq__(self, other):
        return isinstance(other, AtomSet) and other.model is self.model and other.mask == self.mask

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(iter_bits(self.mask))

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __contains__(self, atom: int) -> bool:
        return bool((self.mask >> atom) & 1)

    def __or__(self, other: "AtomSet") -> "AtomSet":
        _same_model(self, other)
        return AtomSet(self.model, self.mask | other.mask)

    def __and__(self, other: "AtomSet") -> "AtomSet":
        _same_model(self, other)
        return AtomSet(self.model, self.mask & other.mask)

    def __sub__(self, other: "AtomSet") -> "AtomSet":
        _same_model(self, other)
        return AtomSet(self.model, self.mask & ~other.mask)

    def issubset(self, other: "AtomSet") -> bool:
        return self.mask & ~other.mask == 0

    @property
    def h_mass(self) -> Fraction:
        return sum((self.model.atoms[a].h_weight for a in self.ids), Fraction(0))

    def __repr__(self) -> str:
        return f"AtomSet({list(self.ids)})"


def _atom_ids(model: SpaceModel, B: AtomSet | None) -> Iterable[int]:
    if B is None:
        return range(model.n_atoms)
    if B.model is not model:
        raise ModelError("atom set belongs to a different model")
    return B.ids


def perimeter(E: CellSet, B: AtomSet | None = None) -> Fraction:
    """``sum_{a in B} h_a * theta_a(k_a(E))``, exact."""
    model = E.model
    return Fraction(model.perimeter_scaled(E.mask, _atom_ids(model, B)), model.scale)


def essential_boundary(E: CellSet) -> AtomSet:
    m = E.model
    am = m.atom_masks
    mixed = (a for a in m.atoms_touching(E.mask) if 0 < (E.mask & am[a]).bit_count() < m.atoms[a].degree)
    return AtomSet(m, mask_of(mixed))


def essential_interior(E: CellSet) -> AtomSet:
    m = E.model
    return AtomSet(m, mask_of(a.id for a in m.atoms if E.occupancy(a.id) == a.degree))


def half_density_set(E: CellSet) -> AtomSet:
    m = E.model
    return AtomSet(m, mask_of(a.id for a in m.atoms if 2 * E.occupancy(a.id) == a.degree))


def theta_map(E: CellSet) -> dict[int, Fraction]:
    """``theta_E`` on the essential boundary.

    The representation ``P(E, B) = sum over B cap boundary of h * theta`` is
    asserted for ``B`` = all atoms before returning.
    """
    m = E.model
    out = {}
    for a in essential_boundary(E).ids:
        out[a] = m.atoms[a].theta(E.occupancy(a))
    assert sum((m.atoms[a].h_weight * t for a, t in out.items()), Fraction(0)) == perimeter(E)
    return out


# ---------------------------------------------------------------------------
# BV functions
# ---------------------------------------------------------------------------


def _is_exact(v) -> bool:
    return isinstance(v, (int, Fraction)) and not isinstance(v, bool)


@dataclass(frozen=True)
class BVFunction:
    """One real value per cell; zero on unbounded cells."""

    model: SpaceModel
    values: tuple

    def __post_init__(self):
        if len(self.values) != self.model.n_cells:
            raise ModelError("one value per cell required")
        for c in self.model.cells:
            if c.unbounded and self.values[c.id] != 0:
                raise ModelError(f"unbounded cell {c.id} must carry value 0")
            v = self.values[c.id]
            if isinstance(v, float) and not math.isfinite(v):
                raise ModelError("values must be finite")

    @classmethod
    def from_map(cls, model: SpaceModel, values: Mapping[int, object]) -> "BVFunction":
        vals = [0] * model.n_cells
        for k, v in values.items():
            vals[int(k)] = v
        return cls(model, tuple(vals))

    @classmethod
    def indicator(cls, E: CellSet, scale=1) -> "BVFunction":
        return cls(E.model, tuple(scale if c in E else 0 for c in range(E.model.n_cells)))

    @property
    def exact(self) -> bool:
        return all(_is_exact(v) for v in self.values)

    @property
    def support(self) -> CellSet:
        return CellSet(self.model, mask_of(i for i, v in enumerate(self.values) if v != 0))

    def superlevel(self, t) -> CellSet:
        """``{f > t}`` (strict)."""
        return CellSet(self.model, mask_of(i for i, v in enumerate(self.values) if v > t))

    def __add__(self, other: "BVFunction") -> "BVFunction":
        _same_model(self, other)
        return BVFunction(self.model, tuple(a + b for a, b in zip(self.values, other.values)))

    def __neg__(self) -> "BVFunction":
        return BVFunction(self.model, tuple(-v for v in self.values))

    def scaled(self, c) -> "BVFunction":
        return BVFunction(self.model, tuple(c * v for v in self.values))

    def minimum(self, m) -> "BVFunction":
        """Pointwise ``f ∧ m`` (``m >= 0`` keeps unbounded cells at 0)."""
        if m < 0:
            raise ModelError("truncation level must be nonnegative")
        return BVFunction(self.model, tuple(min(v, m) for v in self.values))

    def l1_distance(self, other: "BVFunction"):
        model = _same_model(self, other)
        return sum(
            (model.cells[i].measure * abs(a - b) for i, (a, b) in enumerate(zip(self.values, other.values)) if a != b),
            Fraction(0) if self.exact and other.exact else 0.0,
        )


def tv(f: BVFunction, B: AtomSet | None = None):
    """Total variation by the coarea rule, atom by atom.

    With incident values sorted as ``v1 >= ... >= vd`` an atom contributes
    ``h * sum_j theta(j) * (v_j - v_{j+1})``.  Exact when all values are
    rationals, floating point otherwise.
    """
    model = f.model
    exact = f.exact
    total = Fraction(0) if exact else 0.0
    vals = f.values
    for a in _atom_ids(model, B):
        atom = model.atoms[a]
        v = sorted((vals[c] for c in atom.incident), reverse=True)
        th = atom.theta_table
        if exact:
            s = sum((th[j] * (v[j - 1] - v[j]) for j in range(1, atom.degree)), Fraction(0))
            total += atom.h_weight * s
        else:
            s = sum(float(th[j]) * (v[j - 1] - v[j]) for j in range(1, atom.degree))
            total += float(atom.h_weight) * s
    return total


@dataclass(frozen=True)
class LevelPiece:
    t_lo: object
    t_hi: object
    level_set: CellSet
    perimeter: Fraction

    @property
    def length(self):
        return self.t_hi - self.t_lo


def coarea_decompose(f: BVFunction) -> list[LevelPiece]:
    """Intervals ``[t_lo, t_hi)`` on which ``{f > t}`` is constant.

    Only intervals between the smallest and largest value are listed; outside
    them the level set is the whole space or empty and has zero perimeter.
    """
    levels = sorted(set(f.values))
    out = []
    for lo, hi in zip(levels, levels[1:]):
        E = f.superlevel(lo)
        out.append(LevelPiece(lo, hi, E, perimeter(E)))
    return out


@dataclass
class SimpleApproximation:
    function: BVFunction
    n: int
    k: int
    thresholds: tuple
    terms: tuple[tuple[Fraction, CellSet], ...]
    tv: object
    tv_original: object
    weighted_perimeter_sum: object
    l1_error: object
    l1_bound: object

    @property
    def bounds_hold(self) -> bool:
        return (
            self.tv <= self.tv_original
            and self.weighted_perimeter_sum <= self.tv_original
            and self.l1_error <= self.l1_bound
        )


def simple_approximation(f: BVFunction, n: int) -> SimpleApproximation:
    """Simple function ``-k + (1/n) sum_i 1_{f > t_i}`` with ``k = ceil(max|f|)``.

    ``t_i`` lies in the open interval ``((i-1)/n, i/n)`` and minimises the
    perimeter of ``{f > t}`` over that interval (ties go to the smaller
    ``t``).  Terms with ``t_i < 0`` are rewritten as ``-(1/n) 1_{f <= t_i}``
    so every reported set has finite measure.
    """
    if n < 1:
        raise ModelError("n must be at least 1")
    model = f.model
    exact = f.exact
    k = max(1, math.ceil(max(abs(v) for v in f.values)))
    one = Fraction(1) if exact else 1.0
    thresholds = []
    terms = []
    counts = [0] * model.n_cells
    for i in range(-k * n + 1, k * n + 1):
        lo, hi = Fraction(i - 1, n), Fraction(i, n)
        if not exact:
            lo, hi = float(lo), float(hi)
        inner = sorted({v for v in f.values if lo < v < hi})
        cuts = [lo] + inner + [hi]
        best = None
        for a, b in zip(cuts, cuts[1:]):
            t = (a + b) / 2
            p = perimeter(f.superlevel(t))
            if best is None or p < best[0]:
                best = (p, t)
        t = best[1]
        thresholds.append(t)
        E = f.superlevel(t)
        for c in E:
            counts[c] += 1
        if t > 0:
            terms.append((one / n, E))
        else:
            terms.append((-one / n, E.complement()))
    vals = tuple(-k + one * counts[c] / n if not model.cells[c].unbounded else 0 for c in range(model.n_cells))
    if not exact:
        vals = tuple(float(v) for v in vals)
    fn = BVFunction(model, vals)
    wsum = sum((abs(lam) * perimeter(E) for lam, E in terms), Fraction(0) if exact else 0.0)
    supp = f.support
    return SimpleApproximation(
        function=fn,
        n=n,
        k=k,
        thresholds=tuple(thresholds),
        terms=tuple(terms),
        tv=tv(fn),
        tv_original=tv(f),
        weighted_perimeter_sum=wsum,
        l1_error=fn.l1_distance(f),
        l1_bound=supp.measure / n if exact else float(supp.measure) / n,
    )


@dataclass(frozen=True)
class DivergenceWitness:
    value: object
    field: dict[int, int]
    flux: dict[int, object]


def tv_via_divergence(f: BVFunction) -> DivergenceWitness:
    """``sup_b sum_c f(c) div(b)(c) m(c)`` over edge fields with ``|b| <= 1``.

    For degree-2 atoms ``(u, v)`` the optimum is ``b_a = sign(f(u) - f(v))``
    and summation by parts gives back ``tv(f)`` exactly.  ``flux[c]`` is
    ``div(b)(c) * m(c)`` on bounded cells.
    """
    model = f.model
    if any(a.degree != 2 for a in model.atoms):
        raise UnsupportedModel("edge-field duality needs every atom to have degree 2")
    vals = f.values
    zero = Fraction(0) if f.exact else 0.0
    field_b: dict[int, int] = {}
    flux: dict[int, object] = {c.id: zero for c in model.cells if not c.unbounded}
    for a in model.atoms:
        u, v = a.incident
        jump = vals[u] - vals[v]
        b = (jump > 0) - (jump < 0)
        field_b[a.id] = b
        h = a.h_weight if f.exact else float(a.h_weight)
        if u in flux:
            flux[u] += h * b
        if v in flux:
            flux[v] -= h * b
    value = sum((vals[c] * fl for c, fl in flux.items()), zero)
    return DivergenceWitness(value, field_b, flux)
