import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_set, set_from_bits
from perimkit import (
    AtomSet,
    CapExceeded,
    CellSet,
    ModelError,
    ahlfors_unique_infinite_component,
    build_from_string,
    build_grid,
    build_star,
    check_liouville_equivalence,
    decompose,
    essential_boundary,
    holes,
    is_additive_split,
    is_indecomposable,
    is_saturated,
    is_simple,
    perimeter,
    saturate,
    xi_sigma_algebra,
)
from perimkit.decomposition import (
    enumerate_additive_partitions,
    maximality_witnesses,
    saturation_properties,
    saturation_report,
)

ALGORITHMS = ("fast", "brute", "xi-atoms", "variational")
GRID3 = build_from_string("grid:3x3")
GRID5 = build_from_string("grid:5x5")
STAR3 = build_star(3)
STAR4 = build_star(4)


def cells(m, *ids):
    return CellSet.from_ids(m, ids)


def annulus(m, w, x0, y0, size):
    """Square ring of cells with top-left corner (x0, y0) in a width-w grid."""
    ids = [
        (y0 + j) * w + x0 + i
        for j in range(size)
        for i in range(size)
        if i in (0, size - 1) or j in (0, size - 1)
    ]
    return CellSet.from_ids(m, ids)


# -- split certificates -------------------------------------------------------


def test_split_certificate_ledger():
    E = cells(GRID3, 0, 2)
    cert = is_additive_split(E, cells(GRID3, 0))
    assert cert.valid and cert.defect == 0 and cert.boundary_consistent
    assert sum(cert.ledger.values()) == 0
    bad = is_additive_split(cells(GRID3, 0, 1), cells(GRID3, 0))
    assert not bad.valid and bad.defect == 2
    assert bad.first_violation is not None


def test_split_certificate_requires_subset():
    with pytest.raises(ModelError):
        is_additive_split(cells(GRID3, 0), cells(GRID3, 1))


# -- indecomposability ---------------------------------------------------------


@pytest.mark.parametrize("mode", ["fast", "brute"])
def test_indecomposable_examples(mode):
    assert is_indecomposable(cells(GRID3, 0, 1, 4), mode=mode)
    assert not is_indecomposable(cells(GRID3, 0, 4), mode=mode)  # diagonal neighbours only
    assert is_indecomposable(cells(STAR3, 0, 1), mode=mode)
    assert is_indecomposable(cells(STAR3, 2), mode=mode)
    assert not is_indecomposable(cells(STAR4, 0, 1), mode=mode)


def test_witness_is_certified():
    r = is_indecomposable(cells(GRID3, 0, 8))
    assert not r and r.witness.valid


def test_brute_cap():
    with pytest.raises(CapExceeded):
        is_indecomposable(CellSet.from_ids(GRID3, range(9)), mode="brute", cap=4)


@given(st.integers(1, 2**9 - 1))
def test_indecomposability_modes_agree(bits):
    E = set_from_bits(GRID3, bits)
    assert bool(is_indecomposable(E, mode="fast")) == bool(is_indecomposable(E, mode="brute"))


@given(st.integers(1, 2**9 - 1), st.integers(1, 2**9 - 1))
def test_stability_of_unions(a, b):
    E, F = set_from_bits(GRID3, a), set_from_bits(GRID3, b)
    if not (is_indecomposable(E) and is_indecomposable(F)):
        return
    shared = (essential_boundary(E) & essential_boundary(F)).h_mass
    if (E & F) or shared > 0:
        assert is_indecomposable(E | F)


def test_increasing_chain_stays_indecomposable():
    chain = [cells(GRID5, *range(k + 1)) for k in range(25)]
    assert all(is_indecomposable(E) for E in chain)


# -- decomposition ----------------------------------------------------------


@pytest.mark.parametrize("alg", ALGORITHMS)
def test_two_blocks(alg):
    E = cells(GRID5, 0, 1, 5, 6, 18, 19, 23, 24)
    r = decompose(E, alg)
    assert [c.ids for c in r.components] == [(0, 1, 5, 6), (18, 19, 23, 24)]
    assert r.ledger_ok and r.verified
    assert sum(r.component_perimeters) == r.perimeter == 16


@pytest.mark.parametrize("alg", ALGORITHMS)
def test_star4_pair_splits(alg):
    r = decompose(cells(STAR4, 0, 1), alg)
    assert r.partition == frozenset({1, 2})
    assert not r.isotropic
    assert any("isotropic" in n for n in r.notes)


@pytest.mark.parametrize("alg", ALGORITHMS)
def test_star3_pair_stays_whole(alg):
    r = decompose(cells(STAR3, 0, 1), alg)
    assert len(r.components) == 1


def test_canonical_component_order():
    E = cells(GRID5, 24, 0, 1, 2, 12)
    r = decompose(E)
    assert [c.ids for c in r.components] == [(0, 1, 2), (12,), (24,)]
    assert r.as_rows()[0] == (0, [0, 1, 2], 3, 8)


def test_decompose_rejects_infinite_sets_by_default():
    E = CellSet.full(GRID3)
    with pytest.raises(ModelError):
        decompose(E)
    assert len(decompose(E, allow_infinite=True).components) == 1


def test_decompose_empty_and_unknown_algorithm():
    assert decompose(CellSet.empty(GRID3)).components == ()
    with pytest.raises(ModelError):
        decompose(cells(GRID3, 0), "magic")


def test_local_decomposition_in_atom_subset():
    # two cells joined by one edge; ignoring that edge they split
    E = cells(GRID3, 0, 1)
    shared = [a.id for a in GRID3.atoms if a.incident == (0, 1)]
    B = AtomSet.all(GRID3) - AtomSet.from_ids(GRID3, shared)
    assert len(decompose(E, B=B).components) == 2
    assert len(decompose(E).components) == 1


def test_variational_alpha():
    E = cells(GRID5, 0, 1, 2, 10, 11)
    default = decompose(E, "variational")
    assert default.partition == decompose(E, "variational", alpha=1.2).partition == decompose(E).partition
    with pytest.raises(ModelError):
        decompose(E, "variational", alpha=1.0)


@given(st.integers(1, 2**12 - 1))
def test_algorithms_agree_on_grid(bits):
    m = build_grid(4, 3, frame=True)
    E = set_from_bits(m, bits)
    parts = {alg: decompose(E, alg).partition for alg in ALGORITHMS}
    assert len(set(parts.values())) == 1


@given(st.integers(1, 2**12 - 1))
def test_components_are_indecomposable_and_additive(bits):
    m = build_grid(4, 3, frame=True)
    E = set_from_bits(m, bits)
    r = decompose(E)
    assert all(is_indecomposable(c) for c in r.components)
    assert sum(perimeter(c) for c in r.components) == perimeter(E)


def test_unique_partition_and_maximality():
    rng = random.Random(11)
    for _ in range(40):
        E = CellSet.from_ids(GRID5, rng.sample(range(25), rng.randint(1, 9)))
        r = decompose(E)
        assert enumerate_additive_partitions(E) == [r.partition]
        wit = maximality_witnesses(r)
        assert wit and all(len(hits) == 1 for _, hits in wit)


def test_aux_uniqueness_identity():
    # for a certified split {F, G} of E and every A inside E the perimeter splits too
    E = cells(GRID5, 0, 1, 5, 3, 4, 9)
    F = cells(GRID5, 0, 1, 5)
    assert is_additive_split(E, F).valid
    G = E - F
    B = AtomSet.from_ids(GRID5, range(0, GRID5.n_atoms, 2))
    for r in range(len(E) + 1):
        for combo in itertools.combinations(E.ids, r):
            A = CellSet.from_ids(GRID5, combo)
            assert perimeter(A, B) == perimeter(A & F, B) + perimeter(A & G, B)


# -- the additive family --------------------------------------------------------


def test_xi_family_atoms_are_components():
    E = cells(GRID5, 0, 1, 5, 3, 4, 9, 20)
    fam = xi_sigma_algebra(E)
    assert fam.closed and fam.localization_ok
    assert [a.ids for a in fam.atoms] == [c.ids for c in decompose(E).components]
    assert len(fam.members) == 2 ** len(fam.atoms)


def test_xi_family_on_star4():
    fam = xi_sigma_algebra(cells(STAR4, 0, 1))
    assert [a.ids for a in fam.atoms] == [(0,), (1,)]
    # three stubs of four: theta(3) < theta(1) + theta(2), so no split
    assert len(xi_sigma_algebra(cells(STAR4, 0, 1, 2)).atoms) == 1


# -- holes and saturation ------------------------------------------------------


def test_annulus_hole_and_saturation():
    ring = annulus(GRID5, 5, 1, 1, 3)
    (hole,) = holes(ring)
    assert hole.ids == (12,)
    assert saturate(ring).ids == (6, 7, 8, 11, 12, 13, 16, 17, 18)
    assert not is_saturated(ring) and is_saturated(saturate(ring))
    rep = saturation_report(ring)
    assert rep.simple is False and len(rep.complement_components) == 2


def test_nested_rings():
    m = build_grid(7, 7, frame=True)
    outer = annulus(m, 7, 0, 0, 7)
    inner = annulus(m, 7, 2, 2, 3)
    E = outer | inner
    assert len(decompose(E).components) == 2
    hs = sorted((h.ids for h in holes(E)), key=len)
    assert len(hs) == 2 and hs[0] == (24,) and len(hs[1]) == 25
    assert saturate(E) == CellSet.from_ids(m, range(49))


def test_saturation_properties_on_random_sets():
    rng = random.Random(2)
    m = build_grid(5, 5, frame=True)
    for _ in range(30):
        E = random_set(m, rng, 0.6)
        others = [random_set(m, rng, 0.7) for _ in range(3)]
        for F in decompose(E).components if E else []:
            props = saturation_properties(F, others)
            assert all(props.values()), props


def test_saturation_needs_unbounded_cell():
    m = build_grid(2, 2)
    with pytest.raises(ModelError):
        holes(CellSet.from_ids(m, [0]))


# -- simple sets ----------------------------------------------------------------


def test_simple_examples():
    assert is_simple(cells(GRID3, 4)).simple
    assert is_simple(cells(GRID3, 0, 1, 2)).simple
    ring = annulus(GRID5, 5, 1, 1, 3)
    res = is_simple(ring)
    assert not res.simple and res.witness == saturate(ring)
    assert res.cross_checks["ahlfors_characterization"] is True


def test_star3_pair_not_simple():
    res = is_simple(cells(STAR3, 0, 1))
    assert not res.simple
    assert res.witness.ids == (0,)
    assert res.nontrivial_unions == 4
    assert res.cross_checks["indecomposable_implies_simple"] is None


def test_region_cap():
    with pytest.raises(CapExceeded):
        is_simple(cells(GRID5, 0, 2, 4, 10, 12, 14), cap=3)


@given(st.integers(1, 2**9 - 2))
def test_simple_cross_checks_on_grid(bits):
    E = set_from_bits(GRID3, bits)
    res = is_simple(E)
    assert all(v is not False for v in res.cross_checks.values()), res.cross_checks


# -- Liouville-type characterisation and unbounded components ----------------


def test_liouville_counterexample_on_star3():
    rep = check_liouville_equivalence(cells(STAR3, 0, 1), trials=50)
    assert rep.indecomposable and not rep.hypotheses_hold
    assert rep.counterexamples[0].values == (1, 0, 0)
    assert rep.consistent


def test_liouville_on_grid():
    rep = check_liouville_equivalence(cells(GRID3, 0, 1, 4), trials=100)
    assert rep.indecomposable and rep.hypotheses_hold and not rep.counterexamples
    split = check_liouville_equivalence(cells(GRID3, 0, 8), trials=20)
    assert not split.indecomposable and split.split_witness_ok and split.consistent


def test_ahlfors_grid_and_strip():
    rec = ahlfors_unique_infinite_component(cells(GRID5, 6, 7, 8))
    assert rec.unique and rec.ahlfors_model
    strip = build_from_string("strip:4x2")
    column = CellSet.from_ids(strip, [1, 5])
    rec = ahlfors_unique_infinite_component(column)
    assert rec.counterexample and len(rec.infinite_components) == 2
    assert not rec.ahlfors_model
    with pytest.raises(ModelError):
        ahlfors_unique_infinite_component(CellSet.full(strip))


def test_ahlfors_random_grid_sets():
    rng = random.Random(4)
    for _ in range(50):
        E = random_set(GRID5, rng)
        if E:
            assert ahlfors_unique_infinite_component(E).unique
