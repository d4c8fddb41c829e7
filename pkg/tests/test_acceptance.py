"""Acceptance criteria 1-10, one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or directly as a script.
"""
import itertools
import random
import time
from contextlib import nullcontext
from fractions import Fraction

import networkx as nx

from perimkit import (
    BVFunction,
    CellSet,
    ahlfors_unique_infinite_component,
    audit_condition_1_4,
    audit_isotropy,
    build_from_string,
    build_metric_graph,
    build_strip,
    check_liouville_equivalence,
    coarea_decompose,
    decompose,
    holes,
    is_indecomposable,
    is_simple,
    perimeter,
    saturate,
    simple_approximation,
    theta_map,
    tv,
)
from perimkit.cli import carpet_study
from perimkit.decomposition import enumerate_additive_partitions, maximality_witnesses, saturation_properties
from perimkit.extreme_points import build_instance, compare


def _say(capsys, line):
    with capsys.disabled() if capsys is not None else nullcontext():
        print(line)


def check(capsys, number, title, budget, body):
    t0 = time.perf_counter()
    try:
        body()
        elapsed = time.perf_counter() - t0
        assert elapsed < budget, f"took {elapsed:.1f}s, budget {budget}s"
    except BaseException as exc:
        _say(capsys, f"criterion {number:2d}: FAIL  {title}: {exc}")
        raise
    _say(capsys, f"criterion {number:2d}: PASS  {title} ({elapsed:.2f}s)")


# -- 1 ------------------------------------------------------------------------


def star_theta():
    m = build_from_string("star:4")
    e1, e12 = CellSet.from_ids(m, [0]), CellSet.from_ids(m, [0, 1])
    assert theta_map(e1) == {0: 1}
    assert theta_map(e12) == {0: 2}
    (v,) = audit_isotropy(m)
    assert v.atom == 0 and v.interior_values == (1, 2, 1)


def test_criterion_01(capsys):
    check(capsys, 1, "star(4) theta values and isotropy violation", 1, star_theta)


# -- 2 ------------------------------------------------------------------------


def three_star():
    m = build_from_string("star:3")
    e1, e2, e3 = (CellSet.from_ids(m, [i]) for i in range(3))
    assert audit_isotropy(m) == []
    rep = audit_condition_1_4(m)
    assert not rep.passed
    assert (rep.witness.E, rep.witness.F, rep.witness.atoms) == (e1.ids, e2.ids, (0,))
    assert is_indecomposable(e1 | e2) and is_indecomposable(e3)
    assert not is_simple(e1 | e2).simple
    liou = check_liouville_equivalence(e1 | e2, trials=200)
    assert liou.indecomposable and liou.counterexamples
    assert liou.counterexamples[0] == BVFunction.indicator(e1)


def test_criterion_02(capsys):
    check(capsys, 2, "3-star suite", 1, three_star)


# -- 3 ------------------------------------------------------------------------


def _oracles_agree(E):
    parts = [decompose(E, alg, verify=False) for alg in ("fast", "brute", "xi-atoms")]
    assert parts[0].partition == parts[1].partition == parts[2].partition, E
    for r in parts:
        assert sum(r.component_perimeters, Fraction(0)) == r.perimeter == perimeter(E)
        assert [perimeter(c) for c in r.components] == list(r.component_perimeters)


def small_graphs():
    for G in nx.graph_atlas_g():
        if 1 <= G.number_of_edges() <= 5 and nx.is_connected(G):
            yield G


def oracle_equivalence():
    grid = build_from_string("grid:4x4")
    for bits in range(1, 1 << 16):
        _oracles_agree(CellSet(grid, bits))
    n_graphs = 0
    for G in small_graphs():
        m = build_metric_graph(list(G.nodes), [(u, v, 1) for u, v in G.edges], resolution=1)
        n_graphs += 1
        for bits in range(1, 1 << len(m.cells)):
            _oracles_agree(CellSet(m, bits))
    assert n_graphs == 1 + 1 + 3 + 5 + 12  # connected graphs with 1..5 edges


def test_criterion_03(capsys):
    check(capsys, 3, "fast = brute = xi on all 4x4 subsets and small metric graphs", 300, oracle_equivalence)


# -- 4 ------------------------------------------------------------------------


def uniqueness_and_maximality():
    m = build_from_string("grid:5x5")
    rng = random.Random(20240601)
    for _ in range(1000):
        E = CellSet.from_ids(m, rng.sample(range(25), rng.randint(1, 12)))
        r = decompose(E)
        assert enumerate_additive_partitions(E) == [r.partition]
        witnesses = maximality_witnesses(r)
        assert witnesses and all(len(hits) == 1 for _, hits in witnesses)


def test_criterion_04(capsys):
    check(capsys, 4, "unique additive partition and maximality on 1000 sets", 300, uniqueness_and_maximality)


# -- 5 ------------------------------------------------------------------------


def coarea():
    models = [build_from_string(s) for s in ("grid:4x4", "star:4:1:2", "carpet:2")]
    rng = random.Random(5)
    for i in range(10_000):
        m = models[i % 3]
        f = BVFunction(m, tuple(0.0 if c.unbounded else rng.uniform(-3, 3) for c in m.cells))
        total = sum(p.perimeter * p.length for p in coarea_decompose(f))
        assert abs(total - tv(f)) <= 1e-12 * max(1.0, tv(f))
        E = CellSet.from_ids(m, [c.id for c in m.cells if not c.unbounded and rng.random() < 0.5])
        assert tv(BVFunction.indicator(E)) == perimeter(E)


def test_criterion_05(capsys):
    check(capsys, 5, "coarea on 10^4 functions", 60, coarea)


# -- 6 ------------------------------------------------------------------------


def approximation_bounds():
    models = [build_from_string(s) for s in ("grid:3x3", "star:3:1:2", "carpet:1", "strip:3x2")]
    rng = random.Random(6)
    for i in range(1000):
        m = models[i % len(models)]
        f = BVFunction(
            m, tuple(0 if c.unbounded else Fraction(rng.randint(-30, 30), rng.randint(1, 12)) for c in m.cells)
        )
        s = simple_approximation(f, rng.randint(1, 6))
        assert s.tv <= tv(f)
        assert s.weighted_perimeter_sum <= tv(f)
        assert s.l1_error <= f.support.measure / s.n


def test_criterion_06(capsys):
    check(capsys, 6, "simple-approximation bounds on 1000 functions", 60, approximation_bounds)


# -- 7 ------------------------------------------------------------------------


def _ring(w, x0, y0, rw, rh):
    return [
        (y0 + j) * w + x0 + i for j in range(rh) for i in range(rw) if i in (0, rw - 1) or j in (0, rh - 1)
    ]


def _block(w, x0, y0, rw, rh):
    return [(y0 + j) * w + x0 + i for j in range(rh) for i in range(rw)]


def saturation_suite():
    m = build_from_string("grid:5x5")
    ring = CellSet.from_ids(m, _ring(5, 1, 1, 3, 3))
    (hole,) = holes(ring)
    assert hole.ids == (12,)
    assert saturate(ring) == CellSet.from_ids(m, _block(5, 1, 1, 3, 3))

    rng = random.Random(7)
    models = {n: build_from_string(f"grid:{n}x{n}") for n in range(5, 10)}
    for _ in range(1000):
        n = rng.randint(5, 9)
        m = models[n]
        rw, rh = rng.randint(3, n), rng.randint(3, n)
        x0, y0 = rng.randint(0, n - rw), rng.randint(0, n - rh)
        ids = _ring(n, x0, y0, rw, rh)
        rings = 1
        if rw >= 7 and rh >= 7 and rng.random() < 0.6:
            iw, ih = rng.randint(3, rw - 4), rng.randint(3, rh - 4)
            ix, iy = rng.randint(x0 + 2, x0 + rw - 2 - iw), rng.randint(y0 + 2, y0 + rh - 2 - ih)
            ids += _ring(n, ix, iy, iw, ih)
            rings = 2
        E = CellSet.from_ids(m, ids)
        comps = decompose(E).components
        assert len(comps) == rings
        assert len(holes(E)) == rings
        assert saturate(E) == CellSet.from_ids(m, _block(n, x0, y0, rw, rh))
        others = list(comps) + [CellSet.from_ids(m, _ring(n, *_random_box(rng, n)))]
        for F in comps:
            props = saturation_properties(F, others)
            assert all(props.values()), props


def _random_box(rng, n):
    rw, rh = rng.randint(3, n), rng.randint(3, n)
    return rng.randint(0, n - rw), rng.randint(0, n - rh), rw, rh


def test_criterion_07(capsys):
    check(capsys, 7, "saturation properties on 1000 ring instances", 60, saturation_suite)


# -- 8 ------------------------------------------------------------------------


def extreme_points():
    matched = findings = 0
    for w, h in [(1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)]:
        m = build_from_string(f"grid:{w}x{h}")
        n = w * h
        for r in range(1, min(6, n) + 1):
            for K in itertools.combinations(range(n), r):
                rep = compare(build_instance(CellSet.from_ids(m, K)))
                v = rep.verdicts
                assert v["tv_one"] and v["symmetric"], (w, h, K)
                assert v["ext_indicators"] and v["ext_in_indecomposable"], (w, h, K)
                assert v["simple_midpoint_extreme"] and v["simple_in_ext"], (w, h, K)
                if rep.hypotheses_hold:
                    assert v["equal"], (w, h, K, rep.mismatches)
                    matched += 1
                else:
                    findings += 1
    assert matched > 0


def test_criterion_08(capsys):
    check(capsys, 8, "extreme points equal simple-set prediction on grid instances", 600, extreme_points)


# -- 9 ------------------------------------------------------------------------


def ahlfors():
    m = build_from_string("grid:6x6")
    rng = random.Random(9)
    checked = 0
    while checked < 1000:
        E = CellSet.from_ids(m, [i for i in range(36) if rng.random() < rng.choice([0.2, 0.5, 0.8])])
        if not E:
            continue
        assert ahlfors_unique_infinite_component(E).unique
        checked += 1
    for length, height in [(3, 1), (4, 2), (5, 3)]:
        s = build_strip(length, height)
        x = length // 2
        column = CellSet.from_ids(s, [y * length + x for y in range(height)])
        rec = ahlfors_unique_infinite_component(column)
        assert rec.counterexample and len(rec.infinite_components) == 2
        assert is_indecomposable(column)
        corner = CellSet.from_ids(s, [0])
        assert height == 1 or ahlfors_unique_infinite_component(corner).unique


def test_criterion_09(capsys):
    check(capsys, 9, "unique infinite complement component on grids, two on strips", 60, ahlfors)


# -- 10 -----------------------------------------------------------------------


def carpet_trend():
    a = [Fraction(1, 3**i * i) for i in range(1, 5)]
    rows = carpet_study(range(1, 5), a, Fraction(1, 2 * 3**5))
    by_x = {}
    comps = {}
    for level, x, ratio, count in rows:
        by_x.setdefault(x, []).append(ratio)
        comps[level] = count
    assert len(by_x) == 3
    for series in by_x.values():
        assert all(b < a for a, b in zip(series, series[1:])), series
    counts = [comps[k] for k in sorted(comps)]
    assert all(b >= a for a, b in zip(counts, counts[1:])), counts


def test_criterion_10(capsys):
    check(capsys, 10, "carpet strip ratios decrease and component counts do not", 120, carpet_trend)


if __name__ == "__main__":
    failed = 0
    for k in range(1, 11):
        try:
            globals()[f"test_criterion_{k:02d}"](None)
        except BaseException:
            failed += 1
    raise SystemExit(1 if failed else 0)
