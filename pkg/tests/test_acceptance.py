"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

Tolerances and runtime limits are pinned here.  Criteria that cannot be met
are marked xfail(strict=True): they run in full and must keep failing.
"""
import time
from fractions import Fraction
from math import ceil

import numpy as np
import pytest
from scipy.stats import chisquare

import frozen_values as FV
from liptree import contraction, envelope, gibbsmc, recursion, tables, treesampler
from liptree.contraction import DerivativeBounds, PartitionSpec, opnorm_bound
from liptree.seqspace import ProbDist

CHI_SQUARE_SEED = 20241015

# phi fixed points, d = 2..8, as (a, b, c)
PHI_REFERENCE = {
    2: (".5192", ".6335", ".1988"),
    3: (".4374", ".4649", ".0344"),
    4: (".3762", ".3828", ".0060"),
    5: (".3294", ".3310", "9.5e-4"),
    6: (".2932", ".2935", "1.4e-4"),
    7: (".2645", ".2646", "1.8e-5"),
    8: (".1027", ".4906", "1.4e-4"),
}

# psi fixed point from zero: x1..x4, -dpsi1/dx1, dpsi1/dx2, dpsi2/dx1, dpsi2/dx2
PSI_REFERENCE = {
    2: (".5992", ".1712", ".0222", "4.7e-4", ".2655", ".4220", ".3357", ".1773"),
    3: (".4555", ".0327", "3.2e-5", "3.2e-14", ".4704", ".4234", ".1467", ".0647"),
    4: (".3803", ".0059", "1.2e-9", "1.8e-36", ".6213", ".4184", "1.8e-7", "4.6e-9"),
    5: (".3303", "9.5e-4", "1.6e-16", "2.5e-76", ".7467", ".4100", ".0108", ".0036"),
    6: (".2936", "1.4e-4", "6.4e-24", "6.8e-140", ".8575", ".3992", ".0022", "6.3e-4"),
    7: (".2646", "1.8e-5", "5.1e-34", "9.1e-234", ".9577", ".3874", "3.7e-4", "9.7e-5"),
}
PSI_COLUMNS = ("x1", "x2", "x3", "x4", "-dpsi1/dx1", "dpsi1/dx2", "dpsi2/dx1", "dpsi2/dx2")
# reference cells that disagree with the computed fixed point (see the decisions ledger)
PSI_KNOWN_BAD = {(4, "dpsi2/dx1"), (4, "dpsi2/dx2"), (5, "x3"), (6, "x1")}

# rounded-up bounds: dpsi1/dx1, dpsi1/dx2, dpsin/dxn-1, dpsin/dxn, dpsin/dxn+1, opnorm
BOUND_REFERENCE = {
    2: (".38", ".46", ".43", ".43", ".10", ".96"),
    3: (".57", ".51", ".26", ".21", ".04", ".83"),
    4: (".84", ".47", ".09", ".06", ".01", ".95"),
    5: (".86", ".46", ".03", ".02", ".01", ".89"),
    6: (".97", ".45", ".01", ".01", ".01", ".98"),
    7: (".986", ".401", ".001", ".001", ".001", ".987"),
}


def last_digit_unit(s):
    """Value of one unit in the last printed digit of a decimal string."""
    mant, _, exp = s.lower().partition("e")
    decimals = len(mant.split(".")[1]) if "." in mant else 0
    return 10.0 ** (int(exp or 0) - decimals)


def matches_printed(v, s):
    """|v - s| below one unit of the last printed digit (covers rounding and truncation)."""
    return abs(float(v) - float(s)) < last_digit_unit(s)


def round_up(v, s):
    k = len(s.split(".")[1])
    return Fraction(ceil(Fraction(v) * 10 ** k), 10 ** k)


def timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


# ---------------------------------------------------------------------------

def test_c01_phi_fixed_points(record):
    rows, secs = timed(tables.phi_fixed_points)
    bad = [(r[0], k) for r in rows for k, (v, s) in enumerate(zip(r[1:], PHI_REFERENCE[r[0]]))
           if not matches_printed(v, s)]
    ok = not bad and secs < 1.0
    record(1, ok, f"phi fixed points d=2..8, mismatches={bad}, {secs:.3f}s (< 1s)")
    assert not bad
    assert secs < 1.0


def _psi_mismatches(rows):
    bad = set()
    for r in rows:
        d = r[0]
        vals = list(r[1:5]) + [r[5], r[6], r[7], r[8]]
        for col, v, s in zip(PSI_COLUMNS, vals, PSI_REFERENCE[d]):
            if not matches_printed(v, s):
                bad.add((d, col))
    return bad


@pytest.fixture(scope="module")
def psi_rows():
    return timed(tables.psi_fixed_point_rows)


@pytest.mark.xfail(strict=True, reason="four reference cells disagree with the fixed point")
def test_c02_psi_fixed_point(record, psi_rows):
    rows, secs = psi_rows
    bad = _psi_mismatches(rows)
    record(2, not bad and secs < 60, f"psi fixed point and partials d=2..7, "
           f"mismatches={sorted(bad)}, {secs:.1f}s (< 60s)")
    assert secs < 60
    assert not bad


def test_c02_only_known_cells_disagree(psi_rows):
    rows, _ = psi_rows
    assert _psi_mismatches(rows) == PSI_KNOWN_BAD


def test_c02_psi_fixed_point_matches_oracle(psi_rows):
    rows, _ = psi_rows
    for r in rows:
        ref = FV.PSI_FIXED[r[0]]
        np.testing.assert_allclose([float(v) for v in r[1:5]], [float(v) for v in ref["x"]],
                                   rtol=1e-9)
        np.testing.assert_allclose(
            [-r[5], r[6], r[7], r[8]],
            [float(ref["d11"]), float(ref["d12"]), float(ref["d21"]), float(ref["d22"])],
            rtol=1e-8)


def _contraction_all():
    out = {}
    for d in range(2, 8):
        rep = contraction.contraction_certificate(d)
        db = contraction.derivative_bounds(envelope.contraction_box(d), d, strict=False)
        out[d] = (rep, db)
    return out


def _bounds_match(d, db):
    ref = BOUND_REFERENCE[d]
    partials_ok = all(round_up(v, s) == Fraction(s) for v, s in zip(db.as_tuple(), ref[:5]))
    rounded = DerivativeBounds(*(Fraction(s) for s in ref[:5]),
                               tail_row=round_up(db.tail_row, ref[2]))
    # the reference norm may be looser than the one recomputed from rounded partials
    op_ok = opnorm_bound(rounded, d) <= Fraction(ref[5]) and db.opnorm <= Fraction(ref[5])
    return partials_ok and op_ok


@pytest.mark.xfail(strict=True, reason="d=6 box violates the lower-bound side condition")
def test_c03_contraction_certificates(record):
    res, secs = timed(_contraction_all)
    failing = [d for d, (rep, db) in res.items() if not rep.passed]
    mism = [d for d, (rep, db) in res.items() if not _bounds_match(d, db)]
    ok = not failing and not mism and secs < 5
    record(3, ok, f"contraction d=2..7, failing={failing}, bound mismatches={mism}, "
           f"{secs:.2f}s (< 5s)")
    assert secs < 5
    assert not mism
    assert not failing


def test_c03_bounds_and_norm_for_every_d():
    for d in range(2, 8):
        db = contraction.derivative_bounds(envelope.contraction_box(d), d, strict=False)
        assert _bounds_match(d, db), d
        assert isinstance(db.opnorm, Fraction)
        assert db.opnorm < Fraction(99, 100)
        rep = contraction.contraction_certificate(d)
        assert rep.passed == (d != 6), d


def test_c03_bounds_dominate_grid_maxima():
    for d in range(2, 8):
        db = contraction.derivative_bounds(envelope.contraction_box(d), d, strict=False)
        grid = FV.BOX_PARTIAL_MAXIMA[d]
        names = ("p11", "p12", "pn_prev", "pn_self", "pn_next")
        for name, bound in zip(names, db.as_tuple()):
            assert grid[name] <= float(bound) * (1 + 1e-6), (d, name)


@pytest.mark.xfail(strict=True, reason="two d=6 cells have product above 1")
def test_c04_partition_certificates(record):
    reps, secs = timed(lambda: {d: contraction.partition_certificate(PartitionSpec.builtin(d))
                                for d in range(2, 8)})
    failing = {d: [c.name for c in r.failures()] for d, r in reps.items() if not r.passed}
    record(4, not failing and secs < 10, f"partitions d=2..7, failing={failing}, "
           f"{secs:.2f}s (< 10s)")
    assert secs < 10
    assert not failing


def test_c04_partition_products_match_oracle():
    for d in range(2, 8):
        spec = PartitionSpec.builtin(d)
        rep = contraction.partition_certificate(spec)
        ref = FV.PARTITION_PRODUCTS[d]
        assert len(spec.cells) == ref["cells"]
        assert rep.meta["worst_product"] == pytest.approx(ref["max_product"], rel=1e-12)
        bad = [c.name for c in rep.failures()]
        expect = [f"cell [{lo}, {hi}]" for lo, hi in ref["failing"]]
        assert bad == expect
        assert rep.passed == (d != 6)


def test_c04_adaptive_refinement_repairs_d6():
    rep = contraction.partition_certificate(PartitionSpec.builtin(6), adaptive=True)
    assert rep.passed
    assert len(rep.meta["refined_cells"]) > 11


def test_c05_pipeline_dominates_contraction_boxes(record):
    def run():
        out = {}
        for d in range(2, 8):
            res = envelope.two_round_pipeline(d)
            out[d] = (res, envelope.verify_box_domination(d, res.final_box))
        return out
    res, secs = timed(run)
    failing = [d for d, (r, dom) in res.items() if not (r.report.passed and dom.passed)]
    record(5, not failing and secs < 10, f"certified boxes d=2..7, failing={failing}, "
           f"{secs:.2f}s (< 10s)")
    assert not failing
    assert secs < 10


def test_c06_nonconvergence(record):
    recursion.nonconvergence_certificate(8)  # compile the kernel outside the timing
    reps, secs = timed(lambda: {d: recursion.nonconvergence_certificate(d, horizon=200)
                                for d in range(8, 13)})
    orbit = recursion.first_coordinate_orbit(8, 401)
    # orbit[k] = psi^(k)(0)_1; odd iterates sit high, even iterates (k >= 2) low
    high, low = orbit[1::2][:201], orbit[2::2][:200]
    g8, g9 = str(float(recursion.gamma(8))), str(float(recursion.gamma(9)))
    failing = [d for d, r in reps.items() if not r.passed]
    ok = (not failing and g8.startswith("0.402") and g9.startswith("0.436")
          and high.min() >= 0.4 and low.max() <= 0.14 and secs < 1)
    record(6, ok, f"oscillation d=8..12, failing={failing}, gamma(8)={g8[:7]}, "
           f"gamma(9)={g9[:7]}, min odd={high.min():.4f}, max even={low.max():.4f}, "
           f"{secs:.3f}s (< 1s)")
    assert not failing
    assert g8.startswith(FV.GAMMA[8][:5]) and g9.startswith(FV.GAMMA[9][:5])
    assert high.min() >= 0.4 and low.max() <= 0.14
    assert secs < 1


ENUM_CASES = [(1, 2, frozenset({0})), (2, 2, frozenset({0})), (3, 2, frozenset({0})),
              (2, 3, frozenset({0})), (2, 2, frozenset({0, 1}))]


def _as_dict(dist):
    if isinstance(dist, ProbDist):
        dist = treesampler.IntDist.from_probdist(dist)
    return {h: dist.value(h) for h in dist.support}


def test_c07_marginal_equals_enumeration(record):
    def run():
        out = []
        for n, d, bd in ENUM_CASES:
            count, enum = treesampler.enumerate_lipschitz(n, d, bd)
            rm = treesampler.root_marginal(n, d, bd, exact=True)
            out.append((n, d, bd, count, enum, rm))
        return out
    res, secs = timed(run)
    bad = []
    for n, d, bd, count, enum, rm in res:
        ref_count, ref_marg = FV.ENUMERATION[(n, d, tuple(sorted(bd)))]
        ref = {h: Fraction(p) for h, p in ref_marg.items()}
        if not (_as_dict(enum) == _as_dict(rm) == ref and count == ref_count):
            bad.append((n, d, sorted(bd)))
    counts = [r[3] for r in res]
    ok = not bad and counts[0] == 3 and counts[1] == 19 and secs < 30
    record(7, ok, f"exact marginal vs enumeration, counts={counts}, mismatches={bad}, "
           f"{secs:.2f}s (< 30s)")
    assert not bad
    assert counts[:2] == [3, 19]
    assert secs < 30


def test_c08_sampler_chi_square(record):
    def run():
        return treesampler.sample_tree_arrays(6, 2, count=10 ** 5, seed=CHI_SQUARE_SEED)
    arrays, secs = timed(run)
    root = arrays[0][:, 0]
    exact = {h: Fraction(p) for h, p in FV.F6_D2.items()}
    # pool |h| >= 3 into the two tails so every expected count is at least 5
    bins = [(-99, -3), (-2, -2), (-1, -1), (0, 0), (1, 1), (2, 2), (3, 99)]
    obs = np.array([((root >= lo) & (root <= hi)).sum() for lo, hi in bins])
    probs = np.array([float(sum(p for h, p in exact.items() if lo <= h <= hi)) for lo, hi in bins])
    stat, pval = chisquare(obs, probs * obs.sum())
    leaves_ok = bool((arrays[-1] == 0).all())
    steps_ok = all(np.abs(np.repeat(arrays[k], 2, axis=1) - arrays[k + 1]).max() <= 1
                   for k in range(6))
    ok = pval > 1e-3 and leaves_ok and steps_ok and secs < 30
    record(8, ok, f"chi-square n=6 d=2, 1e5 samples, seed={CHI_SQUARE_SEED}, "
           f"p={pval:.4f} (> .001), {secs:.2f}s (< 30s)")
    assert leaves_ok and steps_ok
    assert pval > 1e-3
    assert secs < 30


@pytest.fixture(scope="module")
def gaps():
    def run():
        return treesampler.parity_gaps(8, 100), treesampler.parity_gaps(7, 300)
    return timed(run)


@pytest.mark.xfail(strict=True, reason="two-step gaps decay geometrically: ~1e-4 at n=50 "
                   "for d=8, and d=7 first gets both gaps below 1e-6 at n=293")
def test_c09_parity_dichotomy(record, gaps):
    ((tv1_8, tv2_8), (tv1_7, tv2_7)), secs = gaps
    min_tv1 = tv1_8[:101].min()
    max_tv2 = tv2_8[50:101].max()
    ok = min_tv1 > 0.2 and max_tv2 < 1e-6 and tv1_7[200] < 1e-6 and tv2_7[200] < 1e-6 \
        and secs < 10
    record(9, ok, f"d=8 min TV(n,n+1)={min_tv1:.4f} (> .2), max TV(n,n+2) n>=50="
           f"{max_tv2:.2e} (< 1e-6); d=7 gaps at 200={tv1_7[200]:.1e},{tv2_7[200]:.1e}; "
           f"{secs:.2f}s (< 10s)")
    assert secs < 10
    assert min_tv1 > 0.2
    assert max_tv2 < 1e-6


def test_c09_parts_that_hold(gaps):
    ((tv1_8, tv2_8), (tv1_7, tv2_7)), secs = gaps
    assert secs < 10
    assert tv1_8[:101].min() > 0.2
    assert tv1_8[:101].min() == pytest.approx(FV.TV_GAPS["d8_min_tv1_upto100"], rel=1e-9)
    assert tv2_8[50] == pytest.approx(FV.TV_GAPS["d8_tv2_at_50"], rel=1e-6)
    assert tv2_8[50:101].max() == pytest.approx(FV.TV_GAPS["d8_max_tv2_50_100"], rel=1e-6)
    assert tv1_7[200] == pytest.approx(FV.TV_GAPS["d7_tv1_at_200"], rel=1e-6)
    assert tv2_7[200] == pytest.approx(FV.TV_GAPS["d7_tv2_at_200"], rel=1e-6)
    first = next(n for n in range(301) if tv1_7[n] < 1e-6 and tv2_7[n] < 1e-6)
    assert first == FV.TV_GAPS["d7_first_n_both_below_1e-6"]


def test_c10_fkg_suites(record):
    def run():
        out = []
        for name, g, hp, ap in gibbsmc.fkg_library():
            out.append((name, gibbsmc.fkg_bruteforce(g, hp, holley=True),
                        gibbsmc.fkg_bruteforce(g, ap, mode="shifted_abs")))
        return out, gibbsmc.abs_counterexample()
    (res, cex), secs = timed(run)
    failing = [name for name, r1, r2 in res if not (r1.passed and r2.passed)]
    cex_ok = cex == {"zero": Fraction(2, 3), "abs_one": Fraction(1, 2)}
    cex_ok = cex_ok and {k: str(v) for k, v in cex.items()} == FV.ABS_EXAMPLE
    ok = not failing and cex_ok and secs < 60 and len(res) >= 5
    record(10, ok, f"FKG/CBC on {len(res)} graphs, failing={failing}, |h| example="
           f"{cex['zero']} vs {cex['abs_one']}, {secs:.2f}s (< 60s)")
    assert not failing
    assert cex_ok
    assert secs < 60


def test_c11_cluster_tail(record):
    rep, secs = timed(lambda: gibbsmc.tail_check(50, 3, M=1, samples=1000, seed=11))
    frac = rep.meta["root_typical_fraction"]
    ok = rep.passed and frac >= 0.99 and secs < 300
    record(11, ok, f"50-ary tree, 1000 samples, tail below bound: {rep.passed}, "
           f"root at 0: {frac:.3f} (>= .99), status={rep.meta['status']}, {secs:.2f}s (< 300s)")
    assert rep.passed
    assert frac >= 0.99
    assert secs < 300


def test_c12_limit_chain(record):
    pis = {d: treesampler.marginal_sequence(d, 2000)[-1] for d in range(2, 8)}

    def run():
        return {d: treesampler.limit_chain(pis[d], d) for d in range(2, 8)}
    chains, secs = timed(run)
    failing = [d for d, ch in chains.items() if not ch.report.passed]
    rows_exact = all(all(r == 1 for r in ch.row_sums) for ch in chains.values())
    worst_stat = max(ch.stationarity_residual for ch in chains.values())
    worst_rev = max(ch.reversibility_residual for ch in chains.values())
    ok = not failing and rows_exact and secs < 5
    record(12, ok, f"limit chains d=2..7, rows exact={rows_exact}, stationarity<="
           f"{worst_stat:.1e} (< 1e-10), balance<={worst_rev:.1e} (< 1e-12), {secs:.2f}s (< 5s)")
    assert rows_exact
    assert worst_stat < 1e-10 and worst_rev < 1e-12
    assert not failing
    assert secs < 5
