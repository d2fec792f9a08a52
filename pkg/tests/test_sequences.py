"""Cluster structure of the zoo sequences, with brute-force cross-checks."""

from fractions import Fraction

import numpy as np
import pytest

from idealconv import natset as ns
from idealconv import submeasure as sm
from idealconv import zoo
from idealconv.ideals import builtin
from idealconv.sequences import (AnalysisParams, RadiusSchedule, NotAnalyticP,
                                 complement_indicator_set, gamma_estimate,
                                 ideal_convergence_check, indicator_set,
                                 lambda_estimate, lambda_q_estimate,
                                 limit_points_estimate, u_frak)

F = Fraction
P14 = AnalysisParams(horizon=1 << 14)
P_RAT = AnalysisParams(horizon=1 << 14, schedule=RadiusSchedule.dyadic(6),
                       pitch=F(1, 64))


def pts(report, classification="cluster"):
    return sorted(p[0] for p in report.points(classification))


# --- indicator sets ----------------------------------------------------------

def test_indicator_alphabet_exact():
    x = zoo.char_evens()
    ind = indicator_set(x, (F(1),), F(1, 4), 100)
    assert ind == ns.Progression(2, 2)
    both = indicator_set(x, (F(1, 2),), F(1), 100)
    assert isinstance(both, ns.Cofinite)
    none = indicator_set(x, (F(10),), F(1, 4), 100)
    assert isinstance(none, ns.Finite) and not none.members


def test_indicator_bitmap_harmonic():
    x = zoo.harmonic()
    ind = indicator_set(x, (F(0),), F(1, 100), 10 ** 4)
    bits = ind.prefix(10 ** 4)
    # oracle: 1/n < 1/100 exactly when n >= 101
    assert not bits[:100].any() and bits[100:].all()


def test_indicator_complement_partition():
    x = zoo.char_powers2()
    for eps in (F(1, 4), F(1, 2)):
        ind = indicator_set(x, (F(1),), eps, 256)
        comp = complement_indicator_set(x, (F(1),), eps, 256)
        assert np.array_equal(comp.prefix(256), ~ind.prefix(256))


def test_rationals_indicator_is_exact():
    x = zoo.rationals()
    ind = indicator_set(x, (F(1, 2),), F(1, 64), 4096)
    bits = ind.prefix(4096)
    # oracle: recompute with exact fractions pointwise
    for n in (1, 2, 3, 10, 100, 500, 2047):
        want = abs(x.point(n)[0] - F(1, 2)) < F(1, 64)
        assert bool(bits[n - 1]) == want


# --- limit points ------------------------------------------------------------

def test_limit_points_examples():
    assert pts(limit_points_estimate(zoo.char_powers2(), P14)) == [0, 1]
    h = limit_points_estimate(zoo.harmonic(), P14)
    got = pts(h)
    assert F(0) in got and all(v <= P14.schedule.smallest for v in got)
    r = limit_points_estimate(zoo.rationals(), P_RAT)
    assert pts(r) == [F(k, 64) for k in range(65)]   # grid-dense in [0, 1]


def test_limit_points_block_alphabet():
    x = zoo.char_blocks(2)
    assert pts(limit_points_estimate(x, P14)) == [0, 1]


# --- cluster points modulo an ideal -------------------------------------------

def test_gamma_examples():
    Z = builtin("density-zero")
    assert pts(gamma_estimate(zoo.char_powers2(), Z, P14)) == [0]
    assert pts(gamma_estimate(zoo.char_evens(), Z, P14)) == [0, 1]
    fin = builtin("fin")
    for x in (zoo.char_powers2(), zoo.char_evens(), zoo.harmonic()):
        g = gamma_estimate(x, fin, P14)
        l = limit_points_estimate(x, P14)
        assert pts(g) == pts(l)        # Fin clusters are the limit points


def test_gamma_exact_path_for_alphabet():
    Z = builtin("density-zero")
    g = gamma_estimate(zoo.char_powers2(), Z, P14)
    for cand in g.candidates:
        for rec in cand.radii:
            assert rec.exact is not None   # every radius certified exactly


def test_gamma_summable():
    summ = builtin("summable")
    assert pts(gamma_estimate(zoo.char_evens(), summ, P14)) == [0, 1]
    assert pts(gamma_estimate(zoo.char_powers2(), summ, P14)) == [0]


# --- the limiting norm -------------------------------------------------------

def test_u_frak_examples():
    rd = sm.RunningDensity()
    u = u_frak(zoo.char_evens(), None, (F(1),), rd, P14)
    assert u.value() == F(1, 2) and u.exact == F(1, 2)
    u0 = u_frak(zoo.harmonic(), None, (F(0),), rd, P14)
    assert u0.numeric == 1             # the whole tail sits in every ball
    from idealconv.transforms import SubsequenceMap, TailRule
    evens_sel = SubsequenceMap((), TailRule("arith", 2))
    u2 = u_frak(zoo.char_evens(), evens_sel, (F(0),), rd, P14)
    assert u2.value() == 0             # the selected subsequence is constant 1


def test_u_frak_nonincreasing_along_radii():
    rd = sm.RunningDensity()
    for x, ell in ((zoo.char_evens(), F(1)), (zoo.char_powers2(), F(0)),
                   (zoo.char_blocks(2), F(1))):
        u = u_frak(x, None, (ell,), rd, P14)
        vals = [est.value() for _, est in u.per_radius]
        assert all(a >= b for a, b in zip(vals, vals[1:]))


# --- q-level sets ------------------------------------------------------------

def test_lambda_q_examples():
    Z = builtin("density-zero")
    assert pts(lambda_q_estimate(zoo.char_evens(), Z, F(1, 4), P14)) == [0, 1]
    assert pts(lambda_q_estimate(zoo.char_powers2(), Z, F(1, 4), P14)) == [0]
    assert pts(lambda_q_estimate(zoo.harmonic(), Z, F(1, 1), P14)) \
        == pts(limit_points_estimate(zoo.harmonic(), P14))


def test_lambda_q_monotone_in_q():
    Z = builtin("density-zero")
    for x in (zoo.char_evens(), zoo.char_powers2(), zoo.char_blocks(2),
              zoo.cycle(["0", "1/2", "1"])):
        sets = [set(lambda_q_estimate(x, Z, q, P14).points())
                for q in (F(1, 8), F(1, 4), F(1, 2))]
        assert sets[2] <= sets[1] <= sets[0]


def test_lambda_q_grid_closure_on_suite():
    # at grid resolution the level sets show no one-pitch holes: a cell with
    # cluster cells on both immediate sides is itself a cluster cell
    Z = builtin("density-zero")
    coarse = AnalysisParams(horizon=1 << 12, schedule=RadiusSchedule.dyadic(4),
                            pitch=F(1, 16))
    for x, params in ((zoo.harmonic(), coarse), (zoo.rationals(), P_RAT)):
        for q in (F(1, 4), F(1, 2)):
            rep = lambda_q_estimate(x, Z, q, params)
            cells = sorted(c.point[0] for c in rep.candidates)
            cluster = {c.point[0] for c in rep.candidates
                       if c.classification == "cluster"}
            for i in range(1, len(cells) - 1):
                if cells[i - 1] in cluster and cells[i + 1] in cluster:
                    assert cells[i] in cluster, (x.name, q, cells[i])


def test_lambda_requires_submeasure():
    fxf = builtin("fin-x-fin")
    with pytest.raises(NotAnalyticP):
        lambda_q_estimate(zoo.char_evens(), fxf, F(1, 4), P14)


def test_chain_inclusions_on_suite():
    coarse = AnalysisParams(horizon=1 << 12, schedule=RadiusSchedule.dyadic(4),
                            pitch=F(1, 16))
    suite = [(zoo.char_evens(), P14), (zoo.char_odds(), P14),
             (zoo.char_powers2(), P14), (zoo.char_blocks(2), P14),
             (zoo.cycle(["0", "1/2", "1"]), P14), (zoo.harmonic(), coarse)]
    ideals = [builtin("fin"), builtin("density-zero"), builtin("summable")]
    for x, params in suite:
        limits = set(limit_points_estimate(x, params).points())
        for handle in ideals:
            gamma = set(gamma_estimate(x, handle, params).points())
            lam = set(lambda_estimate(x, handle, params).points())
            assert lam <= gamma <= limits, (x.name, handle.name)
            for q in (F(1, 8), F(1, 4), F(1, 2)):
                lq = set(lambda_q_estimate(x, handle, q, params).points())
                assert lq <= lam, (x.name, handle.name, q)


# --- convergence, both routes -------------------------------------------------

def test_convergence_examples():
    Z = builtin("density-zero")
    fin = builtin("fin")
    c = ideal_convergence_check(zoo.char_powers2(), Z, (F(0),), P14)
    assert c.verdict == "converges" and c.agree
    c2 = ideal_convergence_check(zoo.char_evens(), Z, (F(0),), P14)
    assert c2.verdict == "diverges"
    for handle in (fin, Z):
        c3 = ideal_convergence_check(zoo.harmonic(), handle, (F(0),), P14)
        assert c3.verdict == "converges", handle.name
    # the powers sequence does not converge in the ordinary sense
    c4 = ideal_convergence_check(zoo.char_powers2(), fin, (F(0),), P14)
    assert c4.verdict == "diverges"


def test_convergence_routes_agree_on_alphabet_suite():
    Z = builtin("density-zero")
    for x in (zoo.char_evens(), zoo.char_powers2(), zoo.cycle(["0", "1"]),
              zoo.const("1/3")):
        for ell in (F(0), F(1)):
            c = ideal_convergence_check(x, Z, (ell,), P14)
            assert c.agree, (x.name, ell)


# --- reports ------------------------------------------------------------------

def test_two_dimensional_alphabet():
    # sup-metric and tuple points: letters at (0,0) and (1,1/2) on the parity
    # classes; both are density clusters, neither survives the thin ideal
    alpha = __import__("idealconv.sequences", fromlist=["Alphabet"]).Alphabet(
        letters=[(F(0), F(0)), (F(1), F(1, 2))],
        index_sets=[ns.Progression(1, 2), ns.Progression(2, 2)])
    from idealconv.sequences import SequenceSpec
    x = SequenceSpec(dim=2, bound=F(1),
                     point_fn=lambda n: alpha.letters[(n + 1) % 2],
                     alphabet=alpha, name="pair")
    Z = builtin("density-zero")
    g = gamma_estimate(x, Z, P14)
    assert sorted(g.points()) == [(F(0), F(0)), (F(1), F(1, 2))]
    ind = indicator_set(x, (F(1), F(1, 2)), F(1, 4), 64)
    assert ind == ns.Progression(2, 2)
    c = ideal_convergence_check(x, Z, (F(0), F(0)), P14)
    assert c.verdict == "diverges"


def test_report_json_and_csv_shape():
    Z = builtin("density-zero")
    g = gamma_estimate(zoo.char_evens(), Z, P14)
    body = g.to_json()
    assert body["mode"] == "gamma" and len(body["candidates"]) == 2
    rows = g.csv_rows()
    assert rows[0] == ["candidate", "eps", "exact", "numeric", "class"]
    assert len(rows) == 1 + 2 * len(P14.schedule)


def test_alphabet_partition_validation():
    x = zoo.char_blocks(3)
    x.alphabet.validate_partition(1 << 12)
    bad = zoo.char_evens()
    bad.alphabet.index_sets[0] = ns.Progression(1, 3)   # breaks the cover
    with pytest.raises(ValueError):
        bad.alphabet.validate_partition(64)


def test_analysis_params_validation():
    with pytest.raises(ValueError):
        AnalysisParams(horizon=1 << 10, pitch=F(1, 2),
                       schedule=RadiusSchedule.dyadic(4))  # pitch > min radius
    with pytest.raises(ValueError):
        RadiusSchedule([F(1, 2), F(1, 2)])
