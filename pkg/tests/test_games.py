import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmtkit import cmt, games, qla
from cmtkit.errors import (
    DimensionMismatch,
    IncompleteMeasurement,
    NonProjectiveBob,
    NonUniformGame,
    ParamOutOfRange,
)

# ---------------------------------------------------------------- fields


@pytest.mark.parametrize("q", [2, 3, 4, 5, 7, 8, 16, 32, 256])
def test_field_axioms(q):
    F = games.Field(q)
    M, A = F.mul_table, F.add_table
    els = range(q)
    # every nonzero element is invertible
    for a in range(1, q):
        assert F.mul(a, F.inv(a)) == 1
    # spot-check distributivity on a subset
    sub = list(els)[: min(q, 9)]
    for a, b, c in itertools.product(sub, repeat=3):
        assert M[a, A[b, c]] == A[M[a, b], M[a, c]]
    assert all(sorted(A[a]) == list(els) for a in els)


def test_gf4_structure():
    F = games.Field(4)
    # x * x = x + 1 under the modulus x^2 + x + 1
    assert F.mul(2, 2) == 3
    assert F.mul(2, 3) == 1


@pytest.mark.parametrize("q", [6, 9, 512, 1])
def test_field_rejects(q):
    with pytest.raises(ParamOutOfRange):
        games.Field(q)


# ---------------------------------------------------------------- games and strategies


def brute_classical_value(G):
    IA, IB = G.input_sizes
    OA, OB = G.output_sizes
    best = 0.0
    for fa in itertools.product(range(OA), repeat=IA):
        for fb in itertools.product(range(OB), repeat=IB):
            w = sum(G.table[x, y, fa[x], fb[y]] for x in range(IA) for y in range(IB))
            best = max(best, w / (IA * IB))
    return best


def test_chsh_classical_value_via_strategies():
    G = games.chsh_game(2, 2)
    assert brute_classical_value(G) == pytest.approx(0.75)
    best = 0.0
    for fa in itertools.product(range(2), repeat=2):
        for fb in itertools.product(range(2), repeat=2):
            best = max(best, games.evaluate_strategy(G, games.deterministic_strategy(fa, fb, 2, 2)))
    assert best == pytest.approx(0.75)


def test_optimal_chsh_value():
    G = games.chsh_game(2, 2)
    S = games.optimal_chsh_strategy()
    assert games.evaluate_strategy(G, S) == pytest.approx(math.cos(math.pi / 8) ** 2, abs=1e-12)
    c = games.evaluate_coupled(G, games.induce_coupled(S))
    assert c >= cmt.tight_cmt_bound(2, games.evaluate_strategy(G, S)) - 1e-12
    assert c <= 0.5 + 1e-12


def brute_coupled_deterministic(G, fa, fb, fb2):
    """Coupled value where Bob answers fb[y] to y and fb2[y'] to y'."""
    IA, IB = G.input_sizes
    T = G.table
    tot = 0.0
    for x in range(IA):
        for y in range(IB):
            for z in range(IB):
                if y != z:
                    tot += T[x, y, fa[x], fb[y]] * T[x, z, fa[x], fb2[z]]
    return tot / (IA * IB * (IB - 1))


def test_coupled_deterministic_matches_enumeration():
    G = games.chsh_game(3, 3)
    r = np.random.default_rng(0)
    for _ in range(10):
        fa, fb = r.integers(0, 3, 3), r.integers(0, 3, 3)
        S = games.deterministic_strategy(fa, fb, 3, 3)
        got = games.evaluate_coupled(G, games.induce_coupled(S))
        assert got == pytest.approx(brute_coupled_deterministic(G, fa, fb, fb))


def nosignal_cap_brute(G, q):
    """Max over Bob's answers of Pr_x[both predicates hold for some a], averaged over y != y'."""
    IA, IB = G.input_sizes
    OA, OB = G.output_sizes
    T = G.table
    tot = 0.0
    for y in range(IB):
        for z in range(IB):
            if y == z:
                continue
            best = 0.0
            for b in range(OB):
                for c in range(OB):
                    hits = sum(any(T[x, y, a, b] and T[x, z, a, c] for a in range(OA)) for x in range(IA))
                    best = max(best, hits / IA)
            tot += best
    return tot / (IB * (IB - 1))


@pytest.mark.parametrize("m", [1, 2])
def test_coupled_cap_brute_force(m):
    G = games.mfold_chsh_game(2, 2, m)
    assert nosignal_cap_brute(G, 2) == pytest.approx(games.coupled_value_chsh(2, 2, m), abs=0)


def test_coupled_cap_values():
    assert games.coupled_value_chsh(2, 2, 1) == 0.5
    assert games.coupled_value_chsh(2, 2, 2) == pytest.approx(1.25 / 3)
    r = np.random.default_rng(3)
    for _ in range(20):
        p = int(r.integers(2, 9))
        q = p + float(r.random() * 50)
        assert games.coupled_value_chsh(p, q, 1) == pytest.approx(1 / q)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([(2, 2), (3, 3), (4, 2)]), st.integers(1, 3))
def test_consecutive_inequality_on_random_strategies(seed, qp, dA):
    q, p = qp
    G = games.chsh_game(q, p)
    S = games.random_strategy(G, dA, 3, np.random.default_rng(seed))
    w = games.evaluate_strategy(G, S)
    c = games.evaluate_coupled(G, games.induce_coupled(S))
    assert c >= cmt.tight_cmt_bound(p, w) - 1e-9
    assert c <= games.coupled_value_chsh(p, q) + 1e-9


def test_mfold_predicate():
    G = games.mfold_chsh_game(2, 2, 2)
    assert G.table.shape == (4, 4, 4, 4)
    assert G.is_projective()
    assert brute_classical_value(G) == pytest.approx(10 / 16)


def test_strategy_validation():
    G = games.chsh_game(2, 2)
    good = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    with pytest.raises(IncompleteMeasurement):
        games.Strategy.build(np.eye(4) / 4, [good, [np.eye(2), np.eye(2)]], [good, good])
    with pytest.raises(DimensionMismatch):
        games.Strategy.build(np.eye(3) / 3, [good, good], [good, good])
    pov = [np.eye(2) / 2, np.eye(2) / 2]
    S = games.Strategy.build(np.eye(4) / 4, [good, good], [pov, good])
    with pytest.raises(NonProjectiveBob):
        games.induce_coupled(S)
    S3 = games.deterministic_strategy([0, 0, 0], [0, 0], 3, 3)
    with pytest.raises(DimensionMismatch):
        games.evaluate_strategy(G, S3)


def test_non_uniform_rejected():
    with pytest.raises(NonUniformGame):
        games.GameSpec((2, 2), (2, 2), lambda *a: True, uniform=False)


# ---------------------------------------------------------------- closed forms


def test_table_values():
    ours = [games.chsh_upper_closed(2, 2**l) for l in range(1, 6)]
    assert np.allclose([ours[i] for i in (0, 1, 2, 4)], [0.877, 0.783, 0.710, 0.613], atol=5e-4)
    # q = 16 has the exact root alpha = (3 + sqrt 5)/4, so omega = (3 + sqrt 5)/8
    assert ours[3] == pytest.approx((3 + math.sqrt(5)) / 8, abs=1e-15)


def test_trig_branch_vs_complex_radical():
    for p, q in [(2, 32), (2, 64), (3, 200), (2, 1e6), (2, 16), (5, 5)]:
        assert games.chsh_upper_closed(p, q) == pytest.approx(games.chsh_upper_closed_radical(p, q), abs=1e-12)


def test_cubic_excess_is_root():
    for K in [1e-15, 1e-6, 0.1, 4 / 27, 0.2, 3.0, 1e8]:
        e = games.cubic_excess(K)
        a = 1 + e
        assert a * e * e == pytest.approx(K, rel=1e-12)
    assert games.cubic_excess(0.0) == 0.0


def test_small_K_keeps_precision():
    # leading order: alpha - 1 ~ sqrt(K)
    assert games.cubic_excess(1e-20) == pytest.approx(1e-10, rel=1e-9)


def test_closed_vs_bisection_grid():
    for p in (2, 3, 5):
        for q in (p, 2 * p, 7.5 * p, 100.0, 1e4):
            if q < p:
                continue
            for m in (1, 2, 3):
                assert abs(games.chsh_upper_m(p, q, m) - games.chsh_upper_bisect(p, q, m)) <= 1e-10


def test_m1_reduction():
    r = np.random.default_rng(4)
    for _ in range(20):
        p = int(r.integers(2, 10))
        q = p * (1 + 30 * r.random())
        assert games.chsh_upper_m(p, q, 1) == pytest.approx(games.chsh_upper_closed(p, q), abs=1e-12)
        assert games.chsh_discriminant(p, q, 1) == pytest.approx(27 * p * (p - 1) ** 2 / q - 2)


def test_monotone_in_q_and_range():
    qs = 2.0 ** np.arange(1, 40)
    vals = [games.chsh_upper_closed(2, q) for q in qs]
    assert np.all(np.diff(vals) <= 0)
    assert all(0.5 <= v <= 1 for v in vals)
    assert games.chsh_upper_closed(2, 2) <= 1.0


def test_large_m_log_domain():
    for m in (50, 200, 2000):
        lg = games.log_chsh_upper_m(2, 2, m)
        la = games.log_chsh_upper_asymptotic(2, 2, m)
        assert np.isfinite(lg)
        assert abs(lg - la) / abs(la) < 0.05
    # far from m = 1 the two agree to rounding
    for m in (400, 4000):
        assert games.log_chsh_upper_m(2, 2, m) == pytest.approx(games.log_chsh_upper_asymptotic(2, 2, m), rel=1e-9)


def test_param_errors():
    for bad in [(1, 2), (3, 2)]:
        with pytest.raises(ParamOutOfRange):
            games.chsh_upper_closed(*bad)
    with pytest.raises(ParamOutOfRange):
        games.coupled_value_chsh(2, 2, 0)
    with pytest.raises(ParamOutOfRange):
        games.cubic_excess(-1.0)


def test_prior_rows():
    t = games.prior_bounds_table()
    assert t.column("shi_sikora")[0] == pytest.approx(1.0)
    assert t.column("shi_sikora")[2] == pytest.approx(0.75)
    assert t.column("chailloux")[0] == pytest.approx(3.674, abs=1e-3)
    assert t.column("sdp_reference") == [0.853, 0.780, 0.743, 0.725, 0.716]
    ours, sik = t.column("ours"), t.column("shi_sikora")
    assert ours[3] < sik[3]
    csv = t.to_csv()
    assert csv.startswith("# table2")
    assert "l,chailloux,fillinger,shi_sikora,sdp_reference,ours" in csv
