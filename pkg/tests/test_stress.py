import numpy as np
import pytest

from cmtkit import cmt, stress
from cmtkit.errors import ParamOutOfRange, UnknownTheoremId


def cfg(theorem, **kw):
    kw.setdefault("samples", 300)
    kw.setdefault("dims", (2, 3, 4))
    return stress.StressConfig(theorem, **kw)


@pytest.mark.parametrize(
    "theorem,n,S",
    [("tight", 2, 1), ("tight", 4, 1), ("general", 2, 3), ("fidelity", 2, 1),
     ("td_pair", 3, 1), ("td_tight", 3, 1), ("qubit_td", 2, 1)],
)
def test_small_suites_pass(theorem, n, S):
    rep = stress.stress_verify(cfg(theorem, n=n, S=S))
    assert rep.passed, rep.to_json()
    assert set(rep.by_generator) == set(stress.GENERATORS)
    assert sum(g["samples"] for g in rep.by_generator.values()) == rep.samples


def test_report_is_reproducible():
    a = stress.stress_verify(cfg("fidelity", seed=7))
    b = stress.stress_verify(cfg("fidelity", seed=7))
    c = stress.stress_verify(cfg("fidelity", seed=8))
    assert a == b
    assert a.min_margin != c.min_margin


def test_trials_independent_of_sample_count():
    small = stress.stress_margins(cfg("tight", samples=50))
    big = stress.stress_margins(cfg("tight", samples=120))
    assert np.array_equal(small.E, big.E[:50])


def test_replay_worst_trial():
    c = cfg("td_tight", n=3)
    rep = stress.stress_verify(c)
    projs, states = stress.replay_trial(c, rep.worst_trial)
    v, e = cmt.stats_arrays(projs, states)
    delta = cmt.spread_arrays(states)
    margin = e - cmt.td_cmt_bound_tight(3, min(float(v), 1.0), delta)
    assert float(margin) == pytest.approx(rep.min_margin, abs=1e-12)


def test_near_extremal_margins_are_small():
    m = stress.stress_margins(cfg("tight", n=3, samples=90))
    near = m.margin[m.generator == stress.GENERATORS.index("near_extremal")]
    assert near.min() >= -1e-9
    assert np.median(near) < 1e-2


def test_forced_equal_states_match_tight():
    td = stress.stress_margins(cfg("td_pair", force_equal_states=True, samples=120))
    assert np.all(td.delta == 0)
    assert np.allclose(td.margin, td.E - cmt.tight_cmt_bound(2, td.V), atol=1e-12)
    td3 = stress.stress_margins(cfg("td_tight", n=3, force_equal_states=True, samples=60))
    assert np.allclose(td3.margin, td3.E - cmt.tight_cmt_bound(3, td3.V), atol=1e-12)


def test_dimensions_are_covered():
    m = stress.stress_margins(cfg("fidelity", samples=200, dims=(2, 5, 8)))
    assert {2, 5, 8} <= set(np.unique(m.dim))


@pytest.mark.parametrize(
    "bad",
    [dict(samples=0), dict(n=1), dict(S=0), dict(dims=()), dict(n=3, theorem="fidelity")],
)
def test_config_errors(bad):
    theorem = bad.pop("theorem", "tight")
    with pytest.raises(ParamOutOfRange):
        stress.stress_verify(cfg(theorem, **bad))


def test_unknown_theorem():
    with pytest.raises(UnknownTheoremId):
        stress.stress_verify(cfg("nope"))


def test_acceptance_battery_layout():
    suites = stress.acceptance_suites(samples=10)
    keys = [(s.theorem, s.n, s.S) for s in suites]
    assert ("tight", 4, 1) in keys and ("general", 2, 3) in keys and ("td_tight", 3, 1) in keys
    assert len(suites) == 11
