"""Security-parameter calculators for mistrustful cryptography.

Relativistic bit commitment (RBC) over ``F_q`` inherits its sum-binding
parameter from the ``CHSH_q(p)`` bound: ``eps_b = p * omega - 1``.  The
oblivious transfer (QOT), homomorphic encryption (QHE) and private query
(QPQ) functions return lower bounds on a cheater's advantage; they are raw
values that can go negative, so every surface row carries a clamped copy too.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import cmt, games
from .errors import ParamOutOfRange, Unreachable
from .report import Table

MAX_L = 1024


def rbc_sum_binding_eps(p: float, q: float) -> float:
    """Sum-binding parameter of the single-round ``F_q`` commitment."""
    games._check_pq(p, q)
    return games.cubic_excess(p * (p - 1) ** 2 / q)


def rbc_parallel_eps(p: float, q: float, m: int) -> float:
    """Sum-binding parameter for ``m`` rounds played in parallel.

    Evaluated in log space, so huge ``p^m`` is fine as long as the result
    itself is representable.
    """
    logn = m * math.log(p)
    return math.expm1(games.log_chsh_upper_m(p, q, m) + logn)


def rbc_eps_via_game(p: float, q: float, m: int = 1) -> float:
    """Second route to ``eps_b``: ``p^m * omega_upper - 1``."""
    if m == 1:
        return p * games.chsh_upper_closed(p, q) - 1.0
    return p**m * games.chsh_upper_m(p, q, m) - 1.0


@dataclass(frozen=True)
class RbcPlan:
    p: int
    m: int
    target_eps: float
    chosen_l: int
    q: float
    achieved_eps: float
    bits_N: int

    def to_json(self) -> dict:
        return asdict(self)


def _eps_at_l(p: int, m: int, l: int) -> float:
    # work with 2^-l so that l up to MAX_L cannot overflow
    inv_q = 2.0**-l
    if m == 1:
        return games.cubic_excess(p * (p - 1) ** 2 * inv_q)
    logn = m * math.log(p)
    logK = logn + games._log_expm1(logn) + games._log_expm1(m * math.log1p((p - 1) * inv_q))
    return games.cubic_excess(math.exp(logK)) if logK < 700 else math.inf


def rbc_plan(p: int, m: int, target_eps: float) -> RbcPlan:
    """Smallest ``q = 2^l`` whose sum-binding parameter meets ``target_eps``.

    ``eps_b`` falls monotonically in ``l``: double ``l`` until the target is
    met, then bisect between the last failing and first passing ``l``.
    """
    p, m = int(p), int(m)
    if p < 2 or m < 1:
        raise ParamOutOfRange("need p >= 2 and m >= 1")
    if not 0 < target_eps < p**m - 1:
        raise ParamOutOfRange(f"target must lie in (0, {p**m - 1})")
    l_min = max(1, math.ceil(math.log2(p)))

    def ok(l):
        return _eps_at_l(p, m, l) <= target_eps

    if ok(l_min):
        lo, hi = l_min - 1, l_min
    else:
        lo, hi = l_min, l_min
        while not ok(hi):
            lo = hi
            if hi >= MAX_L:
                raise Unreachable(f"target {target_eps} not met for any l <= {MAX_L}")
            hi = min(2 * hi, MAX_L)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                hi = mid
            else:
                lo = mid
    return RbcPlan(p, m, float(target_eps), hi, 2.0**hi, _eps_at_l(p, m, hi), hi)


# --------------------------------------------------------------------------
# no-go bounds


def _in(name, x, lo, hi):
    if not lo <= x <= hi:
        raise ParamOutOfRange(f"{name}={x} outside [{lo}, {hi}]")


def qot_nogo_rhs(delta: float, eps_a: float) -> float:
    """Lower bound on Bob's cheating advantage ``eps_B`` in oblivious transfer."""
    _in("delta", delta, 0.0, 0.5)
    _in("eps_a", eps_a, 0.0, 1.0)
    return float(cmt.fidelity_cmt_bound(1.0 - delta, 1.0 - 2.0 * eps_a)) - 0.5


def qot_prior_rhs(delta: float, eps_a: float) -> float:
    """Earlier measurement-based bound ``1/2 - 2 eps_A - 4 sqrt(delta)``."""
    _in("delta", delta, 0.0, 0.5)
    _in("eps_a", eps_a, 0.0, 1.0)
    return 0.5 - 2.0 * eps_a - 4.0 * math.sqrt(delta)


def qhe_nogo_rhs(delta: float, eps_d: float) -> float:
    """Lower bound on ``eps_c`` for homomorphic encryption."""
    _in("delta", delta, 0.0, 0.5)
    _in("eps_d", eps_d, 0.0, 1.0)
    return float(cmt.fidelity_cmt_bound(1.0 - delta, 1.0 - eps_d)) - 0.5


@dataclass(frozen=True)
class QpqResult:
    value: float
    raw: float
    pair_branch: float
    tight_branch: float
    branch: str


def qpq_nogo(n: int, delta: float, eps_a: float) -> float:
    """Probability that a dishonest client retrieves two entries, clamped."""
    return qpq_nogo_detail(n, delta, eps_a).value


def qpq_nogo_detail(n: int, delta: float, eps_a: float) -> QpqResult:
    if n < 2:
        raise ParamOutOfRange("n must be at least 2")
    _in("delta", delta, 0.0, 0.5)
    if eps_a < 0:
        raise ParamOutOfRange("eps_a must be nonnegative")
    d = 4.0 * math.sqrt(eps_a)
    pair = float(cmt.td_cmt_bound_pair(1.0 - delta, d))
    tight = float(cmt.td_cmt_bound_tight(n, 1.0 - delta, d))
    raw = max(pair, tight)
    return QpqResult(min(1.0, max(0.0, raw)), raw, pair, tight, "pair" if pair >= tight else "tight")


def qpq_prior(eps: float) -> float:
    if eps < 0:
        raise ParamOutOfRange("eps must be nonnegative")
    return 1.0 - 8.0 * math.sqrt(eps)


@dataclass(frozen=True)
class NogoPoint:
    inputs: dict
    ours: float
    prior: float | None

    @property
    def ours_clamped(self) -> float:
        return min(1.0, max(0.0, self.ours))

    @property
    def prior_clamped(self) -> float | None:
        return None if self.prior is None else min(1.0, max(0.0, self.prior))

    @property
    def winner(self) -> str:
        if self.prior is None:
            return "ours"
        if self.ours > self.prior:
            return "ours"
        return "prior" if self.prior > self.ours else "tie"


def nogo_point(primitive: str, delta: float, eps: float, n: int = 2) -> NogoPoint:
    """Evaluate one primitive's bound (ours and, if one exists, the prior one)."""
    if primitive == "qot":
        return NogoPoint({"delta": delta, "eps_a": eps}, qot_nogo_rhs(delta, eps), qot_prior_rhs(delta, eps))
    if primitive == "qhe":
        return NogoPoint({"delta": delta, "eps_d": eps}, qhe_nogo_rhs(delta, eps), None)
    if primitive == "qpq":
        r = qpq_nogo_detail(n, delta, eps)
        return NogoPoint({"n": n, "delta": delta, "eps_a": eps}, r.raw, qpq_prior(eps))
    raise ParamOutOfRange(f"unknown primitive {primitive!r}")


def nogo_surface(primitive: str, deltas, epss, n: int = 2) -> Table:
    """Grid of bounds with columns (inputs, ours_raw, ours_clamped, prior, winner)."""
    rows = []
    input_cols = None
    for d in deltas:
        for e in epss:
            pt = nogo_point(primitive, float(d), float(e), n)
            input_cols = tuple(pt.inputs)
            rows.append((*pt.inputs.values(), pt.ours, pt.ours_clamped, pt.prior, pt.winner))
    if input_cols is None:
        raise ParamOutOfRange("empty grid")
    return Table(
        f"nogo_{primitive}",
        (*input_cols, "ours_raw", "ours_clamped", "prior", "winner"),
        tuple(rows),
        {"n": n} if primitive == "qpq" else {},
    )


def qpq_diagonal(n: int, eps_grid) -> Table:
    """QPQ bound along ``delta = eps_A = eps`` next to ``1 - 8 sqrt(eps)``."""
    rows = []
    for e in np.asarray(eps_grid, dtype=float):
        r = qpq_nogo_detail(n, float(e), float(e))
        rows.append((float(e), r.raw, r.value, qpq_prior(float(e)), r.branch))
    return Table("qpq_diagonal", ("eps", "ours_raw", "ours_clamped", "prior", "branch"), tuple(rows), {"n": n})
