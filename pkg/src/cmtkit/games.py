"""Nonlocal games, coupled games and upper bounds for generalized CHSH.

A two-player game with uniform inputs has a *coupled* variant in which Bob
gets two distinct questions ``y != y'`` in one round and must answer both
correctly. Measuring Bob's two projective measurements one after the other
turns any strategy for the game into one for the coupled game, so the
consecutive-measurement bound links the two values:

    omega_cp >= n^2/(n-1)^2 * omega * max(0, omega - 1/n)^2,   n = |I_B|.

For ``CHSH_q(p)`` (``x`` in ``F_q``, ``y`` in a size-``p`` subset, win iff
``a + b = x*y``) no-signalling caps the coupled value at ``1/q``, and
inverting the inequality gives a closed-form bound on ``omega``. Writing
``alpha = n * omega`` the inequality reads ``alpha (alpha-1)^2 <= K`` and the
substitution ``alpha = (2 + z)/3`` turns equality into the depressed cubic
``z^3 - 3z = 27K - 2``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import cmt, qla
from .errors import (
    DimensionMismatch,
    IncompleteMeasurement,
    NonProjectiveBob,
    NonUniformGame,
    ParamOutOfRange,
)
from .report import Table

# --------------------------------------------------------------------------
# finite fields

# x^l + ... coefficients as bit masks; each is irreducible over GF(2)
GF2_MODULI = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10000011,
    8: 0b100011011,
}


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    return all(q % k for k in range(2, math.isqrt(q) + 1))


class Field:
    """Arithmetic in ``GF(2^l)`` (``l <= 8``) or ``GF(q)`` for prime ``q``.

    Elements are the integers ``0..q-1``; for ``GF(2^l)`` an integer's bits
    are the polynomial coefficients.
    """

    def __init__(self, q: int):
        q = int(q)
        self.q = q
        if _is_prime(q):
            self.kind = "prime"
        elif q > 1 and q & (q - 1) == 0 and q.bit_length() - 1 in GF2_MODULI:
            self.kind = "binary"
            self.modulus = GF2_MODULI[q.bit_length() - 1]
        else:
            raise ParamOutOfRange(f"field size {q} must be prime or 2^l with l <= 8")

    def add(self, a: int, b: int) -> int:
        return a ^ b if self.kind == "binary" else (a + b) % self.q

    def neg(self, a: int) -> int:
        return a if self.kind == "binary" else (-a) % self.q

    def mul(self, a: int, b: int) -> int:
        if self.kind == "prime":
            return (a * b) % self.q
        deg = self.q.bit_length() - 1
        out = 0
        while b:
            if b & 1:
                out ^= a
            b >>= 1
            a <<= 1
            if a >> deg:
                a ^= self.modulus
        return out

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return next(b for b in range(1, self.q) if self.mul(a, b) == 1)

    @cached_property
    def add_table(self) -> np.ndarray:
        r = range(self.q)
        return np.array([[self.add(a, b) for b in r] for a in r], dtype=np.int64)

    @cached_property
    def mul_table(self) -> np.ndarray:
        r = range(self.q)
        return np.array([[self.mul(a, b) for b in r] for a in r], dtype=np.int64)


# --------------------------------------------------------------------------
# games and strategies


@dataclass(frozen=True)
class GameSpec:
    """Input/output alphabet sizes and a win predicate ``V(x, y, a, b)``.

    Inputs are drawn uniformly; other distributions are rejected.
    """

    input_sizes: tuple[int, int]
    output_sizes: tuple[int, int]
    predicate: Callable[[int, int, int, int], bool] = field(compare=False)
    uniform: bool = True
    name: str = ""

    def __post_init__(self):
        if not self.uniform:
            raise NonUniformGame("only uniform input distributions are supported")

    @cached_property
    def table(self) -> np.ndarray:
        """Win indicator as an array indexed ``[x, y, a, b]``."""
        IA, IB = self.input_sizes
        OA, OB = self.output_sizes
        t = np.zeros((IA, IB, OA, OB))
        for x, y, a, b in itertools.product(range(IA), range(IB), range(OA), range(OB)):
            t[x, y, a, b] = 1.0 if self.predicate(x, y, a, b) else 0.0
        return t

    def is_projective(self) -> bool:
        """True when every ``(x, y, a)`` has exactly one winning ``b``."""
        return bool(np.all(self.table.sum(axis=3) == 1))


def chsh_game(q: int, p: int = 2) -> GameSpec:
    """``CHSH_q(p)``: ``x, a, b`` in ``F_q``, ``y`` among the first ``p`` field
    elements; win iff ``a + b = x * y``."""
    if not 2 <= p <= q:
        raise ParamOutOfRange("need 2 <= p <= q")
    F = Field(q)
    add, mul = F.add_table, F.mul_table
    return GameSpec((q, p), (q, q), lambda x, y, a, b: add[a, b] == mul[x, y], name=f"CHSH_{q}({p})")


def _digits(k: int, base: int, m: int) -> list[int]:
    out = []
    for _ in range(m):
        out.append(k % base)
        k //= base
    return out


def mfold_chsh_game(q: int, p: int, m: int) -> GameSpec:
    """``m`` parallel copies of ``CHSH_q(p)``, won iff every copy is won.

    Inputs and outputs are tuples packed as base-``q`` (or base-``p``) integers.
    """
    if m < 1:
        raise ParamOutOfRange("m must be at least 1")
    base = chsh_game(q, p)
    t = base.table

    def pred(x, y, a, b):
        xs, ys = _digits(x, q, m), _digits(y, p, m)
        as_, bs = _digits(a, q, m), _digits(b, q, m)
        return all(t[xi, yi, ai, bi] for xi, yi, ai, bi in zip(xs, ys, as_, bs))

    return GameSpec((q**m, p**m), (q**m, q**m), pred, name=f"CHSH_{q}({p})^{m}")


@dataclass(frozen=True)
class Strategy:
    """Shared state on ``C^dA (x) C^dB`` and local measurements.

    ``alice[x][a]`` and ``bob[y][b]`` are the measurement operators.
    """

    state: np.ndarray
    alice: tuple
    bob: tuple
    dims: tuple[int, int]

    @classmethod
    def build(cls, state, alice, bob, tol: float = 1e-9) -> "Strategy":
        alice_a = tuple(np.stack([qla.as_matrix(q) for q in meas]) for meas in alice)
        bob_a = tuple(np.stack([qla.as_matrix(p) for p in meas]) for meas in bob)
        dA = alice_a[0].shape[-1]
        dB = bob_a[0].shape[-1]
        rho = qla.as_matrix(state)
        if rho.ndim == 1:
            rho = np.outer(rho, rho.conj())
        if rho.shape != (dA * dB, dA * dB):
            raise DimensionMismatch(f"state of shape {rho.shape} does not match {dA}x{dB}")
        for meas, d in [(m, dA) for m in alice_a] + [(m, dB) for m in bob_a]:
            if meas.shape[-2:] != (d, d):
                raise DimensionMismatch("measurement operators have inconsistent dimension")
            if np.max(np.abs(meas.sum(axis=0) - np.eye(d))) > tol:
                raise IncompleteMeasurement("measurement operators do not sum to the identity")
        return cls(rho, alice_a, bob_a, (dA, dB))

    def bob_is_projective(self, tol: float = 1e-9) -> bool:
        for meas in self.bob:
            for i, p in enumerate(meas):
                if np.max(np.abs(p @ p - p)) > tol or np.max(np.abs(p - p.conj().T)) > tol:
                    return False
        return True

    def bob_marginals(self) -> np.ndarray:
        """Unnormalised Bob states ``Tr_A((Q_x^a (x) I) rho)`` indexed ``[x, a]``."""
        dA, dB = self.dims
        r4 = self.state.reshape(dA, dB, dA, dB)
        Q = np.stack(self.alice)  # x, a, i, k
        return np.einsum("xaik,kbic->xabc", Q, r4)


def _check_game(G: GameSpec, IA: int, IB: int, OA: int, OB: int) -> None:
    if (IA, IB) != tuple(G.input_sizes) or (OA, OB) != tuple(G.output_sizes):
        raise DimensionMismatch("strategy alphabets do not match the game")


def evaluate_strategy(G: GameSpec, S: Strategy) -> float:
    """Winning probability ``sum_{x,y} pi(x,y) sum_{a,b} V Tr((Q (x) P) rho)``."""
    P = np.stack(S.bob)  # y, b, c, d
    _check_game(G, len(S.alice), len(S.bob), S.alice[0].shape[0], P.shape[1])
    R = S.bob_marginals()  # x, a, b, c
    joint = np.einsum("ybcd,xadc->xyab", P, R).real
    IA, IB = G.input_sizes
    return float(np.sum(G.table * joint) / (IA * IB))


@dataclass(frozen=True)
class CoupledStrategy:
    """Alice's original measurements with Bob's sequential pairs.

    ``bob[y, y', b, b']`` is ``P_y^b P_{y'}^{b'} P_y^b``; entries with
    ``y == y'`` are unused.
    """

    base: Strategy
    bob: np.ndarray


def induce_coupled(S: Strategy, tol: float = 1e-9) -> CoupledStrategy:
    """Bob answers ``y`` then ``y'`` by measuring one after the other."""
    if not S.bob_is_projective(tol):
        raise NonProjectiveBob("coupled strategies need projective measurements for Bob")
    P = np.stack(S.bob)  # y, b, d, d
    seq = np.einsum("ybij,zcjk,ybkl->yzbcil", P, P, P)
    return CoupledStrategy(S, seq)


def evaluate_coupled(G: GameSpec, C: CoupledStrategy) -> float:
    """Value of the coupled game: ``x`` uniform, ``(y, y')`` uniform over ``y != y'``."""
    S = C.base
    IA, IB = G.input_sizes
    _check_game(G, len(S.alice), len(S.bob), S.alice[0].shape[0], C.bob.shape[2])
    if IB < 2:
        raise ParamOutOfRange("coupled games need at least two inputs for Bob")
    R = S.bob_marginals()  # x, a, b, c
    joint = np.einsum("yzbcij,xaji->xyzabc", C.bob, R).real
    T = G.table  # x, y, a, b
    win = np.einsum("xyab,xzac->xyzabc", T, T)
    off = ~np.eye(IB, dtype=bool)
    total = np.einsum("xyzabc,xyzabc->yz", win, joint)
    return float(total[off].sum() / (IA * IB * (IB - 1)))


def coupled_lower_bound(n_inputs: int, omega: float) -> float:
    """Minimum coupled value implied by game value ``omega``."""
    return cmt.tight_cmt_bound(n_inputs, min(max(omega, 0.0), 1.0))


def deterministic_strategy(a_of_x: Sequence[int], b_of_y: Sequence[int], OA: int, OB: int) -> Strategy:
    """Classical deterministic play as a one-dimensional quantum strategy."""
    alice = [[np.array([[1.0 if a == ax else 0.0]]) for a in range(OA)] for ax in a_of_x]
    bob = [[np.array([[1.0 if b == by else 0.0]]) for b in range(OB)] for by in b_of_y]
    return Strategy.build(np.array([[1.0]]), alice, bob)


def optimal_chsh_strategy() -> Strategy:
    """Maximally entangled pair with the standard CHSH observables.

    Alice measures ``Z`` or ``X``; Bob measures ``(Z + X)/sqrt 2`` or
    ``(Z - X)/sqrt 2``. Outcome ``k`` is the ``(-1)^k`` eigenspace.
    """
    Z = np.diag([1.0, -1.0]).astype(complex)
    X = np.array([[0, 1], [1, 0]], complex)
    eye = np.eye(2)

    def pvm(obs):
        return [(eye + obs) / 2, (eye - obs) / 2]

    bell = np.array([1, 0, 0, 1], complex) / math.sqrt(2)
    return Strategy.build(
        bell,
        [pvm(Z), pvm(X)],
        [pvm((Z + X) / math.sqrt(2)), pvm((Z - X) / math.sqrt(2))],
    )


def random_strategy(G: GameSpec, dA: int, dB: int, rng: np.random.Generator) -> Strategy:
    """Random entangled state with random projective measurements on both sides."""
    IA, IB = G.input_sizes
    OA, OB = G.output_sizes

    def rand_pvm(d, k):
        u = qla.random_unitary(d, rng)
        labels = rng.integers(0, k, size=d)
        return [u[:, labels == o] @ u[:, labels == o].conj().T for o in range(k)]

    psi = qla.random_pure(dA * dB, rng)
    return Strategy.build(
        psi,
        [rand_pvm(dA, OA) for _ in range(IA)],
        [rand_pvm(dB, OB) for _ in range(IB)],
    )


# --------------------------------------------------------------------------
# closed-form bounds


def _check_pq(p, q) -> None:
    if not (p >= 2 and q >= p):
        raise ParamOutOfRange(f"need p >= 2 and q >= p, got p={p!r}, q={q!r}")


def cubic_excess(K: float) -> float:
    """``alpha - 1`` for the largest root ``alpha >= 1`` of ``alpha (alpha-1)^2 = K``.

    With ``alpha = (2 + z)/3`` this is ``(z - 1)/3`` where ``z`` is the
    largest root of ``z^3 - 3z = D``, ``D = 27K - 2 >= -2``. For ``D > 2``
    Cardano's real radical applies. For ``D <= 2`` all three roots are real
    and ``z = 2 cos(theta/3)`` with ``theta = arccos(D/2)``; we evaluate
    ``z - 1 = 4 sin(pi/3 - phi/6) sin(phi/6)`` with ``phi = pi - theta``,
    which avoids cancellation when ``K`` is small.
    """
    if K < 0:
        raise ParamOutOfRange("K must be nonnegative")
    if K == 0:
        return 0.0
    D = 27.0 * K - 2.0
    if D <= 2.0:
        phi = 2.0 * math.asin(min(1.0, math.sqrt(27.0 * K) / 2.0))
        zm1 = 4.0 * math.sin(math.pi / 3 - phi / 6) * math.sin(phi / 6)
    else:
        sig = ((D + math.sqrt(D * D - 4.0)) / 2.0) ** (1.0 / 3.0)
        zm1 = sig + 1.0 / sig - 1.0
    return zm1 / 3.0


def closed_form_value(n: int, cap: float) -> float:
    """Largest ``omega`` with ``tight_cmt_bound(n, omega) <= cap``, in closed form."""
    if n < 2:
        raise ParamOutOfRange("n must be at least 2")
    K = cap * n * (n - 1) ** 2
    return min(1.0, (1.0 + cubic_excess(K)) / n)


def chsh_discriminant(p: float, q: float, m: int = 1) -> float:
    """``27 K - 2`` for the ``m``-fold game (may overflow to inf for huge ``m``)."""
    _check_pq(p, q)
    g = math.expm1(m * math.log1p((p - 1) / q))
    pm = float(p) ** m
    return 27.0 * pm * (pm - 1.0) * g - 2.0


def chsh_upper_closed(p: float, q: float) -> float:
    """Upper bound on the quantum value of ``CHSH_q(p)``."""
    _check_pq(p, q)
    return min(1.0, (1.0 + cubic_excess(p * (p - 1) ** 2 / q)) / p)


def chsh_upper_closed_radical(p: float, q: float) -> float:
    """The same bound through Cardano's formula in complex arithmetic.

    Kept as a cross-check: with the principal complex cube root the radical
    expression stays valid when the discriminant is in ``[-2, 2]``, where its
    real form breaks down.
    """
    _check_pq(p, q)
    D = 27 * p * (p - 1) ** 2 / q - 2
    sig = ((D + np.sqrt(complex(D * D - 4))) / 2) ** (1 / 3)
    return float(((2 + sig + 1 / sig) / (3 * p)).real)


def coupled_value_chsh(p: float, q: float, m: int = 1) -> float:
    """No-signalling cap ``((1 + (p-1)/q)^m - 1)/(p^m - 1)`` on the coupled value."""
    _check_pq(p, q)
    if int(m) != m or m < 1:
        raise ParamOutOfRange("m must be a positive integer")
    return math.expm1(m * math.log1p((p - 1) / q)) / math.expm1(m * math.log(p))


def _log_expm1(x: float) -> float:
    return x + math.log(-math.expm1(-x)) if x > 1.0 else math.log(math.expm1(x))


def log_chsh_upper_m(p: float, q: float, m: int) -> float:
    """Natural log of the ``m``-fold bound, evaluated without forming ``p^m``."""
    _check_pq(p, q)
    if int(m) != m or m < 1:
        raise ParamOutOfRange("m must be a positive integer")
    lp = math.log(p)
    logn = m * lp
    # log K = log(p^m) + log(p^m - 1) + log((1 + (p-1)/q)^m - 1)
    logK = logn + _log_expm1(logn) + _log_expm1(m * math.log1p((p - 1) / q))
    if logK <= math.log(4.0 / 27.0):
        return min(0.0, math.log1p(cubic_excess(math.exp(logK))) - logn)
    logD = math.log(27.0) + logK + math.log1p(-2.0 * math.exp(-math.log(27.0) - logK))
    log_sig3 = logD + math.log((1.0 + math.sqrt(-math.expm1(math.log(4.0) - 2 * logD))) / 2.0)
    log_sig = log_sig3 / 3.0
    # alpha = (2 + sig + 1/sig)/3 = sig (1 + 1/sig)^2 / 3
    log_alpha = log_sig + 2.0 * math.log1p(math.exp(-log_sig)) - math.log(3.0)
    return min(0.0, log_alpha - logn)


def chsh_upper_m(p: float, q: float, m: int) -> float:
    """Upper bound on the quantum value of ``m`` parallel copies of ``CHSH_q(p)``."""
    return math.exp(log_chsh_upper_m(p, q, m))


def log_chsh_upper_asymptotic(p: float, q: float, m: int) -> float:
    _check_pq(p, q)
    lp = math.log(p)
    return float(np.logaddexp(-m * lp, (m / 3.0) * (math.log1p((p - 1) / q) - lp)))


def chsh_upper_asymptotic(p: float, q: float, m: int) -> float:
    """Large-``m`` form ``p^-m + p^(-m/3) (1 + (p-1)/q)^(m/3)``."""
    return math.exp(log_chsh_upper_asymptotic(p, q, m))


def chsh_upper_bisect(p: float, q: float, m: int = 1) -> float:
    """Reference value by bisection on the consecutive-measurement inequality."""
    n = float(p) ** m
    if n != int(n):
        raise ParamOutOfRange("bisection oracle needs integral p^m")
    return cmt.invert_cmt_bound(int(n), coupled_value_chsh(p, q, m))


# --------------------------------------------------------------------------
# comparison tables


def chailloux_leverrier_chsh(q: float) -> float:
    """``1/2 + 4 q^(-1/3)`` (Chailloux and Leverrier 2017)."""
    return 0.5 + 4.0 * q ** (-1.0 / 3.0)


def fillinger_chsh(q: float) -> float:
    """``1/2 + 1/sqrt(q)`` (Fillinger et al. 2019)."""
    return 0.5 + q ** -0.5


def sikora_chsh(q: float) -> float:
    """``1/2 + 1/sqrt(2q)`` (Sikora 2014; also Shi et al. 2024)."""
    return 0.5 + (2.0 * q) ** -0.5


# Numerical SDP upper bounds on CHSH_{2^l}(2) for l = 1..5, as published
# (unique-games SDP relaxation, 2010). They are fixed reference constants;
# nothing here recomputes them.
SDP_REFERENCE = {1: 0.853, 2: 0.780, 3: 0.743, 4: 0.725, 5: 0.716}


def prior_bounds_table(ls: Sequence[int] = (1, 2, 3, 4, 5)) -> Table:
    """Raw upper bounds on ``omega*(CHSH_{2^l}(2))`` from several methods."""
    rows = []
    for l in ls:
        q = 2.0**l
        rows.append(
            (
                int(l),
                chailloux_leverrier_chsh(q),
                fillinger_chsh(q),
                sikora_chsh(q),
                SDP_REFERENCE.get(int(l)),
                chsh_upper_closed(2, q),
            )
        )
    return Table(
        "table2",
        ("l", "chailloux", "fillinger", "shi_sikora", "sdp_reference", "ours"),
        tuple(rows),
        {"p": 2, "q": "2^l"},
        ("sdp_reference: published numerical SDP values, echoed not recomputed",),
    )
