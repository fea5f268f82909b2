"""Consecutive-measurement tradeoffs: statistics, bounds and extremal states.

A *scenario* is a list of ``n`` projectors together with either one shared
state or one state per projector. From it we measure

* ``V``: the average probability that a single measurement ``P_i`` succeeds,
* ``E``: the average probability that ``P_i`` followed by a different
  ``P_j`` both succeed,
* ``delta``: the mean pairwise trace-norm spread of the states (zero when
  the state is shared), and
* ``F``: the root fidelity of the two states when ``n = 2``.

The bound functions take plain floats or numpy arrays and never clamp their
output; negative values are meaningful for margin reporting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import qla
from .config import DEFAULT, Tolerances
from .errors import DimensionMismatch, ParamOutOfRange

# --------------------------------------------------------------------------
# scenarios and statistics


@dataclass(frozen=True)
class Scenario:
    """Projectors ``P_1..P_n`` with a shared state or one state per projector."""

    projectors: tuple[np.ndarray, ...]
    states: tuple[np.ndarray, ...]

    @classmethod
    def shared(cls, sigma, projectors, validate: bool = True) -> "Scenario":
        return cls._build((sigma,), projectors, validate)

    @classmethod
    def multi(cls, states, projectors, validate: bool = True) -> "Scenario":
        states = tuple(states)
        if len(states) != len(tuple(projectors)):
            raise DimensionMismatch("multi-state scenarios need one state per projector")
        return cls._build(states, projectors, validate)

    @classmethod
    def _build(cls, states, projectors, validate: bool) -> "Scenario":
        ps = tuple(qla.as_matrix(p).copy() for p in projectors)
        ss = tuple(qla.as_matrix(s).copy() for s in states)
        if len(ps) < 2:
            raise ParamOutOfRange("a scenario needs at least two projectors")
        d = ps[0].shape[0]
        if any(m.shape != (d, d) for m in ps + ss):
            raise DimensionMismatch("all operators must share one dimension")
        if validate:
            for p in ps:
                qla.ProjectorMatrix(p)
            for s in ss:
                qla.DensityMatrix(s)
        for m in ps + ss:
            m.setflags(write=False)
        return cls(ps, ss)

    @property
    def n(self) -> int:
        return len(self.projectors)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    @property
    def is_shared(self) -> bool:
        return len(self.states) == 1

    def state_stack(self) -> np.ndarray:
        """States as an ``(n, d, d)`` array, repeating a shared state."""
        if self.is_shared:
            return np.broadcast_to(self.states[0], (self.n, self.dim, self.dim))
        return np.stack(self.states)


@dataclass(frozen=True)
class TradeoffStats:
    V: float
    E: float
    delta: float = 0.0
    F: float | None = None


def stats_arrays(projs: np.ndarray, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``V`` and ``E`` for stacks ``projs, states`` of shape ``(..., n, d, d)``.

    ``states`` holds the state fed to each projector; the second measurement
    ``P_j`` in ``E`` acts on the post-measurement state of ``P_i``.
    """
    n = projs.shape[-3]
    v = np.einsum("...iab,...iba->...", projs, states).real / n
    m = projs @ states @ projs
    t = np.einsum("...jab,...iba->...ij", projs, m).real
    diag = np.einsum("...ii->...", t)
    e = (np.sum(t, axis=(-1, -2)) - diag) / (n * (n - 1))
    return v, e


def spread_arrays(states: np.ndarray) -> np.ndarray:
    """Mean pairwise spread ``1/(n(n-1)) sum_{i<j} ||s_i - s_j||_1``."""
    n = states.shape[-3]
    total = np.zeros(states.shape[:-3])
    for i in range(n):
        for j in range(i + 1, n):
            total = total + qla.trace_norm_batch(states[..., i, :, :] - states[..., j, :, :], hermitian=True)
    return total / (n * (n - 1))


def pairwise_trace_distances(states: Sequence) -> np.ndarray:
    """Matrix of trace distances ``1/2 ||s_i - s_j||_1``."""
    ss = [qla.as_matrix(s) for s in states]
    k = len(ss)
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            out[i, j] = out[j, i] = 0.5 * qla.trace_norm(ss[i] - ss[j])
    return out


def tradeoff_stats(s: Scenario) -> TradeoffStats:
    """Measure ``(V, E, delta, F)`` on a scenario.

    ``delta`` follows the n-state normalisation ``1/(n(n-1)) sum_{i<j}``.
    For two states this equals the trace distance ``1/2 ||s_0 - s_1||_1``,
    so the pair form and the n-state form coincide at ``n = 2``.
    """
    projs = np.stack(s.projectors)
    states = s.state_stack()
    v, e = stats_arrays(projs, states)
    if s.is_shared:
        return TradeoffStats(float(v), float(e), 0.0, None)
    delta = float(spread_arrays(states))
    f = qla.fidelity(states[0], states[1]) if s.n == 2 else None
    return TradeoffStats(float(v), float(e), delta, f)


@dataclass(frozen=True)
class EnsembleScenario:
    """A shared state and ``n`` measurements with up to ``S`` accepted outcomes each.

    ``ensembles[i]`` holds mutually orthogonal projectors ``P_i^1..P_i^S``.
    """

    ensembles: tuple[tuple[np.ndarray, ...], ...]
    sigma: np.ndarray

    @property
    def n(self) -> int:
        return len(self.ensembles)

    @property
    def S(self) -> int:
        return max(len(e) for e in self.ensembles)


def ensemble_stats(s: EnsembleScenario) -> TradeoffStats:
    sigma = qla.as_matrix(s.sigma)
    d = sigma.shape[0]
    acc = np.stack([sum((qla.as_matrix(p) for p in ens), np.zeros((d, d), complex)) for ens in s.ensembles])
    post = np.stack(
        [sum((qla.as_matrix(p) @ sigma @ qla.as_matrix(p) for p in ens), np.zeros((d, d), complex)) for ens in s.ensembles]
    )
    v, e = ensemble_arrays(acc, post)
    return TradeoffStats(float(v), float(e))


def ensemble_arrays(acc: np.ndarray, post: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``V, E`` from summed projectors ``Q_i = sum_s P_i^s`` and the
    post-measurement operators ``N_i = sum_s P_i^s sigma P_i^s``.

    Uses ``sum_{s,t} Tr(P_j^t P_i^s sigma P_i^s P_j^t) = Tr(Q_j N_i)``.
    """
    n = acc.shape[-3]
    v = np.einsum("...iaa->...", post).real / n
    t = np.einsum("...jab,...iba->...ij", acc, post).real
    diag = np.einsum("...ii->...", t)
    e = (np.sum(t, axis=(-1, -2)) - diag) / (n * (n - 1))
    return v, e


# --------------------------------------------------------------------------
# bounds


def _check_n(n) -> int:
    if int(n) != n or n < 2:
        raise ParamOutOfRange(f"n must be an integer >= 2, got {n!r}")
    return int(n)


def _unit(name: str, x, slack: float = 1e-9):
    a = np.asarray(x, dtype=float)
    if np.any(np.isnan(a)) or np.any(a < -slack) or np.any(a > 1 + slack):
        raise ParamOutOfRange(f"{name} must lie in [0, 1]")
    return np.clip(a, 0.0, 1.0)


def _ret(x):
    return float(x) if np.ndim(x) == 0 else x


def tight_cmt_bound(n: int, V):
    """``n^2/(n-1)^2 * V * max(0, V - 1/n)^2``; attained for every ``V``."""
    n = _check_n(n)
    v = _unit("V", V)
    return _ret(n * n / (n - 1) ** 2 * v * np.maximum(0.0, v - 1.0 / n) ** 2)


def general_cmt_bound(n: int, S: int, V):
    """Tight bound divided by ``S`` for measurements with ``S`` accepted outcomes."""
    if int(S) != S or S < 1:
        raise ParamOutOfRange(f"S must be a positive integer, got {S!r}")
    return _ret(np.asarray(tight_cmt_bound(n, V)) / S)


def fidelity_cmt_bound(V, F):
    """Two-state bound in terms of the root fidelity ``F`` of the states."""
    v = _unit("V", V)
    f = _unit("F", F)
    inner = (2 * v - 1) * f - 2 * np.sqrt(v * (1 - v)) * np.sqrt(np.maximum(0.0, 1 - f * f))
    return _ret(v * np.maximum(0.0, inner) ** 2)


def td_cmt_bound_pair(V, delta):
    """``4V max(0, V - 1/2)^2 - delta``; may be negative."""
    v = np.asarray(V, dtype=float)
    d = np.asarray(delta, dtype=float)
    return _ret(4 * v * np.maximum(0.0, v - 0.5) ** 2 - d)


def td_cmt_bound_tight(n: int, V, delta):
    """Tight bound minus a ``4n/(n-1) * delta`` penalty; may be negative."""
    n = _check_n(n)
    d = np.asarray(delta, dtype=float)
    return _ret(np.asarray(tight_cmt_bound(n, V)) - 4 * n * d / (n - 1))


def td_cmt_bound(n: int, V, delta):
    """The larger of the two trace-distance bounds."""
    return _ret(np.maximum(td_cmt_bound_pair(V, delta), td_cmt_bound_tight(n, V, delta)))


def qubit_td_bound(V, delta):
    """Sharper trace-distance bound for rank-one projectors on a qubit."""
    v = _unit("V", V)
    d = _unit("delta", delta)
    c = 2 * v - 1
    inner = c * np.sqrt(np.maximum(0.0, 1 - d * d)) - np.sqrt(np.maximum(0.0, 1 - c * c)) * d
    return _ret(v * np.maximum(0.0, inner) ** 2)


def invert_cmt_bound(n: int, cap: float, tol: Tolerances = DEFAULT) -> float:
    """Largest ``V`` in ``[1/n, 1]`` with ``tight_cmt_bound(n, V) <= cap``.

    Plain bisection on the increasing branch of the bound.
    """
    n = _check_n(n)
    if cap < 0:
        raise ParamOutOfRange("cap must be nonnegative")
    lo, hi = 1.0 / n, 1.0
    if cap == 0:
        return lo
    if cap >= tight_cmt_bound(n, 1.0):
        return 1.0
    g = n * n / (n - 1) ** 2
    while hi - lo > tol.bisect:
        mid = 0.5 * (lo + hi)
        if g * mid * (mid - 1.0 / n) ** 2 <= cap:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# earlier bounds on the same quantity, for comparison plots


def unruh_bound(n: int, V):
    v = np.asarray(V, dtype=float)
    return _ret(v * np.maximum(0.0, v * v - 1.0 / n))


def chailloux_leverrier_bound(n: int, V):
    v = np.asarray(V, dtype=float)
    return _ret(np.maximum(0.0, v - 1.0 / n) ** 3 / 64.0)


def shi_bound(V):
    v = np.asarray(V, dtype=float)
    return _ret(2 * np.maximum(0.0, v - 0.5) ** 2)


def convex_profile(n: int, V):
    """``V * max(0, nV - 1)^2``, the convex function behind the game bounds."""
    v = np.asarray(V, dtype=float)
    return _ret(v * np.maximum(0.0, n * v - 1) ** 2)


# --------------------------------------------------------------------------
# extremal constructions


@dataclass(frozen=True)
class ExtremalWitness:
    scenario: Scenario
    target_v: float
    target_f: float | None
    achieved_E: float
    bound_E: float
    stats: TradeoffStats

    def to_json(self) -> dict:
        s = self.scenario
        return {
            "n": s.n,
            "dim": s.dim,
            "target_v": self.target_v,
            "target_f": self.target_f,
            "achieved_V": self.stats.V,
            "achieved_E": self.achieved_E,
            "achieved_F": self.stats.F,
            "bound_E": self.bound_E,
            "gap": self.achieved_E - self.bound_E,
            "projectors": [qla.matrix_to_json(p) for p in s.projectors],
            "states": [qla.matrix_to_json(x) for x in s.states],
        }


def tight_extremal_vectors(n: int, v: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectors ``(phi, phi_1..phi_n)`` of the equality case for ``v > 1/n``.

    The ``phi_i`` have pairwise overlap ``eps = (nv-1)/(n-1)``; ``phi`` is
    their normalised sum, which overlaps each ``phi_i`` with ``sqrt(v)``.
    Each ``phi_i`` is proportional to ``s * (1,...,1) + e_i`` where ``s``
    solves ``(1-eps)(n s^2 + 2 s) = eps``; writing it through ``s`` instead
    of ``t = 1/s`` keeps the root well conditioned as ``eps -> 0``.
    """
    eps = (n * v - 1.0) / (n - 1.0)
    ones = np.ones(n)
    if eps >= 1.0:
        vecs = np.tile(ones / math.sqrt(n), (n, 1))
    else:
        kappa = eps / (1.0 - eps)
        s = kappa / (1.0 + math.sqrt(1.0 + n * kappa))
        vecs = s * np.ones((n, n)) + np.eye(n)
        vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    phi = vecs.sum(axis=0)
    phi = phi / np.linalg.norm(phi)
    return phi.astype(complex), vecs.astype(complex)


def tight_extremal_arrays(n: int, v: float) -> tuple[np.ndarray, list[np.ndarray]]:
    """Shared state and projectors of the equality case, unvalidated."""
    if v > 1.0 / n:
        phi, vecs = tight_extremal_vectors(n, v)
        sigma = np.outer(phi, phi.conj())
        projs = [np.outer(x, x.conj()) for x in vecs]
    else:
        # below 1/n: put weight nv on a vector seen by P_1 only, the rest on
        # a direction no projector sees
        d = n + 1
        sigma = np.zeros((d, d), complex)
        sigma[0, 0] = n * v
        sigma[n, n] = 1.0 - n * v
        projs = []
        for i in range(n):
            p = np.zeros((d, d), complex)
            p[i, i] = 1.0
            projs.append(p)
    return sigma, projs


def construct_tight_extremal(n: int, v: float) -> ExtremalWitness:
    """Shared-state scenario with ``V = v`` meeting the tight bound with equality."""
    n = _check_n(n)
    if not 0.0 <= v <= 1.0:
        raise ParamOutOfRange(f"v must lie in [0, 1], got {v!r}")
    sigma, projs = tight_extremal_arrays(n, v)
    sc = Scenario.shared(sigma, projs)
    st = tradeoff_stats(sc)
    return ExtremalWitness(sc, float(v), None, st.E, tight_cmt_bound(n, v), st)


def fidelity_extremal_vectors(v: float, f: float):
    """States ``psi0, psi1`` and projector vectors ``phi0, phi1`` of the
    two-state equality case, as real arrays.
    """
    alpha = math.acos(math.sqrt(v))
    beta = 0.5 * math.acos(f)
    if 2 * v - 1 > math.sqrt(max(0.0, 1 - f * f)):
        psi0 = np.array([math.cos(beta), math.sin(beta)])
        psi1 = np.array([math.cos(beta), -math.sin(beta)])
        g = alpha + beta
        phi0 = np.array([math.cos(g), math.sin(g)])
        phi1 = np.array([math.cos(g), -math.sin(g)])
    else:
        t = math.cos(alpha) - math.sqrt(2) * math.sin(beta)
        tail = math.sqrt(max(0.0, math.sin(alpha) ** 2 - t * t))
        psi0 = np.array([math.cos(alpha), t, tail])
        psi1 = np.array([t, math.cos(alpha), tail])
        phi0 = np.array([1.0, 0.0, 0.0])
        phi1 = np.array([0.0, 1.0, 0.0])
    return psi0, psi1, phi0, phi1


def construct_fidelity_extremal(v: float, f: float) -> ExtremalWitness:
    """Two-state scenario with ``V = v``, ``F = f`` meeting the fidelity bound."""
    if not (0.0 <= v <= 1.0 and 0.0 <= f <= 1.0):
        raise ParamOutOfRange("v and f must lie in [0, 1]")
    vecs = fidelity_extremal_vectors(v, f)
    psi0, psi1, phi0, phi1 = (np.asarray(x, complex) for x in vecs)
    states = [np.outer(psi0, psi0), np.outer(psi1, psi1)]
    projs = [np.outer(phi0, phi0), np.outer(phi1, phi1)]
    sc = Scenario.multi(states, projs)
    st = tradeoff_stats(sc)
    return ExtremalWitness(sc, float(v), float(f), st.E, fidelity_cmt_bound(v, f), st)


# --------------------------------------------------------------------------
# purification estimate and average-state shift


def purified_lower_estimate(s: Scenario, tol: Tolerances = DEFAULT) -> float:
    """Lower estimate of ``E`` from a purification ``|phi>`` of the shared state.

    With ``|phi_i>`` the normalised ``(P_i x I)|phi>``, returns
    ``1/(n(n-1)) sum_{i != j} |<phi|phi_i>|^2 |<phi_i|phi_j>|^2``. Terms whose
    projected vector vanishes contribute zero.
    """
    if not s.is_shared:
        raise ParamOutOfRange("purified estimate needs a shared-state scenario")
    phi = np.asarray(qla.purify(s.states[0], tol))
    d = s.dim
    psi = phi.reshape(d, d)
    kets = []
    for p in s.projectors:
        w = (p @ psi).reshape(d * d)
        nrm = np.linalg.norm(w)
        kets.append(w / nrm if nrm ** 2 > tol.clamp else None)
    n = s.n
    total = 0.0
    for i in range(n):
        if kets[i] is None:
            continue
        ov = abs(np.vdot(phi, kets[i])) ** 2
        for j in range(n):
            if j != i and kets[j] is not None:
                total += ov * abs(np.vdot(kets[i], kets[j])) ** 2
    return total / (n * (n - 1))


@dataclass(frozen=True)
class AverageShift:
    dV: float
    dE: float
    limit: float  # (n-1)/n * delta


def average_state_perturbation(s: Scenario) -> AverageShift:
    """Shift in ``V`` and ``E`` when every state is replaced by their average."""
    if s.is_shared:
        return AverageShift(0.0, 0.0, 0.0)
    st = tradeoff_stats(s)
    avg = sum(s.states) / s.n
    st_avg = tradeoff_stats(Scenario.shared(avg, s.projectors, validate=False))
    return AverageShift(st_avg.V - st.V, st_avg.E - st.E, (s.n - 1) * st.delta / s.n)
