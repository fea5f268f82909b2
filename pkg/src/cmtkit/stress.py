"""Randomized verification of the tradeoff bounds.

Each trial draws one scenario from its own generator stream, seeded from
``(seed, trial index)``, so any single trial can be replayed on its own and
the outcome does not depend on evaluation order. Trials rotate through
three generators:

``random``
    Haar-random projectors of random rank and random mixed states.
``near_commuting``
    Projectors diagonal in a shared random basis, each tilted away from it
    by a unitary of angle at most 0.1 rad.
``near_extremal``
    An equality-case construction jiggled by noise of size ``1e-3``, where
    violations would show up first.

Scenarios are grouped by dimension and evaluated as stacked arrays.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import cmt, qla
from .errors import ParamOutOfRange, UnknownTheoremId
from .report import BoundReport

THEOREMS = ("tight", "general", "fidelity", "td_pair", "td_tight", "qubit_td")
GENERATORS = ("random", "near_commuting", "near_extremal")
TILT_MAX = 0.1
NOISE = 1e-3


@dataclass(frozen=True)
class StressConfig:
    theorem: str
    n: int = 2
    S: int = 1
    dims: tuple[int, ...] = (2, 3, 4, 5, 6, 7, 8)
    samples: int = 10000
    seed: int = 42
    tol: float = 1e-9
    force_equal_states: bool = False

    def params(self) -> dict:
        out = {"n": self.n, "S": self.S, "dims": list(self.dims), "tol": self.tol}
        if self.force_equal_states:
            out["force_equal_states"] = True
        return out


@dataclass
class Margins:
    """Per-trial measurements from one stress run."""

    V: np.ndarray
    E: np.ndarray
    delta: np.ndarray
    F: np.ndarray
    bound: np.ndarray
    generator: np.ndarray
    dim: np.ndarray = field(default_factory=lambda: np.zeros(0, int))

    @property
    def margin(self) -> np.ndarray:
        return self.E - self.bound


# --------------------------------------------------------------------------
# building blocks


def _cayley(h: np.ndarray, theta: float) -> np.ndarray:
    """Unitary ``(I - iA)(I + iA)^-1`` with ``A = theta/2 * h``.

    For ``||h|| <= 1`` every rotation angle is at most ``theta``.
    """
    d = h.shape[0]
    a = 0.5 * theta * h
    eye = np.eye(d)
    return np.linalg.solve(eye + 1j * a, eye - 1j * a)


def _herm_unit(d: int, rng: np.random.Generator) -> np.ndarray:
    g = qla._ginibre(rng, d, d)
    h = g + g.conj().T
    return h / np.linalg.norm(h)


def _small_unitary(d: int, rng: np.random.Generator, scale: float) -> np.ndarray:
    return _cayley(_herm_unit(d, rng), scale)


def _tilted_projector(w: np.ndarray, rank: int, rng: np.random.Generator) -> np.ndarray:
    d = w.shape[0]
    u = w @ _small_unitary(d, rng, rng.uniform(0.0, TILT_MAX))
    cols = u[:, rng.permutation(d)[:rank]]
    return cols @ cols.conj().T


def _diag_state(w: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    d = w.shape[0]
    p = rng.dirichlet(np.full(d, 0.5))
    return (w * p) @ w.conj().T


def _jiggle_state(sigma: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    d = sigma.shape[0]
    u = _small_unitary(d, rng, NOISE)
    mix = rng.uniform(0.0, NOISE)
    out = (1 - mix) * (u @ sigma @ u.conj().T) + mix * qla.random_density(d, rng)
    return 0.5 * (out + out.conj().T)


def _jiggle_projector(p: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = _small_unitary(p.shape[0], rng, NOISE)
    out = u @ p @ u.conj().T
    return 0.5 * (out + out.conj().T)


def _random_states(n: int, d: int, rng: np.random.Generator) -> list[np.ndarray]:
    base = qla.random_density(d, rng, int(rng.integers(1, d + 1)))
    out = []
    for _ in range(n):
        lam = rng.uniform()
        other = qla.random_density(d, rng, int(rng.integers(1, d + 1)))
        out.append((1 - lam) * base + lam * other)
    return out


# --------------------------------------------------------------------------
# per-theorem scenario generators; each returns (projs, states) stacks of
# shape (n, d, d), or (summed projectors, post-measurement ops) for "general"


def _gen_projective(cfg: StressConfig, kind: str, rng: np.random.Generator, shared: bool):
    n = cfg.n
    if kind == "near_extremal":
        v = rng.uniform()
        sigma, projs = cmt.tight_extremal_arrays(n, v)
        projs = [_jiggle_projector(p, rng) for p in projs]
        states = [_jiggle_state(sigma, rng)] * n if shared else [_jiggle_state(sigma, rng) for _ in range(n)]
        return np.stack(projs), np.stack(states)
    d = int(rng.choice(cfg.dims))
    if kind == "random":
        projs = [qla.random_projector(d, int(rng.integers(1, d + 1)), rng) for _ in range(n)]
        if shared:
            states = [qla.random_density(d, rng, int(rng.integers(1, d + 1)))] * n
        else:
            states = _random_states(n, d, rng)
    else:
        w = qla.random_unitary(d, rng)
        projs = [_tilted_projector(w, int(rng.integers(1, d + 1)), rng) for _ in range(n)]
        base = _diag_state(w, rng)
        if shared:
            states = [base] * n
        else:
            states = []
            for _ in range(n):
                lam = rng.uniform()
                wi = w @ _small_unitary(d, rng, rng.uniform(0.0, TILT_MAX))
                states.append((1 - lam) * base + lam * _diag_state(wi, rng))
    return np.stack(projs), np.stack(states)


def _composition(k: int, parts: int, rng: np.random.Generator) -> list[int]:
    cuts = sorted(rng.choice(np.arange(1, k), size=parts - 1, replace=False)) if parts > 1 else []
    edges = [0, *cuts, k]
    return [int(edges[i + 1] - edges[i]) for i in range(parts)]


def _gen_ensemble(cfg: StressConfig, kind: str, rng: np.random.Generator):
    n, S = cfg.n, cfg.S
    if kind == "near_extremal":
        # S orthogonal copies of the equality case, equally weighted
        v = rng.uniform()
        sig0, projs0 = cmt.tight_extremal_arrays(n, v)
        D = sig0.shape[0]
        d = D * S
        sigma = np.kron(np.eye(S) / S, sig0)
        sigma = _jiggle_state(sigma, rng)
        acc, post = [], []
        for i in range(n):
            u = _small_unitary(d, rng, NOISE)
            outs = []
            for s in range(S):
                e = np.zeros((S, S))
                e[s, s] = 1.0
                outs.append(u @ np.kron(e, projs0[i]) @ u.conj().T)
            acc.append(sum(outs))
            post.append(sum(p @ sigma @ p for p in outs))
        return np.stack(acc), np.stack(post)
    dims = [x for x in cfg.dims if x >= S] or [S]
    d = int(rng.choice(dims))
    sigma = qla.random_density(d, rng, int(rng.integers(1, d + 1)))
    w = qla.random_unitary(d, rng)
    acc, post = [], []
    for _ in range(n):
        if kind == "random":
            u = qla.random_unitary(d, rng)
        else:
            u = w @ _small_unitary(d, rng, rng.uniform(0.0, TILT_MAX))
        k = int(rng.integers(S, d + 1))
        sizes = _composition(k, S, rng)
        order = rng.permutation(d)
        outs, start = [], 0
        for sz in sizes:
            cols = u[:, order[start:start + sz]]
            outs.append(cols @ cols.conj().T)
            start += sz
        acc.append(sum(outs))
        post.append(sum(p @ sigma @ p for p in outs))
    return np.stack(acc), np.stack(post)


def _gen_pair(cfg: StressConfig, kind: str, rng: np.random.Generator, qubit: bool):
    if kind == "near_extremal":
        f = rng.uniform()
        if qubit:
            # stay in the two-dimensional branch of the construction
            lo = 0.5 * (1 + math.sqrt(1 - f * f))
            v = rng.uniform(lo, 1.0)
        else:
            v = rng.uniform()
        psi0, psi1, phi0, phi1 = (np.asarray(x, complex) for x in cmt.fidelity_extremal_vectors(v, f))
        states = [_jiggle_state(np.outer(x, x), rng) for x in (psi0, psi1)]
        projs = [_jiggle_projector(np.outer(x, x), rng) for x in (phi0, phi1)]
        return np.stack(projs), np.stack(states)
    d = 2 if qubit else int(rng.choice(cfg.dims))
    if kind == "random":
        projs = [qla.random_projector(d, 1 if qubit else int(rng.integers(1, d + 1)), rng) for _ in range(2)]
        states = _random_states(2, d, rng)
    else:
        w = qla.random_unitary(d, rng)
        projs = [_tilted_projector(w, 1 if qubit else int(rng.integers(1, d + 1)), rng) for _ in range(2)]
        states = [_diag_state(w @ _small_unitary(d, rng, rng.uniform(0.0, TILT_MAX)), rng) for _ in range(2)]
    return np.stack(projs), np.stack(states)


def _draw(cfg: StressConfig, trial: int):
    rng = qla.rng_stream(cfg.seed, trial)
    kind = GENERATORS[trial % len(GENERATORS)]
    th = cfg.theorem
    if th == "tight":
        return _gen_projective(cfg, kind, rng, shared=True)
    if th == "general":
        return _gen_ensemble(cfg, kind, rng)
    if th in ("td_pair", "td_tight"):
        projs, states = _gen_projective(cfg, kind, rng, shared=False)
    else:
        projs, states = _gen_pair(cfg, kind, rng, qubit=(th == "qubit_td"))
    if cfg.force_equal_states:
        states = np.broadcast_to(states[0], states.shape).copy()
    return projs, states


# --------------------------------------------------------------------------
# driver


def _validate(cfg: StressConfig) -> None:
    if cfg.theorem not in THEOREMS:
        raise UnknownTheoremId(f"unknown theorem id {cfg.theorem!r}; choose from {', '.join(THEOREMS)}")
    if cfg.samples < 1:
        raise ParamOutOfRange("samples must be at least 1")
    if cfg.n < 2:
        raise ParamOutOfRange("n must be at least 2")
    if cfg.S < 1:
        raise ParamOutOfRange("S must be at least 1")
    if not cfg.dims or min(cfg.dims) < 1:
        raise ParamOutOfRange("dims must be positive")
    if cfg.theorem in ("fidelity", "qubit_td") and cfg.n != 2:
        raise ParamOutOfRange(f"theorem {cfg.theorem!r} is a two-state statement; n must be 2")
    if cfg.force_equal_states and cfg.theorem not in ("td_pair", "td_tight"):
        raise ParamOutOfRange("force_equal_states applies to the trace-distance suites only")


def stress_margins(cfg: StressConfig) -> Margins:
    """Run the trials of ``cfg`` and return the per-trial measurements."""
    _validate(cfg)
    groups: dict[int, list[int]] = defaultdict(list)
    drawn = []
    for t in range(cfg.samples):
        a, b = _draw(cfg, t)
        drawn.append((a, b))
        groups[a.shape[-1]].append(t)

    N = cfg.samples
    V, E = np.zeros(N), np.zeros(N)
    delta, F = np.zeros(N), np.full(N, np.nan)
    dim = np.zeros(N, int)
    for d, idx in groups.items():
        A = np.stack([drawn[t][0] for t in idx])
        B = np.stack([drawn[t][1] for t in idx])
        if cfg.theorem == "general":
            v, e = cmt.ensemble_arrays(A, B)
        else:
            v, e = cmt.stats_arrays(A, B)
            if cfg.theorem not in ("tight",):
                delta[idx] = cmt.spread_arrays(B)
            if cfg.theorem == "fidelity":
                F[idx] = qla.fidelity_batch(B[:, 0], B[:, 1])
        V[idx], E[idx] = v, e
        dim[idx] = d

    V = np.clip(V, 0.0, 1.0)
    th = cfg.theorem
    if th == "tight":
        bound = cmt.tight_cmt_bound(cfg.n, V)
    elif th == "general":
        bound = cmt.general_cmt_bound(cfg.n, cfg.S, V)
    elif th == "fidelity":
        bound = cmt.fidelity_cmt_bound(V, F)
    elif th == "td_pair":
        bound = cmt.td_cmt_bound_pair(V, delta)
    elif th == "td_tight":
        bound = cmt.td_cmt_bound_tight(cfg.n, V, delta)
    else:
        bound = cmt.qubit_td_bound(V, np.clip(delta, 0.0, 1.0))
    gen = np.arange(N) % len(GENERATORS)
    return Margins(V, E, delta, F, np.asarray(bound, float), gen, dim)


def stress_verify(cfg: StressConfig) -> BoundReport:
    """Sample ``cfg.samples`` scenarios and count bound violations.

    A violation is a trial with ``E - bound < -cfg.tol``.
    """
    m = stress_margins(cfg)
    margin = m.margin
    worst = int(np.argmin(margin))
    by_gen = {}
    for k, name in enumerate(GENERATORS):
        sel = m.generator == k
        if np.any(sel):
            by_gen[name] = {
                "samples": int(sel.sum()),
                "min_margin": float(margin[sel].min()),
                "violations": int(np.sum(margin[sel] < -cfg.tol)),
            }
    return BoundReport(
        theorem=cfg.theorem,
        params=cfg.params(),
        samples=cfg.samples,
        min_margin=float(margin[worst]),
        violations=int(np.sum(margin < -cfg.tol)),
        seed=cfg.seed,
        worst_trial=worst,
        by_generator=by_gen,
    )


def replay_trial(cfg: StressConfig, trial: int):
    """Regenerate the arrays of a single trial, e.g. the reported worst one."""
    _validate(cfg)
    return _draw(cfg, trial)


def acceptance_suites(samples: int = 10000, seed: int = 42, dims=(2, 3, 4, 5, 6, 7, 8)) -> list[StressConfig]:
    """The standard battery: every bound family at its default sizes."""
    dims = tuple(dims)
    out = [StressConfig("tight", n=n, dims=dims, samples=samples, seed=seed) for n in (2, 3, 4)]
    out += [StressConfig("general", n=2, S=S, dims=dims, samples=samples, seed=seed) for S in (1, 2, 3)]
    out.append(StressConfig("fidelity", n=2, dims=dims, samples=samples, seed=seed))
    out += [StressConfig("td_pair", n=n, dims=dims, samples=samples, seed=seed) for n in (2, 3)]
    out += [StressConfig("td_tight", n=n, dims=dims, samples=samples, seed=seed) for n in (2, 3)]
    return out
