"""Dense complex linear algebra for small quantum states and projectors.

Everything here works on plain ``numpy`` arrays. The eigensolver is a
batched cyclic Jacobi iteration, so a stack of matrices with shape
``(..., d, d)`` is diagonalised in one call; the stress harness relies on
that to keep ten thousand trials cheap.

The three value types (:class:`DensityMatrix`, :class:`ProjectorMatrix`,
:class:`PureVector`) validate their invariants on construction and expose
``__array__`` so they can be passed anywhere an array is accepted.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import (
    DimensionMismatch,
    InvalidProjector,
    InvalidState,
    NoConvergence,
    NonHermitian,
    NotAResolution,
    RankOutOfRange,
)

__all__ = [
    "DensityMatrix",
    "ProjectorMatrix",
    "PureVector",
    "SpectralDecomposition",
    "rng_stream",
    "hermitian_eig",
    "eigh_batch",
    "eigvalsh_batch",
    "trace_norm",
    "trace_norm_batch",
    "fidelity",
    "fidelity_batch",
    "purify",
    "partial_trace",
    "sample",
    "pinch",
    "orthonormalize",
    "matrix_to_json",
    "matrix_from_json",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def as_matrix(x) -> np.ndarray:
    """Return ``x`` as a complex ndarray (unwrapping the value types)."""
    return np.asarray(x, dtype=complex)


def _herm_residual(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().swapaxes(-1, -2)), initial=0.0))


# --------------------------------------------------------------------------
# value types


@dataclass(frozen=True)
class PureVector:
    amps: np.ndarray
    tol: Tolerances = field(default=DEFAULT, repr=False, compare=False)

    def __post_init__(self):
        a = _frozen(np.ravel(self.amps))
        if a.size == 0 or not np.all(np.isfinite(a)):
            raise InvalidState("pure vector must be non-empty and finite")
        if abs(np.linalg.norm(a) - 1.0) > self.tol.unit_norm:
            raise InvalidState(f"vector norm {np.linalg.norm(a)!r} is not 1")
        object.__setattr__(self, "amps", a)

    @property
    def dim(self) -> int:
        return self.amps.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amps, dtype=dtype)

    def projector(self) -> np.ndarray:
        return np.outer(self.amps, self.amps.conj())


@dataclass(frozen=True)
class DensityMatrix:
    mat: np.ndarray
    tol: Tolerances = field(default=DEFAULT, repr=False, compare=False)

    def __post_init__(self):
        m = _frozen(self.mat)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise DimensionMismatch(f"density matrix must be square, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidState("non-finite entries")
        if _herm_residual(m) > self.tol.herm:
            raise InvalidState("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > self.tol.trace:
            raise InvalidState(f"trace {np.trace(m).real!r} is not 1")
        lo = eigvalsh_batch(m)[-1]
        if lo < -self.tol.psd:
            raise InvalidState(f"negative eigenvalue {lo!r}")
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.mat, dtype=dtype)


@dataclass(frozen=True)
class ProjectorMatrix:
    mat: np.ndarray
    rank: int = -1
    tol: Tolerances = field(default=DEFAULT, repr=False, compare=False)

    def __post_init__(self):
        m = _frozen(self.mat)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"projector must be square, got {m.shape}")
        if _herm_residual(m) > self.tol.herm:
            raise InvalidProjector("projector is not Hermitian")
        if np.max(np.abs(m @ m - m), initial=0.0) > self.tol.idempotent:
            raise InvalidProjector("projector is not idempotent")
        tr = np.trace(m).real
        rank = int(round(tr)) if self.rank < 0 else self.rank
        if abs(tr - rank) > self.tol.proj_trace:
            raise InvalidProjector(f"trace {tr!r} does not match rank {rank}")
        object.__setattr__(self, "mat", m)
        object.__setattr__(self, "rank", rank)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.mat, dtype=dtype)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in descending order and matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues[..., None, :]) @ u.conj().swapaxes(-1, -2)


def rng_stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator derived from a master seed and integer keys.

    Streams for different ``keys`` are statistically independent, and the
    same ``(seed, *keys)`` always reproduces the same stream.
    """
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, keys)])


# --------------------------------------------------------------------------
# eigensolver


def _round_robin(d: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint index pairs covering every pair once per sweep."""
    m = d + (d % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for k in range(m // 2):
            a, b = players[k], players[m - 1 - k]
            if a < d and b < d:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        players = [players[0], players[-1], *players[1:-1]]
    return rounds


def _jacobi(a: np.ndarray, tol: Tolerances) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi on a stack ``(B, d, d)`` of Hermitian matrices."""
    a = np.array(a, dtype=complex, copy=True)
    nb, d, _ = a.shape
    v = np.broadcast_to(np.eye(d, dtype=complex), a.shape).copy()
    if d == 1:
        return a[:, :, 0].real.copy(), v
    scale = np.sqrt(np.sum(np.abs(a) ** 2, axis=(1, 2)))
    target = tol.jacobi_rel * scale
    offmask = ~np.eye(d, dtype=bool)
    rounds = _round_robin(d)

    def off_norm():
        return np.sqrt(np.sum(np.abs(a[:, offmask]) ** 2, axis=1))

    for _ in range(tol.jacobi_max_sweeps):
        if np.all(off_norm() <= target):
            break
        for p, q in rounds:
            apq = a[:, p, q]
            r = np.abs(apq)
            live = r > 0.0
            r_safe = np.where(live, r, 1.0)
            phase = np.where(live, apq / r_safe, 1.0)  # e^{i phi}
            app = a[:, p, p].real
            aqq = a[:, q, q].real
            zeta = (aqq - app) / (2.0 * r_safe)
            sgn = np.where(zeta >= 0.0, 1.0, -1.0)
            t = sgn / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            t = np.where(live, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            em = phase.conj()  # e^{-i phi}
            # columns: A <- A J
            c3, s3, em3 = c[:, None, :], s[:, None, :], em[:, None, :]
            ap, aq = a[:, :, p], a[:, :, q]
            a[:, :, p] = c3 * ap - s3 * em3 * aq
            a[:, :, q] = s3 * ap + c3 * em3 * aq
            vp, vq = v[:, :, p], v[:, :, q]
            v[:, :, p] = c3 * vp - s3 * em3 * vq
            v[:, :, q] = s3 * vp + c3 * em3 * vq
            # rows: A <- J^H A
            c2, s2, ep2 = c[:, :, None], s[:, :, None], phase[:, :, None]
            rp, rq = a[:, p, :], a[:, q, :]
            a[:, p, :] = c2 * rp - s2 * ep2 * rq
            a[:, q, :] = s2 * rp + c2 * ep2 * rq
    else:
        if not np.all(off_norm() <= target):
            raise NoConvergence(
                f"Jacobi did not converge in {tol.jacobi_max_sweeps} sweeps"
            )
    w = np.real(np.diagonal(a, axis1=1, axis2=2)).copy()
    order = np.argsort(-w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    return w, v


def _prepare_hermitian(m, tol: Tolerances) -> np.ndarray:
    a = as_matrix(m)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DimensionMismatch(f"expected square matrices, got shape {a.shape}")
    if _herm_residual(a) > tol.eig_input_herm:
        raise NonHermitian("matrix is not Hermitian within tolerance")
    return 0.5 * (a + a.conj().swapaxes(-1, -2))


def eigh_batch(m, tol: Tolerances = DEFAULT) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and eigenvectors of a stack of Hermitian matrices."""
    a = _prepare_hermitian(m, tol)
    lead = a.shape[:-2]
    d = a.shape[-1]
    w, v = _jacobi(a.reshape(-1, d, d), tol)
    return w.reshape(*lead, d), v.reshape(*lead, d, d)


def eigvalsh_batch(m, tol: Tolerances = DEFAULT) -> np.ndarray:
    return eigh_batch(m, tol)[0]


def hermitian_eig(m, tol: Tolerances = DEFAULT) -> SpectralDecomposition:
    a = as_matrix(m)
    if a.ndim != 2:
        raise DimensionMismatch("hermitian_eig expects a single matrix")
    w, v = eigh_batch(a, tol)
    return SpectralDecomposition(w, v)


# --------------------------------------------------------------------------
# norms and distances


def _singular_sum(x: np.ndarray, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Sum of singular values of a stack of square matrices.

    Takes eigenvectors ``u_i`` of ``X X^H`` and returns ``sum_i ||X^H u_i||``.
    Reading the singular values off as vector norms, instead of square
    roots of eigenvalues of ``X X^H``, keeps near-zero ones at rounding
    level rather than at its square root.
    """
    gram = x @ x.conj().swapaxes(-1, -2)
    _, u = eigh_batch(gram, tol)
    return np.sum(np.linalg.norm(x.conj().swapaxes(-1, -2) @ u, axis=-2), axis=-1)


def trace_norm_batch(m, hermitian: bool | None = None) -> np.ndarray:
    a = as_matrix(m)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DimensionMismatch(f"trace norm needs square matrices, got {a.shape}")
    if hermitian is None:
        hermitian = _herm_residual(a) <= DEFAULT.eig_input_herm
    if hermitian:
        return np.sum(np.abs(eigvalsh_batch(a)), axis=-1)
    return _singular_sum(a)


def trace_norm(m) -> float:
    """Sum of singular values of a square matrix."""
    return float(trace_norm_batch(m))


def _psd_sqrt(w: np.ndarray, v: np.ndarray, cut: float) -> np.ndarray:
    r = np.sqrt(np.where(w > cut, w, 0.0))
    return (v * r[..., None, :]) @ v.conj().swapaxes(-1, -2)


def fidelity_batch(a, b, tol: Tolerances = DEFAULT) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"fidelity of shapes {a.shape} and {b.shape}")
    # eigenvalues below the clamp are rounding noise; their square roots
    # (~1e-8) would otherwise leak into the result
    sa = _psd_sqrt(*eigh_batch(a, tol), tol.clamp)
    sb = _psd_sqrt(*eigh_batch(b, tol), tol.clamp)
    f = _singular_sum(sa @ sb, tol)
    return np.clip(f, 0.0, 1.0)


def fidelity(a, b, tol: Tolerances = DEFAULT) -> float:
    """Root fidelity ``||sqrt(a) sqrt(b)||_1`` of two density matrices.

    Computed as the trace norm of ``sqrt(a) sqrt(b)``, which has the same
    value as ``Tr sqrt(sqrt(a) b sqrt(a))`` but keeps small singular values
    accurate.
    """
    return float(fidelity_batch(a, b, tol))


# --------------------------------------------------------------------------
# purification and partial trace


def purify(rho, tol: Tolerances = DEFAULT) -> PureVector:
    """Purify ``rho`` into ``C^d (system) x C^d (environment)``.

    The vector is ``sum_i sqrt(lambda_i) |e_i> (x) |i>``, so tracing out the
    second factor gives back ``rho``.
    """
    sd = hermitian_eig(rho, tol)
    lam = np.clip(sd.eigenvalues, 0.0, None)
    d = lam.shape[0]
    psi = (sd.eigenvectors * np.sqrt(lam)[None, :]).reshape(d * d)
    psi = psi / np.linalg.norm(psi)
    return PureVector(psi, tol)


def partial_trace(v_or_m, subsystem_dims: Sequence[int], keep_index) -> np.ndarray:
    """Reduced operator on the subsystems listed in ``keep_index``.

    ``v_or_m`` may be a state vector or a square operator on the tensor
    product of ``subsystem_dims``.
    """
    x = as_matrix(v_or_m)
    dims = [int(k) for k in subsystem_dims]
    total = int(np.prod(dims))
    keep = [keep_index] if np.isscalar(keep_index) else list(keep_index)
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionMismatch(f"keep index {keep_index!r} out of range")
    if x.ndim == 1:
        if x.shape[0] != total:
            raise DimensionMismatch("vector length does not match subsystem dims")
        x = np.outer(x, x.conj())
    if x.shape != (total, total):
        raise DimensionMismatch("operator shape does not match subsystem dims")
    ns = len(dims)
    t = x.reshape(dims + dims)
    for k in sorted(set(range(ns)) - set(keep), reverse=True):
        cur = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + cur)
    kd = int(np.prod([dims[k] for k in sorted(keep)]))
    out = t.reshape(kd, kd)
    order = sorted(keep)
    if order != keep:
        # reorder kept factors into the requested order
        sub = [dims[k] for k in order]
        perm = [order.index(k) for k in keep]
        t2 = out.reshape(sub + sub)
        out = t2.transpose(perm + [p + len(sub) for p in perm]).reshape(kd, kd)
    return out


# --------------------------------------------------------------------------
# sampling


def orthonormalize(cols: np.ndarray) -> np.ndarray:
    """Gram-Schmidt with a second re-orthogonalisation pass per column.

    Each column is projected against the finished ones twice; the second
    pass restores orthogonality lost to cancellation when columns are
    nearly dependent.
    """
    q = np.array(cols, dtype=complex, copy=True)
    k = q.shape[1]
    for j in range(k):
        v = q[:, j]
        if j:
            done = q[:, :j]
            for _ in range(2):
                v = v - done @ (done.conj().T @ v)
        nrm = np.linalg.norm(v)
        if nrm == 0.0:
            raise RankOutOfRange("columns are linearly dependent")
        q[:, j] = v / nrm
    return q


def _ginibre(rng: np.random.Generator, *shape: int) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    g = _ginibre(rng, d)
    return g / np.linalg.norm(g)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    g = _ginibre(rng, d, d if rank is None else rank)
    m = g @ g.conj().T
    m = 0.5 * (m + m.conj().T)
    return m / np.trace(m).real


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    return orthonormalize(_ginibre(rng, d, d))


def random_projector(d: int, r: int, rng: np.random.Generator) -> np.ndarray:
    if not 0 <= r <= d:
        raise RankOutOfRange(f"rank {r} outside [0, {d}]")
    if r == 0:
        return np.zeros((d, d), dtype=complex)
    u = orthonormalize(_ginibre(rng, d, r))
    return u @ u.conj().T


def sample(kind: str, dim: int, rng: np.random.Generator, rank: int | None = None):
    """Draw a random object of the requested ``kind``.

    ``kind`` is one of ``"pure"``, ``"density"``, ``"projector"`` (needs
    ``rank``) or ``"unitary"``. The result is fully determined by the state
    of ``rng``.
    """
    if dim < 1:
        raise DimensionMismatch("dimension must be at least 1")
    if kind == "pure":
        return PureVector(random_pure(dim, rng))
    if kind == "density":
        return DensityMatrix(random_density(dim, rng))
    if kind == "projector":
        if rank is None or not 1 <= rank <= dim:
            raise RankOutOfRange(f"projector rank must lie in [1, {dim}], got {rank}")
        return ProjectorMatrix(random_projector(dim, rank, rng), rank)
    if kind == "unitary":
        return random_unitary(dim, rng)
    raise ValueError(f"unknown sample kind {kind!r}")


# --------------------------------------------------------------------------
# pinching


def pinch(rho, blocks, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Dephase ``rho`` across a resolution of the identity."""
    r = as_matrix(rho)
    projs = [as_matrix(b) for b in blocks]
    d = r.shape[0]
    if any(p.shape != (d, d) for p in projs):
        raise DimensionMismatch("block projectors must match the state dimension")
    total = sum(projs, np.zeros((d, d), dtype=complex))
    if np.max(np.abs(total - np.eye(d))) > tol.resolution:
        raise NotAResolution("block projectors do not sum to the identity")
    for i in range(len(projs)):
        for j in range(i + 1, len(projs)):
            if np.max(np.abs(projs[i] @ projs[j])) > tol.resolution:
                raise NotAResolution("block projectors are not mutually orthogonal")
    return sum((p @ r @ p for p in projs), np.zeros((d, d), dtype=complex))


# --------------------------------------------------------------------------
# serialisation


def matrix_to_json(m) -> dict:
    a = as_matrix(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch("only square matrices are serialised")
    return {
        "dim": int(a.shape[0]),
        "entries": [[float(z.real), float(z.imag)] for z in a.ravel()],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    d = int(obj["dim"])
    entries = obj["entries"]
    if len(entries) != d * d:
        raise DimensionMismatch(f"expected {d * d} entries, got {len(entries)}")
    flat = np.array([complex(re, im) for re, im in entries], dtype=complex)
    if not np.all(np.isfinite(flat)):
        raise InvalidState("non-finite matrix entries")
    return flat.reshape(d, d)
