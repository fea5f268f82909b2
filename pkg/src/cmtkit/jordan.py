"""Geometry of two projectors.

Any two projectors ``P0, P1`` split the space into one- and two-dimensional
blocks that both leave invariant (the canonical principal-angle
decomposition). On a two-dimensional block each projector is rank one, so
everything reduces to Bloch vectors on a qubit. This module builds the
decomposition and the reductions used to push a two-state tradeoff
question down to single blocks:

1. pinch the states onto the blocks,
2. pad one-dimensional blocks to two dimensions,
3. symmetrize the two states block by block, equalizing the block traces
   without changing ``V`` or ``E`` and without increasing their distance,
4. read off per-block ``(V_j, E_j, delta_j, p_j)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import cmt, qla
from .config import DEFAULT, Tolerances
from .errors import AntipodalAxes, DecompositionFailure, DimensionMismatch, NotPSD

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class JordanBlock:
    kind: str  # "one_dim" or "two_dim"
    basis: np.ndarray  # d x k, orthonormal columns
    p0: np.ndarray  # k x k restriction of P0
    p1: np.ndarray  # k x k restriction of P1
    principal_angle: float

    @property
    def size(self) -> int:
        return self.basis.shape[1]

    @property
    def p0_rank(self) -> int:
        return int(round(np.trace(self.p0).real))

    @property
    def p1_rank(self) -> int:
        return int(round(np.trace(self.p1).real))

    def to_json(self, weight: float | None = None) -> dict:
        return {
            "kind": self.kind,
            "principal_angle": self.principal_angle,
            "p0_rank": self.p0_rank,
            "p1_rank": self.p1_rank,
            "weight": weight,
        }


def _one_dim(vec: np.ndarray, a: float, b: float) -> JordanBlock:
    angle = 0.0 if a == b else math.pi / 2
    return JordanBlock("one_dim", vec.reshape(-1, 1), np.array([[a]], complex), np.array([[b]], complex), angle)


def jordan_decompose(P0, P1, tol: Tolerances = DEFAULT) -> list[JordanBlock]:
    """Split the space into blocks invariant under both projectors.

    Eigenvectors ``u`` of ``P0 P1 P0`` on the range of ``P0`` with
    eigenvalue ``c^2`` strictly inside ``(0, 1)`` pair up with
    ``(P1 u - c^2 u)/(c s)`` from the kernel of ``P0`` to form two-dimensional
    blocks; eigenvalues at 0 or 1 give one-dimensional blocks. What is left
    of the kernel of ``P0`` is invariant under ``P1`` and splits along its
    eigenvectors.
    """
    P0 = qla.as_matrix(P0)
    P1 = qla.as_matrix(P1)
    if P0.shape != P1.shape or P0.ndim != 2:
        raise DimensionMismatch("projectors must be square and of equal dimension")
    d = P0.shape[0]
    cut = tol.jordan_classify

    w0, u0 = qla.eigh_batch(P0, tol)
    rng0 = u0[:, w0 > 0.5]
    ker0 = u0[:, w0 <= 0.5]

    blocks: list[JordanBlock] = []
    partners = []
    if rng0.shape[1]:
        c2, w = qla.eigh_batch(rng0.conj().T @ P1 @ rng0, tol)
        for k in range(len(c2)):
            u = rng0 @ w[:, k]
            lam = float(c2[k])
            if lam >= 1 - cut:
                blocks.append(_one_dim(u, 1.0, 1.0))
            elif lam <= cut:
                blocks.append(_one_dim(u, 1.0, 0.0))
            else:
                x = P1 @ u - lam * u
                x = x - rng0 @ (rng0.conj().T @ x)  # lies in ker P0 up to rounding
                x /= np.linalg.norm(x)
                c = math.sqrt(lam)
                s = math.sqrt(1 - lam)
                basis = np.stack([u, x], axis=1)
                p0 = np.array([[1, 0], [0, 0]], complex)
                p1 = np.array([[c * c, c * s], [c * s, s * s]], complex)
                blocks.append(JordanBlock("two_dim", basis, p0, p1, math.acos(c)))
                partners.append(x)

    if ker0.shape[1]:
        rest = ker0
        if partners:
            y = ker0.conj().T @ np.stack(partners, axis=1)  # partners in kernel coordinates
            comp = np.eye(ker0.shape[1]) - y @ y.conj().T
            cw, cv = qla.eigh_batch(comp, tol)
            rest = ker0 @ cv[:, cw > 0.5]
        if rest.shape[1]:
            lam, w = qla.eigh_batch(rest.conj().T @ P1 @ rest, tol)
            for k in range(len(lam)):
                vec = rest @ w[:, k]
                if lam[k] >= 1 - cut:
                    blocks.append(_one_dim(vec, 0.0, 1.0))
                elif lam[k] <= cut:
                    blocks.append(_one_dim(vec, 0.0, 0.0))
                else:
                    raise DecompositionFailure(
                        f"kernel direction of P0 with P1-weight {lam[k]!r} is not invariant"
                    )

    basis = np.concatenate([b.basis for b in blocks], axis=1) if blocks else np.zeros((d, 0))
    if basis.shape[1] != d:
        raise DecompositionFailure(f"found {basis.shape[1]} basis vectors for dimension {d}")
    basis = qla.orthonormalize(basis)
    out, start = [], 0
    for b in blocks:
        k = b.size
        vecs = basis[:, start:start + k]
        out.append(JordanBlock(b.kind, vecs, vecs.conj().T @ P0 @ vecs, vecs.conj().T @ P1 @ vecs, b.principal_angle))
        start += k
    _check_block_diagonal(out, P0, P1, tol)
    return out


def block_basis(blocks: list[JordanBlock]) -> np.ndarray:
    return np.concatenate([b.basis for b in blocks], axis=1)


def _block_mask(blocks: list[JordanBlock]) -> np.ndarray:
    d = sum(b.size for b in blocks)
    mask = np.zeros((d, d), bool)
    start = 0
    for b in blocks:
        mask[start:start + b.size, start:start + b.size] = True
        start += b.size
    return mask


def _check_block_diagonal(blocks, P0, P1, tol: Tolerances) -> None:
    w = block_basis(blocks)
    mask = _block_mask(blocks)
    for p in (P0, P1):
        m = w.conj().T @ p @ w
        if np.max(np.abs(m[~mask]), initial=0.0) > tol.jordan_leak:
            raise DecompositionFailure("projector leaks across blocks")


def reconstruction_residual(blocks: list[JordanBlock], P0, P1) -> float:
    """Largest entry error when rebuilding ``P0, P1`` from the block restrictions."""
    d = blocks[0].basis.shape[0]
    r0 = np.zeros((d, d), complex)
    r1 = np.zeros((d, d), complex)
    for b in blocks:
        r0 += b.basis @ b.p0 @ b.basis.conj().T
        r1 += b.basis @ b.p1 @ b.basis.conj().T
    return float(max(np.max(np.abs(r0 - P0)), np.max(np.abs(r1 - P1))))


def block_projectors(blocks: list[JordanBlock]) -> list[np.ndarray]:
    return [b.basis @ b.basis.conj().T for b in blocks]


# --------------------------------------------------------------------------
# extension to all-qubit blocks


@dataclass(frozen=True)
class ExtendedPair:
    """Projectors and states after every block has been made two-dimensional.

    Block ``j`` occupies coordinates ``2j, 2j+1``.
    """

    P0: np.ndarray
    P1: np.ndarray
    sigma0: np.ndarray
    sigma1: np.ndarray

    @property
    def nblocks(self) -> int:
        return self.P0.shape[0] // 2

    def block(self, m: np.ndarray, j: int) -> np.ndarray:
        return m[2 * j:2 * j + 2, 2 * j:2 * j + 2]

    def blocks(self) -> list[JordanBlock]:
        out = []
        eye = np.eye(self.P0.shape[0], dtype=complex)
        for j in range(self.nblocks):
            p0, p1 = self.block(self.P0, j), self.block(self.P1, j)
            ov = abs(np.trace(p0 @ p1).real)
            angle = math.acos(min(1.0, math.sqrt(ov)))
            out.append(JordanBlock("two_dim", eye[:, 2 * j:2 * j + 2], p0, p1, angle))
        return out

    def stats(self) -> cmt.TradeoffStats:
        return pair_stats(self.P0, self.P1, self.sigma0, self.sigma1)


def pair_stats(P0, P1, sigma0, sigma1) -> cmt.TradeoffStats:
    """``V``, ``E`` and trace distance for two projectors and two states.

    Unlike :func:`cmt.tradeoff_stats` the states need not be normalised, so
    this also works on single blocks.
    """
    projs = np.stack([qla.as_matrix(P0), qla.as_matrix(P1)])
    states = np.stack([qla.as_matrix(sigma0), qla.as_matrix(sigma1)])
    v, e = cmt.stats_arrays(projs, states)
    delta = 0.5 * qla.trace_norm(states[0] - states[1])
    return cmt.TradeoffStats(float(v), float(e), float(delta), None)


def extend_blocks(blocks: list[JordanBlock], sigma0, sigma1) -> ExtendedPair:
    """Pad every one-dimensional block to a qubit.

    A block where a projector acts as 1 becomes ``diag(1, 0)``, one where it
    acts as 0 becomes ``diag(0, 1)``; states get a zero in the new slot.
    Only the block-diagonal part of each state is kept, which is the same as
    pinching onto the blocks first.
    """
    s0 = qla.as_matrix(sigma0)
    s1 = qla.as_matrix(sigma1)
    k = len(blocks)
    D = 2 * k
    P0 = np.zeros((D, D), complex)
    P1 = np.zeros((D, D), complex)
    S0 = np.zeros((D, D), complex)
    S1 = np.zeros((D, D), complex)
    one = np.diag([1.0, 0.0]).astype(complex)
    zero = np.diag([0.0, 1.0]).astype(complex)
    for j, b in enumerate(blocks):
        sl = slice(2 * j, 2 * j + 2)
        B = b.basis
        if b.kind == "two_dim":
            P0[sl, sl] = b.p0
            P1[sl, sl] = b.p1
            S0[sl, sl] = B.conj().T @ s0 @ B
            S1[sl, sl] = B.conj().T @ s1 @ B
        else:
            P0[sl, sl] = one if b.p0[0, 0].real > 0.5 else zero
            P1[sl, sl] = one if b.p1[0, 0].real > 0.5 else zero
            S0[2 * j, 2 * j] = (B.conj().T @ s0 @ B)[0, 0]
            S1[2 * j, 2 * j] = (B.conj().T @ s1 @ B)[0, 0]
    return ExtendedPair(P0, P1, S0, S1)


# --------------------------------------------------------------------------
# Bloch vectors


@dataclass(frozen=True)
class BlochState:
    p: float
    s: np.ndarray


def bloch_decompose(m, tol: Tolerances = DEFAULT) -> BlochState:
    """Write a PSD 2x2 operator as ``p (I + s . sigma) / 2``."""
    m = qla.as_matrix(m)
    if m.shape != (2, 2):
        raise DimensionMismatch("Bloch form needs a 2x2 operator")
    m = 0.5 * (m + m.conj().T)
    p = float(np.trace(m).real)
    det = float((m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]).real)
    lo = 0.5 * (p - math.sqrt(max(0.0, p * p - 4 * det)))
    if lo < -tol.psd:
        raise NotPSD(f"operator has negative eigenvalue {lo!r}")
    if p <= 0.0:
        return BlochState(0.0, np.zeros(3))
    s = np.array([2 * m[0, 1].real, -2 * m[0, 1].imag, (m[0, 0] - m[1, 1]).real]) / p
    return BlochState(p, s)


def bloch_compose(b: BlochState) -> np.ndarray:
    return 0.5 * b.p * (np.eye(2) + np.tensordot(b.s, PAULI, axes=1))


def projector_axis(p) -> np.ndarray:
    """Bloch axis ``r`` of a rank-one qubit projector ``(I + r . sigma)/2``."""
    return bloch_decompose(p).s


def reflect_bloch(s, r0, r1, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Rotate ``s`` by pi about the axis ``r0 + r1``.

    The result satisfies ``r1 . s' = r0 . s`` and ``r0 . s' = r1 . s``.
    """
    s = np.asarray(s, float)
    axis = np.asarray(r0, float) + np.asarray(r1, float)
    nrm = np.linalg.norm(axis)
    if nrm <= tol.antipodal:
        raise AntipodalAxes("r0 and r1 are antipodal; the symmetry axis is undefined")
    u = axis / nrm
    return 2 * np.dot(s, u) * u - s


def _perpendicular(r: np.ndarray) -> np.ndarray:
    e = np.zeros(3)
    e[int(np.argmin(np.abs(r)))] = 1.0
    u = np.cross(r, e)
    return u / np.linalg.norm(u)


def swap_rotation(s, r0, r1, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Rotation by pi exchanging the roles of ``r0`` and ``r1``.

    Same as :func:`reflect_bloch` when ``r0 + r1 != 0``. For antipodal axes
    it rotates about a fixed axis perpendicular to ``r0``, which maps ``r0``
    to ``-r0 = r1`` and keeps both dot-product identities.
    """
    r0 = np.asarray(r0, float)
    try:
        return reflect_bloch(s, r0, r1, tol)
    except AntipodalAxes:
        u = _perpendicular(r0)
        s = np.asarray(s, float)
        return 2 * np.dot(s, u) * u - s


def symmetrize_pair(ext: ExtendedPair, tol: Tolerances = DEFAULT) -> ExtendedPair:
    """Replace the two states block by block with symmetrized versions.

    On block ``j`` with axes ``r0, r1`` and states ``p0(I + s0.sigma)/2``,
    ``p1(I + s1.sigma)/2`` the new states have weight ``(p0 + p1)/2`` each and
    Bloch vectors ``(p0 s0 + p1 s1')/(p0 + p1)`` and
    ``(p0 s0' + p1 s1)/(p0 + p1)``, where ``'`` is the swap rotation.
    """
    S0 = ext.sigma0.copy()
    S1 = ext.sigma1.copy()
    for j in range(ext.nblocks):
        sl = slice(2 * j, 2 * j + 2)
        r0 = projector_axis(ext.block(ext.P0, j))
        r1 = projector_axis(ext.block(ext.P1, j))
        b0 = bloch_decompose(ext.block(ext.sigma0, j), tol)
        b1 = bloch_decompose(ext.block(ext.sigma1, j), tol)
        tot = b0.p + b1.p
        if tot <= 0.0:
            continue
        h0 = swap_rotation(b0.s, r0, r1, tol)
        h1 = swap_rotation(b1.s, r0, r1, tol)
        t0 = (b0.p * b0.s + b1.p * h1) / tot
        t1 = (b0.p * h0 + b1.p * b1.s) / tot
        S0[sl, sl] = bloch_compose(BlochState(tot / 2, t0))
        S1[sl, sl] = bloch_compose(BlochState(tot / 2, t1))
    return ExtendedPair(ext.P0, ext.P1, S0, S1)


@dataclass(frozen=True)
class BlockStat:
    V: float
    E: float
    delta: float
    p: float


def block_stats(ext: ExtendedPair) -> list[BlockStat]:
    """Per-block ``V_j, E_j, delta_j`` of the normalised block states, with
    block weight ``p_j``.

    After symmetrization both states carry the same weight on each block, so
    ``V = sum p_j V_j`` and likewise for ``E`` and ``delta``.
    """
    out = []
    for j in range(ext.nblocks):
        a = ext.block(ext.sigma0, j)
        b = ext.block(ext.sigma1, j)
        p = 0.5 * float(np.trace(a).real + np.trace(b).real)
        if p <= 0.0:
            out.append(BlockStat(0.0, 0.0, 0.0, 0.0))
            continue
        st = pair_stats(ext.block(ext.P0, j), ext.block(ext.P1, j), a / p, b / p)
        out.append(BlockStat(st.V, st.E, st.delta, p))
    return out


@dataclass(frozen=True)
class ReductionTrace:
    """Statistics at each stage of the two-state reduction."""

    blocks: list[JordanBlock]
    original: cmt.TradeoffStats
    pinched: cmt.TradeoffStats
    extended: cmt.TradeoffStats
    symmetrized: cmt.TradeoffStats
    per_block: list[BlockStat]
    residual: float


def reduce_pair(P0, P1, sigma0, sigma1, tol: Tolerances = DEFAULT) -> ReductionTrace:
    """Run decompose, pinch, extend, symmetrize and per-block statistics."""
    P0 = qla.as_matrix(P0)
    P1 = qla.as_matrix(P1)
    blocks = jordan_decompose(P0, P1, tol)
    res = reconstruction_residual(blocks, P0, P1)
    projs = block_projectors(blocks)
    p0s = qla.pinch(sigma0, projs, tol)
    p1s = qla.pinch(sigma1, projs, tol)
    ext = extend_blocks(blocks, p0s, p1s)
    sym = symmetrize_pair(ext, tol)
    return ReductionTrace(
        blocks=blocks,
        original=pair_stats(P0, P1, sigma0, sigma1),
        pinched=pair_stats(P0, P1, p0s, p1s),
        extended=ext.stats(),
        symmetrized=sym.stats(),
        per_block=block_stats(sym),
        residual=res,
    )
