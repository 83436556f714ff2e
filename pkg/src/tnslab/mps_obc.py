"""Open-boundary MPS: state conversion by RQ sweeps, right-canonical form,
Schmidt data, and bond gauge transformations."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvertibilityError,
    NormalizationError,
    RankError,
)
from .tensors import (
    DEFAULT_EVAL_CAP,
    DEFAULT_TOL,
    DenseTensor,
    as_array,
    check_capacity,
    reduced_qr,
    reduced_rq,
)


class MpsObc:
    """Open-boundary MPS; tensor i has axes (physical d_i, left bond, right bond).

    Boundary bonds are one-dimensional: the first tensor has left bond 1 and
    the last has right bond 1.
    """

    __slots__ = ("tensors",)

    def __init__(self, tensors):
        ts = tuple(
            t if isinstance(t, DenseTensor) else DenseTensor(t) for t in tensors
        )
        if not ts:
            raise ValueError("an MPS needs at least one site")
        for i, t in enumerate(ts):
            if t.ndim != 3:
                raise DimensionMismatchError(
                    f"site {i} tensor has {t.ndim} axes, expected 3"
                )
        if ts[0].shape[1] != 1:
            raise DimensionMismatchError("left boundary bond must have dimension 1")
        if ts[-1].shape[2] != 1:
            raise DimensionMismatchError("right boundary bond must have dimension 1")
        for i in range(len(ts) - 1):
            if ts[i].shape[2] != ts[i + 1].shape[1]:
                raise DimensionMismatchError(
                    f"bond between sites {i} and {i + 1} mismatches: "
                    f"{ts[i].shape[2]} vs {ts[i + 1].shape[1]}"
                )
        self.tensors = ts

    def __len__(self) -> int:
        return len(self.tensors)

    @property
    def site_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[0] for t in self.tensors)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        """Interior bond dimensions m_1 ... m_{N-1}."""
        return tuple(t.shape[2] for t in self.tensors[:-1])

    def __repr__(self) -> str:
        return f"MpsObc(site_dims={self.site_dims}, bond_dims={self.bond_dims})"


@dataclass(frozen=True)
class SchmidtData:
    """Schmidt spectrum across one cut: descending coefficients above tolerance."""

    cut: int
    coefficients: np.ndarray
    rank: int


def eval_obc(mps: MpsObc, cap: int = DEFAULT_EVAL_CAP) -> DenseTensor:
    """Materialize the full state tensor of shape d_1 x ... x d_N."""
    dims = mps.site_dims
    check_capacity(math.prod(dims), cap=cap, what="full state")
    acc = as_array(mps.tensors[0])[:, 0, :]
    for t in mps.tensors[1:]:
        acc = np.tensordot(acc, as_array(t), axes=([acc.ndim - 1], [1]))
        check_capacity(acc.size, what="evaluation intermediate")
    return DenseTensor(acc[..., 0])


def from_state_obc(psi, dims, max_bond: int | None = None) -> MpsObc:
    """Exact MPS from a state tensor by a right-to-left sweep of reduced RQs.

    Every interior bond dimension comes out equal to the Schmidt rank of the
    corresponding cut; there is no truncation (max_bond below a rank raises).
    """
    dims = [int(d) for d in dims]
    arr = as_array(psi).reshape(tuple(dims))
    nrm = float(np.linalg.norm(arr))
    if abs(nrm - 1.0) > 1e-8:
        raise NormalizationError(f"state norm {nrm!r} differs from 1 by more than 1e-8")
    n = len(dims)
    tensors: list[DenseTensor | None] = [None] * n
    mat = arr.reshape(-1)
    right = 1
    for i in range(n - 1, 0, -1):
        rows = math.prod(dims[:i])
        r, q = reduced_rq(mat.reshape(rows, dims[i] * right))
        rank = q.shape[0]
        if max_bond is not None and rank > max_bond:
            raise RankError(
                f"Schmidt rank {rank} at cut {i} exceeds max_bond {max_bond}; "
                "truncation is not supported"
            )
        tensors[i] = DenseTensor(q.array.reshape(rank, dims[i], right).transpose(1, 0, 2))
        mat = r.array
        right = rank
    tensors[0] = DenseTensor(mat.reshape(1, dims[0], right).transpose(1, 0, 2))
    return MpsObc(tensors)


def right_canonicalize(mps: MpsObc) -> MpsObc:
    """Bring an MPS to right-canonical form (sum_s B^s B^s+ = identity).

    A left-to-right reduced-QR pass first makes every left block injective, so
    the right-to-left RQ pass lands on exact Schmidt ranks; padded bonds
    collapse.  The state is normalized, and the global phase is fixed by making
    the largest-magnitude amplitude real positive whenever the full state fits
    in the evaluation cap.
    """
    n = len(mps)
    tensors = [np.asarray(as_array(t)) for t in mps.tensors]
    for i in range(n - 1):
        d, a, b = tensors[i].shape
        q, r = reduced_qr(tensors[i].transpose(1, 0, 2).reshape(a * d, b))
        rank = q.shape[1]
        if rank == 0:
            raise NormalizationError("zero state cannot be canonicalized")
        tensors[i] = q.array.reshape(a, d, rank).transpose(1, 0, 2)
        tensors[i + 1] = np.tensordot(
            r.array, tensors[i + 1], axes=([1], [1])
        ).transpose(1, 0, 2)
    for i in range(n - 1, -1, -1):
        d, a, b = tensors[i].shape
        r, q = reduced_rq(tensors[i].transpose(1, 0, 2).reshape(a, d * b))
        rank = q.shape[0]
        if rank == 0:
            raise NormalizationError("zero state cannot be canonicalized")
        tensors[i] = q.array.reshape(rank, d, b).transpose(1, 0, 2)
        if i > 0:
            tensors[i - 1] = np.tensordot(tensors[i - 1], r.array, axes=([2], [0]))
        # at i == 0 the 1x1 factor r holds norm and phase; both are dropped
    out = [DenseTensor(t) for t in tensors]
    if math.prod(mps.site_dims) <= DEFAULT_EVAL_CAP:
        vec = eval_obc(MpsObc(out)).array.ravel()
        k = int(np.argmax(np.abs(vec)))
        phase = vec[k] / abs(vec[k])
        out[0] = DenseTensor(out[0].array * np.conj(phase))
    return MpsObc(out)


def schmidt(psi, dims, cut: int, tol: float = DEFAULT_TOL) -> SchmidtData:
    """Schmidt coefficients and rank across the cut [1..cut] | [cut+1..N]."""
    dims = [int(d) for d in dims]
    n = len(dims)
    if not 1 <= cut <= n - 1:
        raise ValueError(f"cut must lie in 1..{n - 1}, got {cut}")
    arr = as_array(psi).reshape(tuple(dims))
    mat = arr.reshape(math.prod(dims[:cut]), math.prod(dims[cut:]))
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] <= 0.0:
        rank = 0
    else:
        rank = int(np.count_nonzero(s > tol * s[0]))
    return SchmidtData(cut=cut, coefficients=s[:rank].copy(), rank=rank)


def gauge_transform(mps: MpsObc, bond: int, z) -> MpsObc:
    """Insert z^-1 z on interior bond `bond` (1-indexed, between bond and bond+1)."""
    n = len(mps)
    if not 1 <= bond <= n - 1:
        raise ValueError(f"bond must lie in 1..{n - 1}, got {bond}")
    zm = as_array(z)
    m = mps.tensors[bond - 1].shape[2]
    if zm.shape != (m, m):
        raise DimensionMismatchError(
            f"gauge matrix shape {zm.shape} does not match bond dimension {m}"
        )
    cond = np.linalg.cond(zm)
    if not np.isfinite(cond) or cond >= 1e8:
        raise InvertibilityError(
            f"gauge matrix condition number {cond!r} is too large to invert safely"
        )
    zinv = np.linalg.inv(zm)
    left = np.tensordot(as_array(mps.tensors[bond - 1]), zinv, axes=([2], [0]))
    right = np.tensordot(as_array(mps.tensors[bond]), zm, axes=([1], [1])).transpose(
        0, 2, 1
    )
    tensors = list(mps.tensors)
    tensors[bond - 1] = DenseTensor(left)
    tensors[bond] = DenseTensor(right)
    return MpsObc(tensors)
