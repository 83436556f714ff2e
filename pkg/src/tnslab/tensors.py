"""Dense complex tensors and the linear-algebra kernels used everywhere else.

Everything downstream (MPS conversions, canonical forms, rank certification)
reduces to four primitives on matrices: contraction, reduced RQ, SVD with a
relative rank cutoff, and nullspace extraction.  They live here so the rank
tolerance convention is defined in exactly one place.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import CapacityError, DimensionMismatchError

# Singular values below DEFAULT_TOL * s_max count as zero.
DEFAULT_TOL = 1e-10

# Hard cap on dense intermediates (entries, not bytes); the environment
# variable TNS_CAPACITY_CAP overrides it.
DEFAULT_CAPACITY_CAP = 2**24

# Default cap for materializing a full state vector.
DEFAULT_EVAL_CAP = 2**20


def capacity_cap() -> int:
    raw = os.environ.get("TNS_CAPACITY_CAP")
    return int(raw) if raw else DEFAULT_CAPACITY_CAP


def check_capacity(size: int, cap: int | None = None, what: str = "tensor") -> None:
    """Raise CapacityError if a dense object of `size` entries is too big."""
    if cap is None:
        cap = capacity_cap()
    if size > cap:
        raise CapacityError(f"{what} with {size} entries exceeds cap of {cap}")


class DenseTensor:
    """Immutable dense tensor, complex128 entries in row-major order."""

    __slots__ = ("array",)

    def __init__(self, data, shape=None):
        arr = np.array(data, dtype=np.complex128, order="C")
        if shape is not None:
            arr = arr.reshape(tuple(shape))
        if arr.size and not np.isfinite(arr).all():
            raise ValueError("tensor entries must be finite")
        arr.setflags(write=False)
        self.array = arr

    @property
    def shape(self) -> tuple[int, ...]:
        return self.array.shape

    @property
    def ndim(self) -> int:
        return self.array.ndim

    @property
    def size(self) -> int:
        return self.array.size

    def reshape(self, *shape) -> "DenseTensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return DenseTensor(self.array.reshape(shape))

    def conj(self) -> "DenseTensor":
        return DenseTensor(self.array.conj())

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.array
        return self.array.astype(dtype)

    def __getitem__(self, key):
        return self.array[key]

    def __repr__(self) -> str:
        return f"DenseTensor(shape={self.shape})"


def as_array(t) -> np.ndarray:
    """Accept a DenseTensor or any array-like; return a complex ndarray."""
    if isinstance(t, DenseTensor):
        return t.array
    return np.asarray(t, dtype=np.complex128)


def _as_matrix(t) -> np.ndarray:
    arr = as_array(t)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"expected a matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class SvdResult:
    """Economy SVD with a rank count under the relative tolerance."""

    u: DenseTensor
    s: np.ndarray
    vdag: DenseTensor
    rank: int


def contract(a, b, axis_pairs) -> DenseTensor:
    """Contract tensors `a` and `b` over the given (axis_of_a, axis_of_b) pairs.

    Result axes are the unpaired axes of `a` followed by those of `b`.
    """
    aa = as_array(a)
    bb = as_array(b)
    pairs = [(int(i), int(j)) for i, j in axis_pairs]
    for i, j in pairs:
        if not (0 <= i < aa.ndim and 0 <= j < bb.ndim):
            raise DimensionMismatchError(
                f"axis pair ({i},{j}) out of range for shapes {aa.shape}, {bb.shape}"
            )
        if aa.shape[i] != bb.shape[j]:
            raise DimensionMismatchError(
                f"axis {i} of shape {aa.shape} does not match axis {j} of {bb.shape}"
            )
    ax_a = [i for i, _ in pairs]
    ax_b = [j for _, j in pairs]
    out_size = 1
    for k, ext in enumerate(aa.shape):
        if k not in ax_a:
            out_size *= ext
    for k, ext in enumerate(bb.shape):
        if k not in ax_b:
            out_size *= ext
    check_capacity(out_size, what="contraction result")
    out = np.tensordot(aa, bb, axes=(ax_a, ax_b))
    return DenseTensor(out)


def svd(m, tol: float = DEFAULT_TOL) -> SvdResult:
    """Economy SVD of a matrix; rank counts singular values > tol * s_max."""
    mat = _as_matrix(m)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    rank = _rank_from_singulars(s, tol)
    return SvdResult(u=DenseTensor(u), s=s, vdag=DenseTensor(vh), rank=rank)


def _rank_from_singulars(s: np.ndarray, tol: float) -> int:
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def matrix_rank(m, tol: float = DEFAULT_TOL) -> int:
    mat = _as_matrix(m)
    s = np.linalg.svd(mat, compute_uv=False)
    return _rank_from_singulars(s, tol)


def nullspace(m, tol: float = DEFAULT_TOL) -> DenseTensor:
    """Orthonormal columns spanning the (right) kernel of a k-by-n matrix."""
    mat = _as_matrix(m)
    _, n = mat.shape
    u, s, vh = np.linalg.svd(mat, full_matrices=True)
    rank = _rank_from_singulars(s, tol)
    return DenseTensor(vh[rank:].conj().T.reshape(n, n - rank))


def reduced_rq(m, tol: float = DEFAULT_TOL) -> tuple[DenseTensor, DenseTensor]:
    """Reduced RQ split of a k-by-n matrix: m = r @ q with q q† = identity.

    `q` keeps only rank(m) rows, so `r` has shape (k, rank).  Implemented as a
    pivoted reduced QR of the conjugate transpose; the pivoted diagonal of the
    triangular factor supplies the rank decision.
    """
    mat = _as_matrix(m)
    k, n = mat.shape
    qt, rt, piv = scipy.linalg.qr(mat.conj().T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(rt))
    if diag.size == 0 or diag[0] <= 0.0:
        rank = 0
    else:
        rank = int(np.count_nonzero(diag > tol * diag[0]))
    # mat†[:, piv] = qt @ rt, so mat[piv, :] = rt† qt†; undo the row pivot.
    inv = np.argsort(piv)
    r = rt[:rank, :].conj().T[inv, :]
    q = qt[:, :rank].conj().T
    return DenseTensor(r.reshape(k, rank)), DenseTensor(q.reshape(rank, n))


def reduced_qr(m, tol: float = DEFAULT_TOL) -> tuple[DenseTensor, DenseTensor]:
    """Companion split m = q @ r with q†q = identity, q of shape (k, rank)."""
    r_t, q_t = reduced_rq(as_array(m).conj().T, tol=tol)
    return DenseTensor(q_t.array.conj().T), DenseTensor(r_t.array.conj().T)
