"""Dimension counts for local-operator stabilizers of ring states and for the
ring parametrization map, checked numerically against closed formulas.

All dimensions are complex: ranks and nullities of complex matrices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError
from .mps_pbc import eval_pbc
from .tensors import DEFAULT_TOL, as_array, matrix_rank
from .zoo import psi_tau_tensors, two_domain_state

MAX_STABILIZER_PARAMS = 512
MAX_JACOBIAN_PARAMS = 256


@dataclass(frozen=True)
class PredictedDims:
    dim_G: int
    dim_G_mu: int
    dim_G_tau: int
    dim_pmps: int


@dataclass(frozen=True)
class DimensionReport:
    predicted: int
    measured: int
    match: bool
    tolerance_used: float


def predicted_dims(n: int, m: int) -> PredictedDims:
    """Closed-form complex dimensions for the ring of n sites at bond dim m.

    dim_G counts products of local invertible operators, dim_G_mu and
    dim_G_tau their stabilizer subgroups at the pair seed state and at the
    two-domain state, and dim_pmps the parametrized set itself; the identity
    dim_pmps = dim_G - dim_G_mu holds by orbit counting.
    """
    if n < 3:
        raise ValueError("needs n >= 3")
    if m < 1:
        raise ValueError("needs m >= 1")
    m2 = m * m
    return PredictedDims(
        dim_G=n * (m2 * m2 - 1) + 1,
        dim_G_mu=n * m2 - n,
        dim_G_tau=n * (m2 - 1) + m * (m - 2) + 1,
        dim_pmps=n * m2 * (m2 - 1) + 1,
    )


def stabilizer_lie_dim(psi, site_dims, tol: float = DEFAULT_TOL) -> int:
    """Dimension of the Lie algebra of local operators annihilating psi.

    Builds the map (X_1, ..., X_N) -> sum_j (X_j acting on site j)|psi> as a
    dense matrix and returns its nullity minus (N - 1).  The subtraction
    removes the tuples (c_j * identity) with sum c_j = 0, which act as the
    zero operator even though they are nonzero tuples.
    """
    dims = tuple(int(d) for d in site_dims)
    arr = np.asarray(as_array(psi)).reshape(dims)
    n = len(dims)
    if n < 1:
        raise ValueError("need at least one site")
    params = sum(d * d for d in dims)
    if params > MAX_STABILIZER_PARAMS:
        raise CapacityError(
            f"stabilizer problem has {params} parameters, cap {MAX_STABILIZER_PARAMS}"
        )
    if not np.any(arr):
        raise ValueError("psi must be nonzero")
    cols = np.empty((arr.size, params), dtype=np.complex128)
    c = 0
    for j, d in enumerate(dims):
        moved = np.moveaxis(arr, j, 0)
        for a in range(d):
            for b in range(d):
                col = np.zeros_like(moved)
                col[a] = moved[b]
                cols[:, c] = np.moveaxis(col, 0, j).ravel()
                c += 1
    nullity = params - matrix_rank(cols, tol)
    return nullity - (n - 1)


def _ring_vec(arrs: list[np.ndarray]) -> np.ndarray:
    acc = arrs[0]
    for t in arrs[1:]:
        acc = np.tensordot(acc, t, axes=([acc.ndim - 1], [1]))
        acc = np.moveaxis(acc, -3, -2)
    return np.trace(acc, axis1=-2, axis2=-1).ravel()


def jacobian_rank(tensors, tol: float = DEFAULT_TOL) -> int:
    """Complex rank of the differential of (A_1..A_N) -> ring state.

    Each partial derivative is the ring evaluated with one tensor replaced by
    a unit tensor; the rank of the resulting (params x d^N) matrix is the
    local dimension of the parametrized set at this point.
    """
    arrs = [np.asarray(as_array(t)) for t in tensors]
    n = len(arrs)
    if n < 2:
        raise ValueError("need at least 2 sites")
    d, m, m2 = arrs[0].shape
    if any(a.shape != (d, m, m2) for a in arrs) or m != m2:
        raise ValueError("tensors must share one (d, m, m) shape")
    params = n * d * m * m
    if params > MAX_JACOBIAN_PARAMS:
        raise CapacityError(
            f"jacobian has {params} parameters, cap {MAX_JACOBIAN_PARAMS}"
        )
    cols = np.empty((d ** n, params), dtype=np.complex128)
    c = 0
    for j in range(n):
        for s in range(d):
            for a in range(m):
                for b in range(m):
                    unit = np.zeros((d, m, m), dtype=np.complex128)
                    unit[s, a, b] = 1.0
                    cols[:, c] = _ring_vec(arrs[:j] + [unit] + arrs[j + 1:])
                    c += 1
    return matrix_rank(cols, tol)


def mu_ring_state(n: int, m: int) -> np.ndarray:
    """Dense entangled-pair ring state: one unit per cyclic symbol string."""
    return np.asarray(as_array(eval_pbc(psi_tau_tensors(n, m, 1.0))))


def random_injective_point(n: int, m: int, seed: int = 0):
    """Ring tensors of a generic injective point: random invertible operators
    applied to the pair-seed site tensors."""
    rng = np.random.default_rng(seed)
    d = m * m
    base = np.zeros((d, m, m), dtype=np.complex128)
    for a in range(m):
        for b in range(m):
            base[a * m + b, a, b] = 1.0
    out = []
    for _ in range(n):
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        out.append(np.einsum("ps,sab->pab", g, base))
    return out


def geometry_report(
    state: str, n: int, m: int, tol: float = DEFAULT_TOL, seed: int = 0
) -> DimensionReport:
    """Predicted-versus-measured dimension for one named ring state.

    state is "mu" (pair seed), "tau" (two-domain), or "pmps" (Jacobian rank
    at a random injective point).
    """
    pred = predicted_dims(n, m)
    if state == "mu":
        predicted = pred.dim_G_mu
        measured = stabilizer_lie_dim(mu_ring_state(n, m), [m * m] * n, tol)
    elif state == "tau":
        predicted = pred.dim_G_tau
        measured = stabilizer_lie_dim(two_domain_state(n, m), [m * m] * n, tol)
    elif state == "pmps":
        predicted = pred.dim_pmps
        measured = jacobian_rank(random_injective_point(n, m, seed), tol)
    else:
        raise ValueError(f"unknown state {state!r}; want mu, tau, or pmps")
    return DimensionReport(
        predicted=predicted,
        measured=measured,
        match=predicted == measured,
        tolerance_used=tol,
    )
