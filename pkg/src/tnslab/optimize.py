"""Alternating least-squares style optimization of chain states, with the
norm and transfer-product regularizers and divergence monitoring.

Objectives are scale-invariant: the state is normalized before the distance
or energy functional is evaluated, while regularization terms see the raw
tensors.  Every update is guarded by a backtracking line search that accepts
only non-increasing regularized values, so monotonicity is a hard guarantee
rather than a hope.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NormalizationError
from .mps_obc import MpsObc, eval_obc
from .mps_pbc import MpsPbc, eval_pbc
from .tensors import DenseTensor, as_array

RIDGE = 1e-12
SWEEP_TOL = 1e-10
DEFAULT_DIVERGENCE = 1e6
_BACKTRACK_STEPS = 21  # t = 1, 1/2, ..., 2^-20


@dataclass(frozen=True)
class Objective:
    """What to minimize and how to regularize.

    kind "distance" needs a normalized target state; kind "energy" needs a
    Hermitian matrix.  reg_kind is "none", "tensor_norm" (weight per site or
    one shared weight, applied to squared Frobenius norms of the raw
    tensors), or "transfer_product" (weight times the squared Frobenius norm
    of the product of all site transfer matrices).
    """

    kind: str
    target: DenseTensor | None = None
    hamiltonian: DenseTensor | None = None
    reg_kind: str = "none"
    reg_weight: object = 0.0

    def __post_init__(self):
        if self.kind not in ("distance", "energy"):
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if self.kind == "distance":
            if self.target is None:
                raise ValueError("distance objective needs a target")
            vec = np.asarray(as_array(self.target)).ravel()
            if abs(np.linalg.norm(vec) - 1.0) > 1e-10:
                raise NormalizationError("target must be normalized within 1e-10")
        else:
            if self.hamiltonian is None:
                raise ValueError("energy objective needs a hamiltonian")
            h = np.asarray(as_array(self.hamiltonian))
            if h.ndim != 2 or h.shape[0] != h.shape[1]:
                raise ValueError("hamiltonian must be a square matrix")
            if np.max(np.abs(h - h.conj().T)) > 1e-10:
                raise ValueError("hamiltonian must be Hermitian within 1e-10")
        if self.reg_kind not in ("none", "tensor_norm", "transfer_product"):
            raise ValueError(f"unknown regularization {self.reg_kind!r}")
        weights = (
            self.reg_weight
            if isinstance(self.reg_weight, (tuple, list))
            else (self.reg_weight,)
        )
        if any(w < 0 for w in weights):
            raise ValueError("regularization weights must be nonnegative")


def distance_objective(target, reg_kind: str = "none", reg_weight=0.0) -> Objective:
    t = target if isinstance(target, DenseTensor) else DenseTensor(target)
    return Objective("distance", target=t, reg_kind=reg_kind, reg_weight=reg_weight)


def energy_objective(hamiltonian, reg_kind: str = "none", reg_weight=0.0) -> Objective:
    h = (
        hamiltonian
        if isinstance(hamiltonian, DenseTensor)
        else DenseTensor(hamiltonian)
    )
    return Objective("energy", hamiltonian=h, reg_kind=reg_kind, reg_weight=reg_weight)


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    f: float
    f_reg: float
    overlap: float
    max_abs_entry: float
    frobenius_norms: tuple
    transfer_product_norm: float
    flag: str = ""


@dataclass
class RunTrace:
    records: list = field(default_factory=list)
    termination: str = "iteration_cap"


def _tensor_arrays(params) -> list[np.ndarray]:
    return [np.asarray(as_array(t)) for t in params.tensors]


def _eval_vec(params) -> np.ndarray:
    if isinstance(params, MpsObc):
        return np.asarray(as_array(eval_obc(params))).ravel()
    if isinstance(params, MpsPbc):
        return np.asarray(as_array(eval_pbc(params))).ravel()
    raise TypeError(f"unsupported parametrization {type(params).__name__}")


def _site_lambdas(obj: Objective, nsites: int) -> list[float]:
    if isinstance(obj.reg_weight, (tuple, list)):
        ws = [float(w) for w in obj.reg_weight]
        if len(ws) != nsites:
            raise ValueError(f"need {nsites} weights, got {len(ws)}")
        return ws
    return [float(obj.reg_weight)] * nsites


def _site_transfer(a: np.ndarray) -> np.ndarray:
    d, ml, mr = a.shape
    e = np.zeros((ml * ml, mr * mr), dtype=np.complex128)
    for s in range(d):
        e += np.kron(a[s].conj(), a[s])
    return e


def _transfer_product(arrs: list[np.ndarray]) -> np.ndarray:
    prod = None
    for a in arrs:
        e = _site_transfer(a)
        prod = e if prod is None else prod @ e
    return prod


def _reg_term(obj: Objective, params) -> float:
    if obj.reg_kind == "none":
        return 0.0
    arrs = _tensor_arrays(params)
    if obj.reg_kind == "tensor_norm":
        lams = _site_lambdas(obj, len(arrs))
        return float(
            sum(l * np.linalg.norm(a) ** 2 for l, a in zip(lams, arrs))
        )
    lam = float(obj.reg_weight)
    return lam * float(np.linalg.norm(_transfer_product(arrs)) ** 2)


def objective_value(obj: Objective, params) -> tuple[float, float]:
    """(f, f_reg) at the given parameters; raises on a zero state."""
    vec = _eval_vec(params)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise NormalizationError("parametrized state has zero norm")
    if obj.kind == "distance":
        tvec = np.asarray(as_array(obj.target)).ravel()
        if tvec.size != vec.size:
            raise ValueError("target and state dimensions differ")
        f = 2.0 * (1.0 - abs(np.vdot(tvec, vec)) / norm)
    else:
        h = np.asarray(as_array(obj.hamiltonian))
        if h.shape[0] != vec.size:
            raise ValueError("hamiltonian and state dimensions differ")
        f = float(np.vdot(vec, h @ vec).real) / (norm * norm)
    return f, f + _reg_term(obj, params)


def _overlap(obj: Objective, params) -> float:
    if obj.kind != "distance":
        return float("nan")
    vec = _eval_vec(params)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        return float("nan")
    tvec = np.asarray(as_array(obj.target)).ravel()
    return float(abs(np.vdot(tvec, vec)) / norm)


def _site_matrix_obc(arrs: list[np.ndarray], site: int) -> np.ndarray:
    left = np.ones((1, 1), dtype=np.complex128)
    for t in arrs[: site - 1]:
        left = np.tensordot(left, t, axes=([1], [1])).reshape(-1, t.shape[2])
    right = np.ones((1, 1), dtype=np.complex128)
    for t in reversed(arrs[site:]):
        tmp = np.tensordot(t, right, axes=([2], [0]))
        right = tmp.transpose(1, 0, 2).reshape(t.shape[1], -1)
    d, ml, mr = arrs[site - 1].shape
    outer = np.einsum("xa,by->xyab", left, right)
    mat = np.zeros((left.shape[0], d, right.shape[1], d, ml, mr), dtype=np.complex128)
    for s in range(d):
        mat[:, s, :, s, :, :] = outer
    return mat.reshape(left.shape[0] * d * right.shape[1], d * ml * mr)


def _site_matrix_pbc(arrs: list[np.ndarray], site: int) -> np.ndarray:
    n = len(arrs)
    d, m, _ = arrs[site - 1].shape
    acc = np.eye(m, dtype=np.complex128).reshape(1, m, m)
    for t in arrs[site:] + arrs[: site - 1]:
        tmp = np.tensordot(acc, t, axes=([2], [1]))  # (P, x, d, b)
        acc = tmp.transpose(0, 2, 1, 3).reshape(-1, m, t.shape[2])
    # acc[q, x, y] is the bond product over sites site+1..N,1..site-1;
    # the state closes the trace through the site tensor: sum_ab A[s,a,b] acc[q,b,a]
    q = acc.shape[0]
    env = acc.transpose(0, 2, 1)  # (q, a, b)
    big = np.zeros((d, q, d, m, m), dtype=np.complex128)
    for s in range(d):
        big[s, :, s] = env
    view = big.reshape((d,) * n + (d, m, m))
    chain = list(range(site, n + 1)) + list(range(1, site))
    perm = [chain.index(j) for j in range(1, n + 1)]
    view = view.transpose(perm + [n, n + 1, n + 2])
    return view.reshape(d ** n, d * m * m)


def _site_matrix(params, site: int) -> np.ndarray:
    arrs = _tensor_arrays(params)
    if isinstance(params, MpsObc):
        return _site_matrix_obc(arrs, site)
    return _site_matrix_pbc(arrs, site)


def _solve_normal(neff: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, bool]:
    """Solve the normal equations, falling back to a ridge on singularity."""
    try:
        sol = np.linalg.solve(neff, rhs)
        if np.all(np.isfinite(sol)):
            return sol, False
    except np.linalg.LinAlgError:
        pass
    scale = max(1.0, float(np.abs(np.diag(neff)).max()))
    sol = np.linalg.solve(neff + RIDGE * scale * np.eye(neff.shape[0]), rhs)
    return sol, True


def _candidate(obj: Objective, mat: np.ndarray, a_old: np.ndarray):
    """Unconstrained minimizer of the local surrogate problem."""
    neff = mat.conj().T @ mat
    if obj.kind == "distance":
        tvec = np.asarray(as_array(obj.target)).ravel()
        b = mat.conj().T @ tvec
        if not np.any(b):
            return None, False
        return _solve_normal(neff, b)
    h = np.asarray(as_array(obj.hamiltonian))
    heff = mat.conj().T @ (h @ mat)
    heff = (heff + heff.conj().T) / 2.0
    scale = max(1.0, float(np.abs(np.diag(neff)).max()))
    ridged = False
    try:
        w, v = scipy.linalg.eigh(heff, neff)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        ridged = True
        w, v = scipy.linalg.eigh(heff, neff + RIDGE * scale * np.eye(neff.shape[0]))
    vec = v[:, 0]
    nrm = float(np.linalg.norm(vec))
    if nrm == 0.0 or not np.all(np.isfinite(vec)):
        return None, ridged
    # keep the iterate near the current scale and phase
    vec = vec / nrm
    ref = complex(np.vdot(vec, a_old))
    if abs(ref) > 0:
        vec = vec * (ref / abs(ref))
    return vec * float(np.linalg.norm(a_old)), ridged


def _with_site(params, site: int, arr: np.ndarray):
    arrs = _tensor_arrays(params)
    arrs[site - 1] = arr
    if isinstance(params, MpsObc):
        return MpsObc(arrs)
    if params.translation_invariant:
        return MpsPbc([arr] * len(arrs), translation_invariant=True)
    return MpsPbc(arrs, translation_invariant=False)


def _als_step(obj: Objective, params, site: int):
    """One guarded local update; returns (new params, ridge_used)."""
    arrs = _tensor_arrays(params)
    shape = arrs[site - 1].shape
    a_old = arrs[site - 1].ravel()
    _, freg_old = objective_value(obj, params)
    mat = _site_matrix(params, site)
    cand, ridged = _candidate(obj, mat, a_old)
    if cand is None:
        return params, ridged
    best = params
    for k in range(_BACKTRACK_STEPS):
        t = 0.5 ** k
        a_new = (1.0 - t) * a_old + t * cand
        try:
            trial = _with_site(params, site, a_new.reshape(shape))
            _, freg_new = objective_value(obj, trial)
        except NormalizationError:
            continue
        if freg_new <= freg_old:
            best = trial
            break
    return best, ridged


def als_sweep(obj: Objective, params, site: int):
    """Update one site tensor (the shared tensor, for translation-invariant
    parametrizations) so that f_reg does not increase."""
    new, _ = _als_step(obj, params, site)
    return new


def _metrics(obj: Objective, params, iteration: int, flag: str) -> TraceRecord:
    arrs = _tensor_arrays(params)
    f, f_reg = objective_value(obj, params)
    return TraceRecord(
        iteration=iteration,
        f=f,
        f_reg=f_reg,
        overlap=_overlap(obj, params),
        max_abs_entry=float(max(np.abs(a).max() for a in arrs)),
        frobenius_norms=tuple(float(np.linalg.norm(a)) for a in arrs),
        transfer_product_norm=float(np.linalg.norm(_transfer_product(arrs))),
        flag=flag,
    )


def run_experiment(
    obj: Objective,
    init,
    budget: int,
    divergence_threshold: float = DEFAULT_DIVERGENCE,
) -> RunTrace:
    """Sweep until f_reg stalls, the budget runs out, or entries diverge.

    The trace holds one record per completed sweep (plus the initial state);
    the final record's flag carries the termination reason.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    params = init
    trace = RunTrace()
    rec = _metrics(obj, params, 0, "")
    trace.records.append(rec)
    if rec.max_abs_entry > divergence_threshold:
        trace.termination = "divergence_flag"
        trace.records[-1] = _metrics(obj, params, 0, trace.termination)
        return trace
    nsites = len(params.tensors)
    ti = isinstance(params, MpsPbc) and params.translation_invariant
    freg0 = rec.f_reg
    prev = rec.f_reg
    for it in range(1, budget + 1):
        ridge_seen = False
        if ti:
            params, ridged = _als_step(obj, params, 1)
            ridge_seen = ridge_seen or ridged
        else:
            for site in range(1, nsites + 1):
                params, ridged = _als_step(obj, params, site)
                ridge_seen = ridge_seen or ridged
        flag = "ridge" if ridge_seen else ""
        rec = _metrics(obj, params, it, flag)
        trace.records.append(rec)
        if obj.reg_kind == "tensor_norm":
            lams = _site_lambdas(obj, nsites)
            held = sum(
                l * n * n for l, n in zip(lams, rec.frobenius_norms)
            )
            assert held <= freg0 + SWEEP_TOL, "sublevel bound violated"
        if rec.max_abs_entry > divergence_threshold:
            trace.termination = "divergence_flag"
            break
        if abs(prev - rec.f_reg) < SWEEP_TOL:
            trace.termination = "converged"
            break
        prev = rec.f_reg
    last = trace.records[-1]
    joined = f"{last.flag};{trace.termination}" if last.flag else trace.termination
    trace.records[-1] = TraceRecord(
        iteration=last.iteration,
        f=last.f,
        f_reg=last.f_reg,
        overlap=last.overlap,
        max_abs_entry=last.max_abs_entry,
        frobenius_norms=last.frobenius_norms,
        transfer_product_norm=last.transfer_product_norm,
        flag=joined,
    )
    return trace


def site_gradient(obj: Objective, params, site: int) -> DenseTensor:
    """Wirtinger gradient of f_reg with respect to the conjugate of one site
    tensor, from the same effective quantities the sweeps use.

    The first-order change under a perturbation dA of the site tensor is
    2 Re <g, dA>.
    """
    arrs = _tensor_arrays(params)
    shape = arrs[site - 1].shape
    a = arrs[site - 1].ravel()
    mat = _site_matrix(params, site)
    vec = mat @ a
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise NormalizationError("parametrized state has zero norm")
    na = mat.conj().T @ vec
    if obj.kind == "distance":
        tvec = np.asarray(as_array(obj.target)).ravel()
        b = mat.conj().T @ tvec
        o = complex(np.vdot(tvec, vec))
        if abs(o) == 0.0:
            g = np.zeros_like(a)
        else:
            g = -(b * (o / abs(o))) / norm
        g = g + abs(o) * na / norm ** 3
    else:
        h = np.asarray(as_array(obj.hamiltonian))
        hv = mat.conj().T @ (h @ vec)
        f = float(np.vdot(vec, h @ vec).real) / (norm * norm)
        g = (hv - f * na) / (norm * norm)
    if obj.reg_kind == "tensor_norm":
        lam = _site_lambdas(obj, len(arrs))[site - 1]
        g = g + lam * a
    elif obj.reg_kind == "transfer_product":
        g = g + float(obj.reg_weight) * _transfer_grad(arrs, site).ravel()
    return DenseTensor(g.reshape(shape))


def _transfer_grad(arrs: list[np.ndarray], site: int) -> np.ndarray:
    """Wirtinger gradient of ||E_1...E_N||_F^2 in the site tensor conjugate."""
    a = arrs[site - 1]
    d, ml, mr = a.shape
    left = np.eye(arrs[0].shape[1] ** 2, dtype=np.complex128)
    for t in arrs[: site - 1]:
        left = left @ _site_transfer(t)
    right = np.eye(mr * mr, dtype=np.complex128)
    for t in arrs[site:]:
        right = right @ _site_transfer(t)
    prod = left @ _site_transfer(a) @ right
    m1 = (right @ prod.conj().T @ left).reshape(mr, mr, ml, ml)
    m2 = (right.conj() @ prod.T @ left.conj()).reshape(mr, mr, ml, ml)
    term1 = np.einsum("skl,blak->sab", a, m1)
    term2 = np.einsum("skl,lbka->sab", a, m2)
    return term1 + term2
