"""Command-line front end.

Subcommands: construct, certify, schmidt, injectivity, geometry, optimize,
sweep.  Reports are CSV with a leading "# <timestamp>" comment line; one
header row; floats printed with repr (shortest round-trip).  Exit codes:
0 success, 2 validation failure, 3 capacity exceeded, 64 usage error.

A JSON config file may supply any flag values via --config; flags given on
the command line win over config values.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from datetime import datetime, timezone

import numpy as np

from .errors import CapacityError, TnsError
from .geometry import geometry_report
from .mera import Mera, eval_mera, random_mera, validate_isometries
from .mps_obc import MpsObc, eval_obc, schmidt
from .mps_pbc import (
    MpsPbc,
    eval_pbc,
    injectivity_length,
    is_primitive,
    ti_mps,
    wielandt_bound,
)
from .optimize import distance_objective, energy_objective, run_experiment
from .peps import Peps, eval_peps
from .serialize import load_state, save_state
from .tensors import DenseTensor, as_array
from .ttns import Ttns, eval_ttns
from .zoo import (
    aklt_tensor,
    blbq_hamiltonian,
    psi_tau_tensors,
    psi_w,
    psi_w_timps_tensor,
    two_domain_state,
    w_obc_mps,
    w_state,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _timestamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    buf.write(f"# {_timestamp()}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _need(ns, *names):
    for nm in names:
        if getattr(ns, nm, None) is None:
            flag = "--" + nm.replace("_", "-")
            raise _UsageError(f"{flag} is required here")


def _state_vector(state) -> np.ndarray:
    if isinstance(state, DenseTensor):
        return np.asarray(as_array(state)).ravel()
    if isinstance(state, MpsObc):
        return np.asarray(as_array(eval_obc(state))).ravel()
    if isinstance(state, MpsPbc):
        return np.asarray(as_array(eval_pbc(state))).ravel()
    if isinstance(state, Ttns):
        return np.asarray(as_array(eval_ttns(state))).ravel()
    if isinstance(state, Peps):
        return np.asarray(as_array(eval_peps(state))).ravel()
    if isinstance(state, Mera):
        return np.asarray(as_array(eval_mera(state))).ravel()
    raise TypeError(f"cannot evaluate {type(state).__name__}")


# ---------------------------------------------------------------- construct

def _build_family(ns):
    fam = ns.family
    if fam == "w":
        _need(ns, "n")
        return w_state(ns.n, ns.d or 2)
    if fam == "psi_w":
        _need(ns, "n", "eps")
        return psi_w(ns.n, ns.eps)
    if fam == "psi_w_ti":
        _need(ns, "n", "eps")
        return ti_mps(psi_w_timps_tensor(ns.n, ns.eps), ns.n)
    if fam == "w_obc":
        _need(ns, "n")
        return w_obc_mps(ns.n)
    if fam == "psi_tau":
        _need(ns, "n", "m", "eps")
        return psi_tau_tensors(ns.n, ns.m, ns.eps)
    if fam == "two_domain":
        _need(ns, "n", "m")
        return two_domain_state(ns.n, ns.m)
    if fam == "aklt":
        _need(ns, "n")
        return ti_mps(aklt_tensor(), ns.n)
    if fam == "mera":
        _need(ns, "n", "m")
        return random_mera(ns.n, ns.m, ns.d or 2, ns.seed or 0)
    raise _UsageError(f"unknown family {fam!r}")


def _cmd_construct(ns) -> int:
    _need(ns, "family")
    state = _build_family(ns)
    out = ns.out or f"{ns.family}_n{ns.n}.json"
    save_state(state, out)
    print(out)
    return 0


# ------------------------------------------------------------------ certify

def _check_norm(state, tol):
    nrm = float(np.linalg.norm(_state_vector(state)))
    return nrm, abs(nrm - 1.0) <= tol


def _check_canonical(state, tol):
    if not isinstance(state, MpsObc):
        raise ValueError("check 'canonical' applies to mps_obc inputs")
    worst = 0.0
    for t in state.tensors:
        a = np.asarray(as_array(t))
        gram = np.einsum("slr,skr->lk", a, a.conj())
        worst = max(worst, float(np.abs(gram - np.eye(a.shape[1])).max()))
    return worst, worst <= tol


def _check_ti(state, tol):
    if not isinstance(state, MpsPbc):
        raise ValueError("check 'ti' applies to mps_pbc inputs")
    first = np.asarray(as_array(state.tensors[0]))
    worst = 0.0
    for t in state.tensors[1:]:
        worst = max(worst, float(np.abs(np.asarray(as_array(t)) - first).max()))
    return worst, worst <= tol


def _check_isometry(state, tol):
    if not isinstance(state, Mera):
        raise ValueError("check 'isometry' applies to mera inputs")
    report = validate_isometries(state, tol)
    worst = max(report.residuals.values()) if report.residuals else 0.0
    return float(worst), report.passed


def _cmd_certify(ns) -> int:
    _need(ns, "input")
    state = load_state(ns.input)
    tol = ns.tol if ns.tol is not None else 1e-10
    names = [c.strip() for c in (ns.checks or "wellformed").split(",") if c.strip()]
    rows = []
    all_ok = True
    for name in names:
        if name == "wellformed":
            value, ok = type(state).__name__, True
        elif name == "norm":
            value, ok = _check_norm(state, tol)
        elif name == "canonical":
            value, ok = _check_canonical(state, tol)
        elif name == "ti":
            value, ok = _check_ti(state, tol)
        elif name == "isometry":
            value, ok = _check_isometry(state, tol)
        else:
            raise ValueError(f"unknown check {name!r}")
        rows.append((name, value, ok))
        all_ok = all_ok and ok
    _write_csv(ns.out, ["check", "value", "passed"], rows)
    return 0 if all_ok else 2


# ------------------------------------------------------------------ schmidt

def _cmd_schmidt(ns) -> int:
    _need(ns, "input")
    state = load_state(ns.input)
    vec = _state_vector(state)
    if ns.dims:
        dims = [int(x) for x in ns.dims.split(",")]
    else:
        d = ns.d or 2
        n = round(math.log(vec.size, d))
        if d ** n != vec.size:
            raise ValueError("state size is not a power of --d; pass --dims")
        dims = [d] * n
    tol = ns.tol if ns.tol is not None else 1e-10
    cuts = [ns.cut] if ns.cut is not None else list(range(1, len(dims)))
    rows = []
    for cut in cuts:
        data = schmidt(vec, dims, cut, tol)
        coeffs = json.dumps([float(c) for c in data.coefficients], separators=(",", ":"))
        rows.append((cut, data.rank, coeffs))
    _write_csv(ns.out, ["cut", "rank", "coefficients"], rows)
    return 0


# -------------------------------------------------------------- injectivity

def _ti_site_tensor(ns) -> np.ndarray:
    if ns.input:
        state = load_state(ns.input)
        if not isinstance(state, MpsPbc) or not state.translation_invariant:
            raise ValueError("injectivity needs a translation-invariant mps_pbc")
        return np.asarray(as_array(state.tensors[0]))
    if ns.family == "psi_w_ti":
        _need(ns, "n", "eps")
        return np.asarray(as_array(psi_w_timps_tensor(ns.n, ns.eps)))
    if ns.family == "aklt":
        return np.asarray(as_array(aklt_tensor()))
    raise _UsageError("pass --input or --family psi_w_ti|aklt")


def _cmd_injectivity(ns) -> int:
    a = _ti_site_tensor(ns)
    d, m, _ = a.shape
    bound = wielandt_bound(m)
    cap = ns.max_len or bound
    ell = injectivity_length(a, cap)
    # primitivity is defined for isometric tensors; tensors isometric up to a
    # scalar are rescaled first, anything else reports an empty column
    gram = sum(a[s] @ a[s].conj().T for s in range(d))
    scale = float(np.trace(gram).real) / m
    primitive = None
    if scale > 0 and np.abs(gram - scale * np.eye(m)).max() <= 1e-8 * scale:
        primitive = is_primitive(a / math.sqrt(scale))
    rows = [
        (
            d,
            m,
            bound,
            -1 if ell is None else ell,
            primitive,
        )
    ]
    header = ["d", "m", "wielandt_bound", "injectivity_length", "primitive"]
    _write_csv(ns.out, header, rows)
    return 0


# ----------------------------------------------------------------- geometry

def _cmd_geometry(ns) -> int:
    _need(ns, "state", "n", "m")
    tol = ns.tol if ns.tol is not None else 1e-10
    rep = geometry_report(ns.state, ns.n, ns.m, tol=tol, seed=ns.seed or 0)
    rows = [(ns.state, ns.n, ns.m, rep.predicted, rep.measured, rep.match)]
    _write_csv(ns.out, ["state", "N", "m", "predicted", "measured", "match"], rows)
    return 0


# ----------------------------------------------------------------- optimize

def _random_params(ns, rng):
    n, m, d = ns.n, ns.m, ns.d or 2
    if ns.set == "obc":
        tensors = []
        for i in range(n):
            ml = 1 if i == 0 else m
            mr = 1 if i == n - 1 else m
            tensors.append(
                (rng.standard_normal((d, ml, mr)) + 1j * rng.standard_normal((d, ml, mr)))
                / math.sqrt(d * m)
            )
        return MpsObc(tensors)
    shape = (d, m, m)
    if ns.set == "ti":
        a = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(
            d * m
        )
        return MpsPbc([a] * n, translation_invariant=True)
    tensors = [
        (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(d * m)
        for _ in range(n)
    ]
    return MpsPbc(tensors, translation_invariant=False)


def _initial_params(ns, rng):
    init = ns.init or "random"
    if init == "random":
        return _random_params(ns, rng)
    if init == "psi_w_ti":
        _need(ns, "eps")
        a = psi_w_timps_tensor(ns.n, ns.eps)
        if ns.set == "ti":
            return ti_mps(a, ns.n)
        if ns.set == "pbc":
            return MpsPbc([a] * ns.n, translation_invariant=False)
        raise ValueError("init psi_w_ti needs --set ti or pbc")
    if init == "aklt":
        if ns.set == "ti":
            return ti_mps(aklt_tensor(), ns.n)
        if ns.set == "pbc":
            return MpsPbc([aklt_tensor()] * ns.n, translation_invariant=False)
        raise ValueError("init aklt needs --set ti or pbc")
    raise _UsageError(f"unknown init {init!r}")


def _cmd_optimize(ns) -> int:
    _need(ns, "set", "n", "m")
    if ns.set not in ("obc", "pbc", "ti"):
        raise _UsageError("--set must be obc, pbc, or ti")
    lam = ns.lam if ns.lam is not None else 0.0
    reg = ns.reg or "none"
    kind = ns.objective or "distance"
    if kind == "distance":
        target = ns.target or "w"
        if target != "w":
            raise ValueError(f"unknown target {target!r}")
        obj = distance_objective(w_state(ns.n, ns.d or 2), reg, lam)
    elif kind == "energy":
        theta = ns.theta if ns.theta is not None else 0.0
        if (ns.d or 3) != 3:
            raise ValueError("energy objective uses spin-1 sites; --d must be 3")
        ns.d = 3
        obj = energy_objective(
            blbq_hamiltonian(ns.n, theta, pbc=ns.set != "obc"), reg, lam
        )
    else:
        raise _UsageError("--objective must be distance or energy")
    rng = np.random.default_rng(ns.seed or 0)
    init = _initial_params(ns, rng)
    budget = ns.budget or 100
    threshold = ns.divergence_threshold if ns.divergence_threshold is not None else 1e6
    trace = run_experiment(obj, init, budget, threshold)
    rows = []
    for rec in trace.records:
        rows.append(
            (
                rec.iteration,
                rec.f,
                rec.f_reg,
                rec.overlap,
                rec.max_abs_entry,
                json.dumps(list(rec.frobenius_norms), separators=(",", ":")),
                rec.transfer_product_norm,
                rec.flag,
            )
        )
    header = [
        "iteration",
        "f",
        "f_reg",
        "overlap",
        "max_abs_entry",
        "frobenius_norms",
        "transfer_product_norm",
        "flag",
    ]
    _write_csv(ns.out, header, rows)
    print(trace.termination)
    return 0


# -------------------------------------------------------------------- sweep

def _parse_grid(text: str) -> list[float]:
    """Either a comma list of values or 'A..B' walking decades from A to B."""
    if ".." in text:
        lo_s, hi_s = text.split("..", 1)
        e1 = math.log10(float(lo_s))
        e2 = math.log10(float(hi_s))
        for e in (e1, e2):
            if abs(e - round(e)) > 1e-9:
                raise ValueError("decade grids need power-of-ten endpoints")
        e1, e2 = round(e1), round(e2)
        step = 1 if e2 >= e1 else -1
        return [10.0 ** e for e in range(e1, e2 + step, step)]
    return [float(x) for x in text.split(",")]


def _cmd_sweep(ns) -> int:
    _need(ns, "family", "n", "eps")
    if ns.family != "psi_w":
        raise ValueError(f"sweep supports family psi_w, not {ns.family!r}")
    grid = sorted(_parse_grid(ns.eps))
    w = np.asarray(as_array(w_state(ns.n))).ravel()
    rows = []
    for eps in grid:
        vec = np.asarray(as_array(psi_w(ns.n, eps))).ravel()
        overlap = float(abs(np.vdot(w, vec)))
        a = np.asarray(as_array(psi_w_timps_tensor(ns.n, eps)))
        max_entry = float(np.sqrt(np.einsum("sab,sab->ab", a.conj(), a).real.max()))
        rows.append((eps, overlap, max_entry))
    _write_csv(ns.out, ["eps", "overlap", "max_abs_entry"], rows)
    return 0


# ------------------------------------------------------------------ parsing

_COMMANDS = {
    "construct": _cmd_construct,
    "certify": _cmd_certify,
    "schmidt": _cmd_schmidt,
    "injectivity": _cmd_injectivity,
    "geometry": _cmd_geometry,
    "optimize": _cmd_optimize,
    "sweep": _cmd_sweep,
}


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; explicit flags win")
    common.add_argument("--out", help="output file (default depends on command)")
    common.add_argument("--tol", type=float, help="numerical tolerance")

    parser = _Parser(prog="tnslab", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    by_name = {}

    p = subs.add_parser("construct", parents=[common])
    p.add_argument("--family")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--seed", type=int)
    by_name["construct"] = p

    p = subs.add_parser("certify", parents=[common])
    p.add_argument("--input")
    p.add_argument("--checks", help="comma list: wellformed,norm,canonical,ti,isometry")
    by_name["certify"] = p

    p = subs.add_parser("schmidt", parents=[common])
    p.add_argument("--input")
    p.add_argument("--dims", help="comma list of site dimensions")
    p.add_argument("--d", type=int)
    p.add_argument("--cut", type=int)
    by_name["schmidt"] = p

    p = subs.add_parser("injectivity", parents=[common])
    p.add_argument("--input")
    p.add_argument("--family")
    p.add_argument("--n", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--max-len", type=int, dest="max_len")
    by_name["injectivity"] = p

    p = subs.add_parser("geometry", parents=[common])
    p.add_argument("--state")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--seed", type=int)
    by_name["geometry"] = p

    p = subs.add_parser("optimize", parents=[common])
    p.add_argument("--objective")
    p.add_argument("--set", dest="set")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--target")
    p.add_argument("--theta", type=float)
    p.add_argument("--reg")
    p.add_argument("--lambda", type=float, dest="lam")
    p.add_argument("--budget", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--init")
    p.add_argument("--divergence-threshold", type=float, dest="divergence_threshold")
    by_name["optimize"] = p

    p = subs.add_parser("sweep", parents=[common])
    p.add_argument("--family")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--eps", help="comma list or A..B decade grid")
    by_name["sweep"] = p

    return parser, by_name


def _config_path(argv) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config":
            if i + 1 >= len(argv):
                raise _UsageError("--config needs a path")
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _parse(argv):
    parser, by_name = _build_parser()
    cfg_path = _config_path(argv)
    if cfg_path is not None:
        with open(cfg_path, encoding="utf-8") as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise ValueError("config must be a JSON object")
        sub = next((t for t in argv if t in by_name), None)
        if sub is None:
            raise _UsageError("a subcommand is required with --config")
        dests = {a.dest for a in by_name[sub]._actions}
        unknown = sorted(set(cfg) - dests)
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        by_name[sub].set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        ns = _parse(args)
        return _COMMANDS[ns.command](ns)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 64
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    except (TnsError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
