"""Tree tensor network states: evaluation, decomposition of a dense state by
root-directed RQ sweeps, and the orthonormal (isometric) form."""
from __future__ import annotations

import math
from collections import deque

import numpy as np

from .errors import (
    DimensionMismatchError,
    NormalizationError,
    RankError,
)
from .tensors import (
    DEFAULT_EVAL_CAP,
    DenseTensor,
    as_array,
    check_capacity,
    reduced_qr,
    reduced_rq,
)


def _edge_key(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


class TreeNetwork:
    """Connected loop-free graph on vertices 1..N with site and bond dims."""

    __slots__ = ("dims", "edges", "_adj")

    def __init__(self, dims, edges):
        self.dims = tuple(int(d) for d in dims)
        n = len(self.dims)
        if n < 1 or any(d < 1 for d in self.dims):
            raise ValueError("site dimensions must be positive")
        es = []
        seen = set()
        for e in edges:
            i, j, m = (int(x) for x in e)
            if not (1 <= i <= n and 1 <= j <= n) or i == j:
                raise ValueError(f"bad edge ({i},{j}) for {n} vertices")
            if m < 1:
                raise ValueError("bond dimensions must be at least 1")
            key = _edge_key(i, j)
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            es.append((key[0], key[1], m))
        if len(es) != n - 1:
            raise ValueError(f"a tree on {n} vertices needs {n - 1} edges, got {len(es)}")
        adj: dict[int, list[int]] = {v: [] for v in range(1, n + 1)}
        for i, j, _ in es:
            adj[i].append(j)
            adj[j].append(i)
        # connectivity
        if n > 1:
            seen_v = {1}
            queue = deque([1])
            while queue:
                v = queue.popleft()
                for w in adj[v]:
                    if w not in seen_v:
                        seen_v.add(w)
                        queue.append(w)
            if len(seen_v) != n:
                raise ValueError("edge list does not connect all vertices")
        self.edges = tuple(es)
        self._adj = {v: tuple(sorted(nbs)) for v, nbs in adj.items()}

    @property
    def n(self) -> int:
        return len(self.dims)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def edge_dim(self, i: int, j: int) -> int:
        key = _edge_key(i, j)
        for a, b, m in self.edges:
            if (a, b) == key:
                return m
        raise KeyError(f"no edge {key}")

    def with_edge_dims(self, realized: dict[tuple[int, int], int]) -> "TreeNetwork":
        edges = [(i, j, realized.get((i, j), m)) for i, j, m in self.edges]
        return TreeNetwork(self.dims, edges)

    def distances_from(self, root: int) -> dict[int, int]:
        dist = {root: 0}
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w in self.neighbors(v):
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        return dist

    def parents_toward(self, root: int) -> dict[int, int]:
        """Parent map directing every non-root vertex toward the root."""
        dist = self.distances_from(root)
        parent = {}
        for v in range(1, self.n + 1):
            if v == root:
                continue
            parent[v] = min(w for w in self.neighbors(v) if dist[w] == dist[v] - 1)
        return parent

    def __repr__(self) -> str:
        return f"TreeNetwork(dims={self.dims}, edges={self.edges})"


class Ttns:
    """Tree tensor network state.

    Tensor axes per vertex: physical axis first, then one axis per incident
    edge, edges sorted by neighbor vertex id.
    """

    __slots__ = ("network", "tensors")

    def __init__(self, network: TreeNetwork, tensors):
        ts = tuple(
            t if isinstance(t, DenseTensor) else DenseTensor(t) for t in tensors
        )
        if len(ts) != network.n:
            raise DimensionMismatchError(
                f"need {network.n} tensors, got {len(ts)}"
            )
        for v in range(1, network.n + 1):
            want = (network.dims[v - 1],) + tuple(
                network.edge_dim(v, nb) for nb in network.neighbors(v)
            )
            if ts[v - 1].shape != want:
                raise DimensionMismatchError(
                    f"vertex {v} tensor shape {ts[v - 1].shape} != expected {want}"
                )
        self.network = network
        self.tensors = ts

    def tensor_at(self, v: int) -> DenseTensor:
        return self.tensors[v - 1]

    def __repr__(self) -> str:
        return f"Ttns(n={self.network.n}, dims={self.network.dims})"


def eval_ttns(t: Ttns, cap: int = DEFAULT_EVAL_CAP) -> DenseTensor:
    """Contract the whole tree into the dense state (axes ordered by vertex id)."""
    net = t.network
    check_capacity(math.prod(net.dims), cap=cap, what="full state")

    def sub(v: int, parent: int | None):
        arr = as_array(t.tensor_at(v))
        labels: list[tuple] = [("p", v)] + [("b", v, nb) for nb in net.neighbors(v)]
        for nb in net.neighbors(v):
            if nb == parent:
                continue
            carr, clabels = sub(nb, v)
            i = labels.index(("b", v, nb))
            j = clabels.index(("b", nb, v))
            arr = np.tensordot(arr, carr, axes=([i], [j]))
            check_capacity(arr.size, what="tree contraction intermediate")
            labels = [lb for k, lb in enumerate(labels) if k != i] + [
                lb for k, lb in enumerate(clabels) if k != j
            ]
        return arr, labels

    arr, labels = sub(1, None)
    order = sorted(range(len(labels)), key=lambda k: labels[k][1])
    return DenseTensor(arr.transpose(order))


def _visit_order(net: TreeNetwork, root: int, outward: bool) -> list[int]:
    """Non-root vertices ordered by distance from root; ties by smallest id."""
    dist = net.distances_from(root)
    vs = [v for v in range(1, net.n + 1) if v != root]
    vs.sort(key=lambda v: (-dist[v] if not outward else dist[v], v))
    return vs


def from_state_ttns(psi, net: TreeNetwork, root: int) -> Ttns:
    """Decompose a dense state over the given tree by a leaves-to-root RQ sweep.

    Realized bond dimensions equal the Schmidt ranks of the edge bipartitions;
    declared bond dims act as capacities (exceeding one raises RankError).
    """
    if net.degree(root) != 1 and net.n > 1:
        raise ValueError(f"root {root} must be a leaf")
    arr = as_array(psi).reshape(net.dims)
    nrm = float(np.linalg.norm(arr))
    if abs(nrm - 1.0) > 1e-8:
        raise NormalizationError(f"state norm {nrm!r} differs from 1 by more than 1e-8")
    parent = net.parents_toward(root)
    labels: list[tuple] = [("p", v) for v in range(1, net.n + 1)]
    current = arr
    tensors: dict[int, DenseTensor] = {}
    realized: dict[tuple[int, int], int] = {}
    for v in _visit_order(net, root, outward=False):
        children = sorted(nb for nb in net.neighbors(v) if nb != parent[v])
        group = [("p", v)] + [("b", _edge_key(v, c)) for c in children]
        idx = [labels.index(g) for g in group]
        rest = [k for k in range(current.ndim) if k not in idx]
        mat = current.transpose(rest + idx).reshape(
            math.prod(current.shape[k] for k in rest) if rest else 1,
            math.prod(current.shape[k] for k in idx),
        )
        group_shape = tuple(current.shape[k] for k in idx)
        r, q = reduced_rq(mat)
        rank = q.shape[0]
        if rank == 0:
            raise NormalizationError("zero state cannot be decomposed")
        cap_e = net.edge_dim(v, parent[v])
        if rank > cap_e:
            raise RankError(
                f"edge ({v},{parent[v]}) needs bond dimension {rank}, "
                f"network allows {cap_e}"
            )
        realized[_edge_key(v, parent[v])] = rank
        qt = q.array.reshape((rank,) + group_shape)
        # qt axes: (parent bond, physical, child bonds sorted by child id)
        nbs = net.neighbors(v)
        perm = [1] + [0 if nb == parent[v] else 2 + children.index(nb) for nb in nbs]
        tensors[v] = DenseTensor(qt.transpose(perm))
        current = r.array.reshape(tuple(current.shape[k] for k in rest) + (rank,))
        labels = [labels[k] for k in rest] + [("b", _edge_key(v, parent[v]))]
    if net.n == 1:
        tensors[root] = DenseTensor(current.reshape(net.dims[0]))
    else:
        i = labels.index(("p", root))
        tensors[root] = DenseTensor(current.transpose([i, 1 - i]))
    new_net = net.with_edge_dims(realized)
    return Ttns(new_net, [tensors[v] for v in range(1, net.n + 1)])


def orthonormalize_ttns(t: Ttns, root: int) -> Ttns:
    """Isometric (orthonormal) form with respect to `root`.

    Three sweeps: leaves-to-root RQ, root-to-leaves QR, leaves-to-root RQ.
    The first makes every subtree map injective, the second does the same for
    the root sides, so the final sweep lands on exact Schmidt ranks at every
    edge.  All non-root tensors end up isometric with their root-directed
    edge as rows; the root tensor absorbs the remaining norm and phase.
    """
    net = t.network
    if net.n == 1:
        if float(np.linalg.norm(as_array(t.tensor_at(1)))) == 0.0:
            raise NormalizationError("zero state cannot be orthonormalized")
        return t
    if net.degree(root) != 1:
        raise ValueError(f"root {root} must be a leaf")
    parent = net.parents_toward(root)
    arrs = {v: np.asarray(as_array(t.tensor_at(v))) for v in range(1, net.n + 1)}
    dims: dict[tuple[int, int], int] = {
        _edge_key(i, j): m for i, j, m in net.edges
    }

    def axis_of(v: int, nb: int) -> int:
        return 1 + net.neighbors(v).index(nb)

    def rq_toward_root(v: int) -> None:
        p = parent[v]
        ax = axis_of(v, p)
        arr = arrs[v]
        rest = [k for k in range(arr.ndim) if k != ax]
        mat = arr.transpose([ax] + rest).reshape(arr.shape[ax], -1)
        r, q = reduced_rq(mat)
        rank = q.shape[0]
        if rank == 0:
            raise NormalizationError("zero state cannot be orthonormalized")
        new = q.array.reshape((rank,) + tuple(arr.shape[k] for k in rest))
        arrs[v] = np.moveaxis(new, 0, ax)
        pax = axis_of(p, v)
        upd = np.tensordot(arrs[p], r.array, axes=([pax], [0]))
        arrs[p] = np.moveaxis(upd, -1, pax)
        dims[_edge_key(v, p)] = rank

    def qr_toward_child(v: int, c: int) -> None:
        ax = axis_of(v, c)
        arr = arrs[v]
        rest = [k for k in range(arr.ndim) if k != ax]
        mat = arr.transpose(rest + [ax]).reshape(-1, arr.shape[ax])
        q, r = reduced_qr(mat)
        rank = q.shape[1]
        if rank == 0:
            raise NormalizationError("zero state cannot be orthonormalized")
        new = q.array.reshape(tuple(arr.shape[k] for k in rest) + (rank,))
        arrs[v] = np.moveaxis(new, -1, ax)
        cax = axis_of(c, v)
        upd = np.tensordot(arrs[c], r.array, axes=([cax], [1]))
        arrs[c] = np.moveaxis(upd, -1, cax)
        dims[_edge_key(v, c)] = rank

    for v in _visit_order(net, root, outward=False):
        rq_toward_root(v)
    for v in [root] + _visit_order(net, root, outward=True):
        for c in sorted(nb for nb in net.neighbors(v) if nb != parent.get(v)):
            qr_toward_child(v, c)
    for v in _visit_order(net, root, outward=False):
        rq_toward_root(v)

    new_net = net.with_edge_dims(dims)
    return Ttns(new_net, [arrs[v] for v in range(1, net.n + 1)])
