"""Deterministic liftings of protographs from large-girth regular graphs.

The pipeline is: a ``|E|``-regular bipartite graph (``d2q_graph``, a
bipartite double cover, or any user file), a proper ``|E|``-edge-colouring,
then node splitting, which sends the colour-``j`` edge at each vertex to the
copy of protograph edge ``j``.  The result is a copy-permute lifting whose
girth is at least that of the regular graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .proto_core import BaseMatrix, Protograph, as_protograph


class LiftError(ValueError):
    pass


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    return all(q % k for k in range(2, math.isqrt(q) + 1))


@dataclass
class RegularBipartiteGraph:
    """Simple ``d``-regular bipartite graph given as an edge list.

    ``color`` (0-based, optional) is a proper edge colouring with ``d`` colours.
    """

    n_left: int
    n_right: int
    degree: int
    left: np.ndarray
    right: np.ndarray
    color: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.left = np.asarray(self.left, dtype=np.int64)
        self.right = np.asarray(self.right, dtype=np.int64)
        if self.color is not None:
            self.color = np.asarray(self.color, dtype=np.int64)
        self.validate()

    @property
    def num_edges(self) -> int:
        return len(self.left)

    def validate(self) -> None:
        d = self.degree
        if len(self.left) != len(self.right):
            raise LiftError("edge arrays differ in length")
        if self.n_left * d != self.num_edges or self.n_right * d != self.num_edges:
            raise LiftError("edge count inconsistent with regularity")
        if self.num_edges:
            if not (np.bincount(self.left, minlength=self.n_left) == d).all():
                raise LiftError("left side is not regular")
            if not (np.bincount(self.right, minlength=self.n_right) == d).all():
                raise LiftError("right side is not regular")
            key = self.left * self.n_right + self.right
            if np.unique(key).size != key.size:
                raise LiftError("graph has parallel edges")

    def neighbors(self) -> list[np.ndarray]:
        """Sorted neighbour list of each left vertex."""
        order = np.lexsort((self.right, self.left))
        return np.split(self.right[order], np.cumsum(np.bincount(self.left, minlength=self.n_left))[:-1])

    def coloring_is_proper(self) -> bool:
        if self.color is None:
            return False
        c = self.color
        if c.min(initial=0) < 0 or c.max(initial=0) >= self.degree:
            return False
        d = self.degree
        return (
            np.unique(self.left * d + c).size == self.num_edges
            and np.unique(self.right * d + c).size == self.num_edges
        )

    def with_color(self, color) -> "RegularBipartiteGraph":
        return RegularBipartiteGraph(self.n_left, self.n_right, self.degree, self.left, self.right, color, dict(self.meta))

    # -- file format: "bipartite n_L n_R d" then "left right [color]" lines

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"bipartite {self.n_left} {self.n_right} {self.degree}\n")
            if self.color is None:
                np.savetxt(fh, np.column_stack([self.left, self.right]), fmt="%d")
            else:
                np.savetxt(fh, np.column_stack([self.left, self.right, self.color]), fmt="%d")

    @classmethod
    def read(cls, path) -> "RegularBipartiteGraph":
        with open(path) as fh:
            header = fh.readline().split()
            if len(header) != 4 or header[0] != "bipartite":
                raise LiftError(f"{path}: expected header 'bipartite n_L n_R d'")
            n_l, n_r, d = (int(x) for x in header[1:])
            data = np.loadtxt(fh, dtype=np.int64, ndmin=2)
        if data.size == 0:
            data = np.zeros((0, 2), dtype=np.int64)
        if data.shape[1] not in (2, 3):
            raise LiftError(f"{path}: edge lines must have 2 or 3 fields")
        color = data[:, 2] if data.shape[1] == 3 else None
        return cls(n_l, n_r, d, data[:, 0], data[:, 1], color)


def d2q_graph(q: int) -> RegularBipartiteGraph:
    """The ``D(2, q)`` biaffine incidence graph over ``F_q``, ``q`` prime.

    Point ``(p1, p11)`` (index ``p1*q + p11``) is joined to line ``[l1, l11]``
    (index ``l1*q + l11``) iff ``l11 - p11 = l1*p1 (mod q)``.  The closed-form
    colouring ``p1 + l1 (mod q)`` is attached.
    """
    if q < 5 or not is_prime(q):
        raise LiftError(f"q must be a prime >= 5, got {q}")
    p1, p11, l1 = np.meshgrid(np.arange(q), np.arange(q), np.arange(q), indexing="ij")
    l11 = (p11 + l1 * p1) % q
    left = (p1 * q + p11).ravel()
    right = (l1 * q + l11).ravel()
    color = ((p1 + l1) % q).ravel()
    return RegularBipartiteGraph(q * q, q * q, q, left, right, color, {"kind": "d2q", "q": q})


def bipartite_double_cover(n: int, edges) -> RegularBipartiteGraph:
    """Bipartite double cover of a simple ``d``-regular graph on ``n`` vertices."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if (e[:, 0] == e[:, 1]).any():
        raise LiftError("input graph has self-loops")
    deg = np.bincount(e.ravel(), minlength=n)
    if n == 0 or not (deg == deg[0]).all():
        raise LiftError("input graph is not regular")
    lo, hi = e.min(axis=1), e.max(axis=1)
    if np.unique(lo * n + hi).size != len(e):
        raise LiftError("input graph has parallel edges")
    left = np.concatenate([e[:, 0], e[:, 1]])
    right = np.concatenate([e[:, 1], e[:, 0]])
    return RegularBipartiteGraph(n, n, int(deg[0]), left, right, meta={"kind": "double-cover"})


def edge_color(g: RegularBipartiteGraph, use_existing: bool = True) -> np.ndarray:
    """Proper ``d``-edge-colouring of a ``d``-regular bipartite graph.

    Reuses an attached proper colouring (e.g. the closed form of ``D(2,q)``)
    unless ``use_existing`` is false; otherwise colours edge by edge, swapping
    colours along an alternating path when the endpoints' free colours differ.
    """
    if use_existing and g.coloring_is_proper():
        return g.color.copy()
    return _konig_color(g.left, g.right, g.n_left, g.n_right, g.degree)


@numba.njit(cache=True)
def _konig_color(left, right, n_left, n_right, d):
    m = left.shape[0]
    at_l = np.full((n_left, d), -1, dtype=np.int64)
    at_r = np.full((n_right, d), -1, dtype=np.int64)
    color = np.full(m, -1, dtype=np.int64)
    for e in range(m):
        u, w = left[e], right[e]
        a = 0
        while at_l[u, a] != -1:
            a += 1
        b = 0
        while at_r[w, b] != -1:
            b += 1
        if at_r[w, a] != -1:
            # Swap colours a/b along the path from w that alternates a, b, ...
            # In a bipartite graph this path never reaches u.
            path = []
            x, on_right, c = w, True, a
            while True:
                f = at_r[x, c] if on_right else at_l[x, c]
                if f == -1:
                    break
                path.append(f)
                x = left[f] if on_right else right[f]
                on_right = not on_right
                c = b if c == a else a
            for f in path:
                old = color[f]
                if at_l[left[f], old] == f:
                    at_l[left[f], old] = -1
                if at_r[right[f], old] == f:
                    at_r[right[f], old] = -1
            for f in path:
                new = b if color[f] == a else a
                color[f] = new
                at_l[left[f], new] = f
                at_r[right[f], new] = f
        color[e] = a
        at_l[u, a] = e
        at_r[w, a] = e
    return color


def degree_split(g: RegularBipartiteGraph, t: int) -> RegularBipartiteGraph:
    """Split each vertex into ``d/t`` vertices; copy ``k`` keeps colours
    ``k*t .. k*t + t - 1``.  Girth does not decrease."""
    d = g.degree
    if t < 1 or d % t:
        raise LiftError(f"target degree {t} does not divide {d}")
    color = edge_color(g)
    s = d // t
    return RegularBipartiteGraph(
        g.n_left * s, g.n_right * s, t,
        g.left * s + color // t, g.right * s + color // t, color % t,
        {"kind": "degree-split", "from_degree": d},
    )


# ---------------------------------------------------------------------------
# Lifted graphs


@dataclass
class LiftedGraph:
    """A ``T``-fold lifting.  Bit ``(v, t)`` has index ``v*T + t`` and check
    ``(c, t)`` has index ``c*T + t``.  Lifted edge ``e*T + t`` has type ``e``
    and joins ``(v(e), t)`` to ``(c(e), perms[e, t])``."""

    protograph: Protograph
    T: int
    perms: np.ndarray
    edge_bit: np.ndarray
    edge_check: np.ndarray
    edge_type: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.T * self.protograph.num_bits

    @property
    def m(self) -> int:
        return self.T * self.protograph.num_checks

    @property
    def num_edges(self) -> int:
        return len(self.edge_bit)

    def recover_permutations(self) -> np.ndarray:
        """Read the per-type permutations back off the expanded edge list."""
        p, T = self.protograph, self.T
        perms = np.empty((p.num_edges, T), dtype=np.int64)
        copy = self.edge_bit % T
        perms[self.edge_type, copy] = self.edge_check - p.edge_chk[self.edge_type] * T
        return perms

    def write_alist(self, path) -> None:
        write_alist(path, self.n, self.m, self.edge_bit, self.edge_check)

    def write_permutations(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"{self.T}\n")
            for row in self.perms:
                fh.write(" ".join(map(str, row)) + "\n")


def copy_permute(p: Protograph | BaseMatrix, T: int, perms) -> LiftedGraph:
    p = as_protograph(p)
    perms = np.asarray(perms, dtype=np.int64).reshape(p.num_edges, T)
    ident = np.arange(T)
    for e, row in enumerate(perms):
        if not np.array_equal(np.sort(row), ident):
            raise LiftError(f"entry {e} is not a permutation of 0..{T - 1}")
    t = np.tile(ident, p.num_edges)
    etype = np.repeat(np.arange(p.num_edges), T)
    bit = p.edge_var[etype] * T + t
    chk = p.edge_chk[etype] * T + perms.ravel()
    key = bit * (p.num_checks * T) + chk
    uniq, first, counts = np.unique(key, return_index=True, return_counts=True)
    if (counts > 1).any():
        k = uniq[counts > 1][0]
        dup = np.flatnonzero(key == k)
        raise LiftError(
            f"parallel lifted edges: types {etype[dup].tolist()} collide at copy {int(t[dup[0]])}"
        )
    perms = perms.copy()
    return LiftedGraph(p, T, perms, bit, chk, etype)


def node_split(p: Protograph | BaseMatrix, g: RegularBipartiteGraph) -> LiftedGraph:
    """Lift ``p`` from a colored ``|E|``-regular bipartite graph.

    Colour ``j`` is identified with protograph edge ``j``; the colour-``j``
    matching of ``g`` becomes the permutation of edge type ``j``.
    """
    p = as_protograph(p)
    if g.degree != p.num_edges:
        raise LiftError(f"graph degree {g.degree} != protograph edge count {p.num_edges}")
    if g.n_left != g.n_right:
        raise LiftError("graph sides differ in size")
    color = edge_color(g)
    T = g.n_left
    perms = np.empty((p.num_edges, T), dtype=np.int64)
    perms[color, g.left] = g.right
    lifted = copy_permute(p, T, perms)
    lifted.meta = {"T": T, "color_to_edge": "identity", "graph": dict(g.meta)}
    return lifted


def validate_lift(lifted: LiftedGraph) -> None:
    """Check that every lifted node carries exactly its protograph node's
    edge-type multiset and that the graph is simple."""
    p, T = lifted.protograph, lifted.T
    etype = lifted.edge_type
    nt = p.num_edges
    got_b = np.bincount(lifted.edge_bit * nt + etype, minlength=lifted.n * nt).reshape(lifted.n, nt)
    want_b = np.zeros((p.num_bits, nt), dtype=np.int64)
    want_b[p.edge_var, np.arange(nt)] = 1
    if not (got_b == np.repeat(want_b, T, axis=0)).all():
        raise LiftError("bit-side edge types do not match the protograph")
    got_c = np.bincount(lifted.edge_check * nt + etype, minlength=lifted.m * nt).reshape(lifted.m, nt)
    want_c = np.zeros((p.num_checks, nt), dtype=np.int64)
    want_c[p.edge_chk, np.arange(nt)] = 1
    if not (got_c == np.repeat(want_c, T, axis=0)).all():
        raise LiftError("check-side edge types do not match the protograph")
    key = lifted.edge_bit * lifted.m + lifted.edge_check
    if np.unique(key).size != key.size:
        raise LiftError("lifted graph has parallel edges")


# ---------------------------------------------------------------------------
# alist / permutation files


def write_alist(path, n: int, m: int, bit: np.ndarray, chk: np.ndarray) -> None:
    """MacKay alist: sizes, max weights, weights, then 1-based column lists
    and row lists padded with zeros."""
    order_b = np.lexsort((chk, bit))
    order_c = np.lexsort((bit, chk))
    cw = np.bincount(bit, minlength=n)
    rw = np.bincount(chk, minlength=m)
    with open(path, "w") as fh:
        fh.write(f"{n} {m}\n{cw.max()} {rw.max()}\n")
        fh.write(" ".join(map(str, cw)) + "\n")
        fh.write(" ".join(map(str, rw)) + "\n")
        for rows, width in ((np.split(chk[order_b] + 1, np.cumsum(cw)[:-1]), cw.max()),
                            (np.split(bit[order_c] + 1, np.cumsum(rw)[:-1]), rw.max())):
            for r in rows:
                pad = np.zeros(width, dtype=np.int64)
                pad[: len(r)] = r
                fh.write(" ".join(map(str, pad)) + "\n")


def read_alist(path) -> tuple[int, int, np.ndarray, np.ndarray]:
    """Return ``(n, m, edge_bit, edge_check)`` (0-based) from an alist file."""
    with open(path) as fh:
        tokens = fh.read().split()
    it = iter(int(t) for t in tokens)
    n, m = next(it), next(it)
    max_cw, _ = next(it), next(it)
    cw = [next(it) for _ in range(n)]
    for _ in range(m):
        next(it)
    bits, chks = [], []
    for v in range(n):
        row = [next(it) for _ in range(max_cw)]
        for c in row[: cw[v]]:
            bits.append(v)
            chks.append(c - 1)
    return n, m, np.array(bits, dtype=np.int64), np.array(chks, dtype=np.int64)


def read_permutations(path) -> tuple[int, np.ndarray]:
    with open(path) as fh:
        T = int(fh.readline())
        perms = np.loadtxt(fh, dtype=np.int64, ndmin=2)
    return T, perms


# ---------------------------------------------------------------------------
# girth


@numba.njit(cache=True, nogil=True)
def _girth(n, ptr, nbr, eid, sources, cap):
    best = cap
    dist = np.full(n, -1, dtype=np.int64)
    pedge = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    touched = np.empty(n, dtype=np.int64)
    for s in sources:
        head, tail, nt = 0, 1, 1
        queue[0] = s
        touched[0] = s
        dist[s] = 0
        while head < tail:
            u = queue[head]
            head += 1
            if 2 * dist[u] + 1 >= best:
                break
            for k in range(ptr[u], ptr[u + 1]):
                if eid[k] == pedge[u]:
                    continue
                w = nbr[k]
                if dist[w] == -1:
                    dist[w] = dist[u] + 1
                    pedge[w] = eid[k]
                    queue[tail] = w
                    tail += 1
                    touched[nt] = w
                    nt += 1
                else:
                    L = dist[u] + dist[w] + 1
                    if L < best:
                        best = L
        for k in range(nt):
            dist[touched[k]] = -1
            pedge[touched[k]] = -1
    return best


def _edge_view(g) -> tuple[int, np.ndarray, np.ndarray, int | None]:
    """(vertex count, u, w, number of 'left' vertices or None)."""
    if isinstance(g, RegularBipartiteGraph):
        return g.n_left + g.n_right, g.left, g.right + g.n_left, g.n_left
    if isinstance(g, LiftedGraph):
        return g.n + g.m, g.edge_bit, g.edge_check + g.n, g.n
    if isinstance(g, (Protograph, BaseMatrix)):
        p = as_protograph(g)
        return p.num_bits + p.num_checks, p.edge_var, p.edge_chk + p.num_bits, p.num_bits
    n, edges = g
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return int(n), e[:, 0], e[:, 1], None


def girth(g, cap: int | None = None) -> float:
    """Length of the shortest cycle, ``math.inf`` when acyclic.

    Accepts a RegularBipartiteGraph, LiftedGraph, Protograph/BaseMatrix
    (parallel edges count as 2-cycles) or an ``(n, edges)`` pair.  With
    ``cap``, only cycles shorter than ``cap`` are searched and ``cap`` is
    returned when none exists (a lower-bound certificate).
    """
    n, u, w, n_left = _edge_view(g)
    m = len(u)
    ends = np.concatenate([u, w])
    other = np.concatenate([w, u])
    ids = np.concatenate([np.arange(m), np.arange(m)])
    order = np.argsort(ends, kind="stable")
    ptr = np.zeros(n + 1, dtype=np.int64)
    ptr[1:] = np.cumsum(np.bincount(ends, minlength=n))
    # every cycle in a bipartite graph passes through the left side
    sources = np.arange(n_left if n_left is not None else n, dtype=np.int64)
    limit = np.iinfo(np.int64).max if cap is None else int(cap)
    best = _girth(n, ptr, other[order], ids[order], sources, limit)
    if cap is None and best == limit:
        return math.inf
    return int(best)
