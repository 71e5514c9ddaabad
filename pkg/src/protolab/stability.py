"""Linear stability of BEC protograph density evolution around the origin.

The Jacobian of the recursion at ``x = 0`` equals ``eps * A`` for a 0/1
pattern ``A`` that depends only on the protograph, so one Perron-root
computation on ``A`` gives the stability limit ``1 / rho(A)`` for every
``eps``.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np

from .proto_core import BaseMatrix, Protograph, as_protograph, deg2_edges


@dataclass(frozen=True)
class GradientPattern:
    """0/1 Jacobian pattern plus its strongly connected components.

    ``components`` lists SCCs (as sorted edge-index lists) in topological
    order of the condensation, i.e. the diagonal blocks of a Frobenius
    normal form.
    """

    matrix: np.ndarray
    components: list[list[int]]

    @property
    def num_blocks(self) -> int:
        return len(self.components)

    def nontrivial_components(self) -> list[list[int]]:
        a = self.matrix
        return [c for c in self.components if len(c) > 1 or a[c[0], c[0]]]


@dataclass(frozen=True)
class StabilityReport:
    case: int
    r_max: int
    rho: float
    epsilon_star: float

    @property
    def case_bound(self) -> float:
        """Stability guarantee of the applicable structural case."""
        if self.case == 1:
            return math.inf
        if self.case == 2:
            return 1.0
        return 1.0 / self.r_max

    def csv_row(self) -> list[str]:
        return [str(self.case), str(self.r_max), f"{self.rho:.6f}", f"{self.epsilon_star:.6f}"]


def strongly_connected_components(adj: list[list[int]]) -> list[list[int]]:
    """Tarjan's algorithm, iterative.  Components come out in topological
    order (sources first)."""
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, k = work[-1]
            if k == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            if k < len(adj[v]):
                work[-1] = (v, k + 1)
                w = adj[v][k]
                if index[w] == -1:
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp))
    # Tarjan emits sinks first
    out.reverse()
    return out


def gradient_pattern(p: Protograph | BaseMatrix) -> GradientPattern:
    p = as_protograph(p)
    n = p.num_edges
    a = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        if p.edge_l(i) != 2:
            continue
        (j,) = p.ev(i)
        a[i, p.ec(j)] = 1
    adj = [np.flatnonzero(row).tolist() for row in a]
    return GradientPattern(a, strongly_connected_components(adj))


class SpectralRadiusError(RuntimeError):
    pass


def _perron_root(block: np.ndarray, tol: float, max_iter: int) -> float:
    # (A + I)/2 is primitive for irreducible A, so the iteration converges;
    # Collatz-Wielandt ratios bracket the Perron root at every step.
    m = 0.5 * (block + np.eye(block.shape[0]))
    v = np.ones(block.shape[0])
    for _ in range(max_iter):
        w = m @ v
        ratios = w / v
        lo, hi = ratios.min(), ratios.max()
        if 2.0 * (hi - lo) <= tol:
            return float(2.0 * (0.5 * (lo + hi)) - 1.0)
        v = w / w.max()
    raise SpectralRadiusError(f"power iteration did not converge in {max_iter} steps")


def spectral_radius(a: GradientPattern, tol: float = 1e-9, max_iter: int = 100_000) -> float:
    if not 0 < tol <= 1e-3:
        raise ValueError("tol must lie in (0, 1e-3]")
    rho = 0.0
    for comp in a.nontrivial_components():
        block = a.matrix[np.ix_(comp, comp)].astype(float)
        rho = max(rho, _perron_root(block, tol, max_iter))
    return rho


def _deg2_subgraph(p: Protograph) -> tuple[int, list[tuple[int, int]]]:
    nb = p.num_bits
    return nb + p.num_checks, [(int(p.edge_var[e]), nb + int(p.edge_chk[e])) for e in deg2_edges(p)]


def edge_blocks(n_nodes: int, edges: list[tuple[int, int]]) -> list[list[int]]:
    """Biconnected components of an undirected multigraph, as lists of edge ids."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n_nodes)]
    for k, (u, w) in enumerate(edges):
        adj[u].append((w, k))
        adj[w].append((u, k))
    disc = [-1] * n_nodes
    low = [0] * n_nodes
    estack: list[int] = []
    blocks: list[list[int]] = []
    timer = [0]

    def dfs(u, parent_edge):
        disc[u] = low[u] = timer[0]
        timer[0] += 1
        for w, k in adj[u]:
            if k == parent_edge:
                continue
            if disc[w] == -1:
                estack.append(k)
                dfs(w, k)
                low[u] = min(low[u], low[w])
                if low[w] >= disc[u]:
                    blk = []
                    while True:
                        e = estack.pop()
                        blk.append(e)
                        if e == k:
                            break
                    blocks.append(blk)
            elif disc[w] < disc[u]:
                estack.append(k)
                low[u] = min(low[u], disc[w])

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * n_nodes + 100))
    try:
        for s in range(n_nodes):
            if disc[s] == -1:
                dfs(s, -1)
    finally:
        sys.setrecursionlimit(limit)
    return blocks


def cycles_edge_disjoint(n_nodes: int, edges: list[tuple[int, int]]) -> bool:
    """True when no two cycles share an edge (every block is a bridge or a cycle)."""
    for blk in edge_blocks(n_nodes, edges):
        nodes = {x for k in blk for x in edges[k]}
        if len(blk) > 1 and len(blk) != len(nodes):
            return False
    return True


def cycles_vertex_disjoint(n_nodes: int, edges: list[tuple[int, int]]) -> bool:
    """True when every cycle is a block of its own and no node lies on two
    cycles.  This is what makes the strongly connected components of the
    gradient graph plain cycles: a check shared by two cycles lets a walk
    switch between them, and the Perron root then exceeds 1."""
    seen: set[int] = set()
    for blk in edge_blocks(n_nodes, edges):
        if len(blk) == 1:
            continue
        nodes = {x for k in blk for x in edges[k]}
        if len(blk) != len(nodes) or nodes & seen:
            return False
        seen |= nodes
    return True


def r_max(p: Protograph | BaseMatrix) -> int:
    """``max over e in E_2 of |E_c(e) & E_2|`` (0 when there are no degree-2 bits)."""
    p = as_protograph(p)
    e2 = set(deg2_edges(p).tolist())
    return max((sum(1 for i in p.ec(e) if i in e2) for e in e2), default=0)


def classify_stability(p: Protograph | BaseMatrix, tol: float = 1e-9) -> StabilityReport:
    """Structural case plus the exact limit ``1 / rho(A)``.

    Case 1: the degree-2 subgraph is a forest (stable for every erasure
    probability).  Case 2: its cycles share no node (stable below 1).
    Case 3: otherwise, with the row-sum bound ``1 / r_max``.
    """
    p = as_protograph(p)
    n_nodes, g2 = _deg2_subgraph(p)
    blocks = edge_blocks(n_nodes, g2)
    if all(len(b) == 1 for b in blocks):
        case = 1
    elif cycles_vertex_disjoint(n_nodes, g2):
        case = 2
    else:
        case = 3
    rho = spectral_radius(gradient_pattern(p), tol)
    eps_star = math.inf if rho == 0 else 1.0 / rho
    return StabilityReport(case, r_max(p), rho, eps_star)
