"""Protograph data model: base matrices, typed edges and edge neighborhoods.

Indices are 0-based throughout.  Edges are ordered variable-major: for each
bit node ``v``, for each check ``c``, one edge per parallel copy.  For the
2x4 example matrix this reproduces the usual figure numbering (the two
parallel edges of ``v_4`` to ``c_1`` are edges 7, 8 in 1-based terms).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


class ProtographError(ValueError):
    """Raised for malformed base matrices."""


@dataclass(frozen=True)
class BaseMatrix:
    """A ``|C| x |V|`` matrix of non-negative edge multiplicities."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.int64, copy=True)
        if a.ndim != 2 or a.size == 0:
            raise ProtographError("base matrix must be a non-empty 2-D array")
        if (a < 0).any():
            raise ProtographError("base matrix entries must be non-negative")
        zero_rows = np.flatnonzero(a.sum(axis=1) == 0)
        zero_cols = np.flatnonzero(a.sum(axis=0) == 0)
        if zero_rows.size:
            raise ProtographError(f"all-zero row(s): {zero_rows.tolist()}")
        if zero_cols.size:
            raise ProtographError(f"all-zero column(s): {zero_cols.tolist()}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def num_edges(self) -> int:
        return int(self.entries.sum())

    def column_sums(self) -> np.ndarray:
        return self.entries.sum(axis=0)

    def is_design_candidate(self) -> bool:
        """True when every bit node has degree at least 2."""
        return bool((self.column_sums() >= 2).all())

    def to_text(self) -> str:
        return "\n".join(" ".join(str(int(x)) for x in row) for row in self.entries) + "\n"

    def key(self) -> bytes:
        return repr(self.entries.shape).encode() + self.entries.tobytes()

    def __eq__(self, other):
        if not isinstance(other, BaseMatrix):
            return NotImplemented
        return self.entries.shape == other.entries.shape and bool((self.entries == other.entries).all())

    def __hash__(self):
        return hash(self.key())


def parse_base_matrix(text: str) -> BaseMatrix:
    """Parse whitespace-separated integer rows; ``#`` starts a comment."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            row = [int(tok) for tok in line.split()]
        except ValueError:
            raise ProtographError(f"line {lineno}: non-integer entry in {raw!r}") from None
        rows.append(row)
    if not rows:
        raise ProtographError("empty base matrix")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ProtographError(f"ragged rows: row {i} has {len(row)} entries, expected {width}")
    return BaseMatrix(np.array(rows, dtype=np.int64))


def _csr(groups: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    ptr = np.zeros(len(groups) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(g) for g in groups])
    idx = np.array([i for g in groups for i in g], dtype=np.int64)
    return ptr, idx


@dataclass(frozen=True)
class Protograph:
    """Typed-edge multigraph view of a base matrix.

    ``ev_ptr/ev_idx`` and ``ec_ptr/ec_idx`` are CSR encodings of the sets
    ``E_v(e)`` and ``E_c(e)``: the *other* edges sharing the bit node
    (resp. check node) of edge ``e``.
    """

    base: BaseMatrix
    edge_var: np.ndarray
    edge_chk: np.ndarray
    ev_ptr: np.ndarray
    ev_idx: np.ndarray
    ec_ptr: np.ndarray
    ec_idx: np.ndarray
    bit_degree: np.ndarray = field(repr=False)
    check_degree: np.ndarray = field(repr=False)

    @property
    def num_bits(self) -> int:
        return self.base.cols

    @property
    def num_checks(self) -> int:
        return self.base.rows

    @property
    def num_edges(self) -> int:
        return len(self.edge_var)

    def ev(self, e: int) -> np.ndarray:
        return self.ev_idx[self.ev_ptr[e] : self.ev_ptr[e + 1]]

    def ec(self, e: int) -> np.ndarray:
        return self.ec_idx[self.ec_ptr[e] : self.ec_ptr[e + 1]]

    def edge_l(self, e: int) -> int:
        """Degree of the bit node of edge ``e``."""
        return int(self.bit_degree[self.edge_var[e]])

    def edge_r(self, e: int) -> int:
        """Degree of the check node of edge ``e``."""
        return int(self.check_degree[self.edge_chk[e]])

    def edges_at_bit(self, v: int) -> np.ndarray:
        return np.flatnonzero(self.edge_var == v)

    def edges_at_check(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.edge_chk == c)

    def to_base_matrix(self) -> BaseMatrix:
        a = np.zeros((self.num_checks, self.num_bits), dtype=np.int64)
        np.add.at(a, (self.edge_chk, self.edge_var), 1)
        return BaseMatrix(a)


def build_protograph(b: BaseMatrix) -> Protograph:
    ent = b.entries
    ev, ec = [], []
    for v in range(b.cols):
        for c in range(b.rows):
            for _ in range(int(ent[c, v])):
                ev.append(v)
                ec.append(c)
    edge_var = np.array(ev, dtype=np.int64)
    edge_chk = np.array(ec, dtype=np.int64)
    at_bit = [np.flatnonzero(edge_var == v).tolist() for v in range(b.cols)]
    at_chk = [np.flatnonzero(edge_chk == c).tolist() for c in range(b.rows)]
    e_v = [[i for i in at_bit[edge_var[e]] if i != e] for e in range(len(ev))]
    e_c = [[i for i in at_chk[edge_chk[e]] if i != e] for e in range(len(ev))]
    ev_ptr, ev_idx = _csr(e_v)
    ec_ptr, ec_idx = _csr(e_c)
    arrays = [edge_var, edge_chk, ev_ptr, ev_idx, ec_ptr, ec_idx]
    for arr in arrays:
        arr.setflags(write=False)
    return Protograph(
        b, *arrays,
        bit_degree=b.column_sums().copy(),
        check_degree=ent.sum(axis=1).copy(),
    )


def as_protograph(p: Protograph | BaseMatrix) -> Protograph:
    return p if isinstance(p, Protograph) else build_protograph(p)


def design_rate(p: Protograph | BaseMatrix) -> Fraction:
    b = p.base if isinstance(p, Protograph) else p
    return 1 - Fraction(b.rows, b.cols)


# ---------------------------------------------------------------------------
# Structural conditions for double-exponential decay


@dataclass(frozen=True)
class Theorem1Report:
    """Structural preconditions for double-exponential decay.

    ``cycle_witness`` is a closed node sequence such as
    ``[("v", 0), ("c", 0), ("v", 1), ("c", 1), ("v", 0)]``;
    ``isolated_deg2`` lists degree-2 bits with no degree >= 3 neighbour.
    """

    deg2_cycle_free: bool
    every_deg2_touches_deg3plus: bool
    deg2_count: int
    cycle_witness: list[tuple[str, int]] | None = None
    isolated_deg2: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.deg2_cycle_free and self.every_deg2_touches_deg3plus

    def describe(self) -> str:
        parts = [
            f"degree-2 bits: {self.deg2_count}",
            f"degree-2 subgraph cycle-free: {self.deg2_cycle_free}",
            f"every degree-2 bit touches a degree>=3 bit: {self.every_deg2_touches_deg3plus}",
        ]
        if self.cycle_witness:
            parts.append("cycle: " + "-".join(f"{k}{i + 1}" for k, i in self.cycle_witness))
        if self.isolated_deg2:
            parts.append("unattached degree-2 bits: " + ", ".join(f"v{i + 1}" for i in self.isolated_deg2))
        return "\n".join(parts)


def deg2_edges(p: Protograph) -> np.ndarray:
    """Edges incident on degree-2 bit nodes (the set E_2)."""
    return np.flatnonzero(p.bit_degree[p.edge_var] == 2)


def _find_cycle(n_nodes: int, edges: list[tuple[int, int]]) -> list[int] | None:
    """Return a cycle (closed node list) in an undirected multigraph, or None."""
    parent = list(range(n_nodes))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    adj: dict[int, list[int]] = {}
    for u, w in edges:
        ru, rw = find(u), find(w)
        if ru == rw:
            # path w ... u inside the current forest, then close with (u, w)
            prev = {w: None}
            queue = [w]
            for x in queue:
                if x == u:
                    break
                for y in adj.get(x, ()):
                    if y not in prev:
                        prev[y] = x
                        queue.append(y)
            path = [u]
            while prev[path[-1]] is not None:
                path.append(prev[path[-1]])
            return path + [u]
        parent[ru] = rw
        adj.setdefault(u, []).append(w)
        adj.setdefault(w, []).append(u)
    return None


def _canonical_cycle(cycle: list[int]) -> list[int]:
    ring = cycle[:-1]
    k = ring.index(min(ring))
    ring = ring[k:] + ring[:k]
    if len(ring) > 2 and ring[-1] < ring[1]:
        ring = [ring[0]] + ring[:0:-1]
    return ring + [ring[0]]


def check_theorem1(p: Protograph | BaseMatrix) -> Theorem1Report:
    p = as_protograph(p)
    nb = p.num_bits
    deg2 = np.flatnonzero(p.bit_degree == 2)
    e2 = deg2_edges(p)
    # bit nodes are 0..nb-1, check nodes nb..nb+nc-1
    g2_edges = [(int(p.edge_var[e]), nb + int(p.edge_chk[e])) for e in e2]
    cycle = _find_cycle(nb + p.num_checks, g2_edges)
    witness = None
    if cycle is not None:
        witness = [("v", x) if x < nb else ("c", x - nb) for x in _canonical_cycle(cycle)]

    ent = p.base.entries
    heavy = p.bit_degree >= 3
    isolated = []
    for v in deg2:
        checks = np.flatnonzero(ent[:, v])
        if not (ent[checks][:, heavy] > 0).any():
            isolated.append(int(v))
    return Theorem1Report(
        deg2_cycle_free=cycle is None,
        every_deg2_touches_deg3plus=not isolated,
        deg2_count=int(deg2.size),
        cycle_witness=witness,
        isolated_deg2=isolated,
    )
