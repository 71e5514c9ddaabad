"""Channels, belief-propagation decoders and a Monte-Carlo error-rate harness.

All simulations transmit the all-zero codeword (all ``+1`` in BPSK); the
channels and decoders are symmetric, so error rates do not depend on the
codeword and no encoder is needed.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numba
import numpy as np

from .lift import LiftedGraph, read_alist

LLR_CLAMP = 30.0
DEFAULT_MAX_FRAMES = 1_000_000
DEFAULT_MIN_FRAME_ERRORS = 100
DEFAULT_BEC_ITERS = 200
DEFAULT_AWGN_ITERS = 100
UNRELIABLE_BELOW = 20
_BATCH = 256


@dataclass
class SparseCode:
    """Parity-check structure.  Edges are stored once (``edge_bit``,
    ``edge_chk``); ``bit_ptr/bit_edges`` and ``chk_ptr/chk_edges`` are CSR
    views from each side.  ``edge_type`` is set for lifted codes."""

    n: int
    m: int
    edge_bit: np.ndarray
    edge_chk: np.ndarray
    edge_type: np.ndarray | None = None

    def __post_init__(self):
        self.edge_bit = np.asarray(self.edge_bit, dtype=np.int64)
        self.edge_chk = np.asarray(self.edge_chk, dtype=np.int64)
        if len(self.edge_bit) != len(self.edge_chk):
            raise ValueError("edge arrays differ in length")
        if len(self.edge_bit) and (self.edge_bit.max() >= self.n or self.edge_chk.max() >= self.m):
            raise ValueError("edge endpoint out of range")
        key = self.edge_bit * self.m + self.edge_chk
        if np.unique(key).size != key.size:
            raise ValueError("parity-check graph has parallel edges")
        self.bit_edges = np.argsort(self.edge_bit, kind="stable")
        self.chk_edges = np.argsort(self.edge_chk, kind="stable")
        self.bit_ptr = np.concatenate([[0], np.cumsum(np.bincount(self.edge_bit, minlength=self.n))])
        self.chk_ptr = np.concatenate([[0], np.cumsum(np.bincount(self.edge_chk, minlength=self.m))])

    @property
    def num_edges(self) -> int:
        return len(self.edge_bit)

    @property
    def design_rate(self) -> Fraction:
        return 1 - Fraction(self.m, self.n)

    @classmethod
    def from_lifted(cls, g: LiftedGraph) -> "SparseCode":
        return cls(g.n, g.m, g.edge_bit, g.edge_check, g.edge_type)

    @classmethod
    def from_alist(cls, path) -> "SparseCode":
        n, m, b, c = read_alist(path)
        return cls(n, m, b, c)

    @classmethod
    def from_dense(cls, h) -> "SparseCode":
        h = np.asarray(h)
        c, b = np.nonzero(h)
        return cls(h.shape[1], h.shape[0], b, c)

    def syndrome(self, hard: np.ndarray) -> np.ndarray:
        return np.bincount(self.edge_chk, weights=hard[self.edge_bit].astype(float), minlength=self.m).astype(np.int64) % 2


# ---------------------------------------------------------------------------
# BEC peeling


@numba.njit(cache=True, nogil=True)
def _peel(erased, max_iter, edge_bit, edge_chk, bit_ptr, bit_edges, chk_ptr, chk_edges, m):
    cnt = np.zeros(m, dtype=np.int64)
    acc = np.zeros(m, dtype=np.int64)  # sum of erased bit indices per check
    for e in range(edge_bit.shape[0]):
        b = edge_bit[e]
        if erased[b]:
            cnt[edge_chk[e]] += 1
            acc[edge_chk[e]] += b
    ready = np.empty(m, dtype=np.int64)
    nready = 0
    for c in range(m):
        if cnt[c] == 1:
            ready[nready] = c
            nready += 1
    rounds = 0
    nxt = np.empty(m, dtype=np.int64)
    while nready > 0 and rounds < max_iter:
        rounds += 1
        nn = 0
        for k in range(nready):
            c = ready[k]
            if cnt[c] != 1:
                continue
            b = acc[c]
            erased[b] = False
            for q in range(bit_ptr[b], bit_ptr[b + 1]):
                cc = edge_chk[bit_edges[q]]
                cnt[cc] -= 1
                acc[cc] -= b
                if cnt[cc] == 1:
                    nxt[nn] = cc
                    nn += 1
        ready, nxt = nxt, ready
        nready = nn
    return rounds


def bec_decode(code: SparseCode, erased, max_iter: int = DEFAULT_BEC_ITERS) -> tuple[np.ndarray, int]:
    """Peel erasures until no check has a single erased neighbour.

    ``erased`` is a boolean mask or an index collection.  Returns the sorted
    residual erasures (empty on success) and the number of peeling rounds.
    """
    mask = np.zeros(code.n, dtype=np.bool_)
    erased = np.asarray(erased)
    if erased.dtype == np.bool_:
        mask[:] = erased
    else:
        mask[erased.astype(np.int64)] = True
    rounds = _peel(mask, max_iter, code.edge_bit, code.edge_chk, code.bit_ptr, code.bit_edges,
                   code.chk_ptr, code.chk_edges, code.m)
    return np.flatnonzero(mask), int(rounds)


# ---------------------------------------------------------------------------
# BIAWGN sum-product


@numba.njit(cache=True, nogil=True)
def _syndrome_ok(hard, edge_bit, chk_ptr, chk_edges, m):
    for c in range(m):
        s = 0
        for k in range(chk_ptr[c], chk_ptr[c + 1]):
            s ^= hard[edge_bit[chk_edges[k]]]
        if s:
            return False
    return True


@numba.njit(cache=True, nogil=True)
def _spa(llr, max_iter, clamp, edge_bit, bit_ptr, bit_edges, chk_ptr, chk_edges, m, hard):
    n = llr.shape[0]
    ne = edge_bit.shape[0]
    c2v = np.zeros(ne)
    th = np.empty(ne)
    total = llr.copy()
    for b in range(n):
        hard[b] = 1 if total[b] < 0 else 0
    if _syndrome_ok(hard, edge_bit, chk_ptr, chk_edges, m):
        return True, 0
    for it in range(1, max_iter + 1):
        for e in range(ne):
            v = total[edge_bit[e]] - c2v[e]
            v = min(max(v, -clamp), clamp)
            th[e] = math.tanh(0.5 * v)
        for c in range(m):
            a, z = chk_ptr[c], chk_ptr[c + 1]
            # leave-one-out products via a forward then a backward pass
            run = 1.0
            for k in range(a, z):
                e = chk_edges[k]
                c2v[e] = run
                run *= th[e]
            run = 1.0
            for k in range(z - 1, a - 1, -1):
                e = chk_edges[k]
                p = c2v[e] * run
                run *= th[e]
                p = min(max(p, -0.999999999999), 0.999999999999)
                c2v[e] = 2.0 * math.atanh(p)
        for b in range(n):
            s = llr[b]
            for k in range(bit_ptr[b], bit_ptr[b + 1]):
                s += c2v[bit_edges[k]]
            total[b] = s
            hard[b] = 1 if s < 0 else 0
        if _syndrome_ok(hard, edge_bit, chk_ptr, chk_edges, m):
            return True, it
    return False, max_iter


def awgn_decode(code: SparseCode, llr, max_iter: int = DEFAULT_AWGN_ITERS) -> tuple[np.ndarray, bool, int]:
    """Flooding sum-product decoding.  Bit-to-check messages are clamped to
    ``+-LLR_CLAMP`` before the tanh rule.  Returns ``(hard, converged, iters)``;
    iteration 0 means the channel hard decisions already satisfy every check."""
    llr = np.asarray(llr, dtype=float)
    if llr.shape != (code.n,):
        raise ValueError(f"expected {code.n} LLRs, got shape {llr.shape}")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    hard = np.empty(code.n, dtype=np.int64)
    ok, it = _spa(llr, max_iter, LLR_CLAMP, code.edge_bit, code.bit_ptr, code.bit_edges,
                  code.chk_ptr, code.chk_edges, code.m, hard)
    return hard, bool(ok), int(it)


# ---------------------------------------------------------------------------
# Monte-Carlo harness


def awgn_sigma2(ebn0_db: float, rate) -> float:
    return 1.0 / (2.0 * float(rate) * 10.0 ** (ebn0_db / 10.0))


@dataclass
class SimResult:
    channel: str
    param: float
    frames: int
    bit_errors: int
    frame_errors: int
    seed: int
    max_iter: int
    n: int

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames * self.n) if self.frames else 0.0

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0

    @staticmethod
    def _half_width(p: float, count: int) -> float:
        return 1.96 * math.sqrt(p * (1.0 - p) / count) if count else math.inf

    @property
    def fer_ci(self) -> float:
        return self._half_width(self.fer, self.frames)

    @property
    def ber_ci(self) -> float:
        return self._half_width(self.ber, self.frames * self.n)

    @property
    def reliable(self) -> bool:
        """Normal-approximation intervals are trusted from 20 frame errors on."""
        return self.frame_errors >= UNRELIABLE_BELOW

    CSV_HEADER = ["channel_param", "frames", "bit_errors", "frame_errors", "ber", "fer", "ber_ci", "fer_ci", "seed"]

    def csv_row(self) -> list:
        return [self.param, self.frames, self.bit_errors, self.frame_errors,
                f"{self.ber:.6e}", f"{self.fer:.6e}", f"{self.ber_ci:.3e}", f"{self.fer_ci:.3e}", self.seed]


def _frame(code: SparseCode, channel: str, param: float, sigma2: float, seed: int, idx: int, max_iter: int):
    rng = np.random.default_rng([seed, idx])
    if channel == "bec":
        residual, _ = bec_decode(code, rng.random(code.n) < param, max_iter)
        return residual.size
    y = 1.0 + math.sqrt(sigma2) * rng.standard_normal(code.n)
    hard, _, _ = awgn_decode(code, 2.0 * y / sigma2, max_iter)
    return int(hard.sum())


def default_threads() -> int:
    env = os.environ.get("PROTOLAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def simulate(
    code: SparseCode,
    channel: str,
    param: float,
    seed: int = 0,
    max_frames: int = DEFAULT_MAX_FRAMES,
    min_frame_errors: int = DEFAULT_MIN_FRAME_ERRORS,
    max_iter: int | None = None,
    threads: int = 1,
) -> SimResult:
    """Simulate frames until ``min_frame_errors`` errors or ``max_frames``.

    ``param`` is the erasure probability for ``"bec"`` or Eb/N0 in dB for
    ``"awgn"``.  Frame ``k`` draws noise from ``default_rng([seed, k])`` and
    the stop rule is applied in frame order, so the result does not depend
    on ``threads``.
    """
    if channel not in ("bec", "awgn"):
        raise ValueError(f"unknown channel {channel!r}")
    if channel == "bec" and not 0.0 <= param <= 1.0:
        raise ValueError("erasure probability must lie in [0, 1]")
    if max_frames < 1 or min_frame_errors < 1:
        raise ValueError("stop rule must be positive")
    if max_iter is None:
        max_iter = DEFAULT_BEC_ITERS if channel == "bec" else DEFAULT_AWGN_ITERS
    sigma2 = awgn_sigma2(param, code.design_rate) if channel == "awgn" else 0.0

    frames = bit_errors = frame_errors = 0
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        while frames < max_frames and frame_errors < min_frame_errors:
            idx = range(frames, min(frames + _BATCH, max_frames))
            job = lambda k: _frame(code, channel, param, sigma2, seed, k, max_iter)  # noqa: E731
            errs = list(pool.map(job, idx)) if pool else [job(k) for k in idx]
            for e in errs:
                frames += 1
                bit_errors += e
                frame_errors += e > 0
                if frame_errors >= min_frame_errors:
                    break
    finally:
        if pool:
            pool.shutdown()
    return SimResult(channel, float(param), frames, bit_errors, frame_errors, seed, max_iter, code.n)


# ---------------------------------------------------------------------------
# per-type message erasure rates (bit-sliced, 64 frames per word)


@numba.njit(cache=True, nogil=True)
def _popcount(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return (x * np.uint64(0x0101010101010101)) >> np.uint64(56)


@numba.njit(cache=True, nogil=True)
def _bitsliced_bp(ch, n_iter, edge_bit, edge_type, n_types, bit_ptr, bit_edges, chk_ptr, chk_edges, out):
    """``out[t, i]`` += number of erased type-``i`` bit-to-check messages
    after ``t`` iterations, summed over the 64 frames packed in ``ch``."""
    ne = edge_bit.shape[0]
    v2c = np.empty(ne, dtype=np.uint64)
    c2v = np.empty(ne, dtype=np.uint64)
    full = ~np.uint64(0)
    for e in range(ne):
        v2c[e] = ch[edge_bit[e]]
        out[0, edge_type[e]] += _popcount(v2c[e])
    for t in range(1, n_iter + 1):
        for c in range(chk_ptr.shape[0] - 1):
            a, z = chk_ptr[c], chk_ptr[c + 1]
            run = np.uint64(0)
            for k in range(a, z):
                e = chk_edges[k]
                c2v[e] = run
                run |= v2c[e]
            run = np.uint64(0)
            for k in range(z - 1, a - 1, -1):
                e = chk_edges[k]
                c2v[e] |= run
                run |= v2c[e]
        for b in range(bit_ptr.shape[0] - 1):
            a, z = bit_ptr[b], bit_ptr[b + 1]
            run = full
            for k in range(a, z):
                e = bit_edges[k]
                v2c[e] = run
                run &= c2v[e]
            run = ch[b]
            for k in range(z - 1, a - 1, -1):
                e = bit_edges[k]
                v2c[e] &= run
                run &= c2v[e]
        for e in range(ne):
            out[t, edge_type[e]] += _popcount(v2c[e])


@dataclass
class MessageRates:
    """Empirical per-type erasure rates of bit-to-check messages.

    ``mean[t, i]`` estimates the probability that a type-``i`` message is
    erased after ``t`` iterations; ``stderr`` is the standard error of the
    mean computed from independent batches of 64 frames."""

    epsilon: float
    frames: int
    mean: np.ndarray
    stderr: np.ndarray


def bec_message_rates(code: SparseCode, eps: float, n_iter: int, frames: int, seed: int = 0) -> MessageRates:
    if code.edge_type is None:
        raise ValueError("code has no edge types (build it from a LiftedGraph)")
    n_types = int(code.edge_type.max()) + 1
    per_type = np.bincount(code.edge_type, minlength=n_types)
    words = -(-frames // 64)
    rates = np.empty((words, n_iter + 1, n_types))
    counts = np.zeros((n_iter + 1, n_types), dtype=np.uint64)
    for w in range(words):
        rng = np.random.default_rng([seed, w])
        bits = rng.random((code.n, 64)) < eps
        ch = np.packbits(bits, axis=1, bitorder="little").view(np.uint64).ravel()
        counts[:] = 0
        _bitsliced_bp(ch, n_iter, code.edge_bit, code.edge_type, n_types, code.bit_ptr, code.bit_edges,
                      code.chk_ptr, code.chk_edges, counts)
        rates[w] = counts / (64.0 * per_type)
    mean = rates.mean(axis=0)
    stderr = rates.std(axis=0, ddof=1) / math.sqrt(words) if words > 1 else np.full_like(mean, np.inf)
    return MessageRates(float(eps), words * 64, mean, stderr)
