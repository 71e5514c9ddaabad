"""Density evolution for protograph ensembles over the binary erasure channel."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numba
import numpy as np

from .proto_core import BaseMatrix, Protograph, as_protograph

DELTA_CONV = 1e-10
T_MAX = 100_000
STALL_WINDOW = 100
STALL_RTOL = 1e-12

CONVERGED, STALLED, MAX_ITERS = "converged", "stalled", "max_iters"
_VERDICTS = (CONVERGED, STALLED, MAX_ITERS)


@numba.njit(cache=True, nogil=True)
def _step(x, eps, ev_ptr, ev_idx, ec_ptr, ec_idx, y, xn):
    n = x.shape[0]
    for j in range(n):
        # 1 - prod(1 - x) without cancellation when the x are tiny
        s = 0.0
        for k in range(ec_ptr[j], ec_ptr[j + 1]):
            s += math.log1p(-x[ec_idx[k]])
        y[j] = -math.expm1(s)
    for i in range(n):
        prod = eps
        for k in range(ev_ptr[i], ev_ptr[i + 1]):
            prod *= y[ev_idx[k]]
        xn[i] = prod


@numba.njit(cache=True, nogil=True)
def _run(eps, x0, t_max, delta, window, ev_ptr, ev_idx, ec_ptr, ec_idx, xbar):
    """Iterate from ``x0``.  Returns (verdict code, last t)."""
    n_edges = x0.shape[0]
    x = x0.copy()
    y = np.empty(n_edges)
    xn = np.empty(n_edges)
    xbar[0] = x0.max()
    if xbar[0] < delta:
        return 0, 0
    for t in range(1, t_max + 1):
        _step(x, eps, ev_ptr, ev_idx, ec_ptr, ec_idx, y, xn)
        m = 0.0
        for i in range(n_edges):
            x[i] = xn[i]
            if xn[i] > m:
                m = xn[i]
        xbar[t] = m
        if m < delta:
            return 0, t
        if window > 0 and t >= window:
            old = xbar[t - window]
            if old - m <= STALL_RTOL * old:
                return 1, t
    return 2, t_max


@numba.njit(cache=True, nogil=True)
def _log_step(lx, log_eps, ev_ptr, ev_idx, ec_ptr, ec_idx, ly, lxn):
    n = lx.shape[0]
    for j in range(n):
        a, b = ec_ptr[j], ec_ptr[j + 1]
        if a == b:
            ly[j] = -np.inf
            continue
        mx = -np.inf
        for k in range(a, b):
            if lx[ec_idx[k]] > mx:
                mx = lx[ec_idx[k]]
        if mx == -np.inf:
            ly[j] = -np.inf
        elif mx > -700.0:
            s = 0.0
            for k in range(a, b):
                s += math.log1p(-math.exp(lx[ec_idx[k]]))
            ly[j] = math.log(-math.expm1(s))
        else:
            # 1 - prod(1 - x) == sum(x) to double precision here
            acc = 0.0
            for k in range(a, b):
                acc += math.exp(lx[ec_idx[k]] - mx)
            ly[j] = mx + math.log(acc)
    for i in range(n):
        s = log_eps
        for k in range(ev_ptr[i], ev_ptr[i + 1]):
            s += ly[ev_idx[k]]
        lxn[i] = s


def _arrays(p: Protograph):
    return p.ev_ptr, p.ev_idx, p.ec_ptr, p.ec_idx


@dataclass
class DeTrace:
    """Outcome of one density-evolution run at a fixed erasure probability.

    ``xbar[t]`` is the largest bit-to-check erasure probability after ``t``
    iterations.  ``log_xbar`` is its natural log; log-domain runs populate it
    beyond double-precision underflow.  ``x``/``y`` hold per-edge vectors
    (rows indexed by ``t``) when the run was recorded.
    """

    epsilon: float
    xbar: np.ndarray
    verdict: str
    log_xbar: np.ndarray | None = None
    x: np.ndarray | None = None
    y: np.ndarray | None = None

    def __post_init__(self):
        if self.log_xbar is None:
            with np.errstate(divide="ignore"):
                self.log_xbar = np.log(self.xbar)

    @property
    def iterations(self) -> int:
        return len(self.xbar) - 1

    @property
    def converged(self) -> bool:
        return self.verdict == CONVERGED

    def to_csv(self, path, per_edge: bool = False) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            header = ["t", "xbar", "log_xbar"]
            if per_edge and self.x is not None:
                header += [f"x{i + 1}" for i in range(self.x.shape[1])]
            w.writerow(header)
            for t in range(len(self.xbar)):
                row = [t, repr(float(self.xbar[t])), repr(float(self.log_xbar[t]))]
                if per_edge and self.x is not None:
                    row += [repr(float(v)) for v in self.x[t]]
                w.writerow(row)


def de_step(x: np.ndarray, eps: float, p: Protograph | BaseMatrix) -> tuple[np.ndarray, np.ndarray]:
    """One round of the recursion.  Returns ``(y, x_next)``; ``y[j]`` is the
    check-to-bit erasure probability on edge ``j``."""
    p = as_protograph(p)
    x = np.asarray(x, dtype=float)
    if x.shape != (p.num_edges,):
        raise ValueError(f"x has shape {x.shape}, protograph has {p.num_edges} edges")
    y = np.empty_like(x)
    xn = np.empty_like(x)
    _step(x, float(eps), *_arrays(p), y, xn)
    return y, xn


def run_de(
    p: Protograph | BaseMatrix,
    eps: float,
    t_max: int = T_MAX,
    delta_conv: float = DELTA_CONV,
    record: bool = False,
    x0: np.ndarray | None = None,
    stall_window: int = STALL_WINDOW,
) -> DeTrace:
    """Run density evolution until ``xbar < delta_conv``, a stall, or
    ``t_max`` iterations.

    The start is ``x_0 = eps`` on every edge unless a vector ``x0`` is given
    (used to probe the linearisation at zero).  From such a start ``xbar`` can
    grow before it decays, so ``stall_window=0`` disables the stall verdict.
    """
    p = as_protograph(p)
    start = np.full(p.num_edges, float(eps)) if x0 is None else np.asarray(x0, dtype=float).copy()
    if start.shape != (p.num_edges,):
        raise ValueError(f"x0 has shape {start.shape}, protograph has {p.num_edges} edges")
    if record:
        return _run_recorded(p, eps, start, t_max, delta_conv, stall_window)
    xbar = np.empty(t_max + 1)
    code, t = _run(float(eps), start, int(t_max), float(delta_conv), int(stall_window), *_arrays(p), xbar)
    return DeTrace(float(eps), xbar[: t + 1].copy(), _VERDICTS[code])


def _run_recorded(p: Protograph, eps: float, x0: np.ndarray, t_max: int, delta_conv: float, window: int) -> DeTrace:
    n = p.num_edges
    xs = [x0]
    ys = [np.full(n, np.nan)]
    xbar = [x0.max()]
    verdict = CONVERGED if xbar[0] < delta_conv else MAX_ITERS
    t = 0
    while verdict != CONVERGED and t < t_max:
        y, x = de_step(xs[-1], eps, p)
        xs.append(x)
        ys.append(y)
        xbar.append(x.max())
        t += 1
        if xbar[-1] < delta_conv:
            verdict = CONVERGED
        elif window > 0 and t >= window and xbar[-1 - window] - xbar[-1] <= STALL_RTOL * xbar[-1 - window]:
            verdict = STALLED
            break
    x_arr, y_arr = np.array(xs), np.array(ys)
    return DeTrace(float(eps), x_arr.max(axis=1), verdict, x=x_arr, y=y_arr)


def run_de_log(p: Protograph | BaseMatrix, eps: float, n_iter: int, log_floor: float = -np.inf) -> DeTrace:
    """Log-domain density evolution for exactly ``n_iter`` iterations.

    Stops early once ``ln xbar`` drops below ``log_floor``.  The returned
    trace has ``xbar`` underflowing to 0 where ``log_xbar`` stays finite.
    """
    p = as_protograph(p)
    n = p.num_edges
    log_eps = math.log(eps) if eps > 0 else -math.inf
    lx = np.full(n, log_eps)
    ly = np.empty(n)
    lxn = np.empty(n)
    hist = [lx.max()]
    xs = [lx.copy()]
    for _ in range(n_iter):
        if hist[-1] < log_floor or hist[-1] == -math.inf:
            break
        _log_step(lx, log_eps, *_arrays(p), ly, lxn)
        lx[:] = lxn
        hist.append(lx.max())
        xs.append(lx.copy())
    log_xbar = np.array(hist)
    verdict = CONVERGED if log_xbar[-1] < math.log(DELTA_CONV) else MAX_ITERS
    return DeTrace(float(eps), np.exp(log_xbar), verdict, log_xbar=log_xbar, x=np.exp(np.array(xs)))


def bec_threshold(
    p: Protograph | BaseMatrix,
    resolution: float = 1e-7,
    t_max: int = T_MAX,
    delta_conv: float = DELTA_CONV,
) -> float:
    """Erasure threshold by bisection on [0, 1]; returns the bracket midpoint."""
    if resolution < 1e-7:
        raise ValueError("resolution must be >= 1e-7")
    p = as_protograph(p)
    args = _arrays(p)
    xbar = np.empty(t_max + 1)
    lo, hi = 0.0, 1.0
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        code, _ = _run(mid, np.full(p.num_edges, mid), t_max, delta_conv, STALL_WINDOW, *args, xbar)
        if code == 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class InsufficientTailError(ValueError):
    pass


def decay_diagnostic(trace: DeTrace, tail_below: float = 1e-3, min_points: int = 10) -> float:
    """Least-squares slope of ``log2(-ln xbar_t)`` against ``t`` over the tail.

    The tail is the run of iterations with ``xbar_t < tail_below``, ending at
    the first non-finite log (underflow in a linear-domain trace).  A slope
    bounded away from zero indicates doubly-exponential decay.
    """
    lx = np.asarray(trace.log_xbar, dtype=float)
    ts = []
    vals = []
    for t, v in enumerate(lx):
        if not np.isfinite(v):
            if ts:
                break
            continue
        if v < math.log(tail_below):
            ts.append(t)
            vals.append(math.log2(-v))
    if len(ts) < min_points:
        raise InsufficientTailError(f"only {len(ts)} tail points below {tail_below}")
    slope, _ = np.polyfit(np.array(ts, dtype=float), np.array(vals), 1)
    return float(slope)


def union_bound_block_error(n: int, xbar: float) -> float:
    if n < 1 or not 0.0 <= xbar <= 1.0:
        raise ValueError("need n >= 1 and xbar in [0, 1]")
    return min(1.0, n * xbar)
