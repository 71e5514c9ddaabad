"""Binary-input symmetric channels: Bhattacharyya bound recursion and
protograph EXIT (PEXIT) thresholds for the BIAWGN channel.

Conventions: BPSK with unit symbol energy, ``y = x + n``, ``n ~ N(0, s^2)``,
``s^2 = 1 / (2 R Eb/N0)``, channel LLR ``2y/s^2`` whose variance is
``8 R Eb/N0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numba
import numpy as np
from scipy.optimize import brentq

from .proto_core import BaseMatrix, Protograph, as_protograph, design_rate

B_CLAMP = 1e6


# ---------------------------------------------------------------------------
# Bhattacharyya recursion


@dataclass
class BhattState:
    b0: float
    b: np.ndarray

    @classmethod
    def initial(cls, p: Protograph | BaseMatrix, b0: float) -> "BhattState":
        return cls(float(b0), np.full(as_protograph(p).num_edges, float(b0)))

    def reported(self) -> np.ndarray:
        return np.clip(self.b, 0.0, 1.0)


@numba.njit(cache=True, nogil=True)
def _bhatt_step(b, b0, ev_ptr, ev_idx, ec_ptr, ec_idx, out):
    n = b.shape[0]
    sums = np.empty(n)
    for j in range(n):
        s = 0.0
        for k in range(ec_ptr[j], ec_ptr[j + 1]):
            s += b[ec_idx[k]]
        sums[j] = s
    for i in range(n):
        v = b0
        for k in range(ev_ptr[i], ev_ptr[i + 1]):
            v *= sums[ev_idx[k]]
        out[i] = min(v, B_CLAMP)


@numba.njit(cache=True, nogil=True)
def _bhatt_converges(b0, max_steps, ev_ptr, ev_idx, ec_ptr, ec_idx, n):
    b = np.full(n, b0)
    nb = np.empty(n)
    if b0 < 1e-10:
        return True
    for _ in range(max_steps):
        _bhatt_step(b, b0, ev_ptr, ev_idx, ec_ptr, ec_idx, nb)
        m = nb.max()
        if m < 1e-10:
            return True
        if m > 1.0:
            return False
        b[:] = nb
    return False


def bhatt_step(state: BhattState, p: Protograph | BaseMatrix) -> BhattState:
    """``B'(i) = B_0 * prod_{j in E_v(i)} sum_{i' in E_c(j)} B(i')``."""
    p = as_protograph(p)
    out = np.empty_like(state.b)
    _bhatt_step(state.b, state.b0, p.ev_ptr, p.ev_idx, p.ec_ptr, p.ec_idx, out)
    return BhattState(state.b0, out)


def bhatt_bound_threshold(p: Protograph | BaseMatrix, resolution: float = 1e-6, max_steps: int = 100_000) -> float:
    """Largest channel Bhattacharyya parameter for which the bound recursion
    is driven to zero.  A conservative proxy for the true threshold."""
    if resolution < 1e-6:
        raise ValueError("resolution must be >= 1e-6")
    p = as_protograph(p)
    args = (p.ev_ptr, p.ev_idx, p.ec_ptr, p.ec_idx, p.num_edges)
    lo, hi = 0.0, 1.0
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if _bhatt_converges(mid, max_steps, *args):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def awgn_b0(sigma: float) -> float:
    """Bhattacharyya parameter of BIAWGN with noise std ``sigma``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return math.exp(-1.0 / (2.0 * sigma * sigma))


# ---------------------------------------------------------------------------
# J function

_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite.hermgauss(160)
_SIGMA_MAX = 30.0
_GRID_STEP = 1e-3
JINV_CAP = _SIGMA_MAX


def j_exact(sigma) -> np.ndarray:
    """Mutual information of a consistent Gaussian LLR with std ``sigma``,
    by Gauss-Hermite quadrature."""
    s = np.atleast_1d(np.asarray(sigma, dtype=float))
    llr = s[:, None] ** 2 / 2 + math.sqrt(2.0) * s[:, None] * _GH_NODES[None, :]
    f = np.logaddexp(0.0, -llr) / math.log(2.0)
    return 1.0 - (f @ _GH_WEIGHTS) / math.sqrt(math.pi)


@lru_cache(maxsize=1)
def _table():
    sig = np.arange(0.0, _SIGMA_MAX + _GRID_STEP / 2, _GRID_STEP)
    val = np.clip(j_exact(sig), 0.0, 1.0)
    # keep the strictly increasing part; J saturates to 1.0 in double precision
    keep = np.concatenate([[True], np.diff(val) > 0])
    return sig[keep], val[keep]


def jfun(sigma):
    """J(sigma), tabulated; scalar in, scalar out."""
    sig, val = _table()
    out = np.interp(sigma, sig, val, right=1.0)
    return float(out) if np.ndim(out) == 0 else out


def jinv(info):
    """Inverse of :func:`jfun`.  ``jinv(1)`` returns :data:`JINV_CAP`."""
    sig, val = _table()
    i = np.asarray(info, dtype=float)
    if (i < 0).any() or (i > 1).any():
        raise ValueError("mutual information must lie in [0, 1]")
    out = np.where(i >= val[-1], JINV_CAP, np.interp(i, val, sig))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# PEXIT


@dataclass
class ExitState:
    i_ev: np.ndarray
    i_ec: np.ndarray
    i_app: np.ndarray
    sigma_ch2: float
    iterations: int
    success: bool
    app_history: list[np.ndarray] | None = None


def channel_llr_variance(ebn0_db: float, rate: float | Fraction) -> float:
    return 8.0 * float(rate) * 10.0 ** (ebn0_db / 10.0)


def snr_db_from_ebn0(ebn0_db: float, rate: float | Fraction) -> float:
    """``10 log10(1/s^2) = Eb/N0 (dB) + 10 log10(2R)``: the SNR per unit-energy
    BPSK symbol over the real noise variance."""
    return ebn0_db + 10.0 * math.log10(2.0 * float(rate))


def pexit(
    p: Protograph | BaseMatrix,
    ebn0_db: float,
    max_iter: int = 1000,
    target: float = 1.0 - 1e-6,
    track: bool = False,
) -> ExitState:
    """Run protograph EXIT analysis to its fixed point at ``ebn0_db``."""
    p = as_protograph(p)
    n = p.num_edges
    s2ch = channel_llr_variance(ebn0_db, design_rate(p))
    chk, var = p.edge_chk, p.edge_var
    i_ev = np.zeros(n)
    i_ec = np.zeros(n)
    i_app = np.zeros(p.num_bits)
    hist = [] if track else None
    it = 0
    success = False
    for it in range(1, max_iter + 1):
        s = jinv(1.0 - i_ev) ** 2
        tot = np.bincount(chk, weights=s, minlength=p.num_checks)
        i_ec = 1.0 - jfun(np.sqrt(np.maximum(tot[chk] - s, 0.0)))
        s = jinv(i_ec) ** 2
        tot = np.bincount(var, weights=s, minlength=p.num_bits)
        new_ev = jfun(np.sqrt(s2ch + np.maximum(tot[var] - s, 0.0)))
        i_app = jfun(np.sqrt(s2ch + tot))
        if track:
            hist.append(i_app.copy())
        if (i_app >= target).all():
            success = True
            i_ev = new_ev
            break
        if np.abs(new_ev - i_ev).max() < 1e-13:
            i_ev = new_ev
            break
        i_ev = new_ev
    return ExitState(i_ev, i_ec, i_app, s2ch, it, success, hist)


def awgn_threshold(
    p: Protograph | BaseMatrix,
    resolution_db: float = 0.005,
    lo_db: float = -1.6,
    hi_db: float = 12.0,
    max_iter: int = 1000,
) -> float:
    """Smallest Eb/N0 (dB) at which PEXIT reaches full APP information."""
    if resolution_db < 0.005:
        raise ValueError("resolution_db must be >= 0.005")
    p = as_protograph(p)
    if not pexit(p, hi_db, max_iter).success:
        raise ValueError(f"PEXIT does not converge even at {hi_db} dB")
    while hi_db - lo_db > resolution_db:
        mid = 0.5 * (lo_db + hi_db)
        if pexit(p, mid, max_iter).success:
            hi_db = mid
        else:
            lo_db = mid
    return 0.5 * (lo_db + hi_db)


def biawgn_capacity(sigma: float) -> float:
    """Capacity (bits/use) of BPSK over AWGN with noise std ``sigma``."""
    return float(j_exact(2.0 / sigma)[0])


def capacity_ebn0_db(rate: float | Fraction) -> float:
    """Eb/N0 (dB) at which BIAWGN capacity equals ``rate``."""
    r = float(rate)

    def gap(db):
        sigma = math.sqrt(1.0 / (2.0 * r * 10.0 ** (db / 10.0)))
        return biawgn_capacity(sigma) - r

    return brentq(gap, -1.59, 10.0, xtol=1e-9)
