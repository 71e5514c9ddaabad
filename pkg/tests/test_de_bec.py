import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import pair_de_threshold, regular_de_threshold
from protolab.de_bec import (
    CONVERGED,
    DeTrace,
    InsufficientTailError,
    bec_threshold,
    de_step,
    decay_diagnostic,
    run_de,
    run_de_log,
    union_bound_block_error,
)
from protolab.proto_core import BaseMatrix
from protolab.registry import REGISTRY, builtin
from test_proto_core import base_matrices

EX = builtin("ex-2x4")


def test_de_step_hand_values():
    y, x = de_step(np.full(9, 0.5), 0.5, EX)
    c1 = [0, 2, 4, 6, 7]
    np.testing.assert_allclose(y[c1], 0.9375)
    np.testing.assert_allclose(y[[1, 3, 5, 8]], 0.875)
    assert x[0] == pytest.approx(0.4375)
    assert x[1] == pytest.approx(0.46875)
    assert x[6] == pytest.approx(0.41015625)


def test_de_step_fixed_points():
    y, x = de_step(np.zeros(9), 0.7, EX)
    assert not y.any() and not x.any()
    _, x = de_step(np.full(9, 0.3), 0.0, EX)
    assert not x.any()


def test_de_step_dimension_check():
    with pytest.raises(ValueError):
        de_step(np.zeros(4), 0.5, EX)


def test_degree_one_conventions():
    # a degree-1 bit has an empty product on the bit side
    _, x = de_step(np.full(3, 0.4), 0.6, BaseMatrix([[1, 2]]))
    assert x[0] == pytest.approx(0.6)


def test_run_de_verdicts():
    assert run_de(builtin("r12-4x8"), 0.45).verdict == CONVERGED
    assert not run_de(builtin("r12-4x8"), 0.49).converged
    t = run_de(EX, 0.0)
    assert t.converged and t.iterations == 0


def test_recorded_trace_matches_fast_path():
    fast = run_de(EX, 0.4)
    rec = run_de(EX, 0.4, record=True)
    assert rec.verdict == fast.verdict
    np.testing.assert_allclose(rec.xbar, fast.xbar, rtol=1e-12)
    assert rec.x.shape == (len(rec.xbar), 9)


def test_trace_csv(tmp_path):
    tr = run_de(EX, 0.3, record=True, t_max=5, delta_conv=1e-300)
    tr.to_csv(tmp_path / "t.csv", per_edge=True)
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows[0][:3] == ["t", "xbar", "log_xbar"] and len(rows[0]) == 12
    assert len(rows) == 7
    assert float(rows[3][1]) == tr.xbar[2]


@given(base_matrices(), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_monotone_in_epsilon(b, e1, e2):
    lo, hi = sorted((e1, e2))
    a = run_de(b, lo, t_max=30, delta_conv=1e-300, record=True)
    c = run_de(b, hi, t_max=30, delta_conv=1e-300, record=True)
    n = min(len(a.x), len(c.x))
    assert (a.x[:n] <= c.x[:n] + 1e-15).all()


@given(base_matrices(), st.floats(0.0, 1.0))
def test_xbar_non_increasing(b, eps):
    tr = run_de(b, eps, t_max=200)
    assert (np.diff(tr.xbar) <= 1e-15).all()
    assert ((tr.xbar >= 0) & (tr.xbar <= 1)).all()


@pytest.mark.parametrize("d, expected", [(3, 0.4294), (4, 0.3834), (5, 0.3416)])
def test_regular_threshold_against_scalar_oracle(d, expected):
    th = bec_threshold(BaseMatrix([[d, d]]))
    assert th == pytest.approx(regular_de_threshold(d, 2 * d), abs=5e-4)
    assert th == pytest.approx(expected, abs=5e-4)


@pytest.mark.parametrize("name", ["ex-2x4", "r12-4x8", "r34-3x12"])
def test_threshold_against_pair_oracle(name):
    assert bec_threshold(builtin(name), resolution=1e-6) == pytest.approx(pair_de_threshold(builtin(name).entries), abs=2e-6)


def test_threshold_resolution_guard():
    with pytest.raises(ValueError):
        bec_threshold(EX, resolution=1e-9)


def test_log_domain_matches_linear_domain():
    lin = run_de(builtin("r12-4x8"), 0.45, delta_conv=1e-300, t_max=40)
    log = run_de_log(builtin("r12-4x8"), 0.45, 40)
    n = len(lin.xbar)
    ok = lin.xbar > 1e-290
    np.testing.assert_allclose(log.log_xbar[:n][ok], np.log(lin.xbar[ok]), rtol=1e-9)


def test_log_domain_goes_below_underflow():
    tr = run_de_log(builtin("r12-4x8"), 0.45, 200)
    assert tr.log_xbar[-1] < -1e6
    assert tr.converged


def test_decay_diagnostic_synthetic():
    t = np.arange(40)
    doubling = DeTrace(0.5, np.zeros(40), CONVERGED, log_xbar=-(2.0 ** t))
    assert decay_diagnostic(doubling) == pytest.approx(1.0, abs=0.01)
    expo = DeTrace(0.5, 0.5 ** np.arange(1000), CONVERGED)
    assert decay_diagnostic(expo) <= 0.05


def test_decay_diagnostic_needs_tail():
    with pytest.raises(InsufficientTailError):
        decay_diagnostic(DeTrace(0.5, 0.5 ** np.arange(12), CONVERGED))


def test_decay_diagnostic_values():
    fast = decay_diagnostic(run_de_log(builtin("r12-4x8"), 0.45, 200))
    assert fast == pytest.approx(0.500, abs=0.01)  # regression baseline
    slow = decay_diagnostic(run_de_log(EX, 0.3, 20000, log_floor=-800))
    assert slow <= 0.05


@pytest.mark.parametrize("n, xbar, expected", [(10, 1e-5, 1e-4), (10**6, 1.0, 1.0), (957728, 1e-12, 9.57728e-7)])
def test_union_bound(n, xbar, expected):
    assert union_bound_block_error(n, xbar) == pytest.approx(expected)


def test_union_bound_guards():
    with pytest.raises(ValueError):
        union_bound_block_error(0, 0.1)
    with pytest.raises(ValueError):
        union_bound_block_error(5, 1.5)


def test_registry_values_recorded():
    assert math.isclose(REGISTRY["r12-4x8"].bec_threshold, 0.479)
