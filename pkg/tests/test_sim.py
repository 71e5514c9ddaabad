import csv
import io
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import naive_peel
from protolab.de_bec import run_de
from protolab.lift import d2q_graph, girth, node_split
from protolab.proto_core import BaseMatrix
from protolab.sim import (
    LLR_CLAMP,
    SimResult,
    SparseCode,
    awgn_decode,
    awgn_sigma2,
    bec_decode,
    bec_message_rates,
    default_threads,
    simulate,
)

# bit 0 takes part in all three checks
HAMMING = np.array(
    [
        [1, 1, 1, 0, 1, 0, 0],
        [1, 1, 0, 1, 0, 1, 0],
        [1, 0, 1, 1, 0, 0, 1],
    ]
)


@pytest.fixture(scope="module")
def small_lift():
    lifted = node_split(BaseMatrix([[2, 3]]), d2q_graph(5))
    return lifted, SparseCode.from_lifted(lifted)


def random_h(rng, m, n, p=0.35):
    h = (rng.random((m, n)) < p).astype(int)
    h[rng.integers(m, size=n), np.arange(n)] = 1
    return h


# -- peeling -------------------------------------------------------------------------


def test_peel_nothing_erased():
    code = SparseCode.from_dense(HAMMING)
    residual, rounds = bec_decode(code, [])
    assert residual.size == 0 and rounds == 0


def test_peel_all_erased_fails():
    code = SparseCode.from_dense(HAMMING)
    residual, _ = bec_decode(code, np.ones(7, dtype=bool))
    assert residual.size == 7


@pytest.mark.parametrize("bit", range(7))
def test_peel_single_erasure_one_round(bit):
    residual, rounds = bec_decode(SparseCode.from_dense(HAMMING), [bit])
    assert residual.size == 0 and rounds == 1


def test_peel_stopping_set():
    # bits 1 and 2 and 3 cover each check twice: a stopping set
    residual, _ = bec_decode(SparseCode.from_dense(HAMMING), [1, 2, 3])
    assert residual.tolist() == [1, 2, 3]


def test_peel_respects_round_cap():
    h = np.array([[1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1]])
    residual, rounds = bec_decode(SparseCode.from_dense(h), [1, 2, 3], max_iter=1)
    assert rounds == 1 and residual.tolist() == [2, 3]
    residual, rounds = bec_decode(SparseCode.from_dense(h), [1, 2, 3])
    assert rounds == 3 and residual.size == 0


@given(st.integers(2, 8), st.integers(3, 14), st.integers(0, 2**32 - 1))
def test_peeling_order_independent(m, n, seed):
    rng = np.random.default_rng(seed)
    h = random_h(rng, m, n)
    erased = np.flatnonzero(rng.random(n) < 0.5)
    residual, _ = bec_decode(SparseCode.from_dense(h), erased)
    for k in range(3):
        assert sorted(naive_peel(h, erased, np.random.default_rng(k))) == residual.tolist()


def test_sparse_code_validation():
    with pytest.raises(ValueError):
        SparseCode(2, 1, [0, 0], [0, 0])
    with pytest.raises(ValueError):
        SparseCode(2, 1, [0, 3], [0, 0])
    code = SparseCode.from_dense(HAMMING)
    assert code.design_rate == Fraction(4, 7)
    assert not code.syndrome(np.zeros(7, dtype=int)).any()
    assert code.syndrome(np.eye(7, dtype=int)[0]).tolist() == [1, 1, 1]


# -- sum-product ---------------------------------------------------------------------


def test_spa_noiseless_converges_immediately():
    hard, ok, it = awgn_decode(SparseCode.from_dense(HAMMING), np.full(7, 100.0))
    assert ok and it == 0 and not hard.any()


def test_spa_zero_llr_edge_case():
    hard, ok, it = awgn_decode(SparseCode.from_dense(HAMMING), np.zeros(7))
    assert ok and it == 0 and not hard.any()


# bit 0 lies in two checks; every other bit shares at most one check with it
TOY = np.array(
    [
        [1, 1, 1, 0, 0, 0, 0],
        [1, 0, 0, 1, 1, 0, 0],
        [0, 1, 0, 1, 0, 1, 0],
        [0, 0, 1, 0, 1, 0, 1],
        [0, 0, 0, 0, 0, 1, 1],
    ]
)


def test_spa_corrects_single_flip():
    llr = np.full(7, 10.0)
    llr[0] = -10.0
    hard, ok, it = awgn_decode(SparseCode.from_dense(TOY), llr)
    # iteration 1: bit 0 hears +9.3 from each check, 2 * 9.3 - 10 > 0
    assert ok and it == 1 and not hard.any()


def test_spa_does_not_overflow_with_huge_llrs():
    llr = np.full(7, 1e6)
    llr[0] = -1e6
    hard, ok, it = awgn_decode(SparseCode.from_dense(TOY), llr, max_iter=5)
    # clamped extrinsic messages cannot outvote a 1e6 channel LLR
    assert LLR_CLAMP == 30.0
    assert not ok and it == 5 and hard.tolist() == [1, 0, 0, 0, 0, 0, 0]
    llr[0] = -70.0  # two clamped messages add up to about 58.6
    hard, ok, _ = awgn_decode(SparseCode.from_dense(TOY), llr)
    assert not ok and hard[0] == 1
    llr[0] = -20.0
    hard, ok, _ = awgn_decode(SparseCode.from_dense(TOY), llr)
    assert ok and not hard.any()


def test_spa_reports_failure():
    llr = np.full(7, 5.0)
    llr[[1, 2, 3]] = -5.0  # weight-3 pattern: a codeword plus the zero word flip
    hard, ok, it = awgn_decode(SparseCode.from_dense(HAMMING), llr, max_iter=3)
    assert it <= 3
    if ok:
        assert not SparseCode.from_dense(HAMMING).syndrome(hard).any()


def test_spa_input_checks():
    code = SparseCode.from_dense(HAMMING)
    with pytest.raises(ValueError):
        awgn_decode(code, np.zeros(6))
    with pytest.raises(ValueError):
        awgn_decode(code, np.zeros(7), max_iter=0)


# -- harness -------------------------------------------------------------------------


def test_simulate_trivial_channels(small_lift):
    _, code = small_lift
    r = simulate(code, "bec", 0.0, max_frames=300)
    assert (r.frames, r.fer, r.ber) == (300, 0.0, 0.0)
    r = simulate(code, "bec", 1.0, max_frames=50, min_frame_errors=50)
    assert r.fer == 1.0 and r.ber == 1.0


def test_simulate_is_deterministic_and_thread_independent(small_lift):
    _, code = small_lift
    a = simulate(code, "bec", 0.3, seed=5, max_frames=2000, min_frame_errors=40)
    b = simulate(code, "bec", 0.3, seed=5, max_frames=2000, min_frame_errors=40, threads=4)
    assert a == b
    c = simulate(code, "awgn", 2.0, seed=1, max_frames=600, min_frame_errors=30)
    d = simulate(code, "awgn", 2.0, seed=1, max_frames=600, min_frame_errors=30, threads=3)
    assert c == d


def test_simulate_stops_on_frame_errors(small_lift):
    _, code = small_lift
    r = simulate(code, "bec", 0.5, max_frames=10**6, min_frame_errors=17)
    assert r.frame_errors == 17
    assert r.bit_errors <= r.frame_errors * r.n


def test_fer_monotone_in_channel_quality(small_lift):
    _, code = small_lift
    fers = [simulate(code, "bec", e, seed=3, max_frames=3000, min_frame_errors=10**6) for e in (0.2, 0.3, 0.4)]
    for lo, hi in zip(fers, fers[1:]):
        assert lo.fer <= hi.fer + 3 * max(lo.fer_ci, hi.fer_ci)
    aw = [simulate(code, "awgn", db, seed=3, max_frames=800, min_frame_errors=10**6) for db in (4.0, 2.0)]
    assert aw[0].fer <= aw[1].fer + 3 * max(aw[0].fer_ci, aw[1].fer_ci)


def test_simulate_guards(small_lift):
    _, code = small_lift
    with pytest.raises(ValueError):
        simulate(code, "bsc", 0.1)
    with pytest.raises(ValueError):
        simulate(code, "bec", 1.5)
    with pytest.raises(ValueError):
        simulate(code, "bec", 0.1, max_frames=0)


def test_result_invariants_and_csv():
    r = SimResult("bec", 0.3, 1000, 120, 30, 7, 200, 50)
    assert r.ber <= r.fer <= 1
    assert r.fer == 0.03 and r.ber == 120 / 50000
    assert r.reliable and not SimResult("bec", 0.3, 1000, 12, 3, 7, 200, 50).reliable
    assert r.fer_ci == pytest.approx(1.96 * (0.03 * 0.97 / 1000) ** 0.5)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(SimResult.CSV_HEADER)
    w.writerow(r.csv_row())
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0][0] == "channel_param" and rows[1][1] == "1000" and rows[1][-1] == "7"


def test_awgn_noise_variance():
    assert awgn_sigma2(0.0, 0.5) == pytest.approx(1.0)
    assert awgn_sigma2(10 * np.log10(2), 0.5) == pytest.approx(0.5)


def test_default_threads(monkeypatch):
    monkeypatch.setenv("PROTOLAB_THREADS", "3")
    assert default_threads() == 3
    monkeypatch.delenv("PROTOLAB_THREADS")
    assert default_threads() >= 1


def test_alist_code_matches_lift(small_lift, tmp_path):
    lifted, code = small_lift
    lifted.write_alist(tmp_path / "c.alist")
    other = SparseCode.from_alist(tmp_path / "c.alist")
    erased = np.random.default_rng(0).random(code.n) < 0.35
    assert np.array_equal(bec_decode(code, erased)[0], bec_decode(other, erased)[0])


# -- message rates against density evolution -----------------------------------------


def test_first_iteration_rates_match_de(small_lift):
    lifted, code = small_lift
    assert girth(lifted) >= 6
    eps = 0.4
    rates = bec_message_rates(code, eps, 1, 20_000, seed=2)
    tr = run_de(BaseMatrix([[2, 3]]), eps, t_max=1, delta_conv=1e-300, record=True)
    np.testing.assert_allclose(rates.mean[0], eps, atol=5 * rates.stderr[0].max())
    assert (np.abs(rates.mean[1] - tr.x[1]) <= 3 * rates.stderr[1]).all()


def test_bitsliced_rates_agree_with_scalar_peeling():
    # after many iterations the residual message erasures vanish exactly when peeling succeeds
    lifted = node_split(BaseMatrix([[2, 3]]), d2q_graph(5))
    code = SparseCode.from_lifted(lifted)
    rates = bec_message_rates(code, 0.05, 60, 64, seed=9)
    assert rates.frames == 64
    assert rates.mean[-1].max() <= rates.mean[0].max()
    with pytest.raises(ValueError):
        bec_message_rates(SparseCode.from_dense(HAMMING), 0.1, 1, 64)
