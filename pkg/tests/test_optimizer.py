import numpy as np
import pytest

from vofdm import metrics
from vofdm.channel import NoiseConfig
from vofdm.numerics import RngStream
from vofdm.optimizer import SIGMA_S, SweepSpec, optimize_threshold, point_stream, run_sweep

SMALL = dict(trials_per_point=50, threshold_grid=(0.5, 8.0, 0.25))


def test_default_grid():
    ts = SweepSpec().thresholds()
    assert ts[0] == pytest.approx(0.05)
    assert ts[-1] == pytest.approx(20 * SIGMA_S, abs=0.05)
    np.testing.assert_allclose(np.diff(ts), 0.05)


def test_single_point_grid():
    spec = SweepSpec(threshold_grid=(3.0, 3.0, 0.1), trials_per_point=10)
    rec = optimize_threshold((1, 0.01, -15, "nulling"), spec, RngStream(1))
    assert rec.optimal_threshold == 3.0
    assert rec.boundary


@pytest.mark.parametrize(
    "kw,msg",
    [
        (dict(m_values=(3,)), "M must divide N"),
        (dict(p_values=(1.5,)), "probability out of range"),
        (dict(threshold_grid=(0.0, 5.0, 0.1)), "lower bound"),
        (dict(threshold_grid=(1.0, 50.0, 0.1)), "20*sigma_s"),
        (dict(mode="bogus"), "unknown mode"),
        (dict(objective="x"), "objective"),
    ],
)
def test_problems(kw, msg):
    assert any(msg in p for p in SweepSpec(**kw).problems())


def test_sweep_rejects_bad_spec():
    with pytest.raises(ValueError, match="M must divide N"):
        run_sweep(SweepSpec(m_values=(3,)), RngStream(0))


@pytest.mark.parametrize("mode", ["nulling", "clipping"])
def test_analytic_refinement(mode):
    # coarse argmax within one coarse step of a 10x finer grid
    coarse = SweepSpec(method="analytic", mode=mode, threshold_grid=(0.5, 10.0, 0.1))
    fine = SweepSpec(method="analytic", mode=mode, threshold_grid=(0.5, 10.0, 0.01))
    for sinr in (-30, -15, -5):
        a = optimize_threshold((1, 0.01, sinr, mode), coarse, None)
        b = optimize_threshold((1, 0.01, sinr, mode), fine, None)
        assert abs(a.optimal_threshold - b.optimal_threshold) <= 0.1 + 1e-9
        assert not a.boundary


def test_analytic_requires_ofdm():
    with pytest.raises(ValueError):
        optimize_threshold((16, 0.01, -15, "nulling"), SweepSpec(method="analytic"), None)


def test_argmax_validity():
    spec = SweepSpec(**SMALL)
    rec = optimize_threshold((16, 0.01, -15, "nulling"), spec, RngStream(3))
    assert np.all(rec.objective_value >= rec.curve)
    k = int(np.argmax(rec.curve))
    assert rec.optimal_threshold == pytest.approx(spec.thresholds()[k])
    assert rec.near_optimal_lo <= rec.optimal_threshold <= rec.near_optimal_hi


def test_ties_go_to_smallest_threshold():
    # at huge thresholds nothing is nulled, so the curve is flat
    spec = SweepSpec(threshold_grid=(25.0, 28.0, 0.5), trials_per_point=5)
    rec = optimize_threshold((1, 0.0, -15, "nulling"), spec, RngStream(4))
    assert rec.optimal_threshold == 25.0


def test_min_ber_objective():
    spec = SweepSpec(objective="min_ber", trials_per_point=20, threshold_grid=(1.0, 6.0, 1.0))
    rec = optimize_threshold((1, 0.01, -15, "clipping"), spec, RngStream(5))
    assert rec.objective_kind == "min_ber"
    assert 0.0 <= rec.objective_value <= np.min(-rec.curve) + 1e-15


def test_seed_determinism():
    spec = SweepSpec(**SMALL)
    a = optimize_threshold((16, 0.01, -15, "nulling"), spec, RngStream(7))
    b = optimize_threshold((16, 0.01, -15, "nulling"), spec, RngStream(7))
    np.testing.assert_array_equal(a.curve, b.curve)


def test_sweep_matches_direct_call():
    spec = SweepSpec(m_values=(16,), sinr_grid_db=(-20,), **SMALL)
    rng = RngStream(11)
    (rec,) = run_sweep(spec, rng, keep_curves=True)
    direct = optimize_threshold((16, 0.01, -20, "nulling"), spec, point_stream(rng, 0, 0))
    assert rec.as_row() == direct.as_row()


def test_sweep_order_and_shape():
    spec = SweepSpec(m_values=(1, 64), p_values=(0.01, 0.1), sinr_grid_db=(-20, -10), **SMALL)
    recs = run_sweep(spec, RngStream(12))
    assert [(r.p, r.sinr_db, r.m) for r in recs] == [
        (p, s, m) for p in (0.01, 0.1) for s in (-20, -10) for m in (1, 64)
    ]
    assert all(r.curve is None for r in recs)


def test_mc_optimum_near_analytic():
    spec = SweepSpec(trials_per_point=1000, threshold_grid=(1.0, 8.0, 0.05))
    mc = optimize_threshold((1, 0.01, -15, "nulling"), spec, RngStream(13))
    an = metrics.output_snr_analytic(mc.optimal_threshold, NoiseConfig(0.01, 25, -15), "nulling")
    assert abs(mc.objective_value - an.gamma_db) < 0.5


@pytest.mark.slow
def test_workers_identical():
    spec = SweepSpec(m_values=(1, 16), sinr_grid_db=(-20, -10), **SMALL)
    a = run_sweep(spec, RngStream(14), workers=1)
    b = run_sweep(spec, RngStream(14), workers=2)
    assert [r.as_row() for r in a] == [r.as_row() for r in b]
