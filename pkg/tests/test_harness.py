"""Monte Carlo engine: determinism, thresholds, ROC machinery, sweeps."""

import math

import numpy as np
import pytest
from scipy import stats

from rydsense.config import SystemConfig
from rydsense.detectors import DetectorKind, ed_pd_closed_form
from rydsense.harness import (
    ExperimentSpec,
    SweepResult,
    SweepRow,
    bayes_error,
    empirical_roc,
    empirical_threshold,
    roc_auc,
    run_trials,
    sweep,
)


def _spec(**kwargs) -> ExperimentSpec:
    sys_kwargs = kwargs.pop("system", {})
    defaults = dict(trials=2000, p_fa_target=0.1)
    defaults.update(kwargs)
    return ExperimentSpec(base=SystemConfig(**sys_kwargs), **defaults)


class TestSpecValidation:
    def test_bad_sweep_variable(self):
        with pytest.raises(ValueError):
            _spec(sweep_variable="bandwidth")

    def test_non_monotone_grid(self):
        with pytest.raises(ValueError):
            _spec(sweep_variable="shots", grid=(1, 3, 2))

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            _spec(sweep_variable="shots", grid=())

    def test_too_few_trials(self):
        with pytest.raises(ValueError):
            _spec(trials=50)

    def test_bad_p_fa(self):
        with pytest.raises(ValueError):
            _spec(p_fa_target=1.0)

    def test_config_at_casts_integer_sweeps(self):
        spec = _spec(sweep_variable="shots", grid=(1, 2, 5))
        assert spec.config_at(5).shots == 5
        assert isinstance(spec.config_at(2.0).shots, int)
        spec2 = _spec(sweep_variable="rnr_db", grid=(0.0, 3.0))
        assert spec2.config_at(3.0).rnr_db == 3.0


class TestEmpiricalThreshold:
    def test_order_statistic(self):
        vals = np.arange(1.0, 101.0)
        assert empirical_threshold(vals, 0.1) == 90.0

    def test_all_equal(self):
        assert empirical_threshold(np.full(500, 3.5), 0.25) == 3.5

    def test_uniform_quantile(self):
        rng = np.random.default_rng(0)
        u = rng.uniform(size=100_000)
        assert empirical_threshold(u, 0.1) == pytest.approx(0.9, abs=0.005)

    def test_achieved_rate_does_not_exceed_target(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            z = rng.standard_normal(997)
            thr = empirical_threshold(z, 0.1)
            assert np.mean(z > thr) <= 0.1 + 1e-12

    def test_input_validation(self):
        with pytest.raises(ValueError):
            empirical_threshold(np.ones(10), 0.1)
        with pytest.raises(ValueError):
            empirical_threshold(np.ones(200), 0.0)


class TestDeterminism:
    def test_worker_count_invariance(self):
        spec = _spec(trials=6000)
        a = run_trials(spec, 0.0, workers=1)
        b = run_trials(spec, 0.0, workers=3)
        for name in ("ga_h0", "ga_h1", "pa_h0", "ed_h1", "rf_h0", "rf_lambda"):
            np.testing.assert_array_equal(getattr(a, name), getattr(b, name))

    def test_repeat_run_identical(self):
        spec = _spec(trials=500)
        a = run_trials(spec, 0.0)
        b = run_trials(spec, 0.0)
        np.testing.assert_array_equal(a.ga_h1, b.ga_h1)

    def test_grid_points_use_distinct_streams(self):
        spec = _spec(sweep_variable="rnr_db", grid=(0.0, 3.0), trials=500)
        a = run_trials(spec, 0.0)
        b = run_trials(spec, 3.0)
        assert not np.array_equal(a.ed_h0, b.ed_h0)

    def test_record_access(self):
        spec = _spec(trials=200)
        rec = run_trials(spec, 0.0)
        assert len(rec) == 200
        r0 = rec[0]
        assert r0.trial_index == 0
        assert r0.ga_h0 == rec.ga_h0[0]


class TestRocMachinery:
    def test_endpoints(self):
        spec = _spec(trials=2000)
        rec = run_trials(spec, 0.0)
        for kind in DetectorKind:
            pts = empirical_roc(rec, kind)
            assert pts[0] == (0.0, 0.0)
            assert pts[-1] == (1.0, 1.0)
            pfa = [p for p, _ in pts]
            pd = [d for _, d in pts]
            assert pfa == sorted(pfa)
            assert pd == sorted(pd)

    def test_null_auc_is_half(self):
        # zero transmit power: H0 and H1 statistics share one distribution
        spec = _spec(system=dict(total_power=0.0), trials=10_000)
        rec = run_trials(spec, 0.0)
        for kind in DetectorKind:
            auc = roc_auc(empirical_roc(rec, kind, max_points=0))
            assert auc == pytest.approx(0.5, abs=0.01)

    def test_perfect_separation_auc(self):
        ideal = [(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
        assert roc_auc(ideal) == 1.0

    def test_strong_signal_auc_near_one(self):
        spec = _spec(system=dict(total_power=50.0), trials=2000)
        rec = run_trials(spec, 0.0)
        auc = roc_auc(empirical_roc(rec, DetectorKind.GenieLRT))
        assert auc > 0.99


class TestNullSafety:
    def test_zero_power_statistics_match_in_law(self):
        spec = _spec(system=dict(total_power=0.0), trials=10_000)
        rec = run_trials(spec, 0.0)
        for kind in DetectorKind:
            h0, h1 = rec.pooled(kind)
            d = stats.ks_2samp(h0, h1).pvalue
            assert d > 1e-4

    def test_zero_power_ed_noncentralities_collapse(self):
        spec = _spec(system=dict(total_power=0.0), trials=500)
        rec = run_trials(spec, 0.0)
        np.testing.assert_allclose(rec.ed_lambda1, rec.ed_lambda0, rtol=1e-12)


class TestCfarAndClosedForms:
    def test_ed_empirical_matches_closed_form(self):
        spec = _spec(trials=60_000)
        rec = run_trials(spec, 0.0)
        pd_hat = float(np.mean(rec.ed_h1 > rec.ed_threshold))
        pd_cf = float(
            np.mean(
                [
                    ed_pd_closed_form(0.1, rec.dof_pairs, rec.ed_lambda0, l1)
                    for l1 in rec.ed_lambda1[:4000]
                ]
            )
        )
        assert pd_hat == pytest.approx(pd_cf, abs=3 * 0.5 / math.sqrt(4000))

    def test_ed_false_alarm_at_target(self):
        spec = _spec(trials=60_000)
        rec = run_trials(spec, 0.0)
        pfa_hat = float(np.mean(rec.ed_h0 > rec.ed_threshold))
        assert pfa_hat == pytest.approx(0.1, abs=3 * math.sqrt(0.09 / 60_000))

    def test_rf_false_alarm_at_target(self):
        spec = _spec(trials=60_000)
        rec = run_trials(spec, 0.0)
        pfa_hat = float(np.mean(rec.rf_h0 > rec.rf_threshold))
        assert pfa_hat == pytest.approx(0.1, abs=3 * math.sqrt(0.09 / 60_000))


class TestBayesError:
    def test_bounded_and_genie_best(self):
        spec = _spec(trials=20_000)
        rec = run_trials(spec, 0.0)
        pes = {kind: bayes_error(rec, kind)[0] for kind in DetectorKind}
        for pe in pes.values():
            assert 0.0 <= pe <= 0.5 + 1e-9
        # the genie test with MAP thresholds is the Bayes-optimal rule
        assert pes[DetectorKind.GenieLRT] <= pes[DetectorKind.PhaseAvgLRT] + 0.01
        assert pes[DetectorKind.GenieLRT] <= pes[DetectorKind.QuantumED] + 0.01

    def test_null_case_is_half(self):
        spec = _spec(system=dict(total_power=0.0, prior_eta=1.0), trials=20_000)
        rec = run_trials(spec, 0.0)
        pe, se = bayes_error(rec, DetectorKind.GenieLRT)
        assert pe == pytest.approx(0.5, abs=4 * se + 0.005)


class TestSweep:
    def test_rows_schema_and_lookup(self, tmp_path):
        spec = _spec(sweep_variable="shots", grid=(1, 2), trials=2000)
        res = sweep(spec)
        detectors = {r.detector for r in res.rows}
        assert detectors == {"genie_lrt", "phase_avg_lrt", "quantum_ed", "rf_ed"}
        row = res.lookup(1.0, "quantum_ed", "pd")
        assert 0.0 <= row.estimate <= 1.0
        assert row.std_error > 0
        with pytest.raises(KeyError):
            res.lookup(3.0, "quantum_ed", "pd")

        out = tmp_path / "sweep.csv"
        res.write_csv(out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "grid_value,detector,metric,estimate,std_error,n_trials"
        # 2 grid points x (2 LRTs x 3 metrics + 2 EDs x 4 metrics)
        assert len(lines) - 1 == 2 * (2 * 3 + 2 * 4)

    def test_pd_improves_with_shots(self):
        spec = _spec(sweep_variable="shots", grid=(1, 8), trials=20_000)
        res = sweep(spec)
        for detname in ("genie_lrt", "quantum_ed"):
            lo = res.lookup(1.0, detname, "pd").estimate
            hi = res.lookup(8.0, detname, "pd").estimate
            assert hi > lo

    def test_lrt_cfar_honesty_held_out(self):
        spec = _spec(trials=50_000, held_out=True)
        res = sweep(spec)
        for detname in ("genie_lrt", "phase_avg_lrt"):
            row = res.lookup(0.0, detname, "pfa")
            assert abs(row.estimate - 0.1) <= 3 * row.std_error + 0.003
