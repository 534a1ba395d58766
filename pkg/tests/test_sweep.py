import json
import math
from dataclasses import replace

import numpy as np
import pytest

from nlsvirial import DegenerateInputError, DomainError, Nonlinearity, RadialGrid
from nlsvirial.sweep import (CSV_FIELDS, FAILED, SWEEP_GRID, SweepRecord, all_checks,
                             check_first_order, check_floor_and_difference, check_monotone,
                             check_ratio_vanishing, check_record_bounds,
                             check_threshold_consistency, default_gammas, default_sigma,
                             fit_second_order, records_from_csv, records_to_csv,
                             records_to_json, run_sweep, summary_json)
from nlsvirial.verdicts import FAIL, INCONCLUSIVE, PASS, Verdict

SAT = Nonlinearity.saturable()


def rec(gamma, e, lam=1.0, ratio=-0.5, status="Converged"):
    return SweepRecord(gamma, e, lam, ratio, 1e-6, 1e-9, 10, status)


class TestRunSweep:
    def test_empty(self):
        assert run_sweep(SAT, []) == []

    def test_default_gammas(self):
        gs = default_gammas()
        assert gs == sorted(gs) and len(set(gs)) == len(gs) == 28
        assert {100.0, 101.0, 1000.0, 1001.0} <= set(gs)
        assert gs[0] == 5.0 and gs[-1] == 5000.0

    @pytest.mark.parametrize("gs", [[10.0, 5.0], [5.0, 5.0], [0.0, 1.0], [1.0, float("inf")]])
    def test_invalid_gammas(self, gs):
        with pytest.raises(DomainError):
            run_sweep(SAT, gs)

    def test_order_and_determinism_with_workers(self):
        gs = [4.0, 30.0, 100.0, 300.0]
        grid = RadialGrid(12.0, 2048)
        a = run_sweep(SAT, gs, grid, workers=1)
        b = run_sweep(SAT, gs, grid, workers=3)
        assert [r.gamma for r in a] == gs
        assert records_to_csv(a) == records_to_csv(b)
        assert a[0].status == "NoGroundState" and all(r.converged for r in a[1:])

    def test_failures_recorded_not_raised(self):
        # a supercritical power law is rejected by the solver; the sweep keeps going
        out = run_sweep(Nonlinearity.power_law(3.5), [1.0, 2.0], RadialGrid(12.0, 256))
        assert [r.status for r in out] == [FAILED, FAILED]
        assert math.isnan(out[0].e_gamma)

    def test_sweep_records(self, sweeps):
        for name, recs in sweeps.items():
            conv = [r for r in recs if r.converged]
            assert len(conv) >= 20, name
            for r in conv:
                assert -1 < r.ratio < 0 and r.lambda_ > 0 and r.e_gamma < 0
                assert r.pde_residual <= 1e-8 and r.bounds_ok


class TestChecks:
    def test_monotone(self):
        recs = [rec(g, -g) for g in (1.0, 2.0, 3.0)]
        assert check_monotone(recs).status == PASS
        assert check_monotone([recs[0], recs[2], recs[1]]).status == FAIL
        assert check_monotone(recs[:1]).status == INCONCLUSIVE

    def test_monotone_skips_unconverged(self):
        recs = [rec(1.0, -1.0), rec(2.0, 5.0, status="NoGroundState"), rec(3.0, -3.0)]
        assert check_monotone(recs).passed

    def test_floor_synthetic_violation(self):
        v = check_floor_and_difference([rec(100.0, -100.0)])
        assert v.status == FAIL and v.partial

    def test_floor_only_partial(self):
        v = check_floor_and_difference([rec(10.5, -4.0), rec(20.5, -9.0)])
        assert v.passed and v.partial

    def test_difference_pair(self):
        ok = [rec(100.0, -40.0, lam=60.0), rec(101.0, -40.2, lam=60.0)]
        assert check_floor_and_difference(ok).passed and not check_floor_and_difference(ok).partial
        bad = [rec(100.0, -40.0, lam=60.0), rec(101.0, -41.0, lam=60.0)]
        assert check_floor_and_difference(bad).status == FAIL

    def test_ratio_constant_fails(self):
        recs = [rec(g, -g / 3, ratio=-0.5) for g in np.geomspace(10, 1000, 6)]
        assert check_ratio_vanishing(recs, T_hat=1.0).status == FAIL

    def test_ratio_insufficient_span(self):
        recs = [rec(g, -g / 3, ratio=-1 / g) for g in (10.0, 11.0, 12.0, 13.0, 14.0)]
        assert check_ratio_vanishing(recs, 1.0).status == INCONCLUSIVE

    def test_ratio_comparison(self):
        recs = [rec(g, -g / 3, ratio=-5.0 / g) for g in np.geomspace(10, 1000, 6)]
        assert check_ratio_vanishing(recs, T_hat=5.0).passed
        assert check_ratio_vanishing(recs, T_hat=10.0).status == FAIL

    def test_first_order(self):
        recs = [rec(g, -0.5 * g * (1 - 1 / g)) for g in (10.0, 100.0, 1000.0)]
        assert check_first_order(recs, 0.05).passed
        recs = [rec(g, -0.5 * g * 0.8) for g in (10.0, 100.0, 1000.0)]
        assert check_first_order(recs, 0.05).status == FAIL

    def test_threshold_consistency(self):
        recs = [rec(5.0, 0.0, status="NoGroundState"), rec(10.0, -1.0), rec(20.0, -3.0)]
        assert check_threshold_consistency(recs, 10.0).passed
        recs[0] = replace(recs[0], status="Converged")
        assert check_threshold_consistency(recs, 10.0).status == FAIL

    def test_record_bounds(self):
        assert check_record_bounds([rec(1.0, -1.0)]).status == INCONCLUSIVE
        good = replace(rec(1.0, -1.0), bounds_ok=True)
        bad = replace(rec(2.0, -2.0), bounds_ok=False)
        assert check_record_bounds([good]).passed
        assert check_record_bounds([good, bad]).status == FAIL


class TestFit:
    def test_synthetic_exact(self):
        gs = np.geomspace(10, 10_000, 10)
        recs = [rec(g, -g / 2 + 3.0 * math.log(g) + 1.0) for g in gs]
        fit = fit_second_order(recs, T_hat=5.0, sigma=0.9)
        assert fit.slope == pytest.approx(3.0) and fit.intercept == pytest.approx(1.0)
        assert fit.r_squared == pytest.approx(1.0)
        assert fit.verdict.passed
        assert fit.gamma_min == gs[2]  # smallest 20% discarded

    def test_bound_violation(self):
        recs = [rec(g, -g / 2 + 1.0 * math.log(g)) for g in np.geomspace(10, 10_000, 10)]
        assert fit_second_order(recs, T_hat=5.0, sigma=0.9).verdict.status == FAIL

    def test_degenerate(self):
        with pytest.raises(DegenerateInputError):
            fit_second_order([rec(10.0, -4.0)], 5.0)
        with pytest.raises(DomainError):
            fit_second_order([rec(10.0, -4.0), rec(20.0, -9.0)], 0.0)

    def test_default_sigma(self):
        assert default_sigma(SAT) == 0.9
        assert default_sigma(Nonlinearity.square_root()) == 1.0

    @pytest.mark.parametrize("name", ["saturable", "sqrt"])
    def test_real_sweep_fit(self, name, sweeps, thresholds):
        recs = sweeps[name]
        nl = SAT if name == "saturable" else Nonlinearity.square_root()
        fit = fit_second_order(recs, thresholds[name].T_hat, default_sigma(nl))
        assert fit.slope > 0 and fit.verdict.passed
        assert fit.n_used >= 5 and math.log10(fit.gamma_max / fit.gamma_min) >= 1.5

    def test_slope_stable_under_doubling(self, thresholds):
        gs = list(np.geomspace(30, 5000, 8))
        T = thresholds["saturable"].T_hat
        small = fit_second_order(run_sweep(SAT, gs, SWEEP_GRID), T)
        big = fit_second_order(run_sweep(SAT, gs, RadialGrid(2 * SWEEP_GRID.r_max,
                                                             2 * SWEEP_GRID.n)), T)
        assert small.slope > 0
        assert big.slope >= small.slope * (1 - 1e-9)


class TestSerialization:
    def test_csv_header_and_precision(self, sweeps):
        text = records_to_csv(sweeps["saturable"])
        lines = text.splitlines()
        assert lines[0] == ",".join(CSV_FIELDS)
        assert len(lines) == len(sweeps["saturable"]) + 1
        back = records_from_csv(text)
        for a, b in zip(back, sweeps["saturable"]):
            assert a.gamma == b.gamma and a.e_gamma == b.e_gamma and a.lambda_ == b.lambda_
            assert a.status == b.status and a.iters == b.iters

    def test_csv_bad_header(self):
        with pytest.raises(DomainError):
            records_from_csv("a,b\n1,2\n")

    def test_json_is_strict(self):
        recs = [rec(1.0, -1.0), SweepRecord(2.0, *[float("nan")] * 5, 0, FAILED)]
        rows = json.loads(records_to_json(recs))
        assert rows[1]["e_gamma"] is None and rows[0]["lambda"] == 1.0

    def test_summary_json(self, sweeps, thresholds):
        T = thresholds["saturable"].T_hat
        verdicts, fit = all_checks(sweeps["saturable"], T, 0.9)
        doc = json.loads(summary_json(SAT, T, verdicts, fit))
        assert doc["all_passed"] == all(v.passed for v in verdicts)
        assert [Verdict.from_dict(v) for v in doc["verdicts"]][0].name == verdicts[0].name
        assert doc["fit"]["slope"] == fit.slope
