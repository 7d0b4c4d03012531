import math
from dataclasses import replace

import numpy as np
import pytest

from combotox.model import DoseBounds, ModelParams, prob_dlt
from combotox.inference import McmcConfig, PatientRecord, PosteriorSamples
from combotox.engine import (DesignConfig, apply_attribution_restriction,
                             apply_escalation_cap, check_stopping,
                             crm_dose_given, final_mtd, next_cohort,
                             round_to_grid, start_trial)

GRID4 = (0.05, 0.05 + 0.25 / 3, 0.05 + 0.5 / 3, 0.30)

POINT = ModelParams(1.0, 1.0, 0.0, 0.5)          # degenerate posterior hook


def degenerate_config(**kwargs):
    defaults = dict(posterior_override=POINT, cap_fraction=1.0)
    defaults.update(kwargs)
    return DesignConfig(**defaults)


def no_tox(dose):
    return PatientRecord(x=dose[0], y=dose[1], tox=0)


class TestStartTrial:
    def test_default_minimum(self):
        _, a = start_trial(DesignConfig())
        assert a.doses == ((0.05, 0.05), (0.05, 0.05))

    def test_grid_minimum(self):
        cfg = DesignConfig(x_grid=GRID4, y_grid=GRID4)
        _, a = start_trial(cfg)
        assert a.doses == ((0.05, 0.05), (0.05, 0.05))

    def test_custom_bounds(self):
        cfg = DesignConfig(bounds=DoseBounds(0.1, 0.4, 0.1, 0.4))
        _, a = start_trial(cfg)
        assert a.doses == ((0.1, 0.1), (0.1, 0.1))

    def test_first_cohort_ignores_posterior(self):
        # identical assignment regardless of the posterior hook
        _, a1 = start_trial(degenerate_config())
        _, a2 = start_trial(DesignConfig(
            posterior_override=ModelParams(1.9, 0.3, 5.0, 0.1)))
        assert a1.doses == a2.doses == ((0.05, 0.05), (0.05, 0.05))


class TestCrmDoseGiven:
    def test_closed_form_interior(self):
        got = crm_dose_given(ModelParams(1, 1, 0), 0.05, "x", 0.3)
        assert got == pytest.approx((0.3 - 0.05) / 0.95, abs=1e-9)

    def test_upper_boundary(self):
        p = ModelParams(1.1, 1.1, 1.0)
        assert prob_dlt(0.3, 0.05, p) < 0.3
        assert crm_dose_given(p, 0.05, "x", 0.3) == pytest.approx(0.3)

    def test_lower_boundary(self):
        p = ModelParams(1.0, 1.0, 0.0)
        assert crm_dose_given(p, 0.30, "x", 0.3) == pytest.approx(0.05)

    def test_y_axis(self):
        got = crm_dose_given(ModelParams(1, 1, 0), 0.05, "y", 0.3)
        assert got == pytest.approx((0.3 - 0.05) / 0.95, abs=1e-9)


class TestClamps:
    def test_cap_limits_escalation(self):
        assert apply_escalation_cap(0.2632, 0.05, 0.2, 0.05, 0.3) \
            == pytest.approx(0.10)

    def test_cap_inactive_below(self):
        assert apply_escalation_cap(0.08, 0.05, 0.2, 0.05, 0.3) \
            == pytest.approx(0.08)

    def test_deescalation_uncapped(self):
        assert apply_escalation_cap(0.05, 0.30, 0.2, 0.05, 0.3) \
            == pytest.approx(0.05)

    def test_restriction_on_attributed_dlt(self):
        cohort = (PatientRecord(0.15, 0.1, 1, 1, 1, 0),
                  PatientRecord(0.15, 0.1, 0))
        assert apply_attribution_restriction(0.2, "x", cohort, 0.15) \
            == pytest.approx(0.15)

    def test_unattributed_dlt_no_clamp(self):
        cohort = (PatientRecord(0.15, 0.1, 1, 0), PatientRecord(0.15, 0.1, 0))
        assert apply_attribution_restriction(0.2, "x", cohort, 0.15) \
            == pytest.approx(0.2)

    def test_both_drug_attribution_restricts_both_axes(self):
        cohort = (PatientRecord(0.1, 0.08, 1, 1, 1, 1),
                  PatientRecord(0.1, 0.08, 0))
        assert apply_attribution_restriction(0.1, "y", cohort, 0.08) \
            == pytest.approx(0.08)
        assert apply_attribution_restriction(0.2, "x", cohort, 0.1) \
            == pytest.approx(0.1)

    def test_round_to_grid(self):
        assert round_to_grid(0.2632, GRID4) == pytest.approx(0.30)
        assert round_to_grid(0.05, GRID4) == pytest.approx(0.05)
        assert round_to_grid(0.175, GRID4) == pytest.approx(GRID4[1])

    def test_round_tie_goes_low(self):
        assert round_to_grid(0.15, (0.1, 0.2)) == pytest.approx(0.1)


class TestNextCohort:
    def test_second_cohort_unconstrained(self):
        state, a = start_trial(degenerate_config())
        state, a2 = next_cohort(state, tuple(no_tox(d) for d in a.doses))
        # cohort 2 is even: patient 3 varies x, patient 4 varies y
        assert a2.doses[0][0] == pytest.approx(0.26316, abs=1e-4)
        assert a2.doses[0][1] == pytest.approx(0.05)
        assert a2.doses[1][0] == pytest.approx(0.05)
        assert a2.doses[1][1] == pytest.approx(0.26316, abs=1e-4)

    def test_attributed_dlt_clamps_next_x(self):
        state, a = start_trial(degenerate_config())
        outcomes = (PatientRecord(0.05, 0.05, 1, 1, 1, 0), no_tox(a.doses[1]))
        state, a2 = next_cohort(state, outcomes)
        assert a2.doses[0][0] <= 0.05 + 1e-12

    def test_cap_fraction_clamps(self):
        state, a = start_trial(degenerate_config(cap_fraction=0.2))
        state, a2 = next_cohort(state, tuple(no_tox(d) for d in a.doses))
        assert a2.doses[0][0] == pytest.approx(0.10)
        assert a2.doses[1][1] == pytest.approx(0.10)

    def test_wrong_doses_rejected(self):
        state, a = start_trial(degenerate_config())
        bad = (PatientRecord(0.2, 0.05, 0), no_tox(a.doses[1]))
        with pytest.raises(ValueError):
            next_cohort(state, bad)

    def test_single_outcome_rejected(self):
        state, a = start_trial(degenerate_config())
        with pytest.raises(ValueError):
            next_cohort(state, (no_tox(a.doses[0]),))

    def test_completion_at_n_max(self):
        cfg = degenerate_config(n_max=4)
        state, a = start_trial(cfg)
        state, a2 = next_cohort(state, tuple(no_tox(d) for d in a.doses))
        state, a3 = next_cohort(state, tuple(no_tox(d) for d in a2.doses))
        assert a3 is None
        assert state.completed and not state.stopped

    def test_alternation_holds_coordinate(self):
        cfg = degenerate_config(n_max=12)
        state, a = start_trial(cfg)
        while not state.finished:
            state, a = next_cohort(state,
                                   tuple(no_tox(d) for d in state.pending.doses))
        for assignment in state.assignments[1:]:
            for rat in assignment.rationale:
                if rat["axis"] == "x":
                    dose = assignment.doses[0] \
                        if assignment.rationale[0] is rat else assignment.doses[1]
                    assert dose[1] == rat["held"]
                else:
                    dose = assignment.doses[0] \
                        if assignment.rationale[0] is rat else assignment.doses[1]
                    assert dose[0] == rat["held"]


class TestCheckStopping:
    def _samples(self, frac):
        # draws engineered so that `frac` of them put pi(0.05,0.05) above
        # theta + xi1: alpha=beta small makes the minimum dose toxic
        n = 20
        k = round(frac * n)
        hot = [[0.2, 0.2, 0.0, 0.5]] * k        # pi(0.05,0.05) ~ 0.72
        cold = [[2.0, 2.0, 0.0, 0.5]] * (n - k)  # pi ~ 0.005
        draws = np.array(hot + cold)
        return PosteriorSamples(draws, np.ones(4), np.ones(4), n, 0, 0)

    def test_stop_above_threshold(self):
        assert check_stopping(self._samples(0.85), DesignConfig()) is True

    def test_boundary_is_continue(self):
        assert check_stopping(self._samples(0.80), DesignConfig()) is False

    def test_low_fraction_continues(self):
        assert check_stopping(self._samples(0.10), DesignConfig()) is False


class TestFinalMtd:
    def _run_to_completion(self, cfg):
        state, a = start_trial(cfg)
        while not state.finished:
            state, a = next_cohort(state,
                                   tuple(no_tox(d) for d in state.pending.doses))
        return state

    def test_continuous_curve_closed_form(self):
        state = self._run_to_completion(degenerate_config(n_max=4))
        est = final_mtd(state)
        assert est.kind == "curve"
        for x, y in est.curve.points():
            assert y == pytest.approx((0.3 - x) / (1 - x), abs=1e-9)

    def test_discrete_set_matches_band(self):
        cfg = DesignConfig(posterior_override=ModelParams(1.1, 1.1, 1.0, 0.5),
                           cap_fraction=1.0, n_max=4,
                           x_grid=GRID4, y_grid=GRID4)
        state = self._run_to_completion(cfg)
        est = final_mtd(state)
        assert est.kind == "set"
        want = {(x, y) for x in GRID4 for y in GRID4
                if abs(prob_dlt(x, y, cfg.posterior_override) - 0.3) <= 0.10}
        assert set(est.combinations) == want

    def test_stopped_trial_empty_recommendation(self):
        cfg = DesignConfig(posterior_override=ModelParams(0.2, 0.2, 0.0, 0.5),
                           cap_fraction=1.0)
        state, a = start_trial(cfg)
        state, nxt = next_cohort(state, tuple(no_tox(d) for d in a.doses))
        assert nxt is None and state.stopped
        est = final_mtd(state)
        assert est.kind == "none" and est.empty
        assert est.stopped_reason

    def test_unfinished_trial_rejected(self):
        state, _ = start_trial(degenerate_config())
        with pytest.raises(ValueError):
            final_mtd(state)


class TestEngineWithRealPosterior:
    def test_deterministic_assignments(self):
        mc = McmcConfig(chain_length=1500, burn_in=500)
        cfg = DesignConfig(n_max=8, mcmc=mc, seed=42)
        seqs = []
        for _ in range(2):
            state, a = start_trial(cfg)
            outcome_pattern = iter([0, 0, 0, 1, 0, 0, 0, 0])
            while not state.finished:
                outs = []
                for d in state.pending.doses:
                    t = next(outcome_pattern)
                    outs.append(PatientRecord(d[0], d[1], t,
                                              0 if t else None))
                state, a = next_cohort(state, tuple(outs))
            seqs.append([r for asg in state.assignments for r in asg.doses])
        assert seqs[0] == seqs[1]
