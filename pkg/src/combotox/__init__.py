"""Adaptive dose finding for two-drug combinations with partial toxicity
attribution: copula dose-toxicity model, MCMC inference, cohort-of-two CRM
escalation, simulation harness, and a trial-conduct service."""

from .model import (DoseBounds, ModelParams, MtdCurve, attribution_prob,
                    joint_outcome_prob, mtd_curve, mtd_solve_x, mtd_solve_y,
                    prob_dlt, standardize_dose)
from .inference import (McmcConfig, PatientRecord, PosteriorSamples, PriorSpec,
                        log_likelihood, log_posterior, posterior_median,
                        posterior_prob_dlt_exceeds, sample_posterior)
from .engine import (CohortAssignment, DesignConfig, MtdEstimate, TrialState,
                     apply_attribution_restriction, apply_escalation_cap,
                     check_stopping, crm_dose_given, final_mtd, next_cohort,
                     round_to_grid, start_trial)
from .simulation import (OperatingCharacteristics, ProbTable, Scenario,
                         TrialResult, WorkingModel, discrete_pct_selection,
                         generate_outcome, make_grid_scenario, pointwise_bias,
                         pointwise_pct_recommendation, run_study, run_trial,
                         safety_stats, true_mtd_set, true_prob)

__version__ = "0.1.0"
