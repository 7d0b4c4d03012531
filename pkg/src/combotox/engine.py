"""Adaptive cohort-of-two CRM dose assignment with attribution restrictions.

The first cohort is treated at the minimum combination.  From then on the
two patients of a cohort alternate which drug is re-estimated: one varies
x on the previous cohort's y line, the other varies y on the previous
cohort's x line (the pairing flips between even and odd cohorts).  Each
candidate dose passes through, in order:

    CRM solve -> attribution restriction -> escalation cap -> grid rounding

A DLT attributed to a drug in the previous cohort forbids escalating that
drug past the reference dose on the same line.  The trial stops early
when the posterior risk at the minimum combination is too high.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .model import DoseBounds, ModelParams, MtdCurve, mtd_curve, mtd_solve_x, \
    mtd_solve_y, prob_dlt
from .inference import McmcConfig, PatientRecord, PosteriorSamples, PriorSpec, \
    posterior_median, posterior_prob_dlt_exceeds, sample_posterior

__all__ = [
    "DesignConfig",
    "CohortAssignment",
    "TrialState",
    "MtdEstimate",
    "start_trial",
    "crm_dose_given",
    "apply_escalation_cap",
    "apply_attribution_restriction",
    "round_to_grid",
    "next_cohort",
    "check_stopping",
    "final_mtd",
]


@dataclass(frozen=True)
class DesignConfig:
    theta: float = 0.3
    n_max: int = 40
    xi1: float = 0.05
    xi2: float = 0.8
    cap_fraction: float = 0.2
    bounds: DoseBounds = field(default_factory=DoseBounds)
    x_grid: tuple[float, ...] | None = None
    y_grid: tuple[float, ...] | None = None
    delta_select: float = 0.10
    prior: PriorSpec = field(default_factory=PriorSpec)
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    seed: int = 0
    # test hook: a point-mass posterior bypassing MCMC entirely
    posterior_override: ModelParams | None = None

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        if self.n_max < 2 or self.n_max % 2 != 0:
            raise ValueError("n_max must be an even number of patients >= 2")
        if not 0.0 < self.cap_fraction <= 1.0:
            raise ValueError("cap_fraction must lie in (0, 1]")
        if not (0.0 <= self.xi1 < 1.0 and 0.0 < self.xi2 < 1.0):
            raise ValueError("xi1/xi2 out of range")
        for grid, lo, hi, name in (
                (self.x_grid, self.bounds.x_min, self.bounds.x_max, "x_grid"),
                (self.y_grid, self.bounds.y_min, self.bounds.y_max, "y_grid")):
            if grid is not None:
                if len(grid) < 1 or list(grid) != sorted(grid):
                    raise ValueError(f"{name} must be sorted ascending")
                if grid[0] < lo - 1e-9 or grid[-1] > hi + 1e-9:
                    raise ValueError(f"{name} levels must lie within bounds")

    @property
    def discrete(self) -> bool:
        return self.x_grid is not None and self.y_grid is not None

    @property
    def min_combination(self) -> tuple[float, float]:
        x0 = self.x_grid[0] if self.x_grid else self.bounds.x_min
        y0 = self.y_grid[0] if self.y_grid else self.bounds.y_min
        return (x0, y0)


@dataclass(frozen=True)
class CohortAssignment:
    cohort_index: int
    doses: tuple[tuple[float, float], tuple[float, float]]
    rationale: tuple[dict, dict]


@dataclass
class TrialState:
    config: DesignConfig
    patients: list[PatientRecord] = field(default_factory=list)
    assignments: list[CohortAssignment] = field(default_factory=list)
    pending: CohortAssignment | None = None
    stopped: bool = False
    stop_reason: str | None = None
    completed: bool = False
    posterior: PosteriorSamples | None = None

    @property
    def cohorts_completed(self) -> int:
        return len(self.patients) // 2

    @property
    def finished(self) -> bool:
        return self.stopped or self.completed


def start_trial(config: DesignConfig) -> tuple[TrialState, CohortAssignment]:
    """Open a trial; both first-cohort patients get the minimum combination."""
    x0, y0 = config.min_combination
    rationale = {"crm": None, "after_restriction": None, "after_cap": None,
                 "final_x": x0, "final_y": y0, "note": "first cohort at minimum"}
    assignment = CohortAssignment(cohort_index=1, doses=((x0, y0), (x0, y0)),
                                  rationale=(dict(rationale), dict(rationale)))
    state = TrialState(config=config, pending=assignment)
    state.assignments.append(assignment)
    return state, assignment


def crm_dose_given(params_hat: ModelParams, fixed_dose: float, axis: str,
                   theta: float, bounds: DoseBounds = DoseBounds()) -> float:
    """Continuous dose of the varying drug minimizing |pi_hat - theta|.

    `axis` names the drug being varied ("x" or "y"); `fixed_dose` is the
    other drug's current dose.  By monotonicity the minimizer is the MTD
    crossing when it is interior, else the nearer boundary.
    """
    if axis == "x":
        lo, hi = bounds.x_min, bounds.x_max
        p_lo = prob_dlt(lo, fixed_dose, params_hat)
        p_hi = prob_dlt(hi, fixed_dose, params_hat)
        if p_lo >= theta:
            return lo
        if p_hi <= theta:
            return hi
        sol = mtd_solve_x(fixed_dose, params_hat, theta, bounds)
    elif axis == "y":
        lo, hi = bounds.y_min, bounds.y_max
        p_lo = prob_dlt(fixed_dose, lo, params_hat)
        p_hi = prob_dlt(fixed_dose, hi, params_hat)
        if p_lo >= theta:
            return lo
        if p_hi <= theta:
            return hi
        sol = mtd_solve_y(fixed_dose, params_hat, theta, bounds)
    else:
        raise ValueError("axis must be 'x' or 'y'")
    if sol is None:
        # boundary checks guarantee a crossing; only fp pathologies land here
        return hi if abs(p_hi - theta) < abs(p_lo - theta) else lo
    return sol


def apply_escalation_cap(candidate: float, previous: float, cap_fraction: float,
                         lo: float, hi: float) -> float:
    """Limit any escalation step to cap_fraction of the dose range;
    de-escalation is never capped."""
    return min(candidate, previous + cap_fraction * (hi - lo))


def apply_attribution_restriction(candidate: float, axis: str,
                                  previous_cohort: tuple[PatientRecord, PatientRecord],
                                  previous_dose_on_line: float) -> float:
    """Clamp to the reference dose when the previous cohort had a DLT
    attributed to this axis's drug (a both-drug attribution restricts both)."""
    flag = "delta1" if axis == "x" else "delta2"
    hit = any(rec.tox == 1 and rec.attributed == 1 and getattr(rec, flag) == 1
              for rec in previous_cohort)
    return min(candidate, previous_dose_on_line) if hit else candidate


def round_to_grid(candidate: float, grid: tuple[float, ...]) -> float:
    """Nearest grid level; exact midpoints resolve to the lower dose."""
    if not grid:
        raise ValueError("grid must be non-empty")
    best = grid[0]
    best_d = abs(candidate - best)
    for level in grid[1:]:
        d = abs(candidate - level)
        if d < best_d - 1e-15:
            best, best_d = level, d
    return best


def check_stopping(samples: PosteriorSamples, config: DesignConfig) -> bool:
    """Stop when P(pi(min combo) >= theta + xi1 | data) > xi2 (strict)."""
    x0, y0 = config.min_combination
    frac = posterior_prob_dlt_exceeds(samples, x0, y0, config.theta + config.xi1)
    return frac > config.xi2


def _refit(state: TrialState) -> PosteriorSamples:
    cfg = state.config
    if cfg.posterior_override is not None:
        return PosteriorSamples.point_mass(cfg.posterior_override)
    # per-cohort seed so assignments depend only on config seed + history
    seed = int(np.random.SeedSequence(
        (cfg.seed, state.cohorts_completed)).generate_state(1)[0])
    return sample_posterior(state.patients, cfg.prior,
                            replace(cfg.mcmc, seed=seed))


def _assign_patient(state: TrialState, axis: str, held_dose: float,
                    reference_dose: float, params_hat: ModelParams,
                    previous_cohort: tuple[PatientRecord, PatientRecord]) -> tuple[tuple[float, float], dict]:
    cfg = state.config
    crm = crm_dose_given(params_hat, held_dose, axis, cfg.theta, cfg.bounds)
    restricted = apply_attribution_restriction(crm, axis, previous_cohort,
                                               reference_dose)
    if axis == "x":
        lo, hi, grid = cfg.bounds.x_min, cfg.bounds.x_max, cfg.x_grid
    else:
        lo, hi, grid = cfg.bounds.y_min, cfg.bounds.y_max, cfg.y_grid
    capped = apply_escalation_cap(restricted, reference_dose,
                                  cfg.cap_fraction, lo, hi)
    final = round_to_grid(capped, grid) if grid is not None else capped
    rationale = {"axis": axis, "held": held_dose, "reference": reference_dose,
                 "crm": crm, "after_restriction": restricted,
                 "after_cap": capped, "final": final,
                 "restricted": restricted < crm, "capped": capped < restricted}
    dose = (final, held_dose) if axis == "x" else (held_dose, final)
    return dose, rationale


def next_cohort(state: TrialState,
                outcomes: tuple[PatientRecord, PatientRecord]) -> tuple[TrialState, CohortAssignment | None]:
    """Record a completed cohort, refit, and either assign the next cohort
    or finish (returns None when the trial stopped or completed)."""
    if state.finished:
        raise ValueError("trial already finished")
    if state.pending is None:
        raise ValueError("no pending cohort")
    if len(outcomes) != 2:
        raise ValueError("a cohort consists of exactly two patient records")
    for rec, dose in zip(outcomes, state.pending.doses):
        if not (math.isclose(rec.x, dose[0], abs_tol=1e-9)
                and math.isclose(rec.y, dose[1], abs_tol=1e-9)):
            raise ValueError("outcome doses do not match the pending assignment")
    state.patients.extend(outcomes)
    state.pending = None
    state.posterior = _refit(state)

    if check_stopping(state.posterior, state.config):
        state.stopped = True
        state.stop_reason = ("posterior DLT risk at the minimum combination "
                             "exceeds the safety threshold")
        return state, None
    if len(state.patients) >= state.config.n_max:
        state.completed = True
        return state, None

    i_next = state.cohorts_completed + 1
    params_hat = posterior_median(state.posterior)
    prev_a = state.patients[-2]     # patient 2i-3
    prev_b = state.patients[-1]     # patient 2i-2
    prev_cohort = (prev_a, prev_b)
    if i_next % 2 == 0:
        dose_a, rat_a = _assign_patient(state, "x", prev_a.y, prev_a.x,
                                        params_hat, prev_cohort)
        dose_b, rat_b = _assign_patient(state, "y", prev_b.x, prev_b.y,
                                        params_hat, prev_cohort)
    else:
        dose_a, rat_a = _assign_patient(state, "y", prev_a.x, prev_a.y,
                                        params_hat, prev_cohort)
        dose_b, rat_b = _assign_patient(state, "x", prev_b.y, prev_b.x,
                                        params_hat, prev_cohort)
    assignment = CohortAssignment(cohort_index=i_next,
                                  doses=(dose_a, dose_b),
                                  rationale=(rat_a, rat_b))
    state.pending = assignment
    state.assignments.append(assignment)
    return state, assignment


@dataclass(frozen=True)
class MtdEstimate:
    """Final recommendation: a continuous curve, a discrete set, or empty
    when the trial stopped for safety."""

    kind: str                                   # "curve" | "set" | "none"
    params_hat: ModelParams | None = None
    curve: MtdCurve | None = None
    combinations: tuple[tuple[float, float], ...] = ()
    stopped_reason: str | None = None

    @property
    def empty(self) -> bool:
        if self.kind == "none":
            return True
        if self.kind == "set":
            return len(self.combinations) == 0
        return self.curve is None or self.curve.is_empty


def final_mtd(state: TrialState, curve_grid_size: int = 101) -> MtdEstimate:
    """MTD estimate at the end of a trial (completed or stopped)."""
    cfg = state.config
    if not state.finished:
        raise ValueError("trial is not finished")
    if state.stopped:
        return MtdEstimate(kind="none", stopped_reason=state.stop_reason)
    params_hat = posterior_median(state.posterior)
    if cfg.discrete:
        combos = tuple(
            (x, y)
            for x in cfg.x_grid for y in cfg.y_grid
            if abs(prob_dlt(x, y, params_hat) - cfg.theta) <= cfg.delta_select)
        return MtdEstimate(kind="set", params_hat=params_hat,
                           combinations=combos)
    curve = mtd_curve(params_hat, cfg.theta, curve_grid_size, cfg.bounds)
    return MtdEstimate(kind="curve", params_hat=params_hat, curve=curve)
