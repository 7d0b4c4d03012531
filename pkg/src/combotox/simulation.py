"""Scenario truth, outcome generation and operating characteristics.

A scenario's truth is either working-model parameters (the same copula
used for inference) or an explicit probability table over a discrete dose
grid.  Outcome generation follows the chance tree: Bernoulli DLT at the
true probability, Bernoulli attribution with probability eta_true, and a
uniformly chosen attribution label among D1 / D2 / both, optionally
corrupted by a label-error rate.

Studies replicate trials over independent seed streams; every statistic
is a pure fold over per-trial results in replicate order, so output is
bit-identical regardless of the degree of parallelism.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .model import DoseBounds, ModelParams, MtdCurve, mtd_curve, mtd_solve_y, \
    prob_dlt
from .inference import PatientRecord
from .engine import DesignConfig, MtdEstimate, final_mtd, next_cohort, \
    round_to_grid, start_trial

__all__ = [
    "WorkingModel",
    "ProbTable",
    "Scenario",
    "TrialResult",
    "OperatingCharacteristics",
    "true_prob",
    "generate_outcome",
    "run_trial",
    "run_study",
    "safety_stats",
    "pointwise_bias",
    "pointwise_pct_recommendation",
    "discrete_pct_selection",
    "rounded_curve_set",
    "make_grid_scenario",
    "true_mtd_set",
]

_LABELS = ((1, 0), (0, 1), (1, 1))


@dataclass(frozen=True)
class WorkingModel:
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("working-model exponents must be positive")

    def params(self, eta: float = 0.0) -> ModelParams:
        return ModelParams(self.alpha, self.beta, self.gamma, eta)


@dataclass(frozen=True)
class ProbTable:
    """True DLT probabilities on a discrete grid: probs[i][j] is the value
    at (x_levels[i], y_levels[j])."""

    x_levels: tuple[float, ...]
    y_levels: tuple[float, ...]
    probs: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if len(self.probs) != len(self.x_levels):
            raise ValueError("probs must have one row per x level")
        for row in self.probs:
            if len(row) != len(self.y_levels):
                raise ValueError("probs rows must match y levels")
            for p in row:
                if not 0.0 <= p <= 1.0:
                    raise ValueError("probabilities must lie in [0, 1]")

    def lookup(self, x: float, y: float) -> float:
        ix = _level_index(self.x_levels, x)
        iy = _level_index(self.y_levels, y)
        return self.probs[ix][iy]


def _level_index(levels: tuple[float, ...], value: float) -> int:
    for i, lv in enumerate(levels):
        if math.isclose(lv, value, abs_tol=1e-9):
            return i
    raise ValueError(f"dose {value} is not a grid level of {levels}")


@dataclass(frozen=True)
class Scenario:
    truth: WorkingModel | ProbTable
    eta_true: float
    attribution_error_rate: float = 0.0
    label: str = ""

    def __post_init__(self):
        if not 0.0 <= self.eta_true <= 1.0:
            raise ValueError("eta_true must lie in [0, 1]")
        if not 0.0 <= self.attribution_error_rate <= 1.0:
            raise ValueError("attribution_error_rate must lie in [0, 1]")

    def to_dict(self) -> dict:
        if isinstance(self.truth, WorkingModel):
            truth = {"type": "working_model", "alpha": self.truth.alpha,
                     "beta": self.truth.beta, "gamma": self.truth.gamma}
        else:
            truth = {"type": "prob_table",
                     "x_levels": list(self.truth.x_levels),
                     "y_levels": list(self.truth.y_levels),
                     "probs": [list(r) for r in self.truth.probs]}
        return {"label": self.label, "truth": truth,
                "eta_true": self.eta_true,
                "attribution_error_rate": self.attribution_error_rate}

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        t = d["truth"]
        kind = t.get("type")
        if kind == "working_model":
            truth = WorkingModel(t["alpha"], t["beta"], t["gamma"])
        elif kind == "prob_table":
            truth = ProbTable(tuple(t["x_levels"]), tuple(t["y_levels"]),
                              tuple(tuple(r) for r in t["probs"]))
        else:
            raise ValueError(f"unknown truth type: {kind!r}")
        return cls(truth=truth, eta_true=d["eta_true"],
                   attribution_error_rate=d.get("attribution_error_rate", 0.0),
                   label=d.get("label", ""))

    @classmethod
    def from_json(cls, path: str) -> "Scenario":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def true_prob(scenario: Scenario, x: float, y: float) -> float:
    """True DLT probability of the scenario at a dose pair."""
    if isinstance(scenario.truth, WorkingModel):
        return prob_dlt(x, y, scenario.truth.params())
    return scenario.truth.lookup(x, y)


def generate_outcome(scenario: Scenario, x: float, y: float,
                     rng: np.random.Generator) -> PatientRecord:
    """Draw one patient outcome at (x, y) from the scenario truth."""
    p = true_prob(scenario, x, y)
    if rng.random() >= p:
        return PatientRecord(x=x, y=y, tox=0)
    if rng.random() >= scenario.eta_true:
        return PatientRecord(x=x, y=y, tox=1, attributed=0)
    k = int(rng.integers(3))
    if scenario.attribution_error_rate > 0.0 \
            and rng.random() < scenario.attribution_error_rate:
        others = [m for m in range(3) if m != k]
        k = others[int(rng.integers(2))]
    d1, d2 = _LABELS[k]
    return PatientRecord(x=x, y=y, tox=1, attributed=1, delta1=d1, delta2=d2)


@dataclass(frozen=True)
class TrialResult:
    n_treated: int
    n_dlt: int
    stopped: bool
    estimate: MtdEstimate
    doses: tuple[tuple[float, float], ...]

    @property
    def dlt_rate(self) -> float:
        return self.n_dlt / self.n_treated if self.n_treated else 0.0


def run_trial(scenario: Scenario, config: DesignConfig, seed: int) -> TrialResult:
    """Simulate one complete trial; deterministic per seed."""
    outcome_rng = np.random.default_rng(np.random.SeedSequence((seed, 0)))
    engine_seed = int(np.random.SeedSequence((seed, 1)).generate_state(1)[0])
    cfg = replace(config, seed=engine_seed)
    state, assignment = start_trial(cfg)
    while True:
        outcomes = tuple(generate_outcome(scenario, x, y, outcome_rng)
                         for (x, y) in state.pending.doses)
        state, assignment = next_cohort(state, outcomes)
        if state.finished:
            break
    estimate = final_mtd(state)
    n_dlt = sum(rec.tox for rec in state.patients)
    return TrialResult(n_treated=len(state.patients), n_dlt=n_dlt,
                       stopped=state.stopped, estimate=estimate,
                       doses=tuple((r.x, r.y) for r in state.patients))


def safety_stats(rates: np.ndarray, theta: float) -> dict:
    """Average percent DLT and strict-inequality exceedance percentages."""
    rates = np.asarray(rates, dtype=float)
    return {
        "avg_pct_dlt": float(100.0 * rates.mean()),
        "pct_rate_gt_theta_p05": float(100.0 * np.mean(rates > theta + 0.05)),
        "pct_rate_gt_theta_p10": float(100.0 * np.mean(rates > theta + 0.10)),
    }


def _curve_min_distance(point: np.ndarray, est: np.ndarray) -> tuple[float, float]:
    """(distance, signed distance) from a true-curve point to a discretized
    estimated curve; positive sign when the estimate lies above the point."""
    d = np.hypot(est[:, 0] - point[0], est[:, 1] - point[1])
    k = int(np.argmin(d))
    sign = 1.0 if est[k, 1] > point[1] else -1.0
    return float(d[k]), float(sign * d[k])


def pointwise_bias(true_curve: MtdCurve, estimated_curves: list[MtdCurve],
                   x_grid: np.ndarray, n_points: int = 1000) -> tuple[np.ndarray, np.ndarray]:
    """Signed average minimum distance at each x-grid point.

    Returns (bias, mask); mask is False where the x lies outside the true
    curve's domain.  Trials whose estimated curve is empty are skipped.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    bias = np.full(len(x_grid), np.nan)
    mask = np.zeros(len(x_grid), dtype=bool)
    dense = [c.dense_points(n_points) for c in estimated_curves
             if c is not None]
    dense = [d for d in dense if len(d)]
    for i, x in enumerate(x_grid):
        y_true = mtd_solve_y(float(x), true_curve.params, true_curve.theta,
                             true_curve.bounds)
        if y_true is None or not dense:
            continue
        mask[i] = True
        point = np.array([x, y_true])
        bias[i] = float(np.mean([_curve_min_distance(point, d)[1]
                                 for d in dense]))
    return bias, mask


def pointwise_pct_recommendation(true_curve: MtdCurve,
                                 estimated_curves: list[MtdCurve],
                                 x_grid: np.ndarray, p: float,
                                 n_points: int = 1000) -> tuple[np.ndarray, np.ndarray]:
    """Percent of trials whose estimated curve passes within p * ||true
    point|| of each true-curve point; empty estimates count as misses."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    x_grid = np.asarray(x_grid, dtype=float)
    pct = np.full(len(x_grid), np.nan)
    mask = np.zeros(len(x_grid), dtype=bool)
    dense = [c.dense_points(n_points) if c is not None else np.empty((0, 2))
             for c in estimated_curves]
    n_trials = len(dense)
    for i, x in enumerate(x_grid):
        y_true = mtd_solve_y(float(x), true_curve.params, true_curve.theta,
                             true_curve.bounds)
        if y_true is None or n_trials == 0:
            continue
        mask[i] = True
        point = np.array([x, y_true])
        thresh = p * float(np.hypot(x, y_true))
        hits = sum(1 for d in dense
                   if len(d) and _curve_min_distance(point, d)[0] <= thresh)
        pct[i] = 100.0 * hits / n_trials
    return pct, mask


def discrete_pct_selection(recommended_sets: list[tuple[tuple[float, float], ...]],
                           true_set: set[tuple[float, float]]) -> dict:
    """Percent of trials whose recommendation overlaps the true MTD set by
    at least 25/50/75/100 percent (empty recommendations count as 0)."""
    fracs = []
    for rec in recommended_sets:
        if not rec:
            fracs.append(0.0)
            continue
        inside = sum(1 for combo in rec
                     if any(math.isclose(combo[0], t[0], abs_tol=1e-9)
                            and math.isclose(combo[1], t[1], abs_tol=1e-9)
                            for t in true_set))
        fracs.append(inside / len(rec))
    fr = np.asarray(fracs)
    return {
        "pct_ge_25": float(100.0 * np.mean(fr >= 0.25)),
        "pct_ge_50": float(100.0 * np.mean(fr >= 0.50)),
        "pct_ge_75": float(100.0 * np.mean(fr >= 0.75)),
        "pct_eq_100": float(100.0 * np.mean(fr >= 1.0)),
    }


def rounded_curve_set(params: ModelParams, theta: float,
                      x_levels: tuple[float, ...], y_levels: tuple[float, ...],
                      bounds: DoseBounds) -> tuple[tuple[float, float], ...]:
    """Discrete MTD recommendation from a continuous curve estimate: for
    each level of the first drug, the curve's solution for the second
    drug rounded to the nearest level.  Levels where the curve has no
    in-range solution contribute nothing."""
    combos = set()
    for x in x_levels:
        y = mtd_solve_y(float(x), params, theta, bounds)
        if y is None:
            continue
        combos.add((float(x), round_to_grid(y, y_levels)))
    return tuple(sorted(combos))


def make_grid_scenario(wm: WorkingModel, n_x_levels: int, n_y_levels: int | None = None,
                       bounds: DoseBounds = DoseBounds()) -> ProbTable:
    """Equally spaced dose levels spanning the bounds, with true DLT
    probabilities from the working model."""
    if n_x_levels < 2 or (n_y_levels is not None and n_y_levels < 2):
        raise ValueError("need at least 2 levels per drug")
    if n_y_levels is None:
        n_y_levels = n_x_levels
    xs = tuple(np.linspace(bounds.x_min, bounds.x_max, n_x_levels))
    ys = tuple(np.linspace(bounds.y_min, bounds.y_max, n_y_levels))
    params = wm.params()
    probs = tuple(tuple(prob_dlt(float(x), float(y), params) for y in ys)
                  for x in xs)
    return ProbTable(x_levels=xs, y_levels=ys, probs=probs)


def true_mtd_set(table: ProbTable, theta: float,
                 delta_select: float = 0.10) -> set[tuple[float, float]]:
    """Grid combinations whose true DLT probability lies within the
    selection band |p - theta| <= delta_select."""
    return {(float(x), float(y))
            for i, x in enumerate(table.x_levels)
            for j, y in enumerate(table.y_levels)
            if abs(table.probs[i][j] - theta) <= delta_select}


@dataclass(frozen=True)
class OperatingCharacteristics:
    m: int
    avg_pct_dlt: float
    pct_rate_gt_theta_p05: float
    pct_rate_gt_theta_p10: float
    pct_stopped: float
    x_grid: tuple[float, ...] = ()
    pointwise_bias: tuple[float, ...] = ()
    bias_mask: tuple[bool, ...] = ()
    pct_recommendation: dict = field(default_factory=dict)   # p -> vector
    discrete_selection: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def clean(v):
            return [None if (isinstance(x, float) and math.isnan(x)) else x
                    for x in v]
        return {
            "m": self.m,
            "avg_pct_dlt": self.avg_pct_dlt,
            "pct_rate_gt_theta_p05": self.pct_rate_gt_theta_p05,
            "pct_rate_gt_theta_p10": self.pct_rate_gt_theta_p10,
            "pct_stopped": self.pct_stopped,
            "x_grid": list(self.x_grid),
            "pointwise_bias": clean(self.pointwise_bias),
            "bias_mask": list(self.bias_mask),
            "pct_recommendation": {str(k): clean(v)
                                   for k, v in self.pct_recommendation.items()},
            "discrete_selection": self.discrete_selection,
        }


def run_study(scenario: Scenario, config: DesignConfig, m: int, root_seed: int,
              n_jobs: int = 1, x_grid_size: int = 21,
              p_values: tuple[float, ...] = (0.1, 0.2)) -> tuple[OperatingCharacteristics, list[TrialResult]]:
    """Replicate `m` independent trials and aggregate operating
    characteristics.  Per-replicate seeds derive from (root_seed, id), so
    the result does not depend on n_jobs or completion order."""
    if m < 1:
        raise ValueError("m must be >= 1")
    seeds = [int(np.random.SeedSequence((root_seed, rid)).generate_state(1)[0])
             for rid in range(m)]

    def one(rid: int) -> TrialResult:
        return run_trial(scenario, config, seeds[rid])

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(one, range(m)))
    else:
        results = [one(rid) for rid in range(m)]

    rates = np.array([r.dlt_rate for r in results])
    safety = safety_stats(rates, config.theta)
    pct_stopped = float(100.0 * np.mean([r.stopped for r in results]))

    bias = ()
    bias_mask = ()
    xg = ()
    pct_rec: dict = {}
    selection: dict = {}
    if config.discrete:
        if isinstance(scenario.truth, ProbTable):
            table = scenario.truth
        else:
            table = ProbTable(
                x_levels=tuple(config.x_grid), y_levels=tuple(config.y_grid),
                probs=tuple(tuple(prob_dlt(x, y, scenario.truth.params())
                                  for y in config.y_grid)
                            for x in config.x_grid))
        tset = true_mtd_set(table, config.theta, config.delta_select)
        # selection quality is scored on the rounded curve estimate, not
        # the tolerance-band set the trial reports as its recommendation:
        # the band grows with the grid while the rounded curve stays one
        # combination per level, which is what the percent-selection
        # statistic counts
        rec_sets = [
            rounded_curve_set(r.estimate.params_hat, config.theta,
                              tuple(config.x_grid), tuple(config.y_grid),
                              config.bounds)
            if r.estimate.params_hat is not None and not r.stopped else ()
            for r in results]
        selection = discrete_pct_selection(rec_sets, tset)
    elif isinstance(scenario.truth, WorkingModel):
        true_curve = mtd_curve(scenario.truth.params(), config.theta,
                               x_grid_size, config.bounds)
        # stopped trials carry no curve; they count as misses in the
        # recommendation percentages and are skipped in the bias average
        est_curves = [r.estimate.curve if r.estimate.kind == "curve" else None
                      for r in results]
        xs = np.linspace(config.bounds.x_min, config.bounds.x_max, x_grid_size)
        b, msk = pointwise_bias(true_curve, est_curves, xs)
        bias = tuple(float(v) for v in b)
        bias_mask = tuple(bool(v) for v in msk)
        xg = tuple(float(v) for v in xs)
        for p in p_values:
            v, _ = pointwise_pct_recommendation(true_curve, est_curves, xs, p)
            pct_rec[p] = tuple(float(t) for t in v)

    oc = OperatingCharacteristics(
        m=m,
        avg_pct_dlt=safety["avg_pct_dlt"],
        pct_rate_gt_theta_p05=safety["pct_rate_gt_theta_p05"],
        pct_rate_gt_theta_p10=safety["pct_rate_gt_theta_p10"],
        pct_stopped=pct_stopped,
        x_grid=xg,
        pointwise_bias=bias,
        bias_mask=bias_mask,
        pct_recommendation=pct_rec,
        discrete_selection=selection,
    )
    return oc, results
