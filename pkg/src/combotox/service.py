"""Trial-conduct service: append-only event log plus an HTTP API.

Each trial persists as a newline-delimited JSON event log under the data
directory.  The log is the source of truth: reloading a trial replays the
recorded outcomes through the engine, and because assignments are
deterministic given the design seed and history, the replayed state is
identical to the pre-restart one.
"""

from __future__ import annotations

import copy
import json
import math
import os
import threading
import uuid
from dataclasses import asdict
from datetime import datetime, timezone

from .model import DoseBounds, ModelParams, mtd_curve
from .inference import McmcConfig, PatientRecord, PriorSpec, \
    posterior_median, posterior_prob_dlt_exceeds
from .engine import DesignConfig, TrialState, final_mtd, next_cohort, \
    start_trial

SCHEMA_VERSION = 1

__all__ = ["TrialStore", "NotFound", "Conflict", "create_app",
           "config_from_dict", "config_to_dict", "record_from_dict",
           "record_to_dict"]


class NotFound(KeyError):
    pass


class Conflict(RuntimeError):
    pass


def config_to_dict(cfg: DesignConfig) -> dict:
    d = {
        "theta": cfg.theta, "n_max": cfg.n_max, "xi1": cfg.xi1,
        "xi2": cfg.xi2, "cap_fraction": cfg.cap_fraction,
        "bounds": asdict(cfg.bounds),
        "x_grid": list(cfg.x_grid) if cfg.x_grid else None,
        "y_grid": list(cfg.y_grid) if cfg.y_grid else None,
        "delta_select": cfg.delta_select,
        "prior": asdict(cfg.prior),
        "mcmc": {"chain_length": cfg.mcmc.chain_length,
                 "burn_in": cfg.mcmc.burn_in, "thin": cfg.mcmc.thin},
        "seed": cfg.seed,
    }
    if cfg.posterior_override is not None:
        d["posterior_override"] = asdict(cfg.posterior_override)
    return d


def config_from_dict(d: dict) -> DesignConfig:
    kwargs = {}
    for key in ("theta", "n_max", "xi1", "xi2", "cap_fraction",
                "delta_select", "seed"):
        if key in d:
            kwargs[key] = d[key]
    if d.get("bounds"):
        kwargs["bounds"] = DoseBounds(**d["bounds"])
    if d.get("x_grid"):
        kwargs["x_grid"] = tuple(d["x_grid"])
    if d.get("y_grid"):
        kwargs["y_grid"] = tuple(d["y_grid"])
    if d.get("prior"):
        kwargs["prior"] = PriorSpec(**d["prior"])
    if d.get("mcmc"):
        kwargs["mcmc"] = McmcConfig(**d["mcmc"])
    if d.get("posterior_override"):
        kwargs["posterior_override"] = ModelParams(**d["posterior_override"])
    return DesignConfig(**kwargs)


def record_to_dict(rec: PatientRecord) -> dict:
    return {"x": rec.x, "y": rec.y, "tox": rec.tox,
            "attributed": rec.attributed, "delta1": rec.delta1,
            "delta2": rec.delta2}


def record_from_dict(d: dict) -> PatientRecord:
    return PatientRecord(x=d["x"], y=d["y"], tox=d["tox"],
                         attributed=d.get("attributed"),
                         delta1=d.get("delta1"), delta2=d.get("delta2"))


def _assignment_payload(assignment) -> dict:
    return {"cohort_index": assignment.cohort_index,
            "doses": [list(p) for p in assignment.doses],
            "rationale": [dict(r) for r in assignment.rationale]}


class _Trial:
    def __init__(self, trial_id: str, state: TrialState, path: str):
        self.trial_id = trial_id
        self.state = state
        self.path = path
        self.lock = threading.Lock()
        self.next_event_id = 1


class TrialStore:
    """Filesystem-backed registry of live trials."""

    def __init__(self, data_dir: str):
        self.data_dir = data_dir
        os.makedirs(data_dir, exist_ok=True)
        self._trials: dict[str, _Trial] = {}
        self._registry_lock = threading.Lock()
        for name in sorted(os.listdir(data_dir)):
            if name.endswith(".ndjson"):
                trial_id = name[:-len(".ndjson")]
                self._trials[trial_id] = self._replay(trial_id)

    # -- persistence ------------------------------------------------------

    def _path(self, trial_id: str) -> str:
        return os.path.join(self.data_dir, f"{trial_id}.ndjson")

    def _append_events(self, trial: _Trial, events: list[tuple[str, dict]]) -> None:
        """Append a batch of events; all lines are written and flushed
        together so a failed computation leaves no partial record."""
        lines = []
        for kind, payload in events:
            lines.append(json.dumps({
                "schema_version": SCHEMA_VERSION,
                "event_id": trial.next_event_id,
                "timestamp": datetime.now(timezone.utc).isoformat(),
                "kind": kind,
                "payload": payload,
            }, sort_keys=True))
            trial.next_event_id += 1
        with open(trial.path, "a") as fh:
            fh.write("\n".join(lines) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _replay(self, trial_id: str) -> _Trial:
        path = self._path(trial_id)
        events = self.read_events(trial_id)
        if not events or events[0]["kind"] != "trial_created":
            raise ValueError(f"corrupt event log for trial {trial_id}")
        cfg = config_from_dict(events[0]["payload"]["config"])
        state, _ = start_trial(cfg)
        for ev in events[1:]:
            if ev["kind"] == "outcomes_recorded":
                outcomes = tuple(record_from_dict(o)
                                 for o in ev["payload"]["outcomes"])
                state, _ = next_cohort(state, outcomes)
        trial = _Trial(trial_id, state, path)
        trial.next_event_id = events[-1]["event_id"] + 1
        return trial

    def read_events(self, trial_id: str) -> list[dict]:
        path = self._path(trial_id)
        if not os.path.exists(path):
            raise NotFound(trial_id)
        events = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    events.append(json.loads(line))
        return events

    # -- operations -------------------------------------------------------

    def create_trial(self, config_dict: dict) -> tuple[str, dict]:
        cfg = config_from_dict(config_dict)
        trial_id = uuid.uuid4().hex
        state, assignment = start_trial(cfg)
        trial = _Trial(trial_id, state, self._path(trial_id))
        self._append_events(trial, [
            ("trial_created", {"config": config_to_dict(cfg)}),
            ("cohort_assigned", _assignment_payload(assignment)),
        ])
        with self._registry_lock:
            self._trials[trial_id] = trial
        return trial_id, _assignment_payload(assignment)

    def _get(self, trial_id: str) -> _Trial:
        with self._registry_lock:
            if trial_id not in self._trials:
                raise NotFound(trial_id)
            return self._trials[trial_id]

    def record_outcomes(self, trial_id: str, cohort_index: int,
                        outcomes: list[dict]) -> dict:
        trial = self._get(trial_id)
        with trial.lock:
            state = trial.state
            if state.finished:
                raise Conflict("trial already finished")
            if state.pending is None or \
                    state.pending.cohort_index != cohort_index:
                pending = state.pending.cohort_index if state.pending else None
                raise Conflict(f"cohort {cohort_index} is not pending "
                               f"(pending: {pending})")
            recs = tuple(record_from_dict(o) for o in outcomes)
            # work on a copy so a failure cannot leave a half-updated state
            new_state = copy.deepcopy(state)
            new_state, assignment = next_cohort(new_state, recs)
            med = posterior_median(new_state.posterior)
            events: list[tuple[str, dict]] = [
                ("outcomes_recorded", {
                    "cohort_index": cohort_index,
                    "outcomes": [record_to_dict(r) for r in recs]}),
                ("posterior_refit", {
                    "medians": asdict(med),
                    "acceptance": list(new_state.posterior.acceptance),
                    "n_draws": new_state.posterior.n_draws}),
            ]
            result: dict = {"posterior_medians": asdict(med)}
            if new_state.stopped:
                x0, y0 = new_state.config.min_combination
                exceed = posterior_prob_dlt_exceeds(
                    new_state.posterior, x0, y0,
                    new_state.config.theta + new_state.config.xi1)
                events.append(("trial_stopped",
                               {"reason": new_state.stop_reason,
                                "exceedance": exceed}))
                result.update(status="stopped",
                              stop_reason=new_state.stop_reason,
                              exceedance=exceed)
            elif new_state.completed:
                events.append(("trial_completed",
                               {"n_treated": len(new_state.patients)}))
                result.update(status="completed")
            else:
                events.append(("cohort_assigned",
                               _assignment_payload(assignment)))
                result.update(status="assigned",
                              assignment=_assignment_payload(assignment))
            self._append_events(trial, events)
            trial.state = new_state
            return result

    def get_state(self, trial_id: str) -> dict:
        trial = self._get(trial_id)
        with trial.lock:
            state = trial.state
            view: dict = {
                "schema_version": SCHEMA_VERSION,
                "trial_id": trial_id,
                "config": config_to_dict(state.config),
                "n_treated": len(state.patients),
                "history": [record_to_dict(r) for r in state.patients],
                "assignments": [_assignment_payload(a)
                                for a in state.assignments],
                "pending": _assignment_payload(state.pending)
                if state.pending else None,
                "stopped": state.stopped,
                "stop_reason": state.stop_reason,
                "completed": state.completed,
            }
            if state.posterior is not None:
                med = posterior_median(state.posterior)
                view["posterior_medians"] = asdict(med)
                view["mtd_preview"] = _curve_payload(
                    mtd_curve(med, state.config.theta, 51,
                              state.config.bounds))
            else:
                view["posterior_medians"] = None
                view["mtd_preview"] = None
            return view

    def get_mtd(self, trial_id: str) -> dict:
        trial = self._get(trial_id)
        with trial.lock:
            state = trial.state
            if state.finished:
                est = final_mtd(state)
                out = {"schema_version": SCHEMA_VERSION, "final": True,
                       "kind": est.kind,
                       "stopped_reason": est.stopped_reason}
                if est.kind == "curve":
                    out["curve"] = _curve_payload(est.curve)
                    out["params_hat"] = asdict(est.params_hat)
                elif est.kind == "set":
                    out["combinations"] = [list(c) for c in est.combinations]
                    out["params_hat"] = asdict(est.params_hat)
                return out
            if state.posterior is None:
                return {"schema_version": SCHEMA_VERSION, "final": False,
                        "kind": "none", "curve": None}
            med = posterior_median(state.posterior)
            return {"schema_version": SCHEMA_VERSION, "final": False,
                    "kind": "curve", "params_hat": asdict(med),
                    "curve": _curve_payload(
                        mtd_curve(med, state.config.theta, 51,
                                  state.config.bounds))}


def _curve_payload(curve) -> dict:
    return {"xs": [float(x) for x in curve.xs],
            "ys": [None if math.isnan(y) else float(y) for y in curve.ys],
            "theta": curve.theta}


def create_app(store: TrialStore):
    """FastAPI application over a TrialStore."""
    from fastapi import Body, FastAPI, HTTPException

    app = FastAPI(title="combotox trial service")

    @app.exception_handler(NotFound)
    async def _nf(request, exc):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=404, content={"error": str(exc)})

    @app.post("/trials", status_code=201)
    def post_trial(config: dict = Body(default={})):
        try:
            trial_id, assignment = store.create_trial(config)
        except (ValueError, TypeError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"schema_version": SCHEMA_VERSION, "trial_id": trial_id,
                "assignment": assignment}

    @app.post("/trials/{trial_id}/cohorts/{cohort_index}/outcomes")
    def post_outcomes(trial_id: str, cohort_index: int,
                      body: dict = Body(...)):
        outcomes = body.get("outcomes")
        if not isinstance(outcomes, list) or len(outcomes) != 2:
            raise HTTPException(status_code=400,
                                detail="body must contain exactly two outcomes")
        try:
            result = store.record_outcomes(trial_id, cohort_index, outcomes)
        except NotFound:
            raise HTTPException(status_code=404, detail="trial not found")
        except Conflict as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except (ValueError, TypeError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        result["schema_version"] = SCHEMA_VERSION
        return result

    @app.get("/trials/{trial_id}")
    def get_trial(trial_id: str):
        try:
            return store.get_state(trial_id)
        except NotFound:
            raise HTTPException(status_code=404, detail="trial not found")

    @app.get("/trials/{trial_id}/mtd")
    def get_mtd(trial_id: str):
        try:
            return store.get_mtd(trial_id)
        except NotFound:
            raise HTTPException(status_code=404, detail="trial not found")

    @app.get("/trials/{trial_id}/events")
    def get_events(trial_id: str):
        try:
            return {"schema_version": SCHEMA_VERSION,
                    "events": store.read_events(trial_id)}
        except NotFound:
            raise HTTPException(status_code=404, detail="trial not found")

    return app
