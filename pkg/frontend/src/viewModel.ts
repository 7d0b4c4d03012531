/** Pure mapping from service responses to render-ready values. The UI
 * never recomputes a dose; every displayed dose string comes from a
 * service response field via formatDose. */

import { formatDose, formatDosePair } from "./doses.js";
import {
  CohortAssignment,
  CurvePayload,
  PatientOutcome,
  TrialStateResponse,
  isSolvedRationale,
} from "./types.js";

export interface Badge {
  drug: "D1" | "D2";
  kind: "restricted" | "capped";
  text: string;
}

const AXIS_DRUG = { x: "D1", y: "D2" } as const;

export function assignmentBadges(assignment: CohortAssignment): Badge[] {
  const badges: Badge[] = [];
  for (const r of assignment.rationale) {
    if (!isSolvedRationale(r)) continue;
    const drug = AXIS_DRUG[r.axis];
    if (r.restricted) {
      badges.push({
        drug,
        kind: "restricted",
        text: `${drug} held at ${formatDose(r.final)} (attributed DLT)`,
      });
    }
    if (r.capped) {
      badges.push({
        drug,
        kind: "capped",
        text: `${drug} capped at ${formatDose(r.final)} (escalation limit)`,
      });
    }
  }
  return badges;
}

export interface HistoryRow {
  patient: number;
  dose: string;
  outcome: string;
}

export function outcomeLabel(rec: PatientOutcome): string {
  if (rec.tox === 0) return "no DLT";
  if (rec.attributed === 0 || rec.attributed === null) {
    return "DLT, not attributed";
  }
  if (rec.delta1 === 1 && rec.delta2 === 1) return "DLT, both drugs";
  if (rec.delta1 === 1) return "DLT, drug 1";
  return "DLT, drug 2";
}

export function historyRows(state: TrialStateResponse): HistoryRow[] {
  return state.history.map((rec, i) => ({
    patient: i + 1,
    dose: formatDosePair([rec.x, rec.y]),
    outcome: outcomeLabel(rec),
  }));
}

export interface StopBanner {
  reason: string;
  exceedance: number | null;
}

export function stopBanner(
  state: TrialStateResponse,
  exceedance: number | null = null,
): StopBanner | null {
  if (!state.stopped) return null;
  return { reason: state.stop_reason ?? "stopped", exceedance };
}

export interface CurvePoint {
  x: number;
  y: number;
}

export function curvePoints(curve: CurvePayload | null): CurvePoint[] {
  if (curve === null) return [];
  const pts: CurvePoint[] = [];
  curve.xs.forEach((x, i) => {
    const y = curve.ys[i];
    if (y !== null && y !== undefined) pts.push({ x, y });
  });
  return pts;
}

export interface PendingView {
  cohortIndex: number;
  doseStrings: string[];
  badges: Badge[];
}

export function pendingView(state: TrialStateResponse): PendingView | null {
  if (state.pending === null) return null;
  return {
    cohortIndex: state.pending.cohort_index,
    doseStrings: state.pending.doses.map(formatDosePair),
    badges: assignmentBadges(state.pending),
  };
}
