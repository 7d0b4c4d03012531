/** Outcome-entry state machine.
 *
 * The observable outcome of one patient is one of exactly five leaves of
 * the chance tree: no DLT; DLT without attribution; DLT attributed to
 * drug 1, to drug 2, or to both. The draft type and its transitions make
 * any other combination unrepresentable in a submitted payload.
 */

import type { DosePair, PatientOutcome } from "./types.js";

export type DeltaChoice = "d1" | "d2" | "both";

export interface OutcomeDraft {
  dlt: boolean | null;
  attributed: boolean | null;
  delta: DeltaChoice | null;
}

export const EMPTY_DRAFT: OutcomeDraft = {
  dlt: null,
  attributed: null,
  delta: null,
};

export function setDlt(draft: OutcomeDraft, dlt: boolean): OutcomeDraft {
  if (!dlt) return { dlt: false, attributed: null, delta: null };
  return { ...draft, dlt: true };
}

export function setAttributed(
  draft: OutcomeDraft,
  attributed: boolean,
): OutcomeDraft {
  if (draft.dlt !== true) {
    throw new Error("attribution requires DLT = yes");
  }
  if (!attributed) return { dlt: true, attributed: false, delta: null };
  return { ...draft, attributed: true };
}

export function setDelta(draft: OutcomeDraft, delta: DeltaChoice): OutcomeDraft {
  if (draft.dlt !== true || draft.attributed !== true) {
    throw new Error("drug choice requires an attributed DLT");
  }
  return { ...draft, delta };
}

export function attributionEnabled(draft: OutcomeDraft): boolean {
  return draft.dlt === true;
}

export function deltaEnabled(draft: OutcomeDraft): boolean {
  return draft.dlt === true && draft.attributed === true;
}

export function isComplete(draft: OutcomeDraft): boolean {
  if (draft.dlt === false) return true;
  if (draft.dlt !== true) return false;
  if (draft.attributed === false) return true;
  if (draft.attributed !== true) return false;
  return draft.delta !== null;
}

/** Service payload for a completed draft at the assigned dose pair. */
export function toPayload(draft: OutcomeDraft, dose: DosePair): PatientOutcome {
  if (!isComplete(draft)) {
    throw new Error("outcome entry is incomplete");
  }
  const [x, y] = dose;
  if (draft.dlt === false) {
    return { x, y, tox: 0, attributed: null, delta1: null, delta2: null };
  }
  if (draft.attributed === false) {
    return { x, y, tox: 1, attributed: 0, delta1: null, delta2: null };
  }
  const delta1 = draft.delta === "d1" || draft.delta === "both" ? 1 : 0;
  const delta2 = draft.delta === "d2" || draft.delta === "both" ? 1 : 0;
  return { x, y, tox: 1, attributed: 1, delta1, delta2 };
}

/** All completed drafts reachable through the transition functions. */
export function enumerateLeaves(): OutcomeDraft[] {
  const leaves: OutcomeDraft[] = [setDlt(EMPTY_DRAFT, false)];
  const withDlt = setDlt(EMPTY_DRAFT, true);
  leaves.push(setAttributed(withDlt, false));
  const attributed = setAttributed(withDlt, true);
  for (const delta of ["d1", "d2", "both"] as const) {
    leaves.push(setDelta(attributed, delta));
  }
  return leaves;
}
