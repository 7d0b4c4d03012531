/** Wire types mirroring the trial-service JSON responses. */

export type DosePair = [number, number];

export interface PatientOutcome {
  x: number;
  y: number;
  tox: 0 | 1;
  attributed: 0 | 1 | null;
  delta1: 0 | 1 | null;
  delta2: 0 | 1 | null;
}

/** Rationale for a first-cohort patient (fixed at the minimum combination). */
export interface InitialRationale {
  crm: null;
  after_restriction: null;
  after_cap: null;
  final_x: number;
  final_y: number;
  note: string;
}

/** Rationale for a later patient whose dose on one axis was re-solved. */
export interface SolvedRationale {
  axis: "x" | "y";
  held: number;
  reference: number;
  crm: number;
  after_restriction: number;
  after_cap: number;
  final: number;
  restricted: boolean;
  capped: boolean;
}

export type Rationale = InitialRationale | SolvedRationale;

export function isSolvedRationale(r: Rationale): r is SolvedRationale {
  return "axis" in r;
}

export interface CohortAssignment {
  cohort_index: number;
  doses: DosePair[];
  rationale: Rationale[];
}

export interface PosteriorMedians {
  alpha: number;
  beta: number;
  gamma: number;
  eta: number;
}

export interface CurvePayload {
  xs: number[];
  ys: (number | null)[];
  theta: number;
}

export interface TrialStateResponse {
  schema_version: number;
  trial_id: string;
  config: Record<string, unknown>;
  n_treated: number;
  history: PatientOutcome[];
  assignments: CohortAssignment[];
  pending: CohortAssignment | null;
  stopped: boolean;
  stop_reason: string | null;
  completed: boolean;
  posterior_medians: PosteriorMedians | null;
  mtd_preview: CurvePayload | null;
}

export interface CreateTrialResponse {
  schema_version: number;
  trial_id: string;
  assignment: CohortAssignment;
}

export interface OutcomesResponse {
  schema_version: number;
  status: "assigned" | "stopped" | "completed";
  posterior_medians: PosteriorMedians;
  assignment?: CohortAssignment;
  stop_reason?: string;
  exceedance?: number;
}

export interface MtdResponse {
  schema_version: number;
  final: boolean;
  kind: "curve" | "set" | "none";
  curve?: CurvePayload | null;
  combinations?: DosePair[];
  params_hat?: PosteriorMedians;
  stopped_reason?: string | null;
}
