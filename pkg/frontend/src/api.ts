/** Typed client for the trial service. Every call returns both the
 * parsed body and the raw response text so callers can keep the exact
 * wire bytes for dose display. */

import {
  CreateTrialResponse,
  MtdResponse,
  OutcomesResponse,
  PatientOutcome,
  TrialStateResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class ConflictError extends ApiError {}

export interface Fetched<T> {
  data: T;
  raw: string;
}

export class TrialApi {
  constructor(readonly baseUrl: string) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<Fetched<T>> {
    const res = await fetch(this.baseUrl + path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const raw = await res.text();
    if (!res.ok) {
      let detail = raw;
      try {
        detail = JSON.parse(raw).detail ?? raw;
      } catch {
        /* non-JSON error body */
      }
      if (res.status === 409) throw new ConflictError(res.status, detail);
      throw new ApiError(res.status, detail);
    }
    return { data: JSON.parse(raw) as T, raw };
  }

  createTrial(config: Record<string, unknown>): Promise<Fetched<CreateTrialResponse>> {
    return this.request("POST", "/trials", config);
  }

  getState(trialId: string): Promise<Fetched<TrialStateResponse>> {
    return this.request("GET", `/trials/${trialId}`);
  }

  getMtd(trialId: string): Promise<Fetched<MtdResponse>> {
    return this.request("GET", `/trials/${trialId}/mtd`);
  }

  submitOutcomes(
    trialId: string,
    cohortIndex: number,
    outcomes: PatientOutcome[],
  ): Promise<Fetched<OutcomesResponse>> {
    return this.request(
      "POST",
      `/trials/${trialId}/cohorts/${cohortIndex}/outcomes`,
      { outcomes },
    );
  }
}
