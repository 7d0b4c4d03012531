/** Round-trip against a live local service: create a trial, enter a
 * cohort of outcomes through the form logic, and receive the next
 * assignment. Requires the Python package to be installed (the test
 * spawns the bundled CLI server). */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ConflictError, TrialApi } from "../src/api.js";
import { doseTokensFromRaw, formatDose } from "../src/doses.js";
import {
  EMPTY_DRAFT,
  setAttributed,
  setDlt,
  toPayload,
} from "../src/outcomeForm.js";

const PORT = 8793;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;

async function waitForServer(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const res = await fetch(`${BASE}/trials/nonexistent`);
      if (res.status === 404) return;
    } catch {
      /* not up yet */
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error("service did not start");
}

beforeAll(async () => {
  const dataDir = mkdtempSync(join(tmpdir(), "combotox-ui-"));
  server = spawn(
    "python3",
    ["-m", "combotox.cli", "serve", "--port", String(PORT),
     "--data-dir", dataDir],
    { stdio: "ignore" },
  );
  await waitForServer();
}, 30000);

afterAll(() => {
  server.kill();
});

describe("live cohort round trip", () => {
  const api = new TrialApi(BASE);

  it("create -> enter outcomes -> next assignment", async () => {
    const created = await api.createTrial({
      posterior_override: { alpha: 1.0, beta: 1.0, gamma: 0.0, eta: 0.5 },
      cap_fraction: 1.0,
      n_max: 8,
    });
    const trialId = created.data.trial_id;
    const assignment = created.data.assignment;
    expect(assignment.cohort_index).toBe(1);

    // rendered doses match the live wire bytes
    const tokens = doseTokensFromRaw(created.raw);
    assignment.doses.forEach((pair, i) => {
      expect(formatDose(pair[0])).toBe(tokens[i]![0]);
      expect(formatDose(pair[1])).toBe(tokens[i]![1]);
    });

    const noDlt = setDlt(EMPTY_DRAFT, false);
    const unattributed = setAttributed(setDlt(EMPTY_DRAFT, true), false);
    const result = await api.submitOutcomes(trialId, 1, [
      toPayload(noDlt, assignment.doses[0]!),
      toPayload(unattributed, assignment.doses[1]!),
    ]);
    expect(result.data.status).toBe("assigned");
    const next = result.data.assignment!;
    expect(next.cohort_index).toBe(2);
    const nextTokens = doseTokensFromRaw(result.raw);
    next.doses.forEach((pair, i) => {
      expect(formatDose(pair[0])).toBe(nextTokens[i]![0]);
      expect(formatDose(pair[1])).toBe(nextTokens[i]![1]);
    });

    // duplicate submission surfaces as a conflict for the reload prompt
    await expect(
      api.submitOutcomes(trialId, 1, [
        toPayload(noDlt, assignment.doses[0]!),
        toPayload(noDlt, assignment.doses[1]!),
      ]),
    ).rejects.toBeInstanceOf(ConflictError);

    const state = await api.getState(trialId);
    expect(state.data.n_treated).toBe(2);
    expect(state.data.pending?.cohort_index).toBe(2);
  }, 30000);
});
