/** Dashboard wiring: one trial at a time, state refreshed from the
 * service after every submission. No local persistence. */

import { ConflictError, TrialApi } from "./api.js";
import {
  EMPTY_DRAFT,
  OutcomeDraft,
  attributionEnabled,
  deltaEnabled,
  isComplete,
  setAttributed,
  setDelta,
  setDlt,
  toPayload,
} from "./outcomeForm.js";
import { TrialStateResponse } from "./types.js";
import {
  curvePoints,
  historyRows,
  pendingView,
  stopBanner,
} from "./viewModel.js";

const api = new TrialApi("");

let trialId: string | null = null;
let state: TrialStateResponse | null = null;
let drafts: OutcomeDraft[] = [EMPTY_DRAFT, EMPTY_DRAFT];
let lastExceedance: number | null = null;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

async function refresh(): Promise<void> {
  if (!trialId) return;
  state = (await api.getState(trialId)).data;
  drafts = [EMPTY_DRAFT, EMPTY_DRAFT];
  render();
}

function render(): void {
  if (!state) return;
  el("trial-id").textContent = state.trial_id;
  renderBanner();
  renderHistory();
  renderPending();
  renderPosterior();
  renderCurve();
}

function renderBanner(): void {
  const banner = el("stop-banner");
  const info = stopBanner(state!, lastExceedance);
  if (info) {
    banner.hidden = false;
    banner.textContent =
      info.exceedance === null
        ? `Trial stopped: ${info.reason}`
        : `Trial stopped: ${info.reason} (posterior exceedance ${info.exceedance})`;
  } else if (state!.completed) {
    banner.hidden = false;
    banner.textContent = "Trial completed: all patients treated.";
  } else {
    banner.hidden = true;
  }
}

function renderHistory(): void {
  const body = el("history-body");
  body.replaceChildren(
    ...historyRows(state!).map((row) => {
      const tr = document.createElement("tr");
      for (const cell of [String(row.patient), row.dose, row.outcome]) {
        const td = document.createElement("td");
        td.textContent = cell;
        tr.appendChild(td);
      }
      return tr;
    }),
  );
}

function renderPending(): void {
  const panel = el("pending-panel");
  const view = pendingView(state!);
  if (!view) {
    panel.hidden = true;
    return;
  }
  panel.hidden = false;
  el("cohort-title").textContent = `Cohort ${view.cohortIndex}`;
  el("badges").replaceChildren(
    ...view.badges.map((b) => {
      const span = document.createElement("span");
      span.className = `badge badge-${b.kind}`;
      span.textContent = b.text;
      return span;
    }),
  );
  const forms = el("outcome-forms");
  forms.replaceChildren(
    ...view.doseStrings.map((dose, i) => renderOutcomeForm(dose, i)),
  );
  const button = el("submit") as HTMLButtonElement;
  button.disabled = !drafts.every(isComplete);
}

function radio(
  name: string,
  label: string,
  checked: boolean,
  enabled: boolean,
  onChange: () => void,
): HTMLElement {
  const wrap = document.createElement("label");
  const input = document.createElement("input");
  input.type = "radio";
  input.name = name;
  input.checked = checked;
  input.disabled = !enabled;
  input.addEventListener("change", onChange);
  wrap.append(input, ` ${label}`);
  return wrap;
}

function renderOutcomeForm(dose: string, i: number): HTMLElement {
  const draft = drafts[i] ?? EMPTY_DRAFT;
  const box = document.createElement("fieldset");
  const legend = document.createElement("legend");
  legend.textContent = `Patient at ${dose}`;
  box.appendChild(legend);

  const update = (next: OutcomeDraft): void => {
    drafts = drafts.map((d, j) => (j === i ? next : d));
    renderPending();
  };

  const dltRow = document.createElement("div");
  dltRow.append(
    "DLT: ",
    radio(`dlt-${i}`, "no", draft.dlt === false, true, () =>
      update(setDlt(draft, false)),
    ),
    radio(`dlt-${i}`, "yes", draft.dlt === true, true, () =>
      update(setDlt(draft, true)),
    ),
  );
  const attRow = document.createElement("div");
  const attOn = attributionEnabled(draft);
  attRow.append(
    "Attributed: ",
    radio(`att-${i}`, "no", draft.attributed === false, attOn, () =>
      update(setAttributed(draft, false)),
    ),
    radio(`att-${i}`, "yes", draft.attributed === true, attOn, () =>
      update(setAttributed(draft, true)),
    ),
  );
  const deltaRow = document.createElement("div");
  const deltaOn = deltaEnabled(draft);
  deltaRow.append(
    "Drug: ",
    radio(`delta-${i}`, "drug 1", draft.delta === "d1", deltaOn, () =>
      update(setDelta(draft, "d1")),
    ),
    radio(`delta-${i}`, "drug 2", draft.delta === "d2", deltaOn, () =>
      update(setDelta(draft, "d2")),
    ),
    radio(`delta-${i}`, "both", draft.delta === "both", deltaOn, () =>
      update(setDelta(draft, "both")),
    ),
  );
  box.append(dltRow, attRow, deltaRow);
  return box;
}

function renderPosterior(): void {
  const med = state!.posterior_medians;
  el("posterior").textContent = med
    ? `alpha ${med.alpha}  beta ${med.beta}  gamma ${med.gamma}  eta ${med.eta}`
    : "no posterior yet (first cohort pending)";
}

function renderCurve(): void {
  const svg = el("curve");
  const pts = curvePoints(state!.mtd_preview);
  svg.replaceChildren();
  if (pts.length === 0) return;
  const ns = "http://www.w3.org/2000/svg";
  const poly = document.createElementNS(ns, "polyline");
  const sx = (x: number): number => ((x - 0.05) / 0.25) * 280 + 10;
  const sy = (y: number): number => 290 - ((y - 0.05) / 0.25) * 280;
  poly.setAttribute(
    "points",
    pts.map((p) => `${sx(p.x)},${sy(p.y)}`).join(" "),
  );
  poly.setAttribute("fill", "none");
  poly.setAttribute("stroke", "#0a6");
  svg.appendChild(poly);
}

async function submit(): Promise<void> {
  if (!state || !state.pending || !trialId) return;
  const payloads = state.pending.doses.map((dose, i) =>
    toPayload(drafts[i] ?? EMPTY_DRAFT, dose),
  );
  try {
    const result = await api.submitOutcomes(
      trialId,
      state.pending.cohort_index,
      payloads,
    );
    lastExceedance = result.data.exceedance ?? null;
  } catch (err) {
    if (err instanceof ConflictError) {
      el("error").textContent =
        "This cohort was already recorded elsewhere; reloading.";
    } else {
      el("error").textContent = String(err);
    }
  }
  await refresh();
}

async function createTrial(): Promise<void> {
  const configText = (el("config") as HTMLTextAreaElement).value || "{}";
  const created = await api.createTrial(JSON.parse(configText));
  trialId = created.data.trial_id;
  lastExceedance = null;
  await refresh();
}

async function loadTrial(): Promise<void> {
  trialId = (el("load-id") as HTMLInputElement).value.trim();
  lastExceedance = null;
  await refresh();
}

export function main(): void {
  el("create").addEventListener("click", () => void createTrial());
  el("load").addEventListener("click", () => void loadTrial());
  el("submit").addEventListener("click", () => void submit());
}

if (typeof document !== "undefined" && document.getElementById("create")) {
  main();
}
