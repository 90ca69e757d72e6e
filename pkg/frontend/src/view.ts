/**
 * DOM rendering for the estimation view. Pure functions from state to
 * elements; all displayed numbers are taken verbatim from API payloads.
 */

import { CaseDetail, DatasetSummary, DonorView, EstimateResponse, FeatureSummary } from "./api.js";
import { activePredictors, SessionState } from "./session.js";

/** Features whose normalized gap exceeds this are highlighted in drilldowns. */
export const GAP_HIGHLIGHT_THRESHOLD = 0.5;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: Array<Node | string> = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

export function renderErrorBanner(message: string | null): HTMLElement {
  const banner = el("div", { class: "error-banner", role: "alert" });
  if (message) {
    banner.textContent = message;
    banner.dataset.visible = "true";
  } else {
    banner.dataset.visible = "false";
  }
  return banner;
}

export function renderEstimate(state: SessionState): HTMLElement {
  const box = el("div", { class: "estimate-box" });
  const units = state.dataset?.target_units ?? "";
  if (state.estimate) {
    box.append(
      el("span", { class: "estimate-value", "data-testid": "estimate" }, [
        state.estimate.estimate,
      ]),
      el("span", { class: "estimate-units" }, [units]),
    );
    if (state.estimate.warnings.length > 0) {
      box.append(
        el(
          "ul",
          { class: "warnings" },
          state.estimate.warnings.map((w) => el("li", {}, [w])),
        ),
      );
    }
  } else {
    box.append(el("span", { class: "estimate-empty" }, ["no estimate yet"]));
  }
  if (state.inFlight) box.dataset.inFlight = "true";
  return box;
}

function gapCell(gaps: Record<string, number | null>): HTMLElement {
  const cell = el("div", { class: "gap-bars" });
  for (const [name, gap] of Object.entries(gaps)) {
    const row = el("div", { class: "gap-row" });
    row.append(el("span", { class: "gap-label" }, [name]));
    const bar = el("div", { class: "gap-track" });
    const fill = el("div", { class: "gap-fill" });
    if (gap === null) {
      fill.classList.add("gap-unknown");
      fill.title = `${name}: unknown`;
    } else {
      fill.style.width = `${gap * 100}%`;
      fill.title = `${name}: ${gap}`;
    }
    bar.append(fill);
    row.append(bar);
    cell.append(row);
  }
  return cell;
}

export function renderDonorTable(
  estimate: EstimateResponse | null,
  onDrilldown: (caseId: string) => void,
): HTMLElement {
  const table = el("table", { class: "donor-table", "data-testid": "donors" });
  table.append(
    el("thead", {}, [
      el("tr", {}, [
        el("th", {}, ["rank"]),
        el("th", {}, ["case"]),
        el("th", {}, ["distance"]),
        el("th", {}, ["effort"]),
        el("th", {}, ["feature gaps"]),
      ]),
    ]),
  );
  const body = el("tbody");
  // Donor order is exactly the API order: the server already ranked them.
  for (const donor of estimate?.donors ?? []) {
    const row = el("tr", { class: "donor-row", "data-case-id": donor.case_id });
    row.append(
      el("td", {}, [String(donor.rank)]),
      el("td", {}, [
        el("button", { class: "donor-link", type: "button" }, [donor.case_id]),
      ]),
      el("td", { class: "donor-distance" }, [donor.distance]),
      el("td", {}, [
        String(donor.effort),
        donor.adapted_effort !== donor.effort
          ? ` (adapted ${String(donor.adapted_effort)})`
          : "",
      ]),
      el("td", {}, [gapCell(donor.feature_gaps)]),
    );
    row.querySelector("button")!.addEventListener("click", () => onDrilldown(donor.case_id));
    body.append(row);
  }
  table.append(body);
  return table;
}

export interface FormHandlers {
  onTargetValue(name: string, raw: string): void;
  onK(k: number): void;
  onPooling(rule: string): void;
  onAdaptation(mode: string): void;
  onToggleFeature(name: string, included: boolean): void;
  onWeight(name: string, weight: number): void;
}

function fieldError(state: SessionState, key: string): HTMLElement | null {
  const message = state.fieldErrors[key];
  if (!message) return null;
  return el("span", { class: "field-error", "data-error-for": key }, [message]);
}

function featureInput(
  feature: FeatureSummary,
  state: SessionState,
  handlers: FormHandlers,
): HTMLElement {
  const row = el("div", { class: "feature-row", "data-feature": feature.name });
  const toggle = el("input", {
    type: "checkbox",
    class: "feature-toggle",
    "aria-label": `include ${feature.name}`,
  }) as HTMLInputElement;
  toggle.checked = state.config.subset[feature.name] !== false;
  toggle.addEventListener("change", () =>
    handlers.onToggleFeature(feature.name, toggle.checked),
  );
  row.append(toggle);

  const label = feature.units ? `${feature.name} (${feature.units})` : feature.name;
  row.append(el("label", { class: "feature-label" }, [label]));

  let input: HTMLElement;
  if (feature.kind === "categorical") {
    const select = el("select", { class: "feature-value" }) as HTMLSelectElement;
    select.append(el("option", { value: "" }, ["(missing)"]));
    for (const level of feature.levels ?? []) {
      select.append(el("option", { value: level }, [level]));
    }
    select.value = state.target[feature.name] ?? "";
    select.addEventListener("change", () =>
      handlers.onTargetValue(feature.name, select.value),
    );
    input = select;
  } else if (feature.kind === "boolean") {
    const select = el("select", { class: "feature-value" }) as HTMLSelectElement;
    for (const option of ["", "0", "1"]) {
      select.append(el("option", { value: option }, [option === "" ? "(missing)" : option]));
    }
    select.value = state.target[feature.name] ?? "";
    select.addEventListener("change", () =>
      handlers.onTargetValue(feature.name, select.value),
    );
    input = select;
  } else {
    const text = el("input", {
      type: "text",
      class: "feature-value",
      placeholder: feature.min != null ? `${feature.min} .. ${feature.max}` : "",
    }) as HTMLInputElement;
    text.value = state.target[feature.name] ?? "";
    text.addEventListener("input", () => handlers.onTargetValue(feature.name, text.value));
    input = text;
  }
  row.append(input);

  const weight = el("input", {
    type: "number",
    class: "feature-weight",
    min: "0",
    step: "0.1",
    "aria-label": `weight of ${feature.name}`,
  }) as HTMLInputElement;
  weight.value = String(state.config.weights[feature.name] ?? 1);
  weight.addEventListener("change", () =>
    handlers.onWeight(feature.name, Number(weight.value)),
  );
  row.append(weight);

  const error = fieldError(state, feature.name);
  if (error) row.append(error);
  return row;
}

export function renderControls(state: SessionState, handlers: FormHandlers): HTMLElement {
  const panel = el("div", { class: "controls" });

  const kRow = el("div", { class: "control-row" });
  kRow.append(el("label", {}, ["donor analogies k"]));
  const kInput = el("input", {
    type: "number",
    min: "1",
    class: "k-input",
    "data-testid": "k-input",
  }) as HTMLInputElement;
  kInput.value = String(state.config.k);
  if (state.dataset) kInput.max = String(state.dataset.n);
  kInput.addEventListener("change", () => handlers.onK(Number(kInput.value)));
  kRow.append(kInput);
  const kError = fieldError(state, "k");
  if (kError) kRow.append(kError);
  panel.append(kRow);

  const poolingRow = el("div", { class: "control-row" });
  poolingRow.append(el("label", {}, ["pooling"]));
  const pooling = el("select", { class: "pooling-select" }) as HTMLSelectElement;
  for (const rule of ["nearest", "mean", "inverse-distance-weighted-mean", "median"]) {
    pooling.append(el("option", { value: rule }, [rule]));
  }
  pooling.value = state.config.pooling;
  pooling.addEventListener("change", () => handlers.onPooling(pooling.value));
  poolingRow.append(pooling);
  panel.append(poolingRow);

  const adaptationRow = el("div", { class: "control-row" });
  adaptationRow.append(el("label", {}, ["adaptation"]));
  const adaptation = el("select", { class: "adaptation-select" }) as HTMLSelectElement;
  for (const mode of ["none", "linear-size"]) {
    adaptation.append(el("option", { value: mode }, [mode]));
  }
  adaptation.value = state.config.adaptation;
  adaptation.addEventListener("change", () => handlers.onAdaptation(adaptation.value));
  adaptationRow.append(adaptation);
  panel.append(adaptationRow);

  const subsetError = fieldError(state, "subset");
  if (subsetError) panel.append(subsetError);
  return panel;
}

export function renderFeatureForm(state: SessionState, handlers: FormHandlers): HTMLElement {
  const form = el("div", { class: "feature-form" });
  if (!state.dataset) {
    form.append(el("p", {}, ["select a dataset"]));
    return form;
  }
  for (const feature of activePredictors(state.dataset)) {
    form.append(featureInput(feature, state, handlers));
  }
  return form;
}

export function renderDrilldown(
  target: Record<string, string>,
  donor: DonorView | null,
  detail: CaseDetail | null,
  error: string | null,
): HTMLElement {
  const panel = el("div", { class: "drilldown", "data-testid": "drilldown" });
  if (error) {
    panel.append(el("p", { class: "drilldown-error" }, [error]));
    return panel;
  }
  if (!detail || !donor) {
    panel.dataset.empty = "true";
    return panel;
  }
  panel.append(el("h3", {}, [`case ${detail.id}`]));
  panel.append(el("p", {}, [`known effort: ${String(detail.effort)}`]));
  const table = el("table", { class: "drilldown-table" });
  table.append(
    el("thead", {}, [
      el("tr", {}, [
        el("th", {}, ["feature"]),
        el("th", {}, ["target"]),
        el("th", {}, ["donor"]),
      ]),
    ]),
  );
  const body = el("tbody");
  for (const [name, value] of Object.entries(detail.values)) {
    const row = el("tr", { "data-feature": name });
    const gap = donor.feature_gaps[name];
    if (gap != null && gap > GAP_HIGHLIGHT_THRESHOLD) {
      row.classList.add("gap-high");
    }
    const targetRaw = (target[name] ?? "").trim();
    row.append(
      el("td", {}, [name]),
      el("td", {}, [targetRaw === "" || targetRaw === "?" ? "unknown" : targetRaw]),
      el("td", {}, [value === null ? "unknown" : String(value)]),
    );
    body.append(row);
  }
  table.append(body);
  panel.append(table);
  return panel;
}
