/**
 * Application bootstrap: wire the session to the view inside #app.
 *
 * The API base defaults to the page origin; override with ?api=http://host:port
 * when serving the static files separately from the estimation service.
 */

import { ApiClient, CaseDetail, DatasetSummary, DonorView } from "./api.js";
import { EstimationSession } from "./session.js";
import {
  FormHandlers,
  renderControls,
  renderDonorTable,
  renderDrilldown,
  renderErrorBanner,
  renderEstimate,
  renderFeatureForm,
} from "./view.js";

interface DrilldownState {
  donor: DonorView | null;
  detail: CaseDetail | null;
  error: string | null;
}

export function apiBaseFromLocation(location: Location): string {
  const override = new URLSearchParams(location.search).get("api");
  return override ?? location.origin;
}

export async function bootstrap(root: HTMLElement, api: ApiClient): Promise<EstimationSession> {
  const session = new EstimationSession(api);
  let datasets: DatasetSummary[] = [];
  const drilldown: DrilldownState = { donor: null, detail: null, error: null };

  const handlers: FormHandlers = {
    onTargetValue: (name, raw) => session.setTargetValue(name, raw),
    onK: (k) => session.setK(k),
    onPooling: (rule) => session.setPooling(rule),
    onAdaptation: (mode) => session.setAdaptation(mode),
    onToggleFeature: (name, included) => session.toggleFeature(name, included),
    onWeight: (name, weight) => session.setWeight(name, weight),
  };

  async function openDrilldown(caseId: string): Promise<void> {
    const state = session.getState();
    drilldown.donor = state.estimate?.donors.find((d) => d.case_id === caseId) ?? null;
    drilldown.detail = null;
    drilldown.error = null;
    render();
    try {
      drilldown.detail = await api.caseDetail(state.dataset!.label, caseId);
    } catch (error) {
      drilldown.error = `could not load case ${caseId}: ${String(error)}`;
    }
    render();
  }

  function render(): void {
    const state = session.getState();
    root.textContent = "";

    const picker = document.createElement("select");
    picker.className = "dataset-picker";
    for (const summary of datasets) {
      const option = document.createElement("option");
      option.value = summary.label;
      option.textContent = `${summary.label} (${summary.n} cases)`;
      picker.append(option);
    }
    if (state.dataset) picker.value = state.dataset.label;
    picker.addEventListener("change", () => {
      const chosen = datasets.find((d) => d.label === picker.value);
      if (chosen) {
        drilldown.donor = drilldown.detail = null;
        drilldown.error = null;
        session.selectDataset(chosen);
      }
    });

    root.append(
      picker,
      renderErrorBanner(state.error),
      renderFeatureForm(state, handlers),
      renderControls(state, handlers),
      renderEstimate(state),
      renderDonorTable(state.estimate, (caseId) => void openDrilldown(caseId)),
      renderDrilldown(state.target, drilldown.donor, drilldown.detail, drilldown.error),
    );
  }

  session.onChange(render);
  datasets = await api.listDatasets();
  const first = datasets[0];
  if (first) session.selectDataset(first);
  render();
  return session;
}

declare global {
  interface Window {
    __analogestSession?: EstimationSession;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const api = new ApiClient(apiBaseFromLocation(window.location));
  void bootstrap(document.getElementById("app")!, api).then((session) => {
    window.__analogestSession = session;
  });
}
