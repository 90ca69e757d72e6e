/**
 * Estimation session state: the target form, the active retrieval config,
 * and the latest estimate.
 *
 * Every control change issues a debounced re-estimate carrying a sequence
 * number; a response only lands if it is newer than the one currently
 * displayed, so rapid scrubbing always ends on the answer for the final
 * control state. The session never computes an estimate itself.
 */

import {
  ApiClient,
  ApiError,
  DatasetSummary,
  EstimateRequest,
  EstimateResponse,
  FeatureSummary,
} from "./api.js";
import { debounce } from "./debounce.js";

export const DEBOUNCE_MS = 250;

export const POOLING_RULES = [
  "nearest",
  "mean",
  "inverse-distance-weighted-mean",
  "median",
] as const;

export const ADAPTATION_MODES = ["none", "linear-size"] as const;

export interface SessionConfig {
  k: number;
  pooling: string;
  adaptation: string;
  /** feature name -> included in the similarity subset */
  subset: Record<string, boolean>;
  /** feature name -> weight (1 when absent) */
  weights: Record<string, number>;
}

export interface SessionState {
  dataset: DatasetSummary | null;
  /** raw form text per feature; "" and "?" mean missing */
  target: Record<string, string>;
  config: SessionConfig;
  estimate: EstimateResponse | null;
  inFlight: boolean;
  error: string | null;
  fieldErrors: Record<string, string>;
}

export type SessionListener = (state: SessionState) => void;

export function activePredictors(dataset: DatasetSummary): FeatureSummary[] {
  return dataset.features.filter((f) => f.role === "predictor");
}

function freshConfig(dataset: DatasetSummary | null): SessionConfig {
  const subset: Record<string, boolean> = {};
  if (dataset) {
    for (const feature of activePredictors(dataset)) subset[feature.name] = true;
  }
  return { k: 3, pooling: "mean", adaptation: "none", subset, weights: {} };
}

export class EstimationSession {
  private state: SessionState;
  private listeners: SessionListener[] = [];
  private seq = 0;
  private appliedSeq = 0;
  private readonly scheduleRefresh: ReturnType<typeof debounce>;

  constructor(
    private readonly api: ApiClient,
    debounceMs: number = DEBOUNCE_MS,
  ) {
    this.state = {
      dataset: null,
      target: {},
      config: freshConfig(null),
      estimate: null,
      inFlight: false,
      error: null,
      fieldErrors: {},
    };
    this.scheduleRefresh = debounce(() => {
      void this.refreshNow();
    }, debounceMs);
  }

  getState(): SessionState {
    return this.state;
  }

  onChange(listener: SessionListener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private update(patch: Partial<SessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  selectDataset(dataset: DatasetSummary): void {
    this.scheduleRefresh.cancel();
    this.seq += 1; // orphan any in-flight request for the previous dataset
    this.appliedSeq = this.seq;
    const target: Record<string, string> = {};
    for (const feature of activePredictors(dataset)) target[feature.name] = "";
    this.update({
      dataset,
      target,
      config: freshConfig(dataset),
      estimate: null,
      inFlight: false,
      error: null,
      fieldErrors: {},
    });
  }

  setTargetValue(name: string, raw: string): void {
    const errors = { ...this.state.fieldErrors };
    delete errors[name];
    const feature = this.feature(name);
    if (feature && feature.kind !== "categorical" && raw !== "" && raw !== "?") {
      if (!isFinite(Number(raw))) {
        errors[name] = "expects a number";
      } else if (feature.kind === "boolean" && raw !== "0" && raw !== "1") {
        errors[name] = "expects 0 or 1";
      }
    }
    this.update({
      target: { ...this.state.target, [name]: raw },
      fieldErrors: errors,
    });
    this.requestEstimate();
  }

  setK(k: number): void {
    const errors = { ...this.state.fieldErrors };
    delete errors.k;
    const n = this.state.dataset?.n ?? 0;
    if (!Number.isInteger(k) || k < 1 || (n > 0 && k > n)) {
      // invalid control: inline error, no request
      this.update({
        config: { ...this.state.config, k },
        fieldErrors: { ...errors, k: `k must be an integer between 1 and ${n}` },
      });
      return;
    }
    this.update({ config: { ...this.state.config, k }, fieldErrors: errors });
    this.requestEstimate();
  }

  setPooling(pooling: string): void {
    this.update({ config: { ...this.state.config, pooling } });
    this.requestEstimate();
  }

  setAdaptation(adaptation: string): void {
    this.update({ config: { ...this.state.config, adaptation } });
    this.requestEstimate();
  }

  toggleFeature(name: string, included: boolean): void {
    const subset = { ...this.state.config.subset, [name]: included };
    const errors = { ...this.state.fieldErrors };
    delete errors.subset;
    if (Object.values(subset).every((on) => !on)) {
      this.update({
        config: { ...this.state.config, subset },
        fieldErrors: { ...errors, subset: "at least one feature must stay on" },
      });
      return;
    }
    this.update({ config: { ...this.state.config, subset }, fieldErrors: errors });
    this.requestEstimate();
  }

  setWeight(name: string, weight: number): void {
    const errors = { ...this.state.fieldErrors };
    delete errors[`weight:${name}`];
    if (!(weight >= 0) || !isFinite(weight)) {
      this.update({
        fieldErrors: { ...errors, [`weight:${name}`]: "weight must be >= 0" },
      });
      return;
    }
    this.update({
      config: {
        ...this.state.config,
        weights: { ...this.state.config.weights, [name]: weight },
      },
      fieldErrors: errors,
    });
    this.requestEstimate();
  }

  /** Debounced re-estimate; does nothing while a validation error blocks. */
  requestEstimate(): void {
    if (!this.canRequest()) return;
    this.scheduleRefresh();
  }

  private canRequest(): boolean {
    return this.state.dataset !== null && Object.keys(this.state.fieldErrors).length === 0;
  }

  private feature(name: string): FeatureSummary | undefined {
    return this.state.dataset?.features.find((f) => f.name === name);
  }

  buildRequest(): EstimateRequest {
    const dataset = this.state.dataset;
    if (!dataset) throw new Error("no dataset selected");
    const target: Record<string, number | string | null> = {};
    for (const feature of activePredictors(dataset)) {
      const raw = (this.state.target[feature.name] ?? "").trim();
      if (raw === "" || raw === "?") {
        target[feature.name] = null;
      } else if (feature.kind === "categorical") {
        target[feature.name] = raw;
      } else {
        target[feature.name] = Number(raw);
      }
    }
    const subsetNames = activePredictors(dataset)
      .map((f) => f.name)
      .filter((name) => this.state.config.subset[name] !== false);
    const weights: Record<string, number> = {};
    for (const [name, weight] of Object.entries(this.state.config.weights)) {
      if (subsetNames.includes(name) && weight !== 1) weights[name] = weight;
    }
    return {
      dataset: dataset.label,
      target,
      config: {
        k: this.state.config.k,
        pooling: this.state.config.pooling,
        adaptation: this.state.config.adaptation,
        feature_subset: subsetNames,
        feature_weights: weights,
      },
    };
  }

  /** Immediate estimate, bypassing the debounce (used by tests and submit). */
  async refreshNow(): Promise<void> {
    if (!this.canRequest()) return;
    const mySeq = ++this.seq;
    this.update({ inFlight: true });
    let request: EstimateRequest;
    try {
      request = this.buildRequest();
    } catch (error) {
      this.update({ inFlight: false, error: String(error) });
      return;
    }
    try {
      const response = await this.api.estimate(request);
      if (mySeq > this.appliedSeq) {
        this.appliedSeq = mySeq;
        this.update({
          estimate: response,
          error: null,
          inFlight: this.seq !== mySeq,
        });
      }
    } catch (error) {
      if (mySeq > this.appliedSeq) {
        this.appliedSeq = mySeq;
        // keep the last good estimate; surface the failure, inline when the
        // service names the offending control
        const message =
          error instanceof ApiError ? error.detail : "estimation service unreachable";
        const field = error instanceof ApiError ? this.offendingControl(message) : null;
        if (field) {
          this.update({
            fieldErrors: { ...this.state.fieldErrors, [field]: message },
            inFlight: this.seq !== mySeq,
          });
        } else {
          this.update({ error: message, inFlight: this.seq !== mySeq });
        }
      }
    }
  }

  private offendingControl(detail: string): string | null {
    if (/\bk\b/.test(detail) && detail.includes("k must be")) return "k";
    if (detail.includes("subset")) return "subset";
    const dataset = this.state.dataset;
    if (dataset) {
      for (const feature of activePredictors(dataset)) {
        if (detail.includes(`'${feature.name}'`)) return feature.name;
      }
    }
    return null;
  }
}
