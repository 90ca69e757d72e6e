/**
 * Typed client for the estimation service (/api/v1).
 *
 * Estimates and distances arrive as decimal strings and are passed through
 * untouched: the UI never recomputes or reformats a number the server
 * already produced.
 */

export interface FeatureSummary {
  name: string;
  kind: "numeric" | "categorical" | "boolean";
  role: string;
  units: string;
  size_driver: boolean;
  min?: number | null;
  max?: number | null;
  levels?: string[];
}

export interface DatasetSummary {
  label: string;
  n: number;
  provenance: string;
  target_units: string;
  features: FeatureSummary[];
}

export interface DonorView {
  case_id: string;
  rank: number;
  distance: string;
  effort: number;
  adapted_effort: number;
  feature_gaps: Record<string, number | null>;
}

export interface EstimateConfig {
  k: number;
  pooling: string;
  adaptation: string;
  feature_subset?: string[] | null;
  feature_weights?: Record<string, number> | null;
}

export interface EstimateRequest {
  dataset: string;
  target: Record<string, number | string | null>;
  config: EstimateConfig;
}

export interface EstimateResponse {
  estimate: string;
  donors: DonorView[];
  config: EstimateConfig & { feature_subset: string[]; feature_weights: Record<string, number> };
  adapted: boolean;
  warnings: string[];
}

export interface CaseDetail {
  id: string;
  values: Record<string, number | string | null>;
  effort: number;
}

export interface HealthInfo {
  version: string;
  datasets: string[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (typeof body.detail === "string") detail = body.detail;
    else if (body.detail) detail = JSON.stringify(body.detail);
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}/api/v1${path}`;
  }

  async health(): Promise<HealthInfo> {
    const response = await this.fetchFn(this.url("/health"));
    if (!response.ok) return parseError(response);
    return response.json();
  }

  async listDatasets(): Promise<DatasetSummary[]> {
    const response = await this.fetchFn(this.url("/datasets"));
    if (!response.ok) return parseError(response);
    return response.json();
  }

  async estimate(request: EstimateRequest): Promise<EstimateResponse> {
    const response = await this.fetchFn(this.url("/estimate"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    if (!response.ok) return parseError(response);
    return response.json();
  }

  async caseDetail(datasetLabel: string, caseId: string): Promise<CaseDetail> {
    const response = await this.fetchFn(
      this.url(`/datasets/${encodeURIComponent(datasetLabel)}/cases/${encodeURIComponent(caseId)}`),
    );
    if (!response.ok) return parseError(response);
    return response.json();
  }
}
