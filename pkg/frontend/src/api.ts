/**
 * Typed client for the poster service.
 *
 * Every mutating call carries `If-Match: <version>` and the caller adopts
 * the version the server returns. A 409 surfaces as StaleVersionError so the
 * session layer can prompt a reload instead of silently clobbering edits.
 */

export interface JobStateInfo {
  name: string;
  stage: string | null;
  reason: string | null;
}

export interface RenderInfo {
  scale: string;
  path: string;
  digest: string;
}

export interface JobSummary {
  id: string;
  version: number;
  state: JobStateInfo;
  requirement: { text: string; detail_level: string | null; locale: string };
  seeds: { background_seed: number };
  has_blueprint: boolean;
  has_background: boolean;
  has_poster: boolean;
  background: { id: string; width: number; height: number; content_hash: string } | null;
  renders: RenderInfo[];
  edit_count: number;
  timings: { stage: string; seconds: number }[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
  stage?: string;
  job_version?: number;
}

export interface FontPatch {
  family?: string;
  size?: number | string;
  weight?: number;
  color?: string;
  letter_spacing?: number | string;
  line_height?: number | string;
  align?: "left" | "center" | "right";
}

export type EditOp =
  | { op: "set_text"; id: string; runs: { text: string; font?: FontPatch }[] }
  | { op: "move"; id: string; dx: number | string; dy: number | string }
  | { op: "resize"; id: string; width: number | string; height: number | string }
  | { op: "set_style"; id: string; property: string; value: string }
  | { op: "remove_node"; id: string };

export interface BackgroundOverrides {
  caption?: string;
  style?: string;
  seed?: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
  ) {
    super(`${body.code}: ${body.message}`);
  }
}

export class StaleVersionError extends ApiError {
  constructor(status: number, body: ApiErrorBody) {
    super(status, body);
  }
  get currentVersion(): number | undefined {
    return this.body.job_version;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let body: ApiErrorBody;
  try {
    body = (await response.json()) as ApiErrorBody;
  } catch {
    body = { code: "unknown", message: `HTTP ${response.status}` };
  }
  if (response.status === 409 && body.code === "stale_version") {
    throw new StaleVersionError(response.status, body);
  }
  throw new ApiError(response.status, body);
}

export class StudioApi {
  constructor(
    readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    await raiseForStatus(response);
    return (await response.json()) as T;
  }

  createJob(text: string, detailLevel?: string, locale?: string): Promise<JobSummary> {
    const requirement: Record<string, unknown> = { text };
    if (detailLevel) requirement["detail_level"] = detailLevel;
    if (locale) requirement["locale"] = locale;
    return this.json<JobSummary>("/jobs", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ requirement }),
    });
  }

  listJobs(page = 0): Promise<{ jobs: JobSummary[]; total: number }> {
    return this.json(`/jobs?page=${page}`);
  }

  getJob(id: string): Promise<JobSummary> {
    return this.json(`/jobs/${id}`);
  }

  advance(id: string, version: number): Promise<JobSummary> {
    return this.json(`/jobs/${id}/advance`, {
      method: "POST",
      headers: { "If-Match": String(version) },
    });
  }

  async getPosterHtml(id: string): Promise<string> {
    const response = await this.fetchImpl(`${this.baseUrl}/jobs/${id}/poster.html`);
    await raiseForStatus(response);
    return await response.text();
  }

  patchPoster(id: string, version: number, edits: EditOp[]): Promise<JobSummary> {
    return this.json(`/jobs/${id}/poster`, {
      method: "PATCH",
      headers: { "content-type": "application/json", "If-Match": String(version) },
      body: JSON.stringify({ edits }),
    });
  }

  regenerateBackground(
    id: string,
    version: number,
    overrides: BackgroundOverrides,
  ): Promise<JobSummary> {
    return this.json(`/jobs/${id}/background`, {
      method: "POST",
      headers: { "content-type": "application/json", "If-Match": String(version) },
      body: JSON.stringify(overrides),
    });
  }

  async uploadBackground(id: string, version: number, png: Blob): Promise<JobSummary> {
    const form = new FormData();
    form.append("image", png, "background.png");
    const response = await this.fetchImpl(`${this.baseUrl}/jobs/${id}/background`, {
      method: "POST",
      headers: { "If-Match": String(version) },
      body: form,
    });
    await raiseForStatus(response);
    return (await response.json()) as JobSummary;
  }

  renderUrl(id: string, scale: string | number = 1): string {
    return `${this.baseUrl}/jobs/${id}/render?scale=${encodeURIComponent(String(scale))}`;
  }

  async getRenderBytes(id: string, scale: string | number = 1): Promise<ArrayBuffer> {
    const response = await this.fetchImpl(this.renderUrl(id, scale));
    await raiseForStatus(response);
    return await response.arrayBuffer();
  }

  getBlueprint(id: string): Promise<unknown> {
    return this.json(`/jobs/${id}/blueprint`);
  }
}
