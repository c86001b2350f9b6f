/**
 * Studio session state: one active job, its cached version, the current
 * selection and a dirty edit buffer.
 *
 * Edits accumulate locally and commit as one PATCH; the session always
 * sends the cached version as If-Match and adopts whatever version the
 * server returns. A stale-version conflict marks the session so the UI can
 * offer a reload instead of retrying blindly.
 */

import {
  type BackgroundOverrides,
  type EditOp,
  type JobSummary,
  StaleVersionError,
  StudioApi,
} from "./api.js";
import { type PosterView, parsePoster } from "./poster.js";

export interface SessionSnapshot {
  job: JobSummary | null;
  poster: PosterView | null;
  posterHtml: string | null;
  selection: string | null;
  pendingEdits: EditOp[];
  conflict: boolean;
  previewScale: number;
}

export type SessionListener = (snapshot: SessionSnapshot) => void;

export class StudioSession {
  private job: JobSummary | null = null;
  private posterHtml: string | null = null;
  private poster: PosterView | null = null;
  private selection: string | null = null;
  private pendingEdits: EditOp[] = [];
  private conflict = false;
  private previewScale = 1;
  private listeners: SessionListener[] = [];

  constructor(readonly api: StudioApi) {}

  snapshot(): SessionSnapshot {
    return {
      job: this.job,
      poster: this.poster,
      posterHtml: this.posterHtml,
      selection: this.selection,
      pendingEdits: [...this.pendingEdits],
      conflict: this.conflict,
      previewScale: this.previewScale,
    };
  }

  subscribe(listener: SessionListener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    const snap = this.snapshot();
    for (const listener of this.listeners) listener(snap);
  }

  get version(): number {
    if (!this.job) throw new Error("no active job");
    return this.job.version;
  }

  get jobId(): string {
    if (!this.job) throw new Error("no active job");
    return this.job.id;
  }

  setPreviewScale(scale: number): void {
    this.previewScale = scale;
    this.emit();
  }

  private async adopt(job: JobSummary): Promise<void> {
    this.job = job;
    this.conflict = false;
    if (job.has_poster) {
      this.posterHtml = await this.api.getPosterHtml(job.id);
      this.poster = parsePoster(this.posterHtml);
    } else {
      this.posterHtml = null;
      this.poster = null;
    }
    if (this.selection && !this.nodeExists(this.selection)) this.selection = null;
    this.emit();
  }

  private nodeExists(id: string): boolean {
    if (!this.poster) return false;
    const walk = (nodes: { id: string; children: unknown[] }[]): boolean =>
      nodes.some((n) => n.id === id || walk(n.children as never));
    return walk(this.poster.nodes as never);
  }

  private async guarded<T extends JobSummary>(call: () => Promise<T>): Promise<void> {
    try {
      await this.adopt(await call());
    } catch (error) {
      if (error instanceof StaleVersionError) {
        this.conflict = true;
        this.emit();
      }
      throw error;
    }
  }

  async createJob(text: string, detailLevel?: string): Promise<void> {
    this.pendingEdits = [];
    this.selection = null;
    await this.adopt(await this.api.createJob(text, detailLevel));
  }

  async openJob(id: string): Promise<void> {
    this.pendingEdits = [];
    this.selection = null;
    await this.adopt(await this.api.getJob(id));
  }

  async refresh(): Promise<void> {
    if (!this.job) return;
    await this.adopt(await this.api.getJob(this.job.id));
  }

  async advance(): Promise<void> {
    await this.guarded(() => this.api.advance(this.jobId, this.version));
  }

  async advanceToRendered(maxSteps = 8): Promise<void> {
    for (let i = 0; i < maxSteps; i++) {
      const state = this.job?.state.name;
      if (state === "Rendered" || state === "Failed") return;
      await this.advance();
    }
  }

  select(id: string | null): void {
    this.selection = id;
    this.emit();
  }

  /** Queue an edit locally; nothing is sent until commit(). */
  stageEdit(edit: EditOp): void {
    this.pendingEdits.push(edit);
    this.emit();
  }

  discardEdits(): void {
    this.pendingEdits = [];
    this.emit();
  }

  get dirty(): boolean {
    return this.pendingEdits.length > 0;
  }

  /** One PATCH per commit: the whole buffer applies atomically. */
  async commitEdits(): Promise<void> {
    if (!this.pendingEdits.length) return;
    const edits = [...this.pendingEdits];
    await this.guarded(() => this.api.patchPoster(this.jobId, this.version, edits));
    this.pendingEdits = [];
    this.emit();
  }

  /** Convenience: stage and commit a single edit. */
  async applyEdit(edit: EditOp): Promise<void> {
    this.stageEdit(edit);
    await this.commitEdits();
  }

  async regenerateBackground(overrides: BackgroundOverrides): Promise<void> {
    await this.guarded(() => this.api.regenerateBackground(this.jobId, this.version, overrides));
  }

  /** Re-read the server state after a conflict, dropping local staleness. */
  async resolveConflict(): Promise<void> {
    this.pendingEdits = [];
    await this.refresh();
  }
}
