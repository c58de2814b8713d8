/**
 * Eval scheduling and session history.
 *
 * Scheduling contract: edits are debounced (default 150 ms after the last
 * keystroke), at most the newest request matters, and a response that
 * arrives for a superseded request is discarded by sequence number — the
 * panel never flickers backward to a stale area.
 */
import type { AreaReport, EvalResult } from './api.js';

export type PostFn = (expr: string, metric: string | null) => Promise<EvalResult>;
export type ApplyFn = (result: EvalResult, expr: string, metric: string | null) => void;

export class EvalScheduler {
  private seq = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly post: PostFn,
    private readonly apply: ApplyFn,
    readonly debounceMs = 150,
  ) {}

  /** Debounced: (re)starts the countdown; only the last call in a burst fires. */
  request(expr: string, metric: string | null): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire(expr, metric);
    }, this.debounceMs);
  }

  /** Immediate: used by the retry banner and initial load. */
  fireNow(expr: string, metric: string | null): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    void this.fire(expr, metric);
  }

  private async fire(expr: string, metric: string | null): Promise<void> {
    const mySeq = ++this.seq;
    const result = await this.post(expr, metric);
    if (mySeq !== this.seq) {
      return; // a newer request superseded this one while it was in flight
    }
    this.apply(result, expr, metric);
  }
}

// ------------------------------------------------------------------ History

export interface HistoryEntry {
  expr: string;
  area_km2: number;
}

interface FinalEval {
  expr: string;
  metric: string | null;
  report: AreaReport;
}

/**
 * Append-only log of successful evals. The export is the CLI replay format:
 * `trapaudit --expr @session.json` re-runs `final.expr` with `final.metric`.
 */
export class SessionLog {
  private readonly history: HistoryEntry[] = [];
  private final: FinalEval | null = null;

  record(expr: string, metric: string | null, report: AreaReport): void {
    this.history.push({ expr, area_km2: report.area_km2 });
    this.final = { expr, metric, report };
  }

  get length(): number {
    return this.history.length;
  }

  entries(): readonly HistoryEntry[] {
    return this.history;
  }

  canExport(): boolean {
    return this.final !== null;
  }

  exportJson(): string {
    if (this.final === null) {
      throw new Error('nothing to export: no successful eval yet');
    }
    const doc = {
      history: this.history,
      final: {
        expr: this.final.expr,
        metric: this.final.metric,
        report: this.final.report,
      },
    };
    return JSON.stringify(doc, null, 2);
  }
}
