/**
 * Typed client for the trapaudit HTTP service.
 *
 * Every call returns a discriminated result instead of throwing: network
 * failures and structured API errors are ordinary values the UI can route
 * (banner vs editor marker) without try/catch at every call site.
 */

// ------------------------------------------------------------------ Types

export interface MetaResponse {
  width: number;
  height: number;
  pixel_size_m: number;
  /** [min_easting, min_northing, max_easting, max_northing] */
  extent: [number, number, number, number];
  /** [lat, lon] mapped to the raster center */
  anchor: [number, number];
}

export interface BandInfo {
  name: string;
  min: number | null;
  max: number | null;
}

export interface PolygonInfo {
  id: string;
  /** exterior first, then holes; each ring is a list of [easting, northing] */
  rings: number[][][];
}

export interface CameraInfo {
  id: string;
  /** published (obfuscated) [easting, northing] — true locations are never served */
  published: [number, number];
  radius_m: number;
}

export interface AreaReport {
  pixel_count: number;
  pixel_area_m2: number;
  area_m2: number;
  area_km2: number;
  baselines: Record<string, number>;
  reductions: Record<string, number>;
}

export interface EvalResponse {
  mask_id: string;
  report: AreaReport;
  expr_canonical: string;
  eval_ms: number;
}

/** Body of a 400 whose error is "parse" or "type" — positioned in the text. */
export interface ExprErrorBody {
  error: 'parse' | 'type';
  offset: number;
  line: number;
  column: number;
  message: string;
  expected: string[];
}

export type EvalResult =
  | { kind: 'ok'; body: EvalResponse }
  | { kind: 'expr-error'; body: ExprErrorBody }
  | { kind: 'api-error'; status: number; message: string }
  | { kind: 'network'; message: string };

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

// ------------------------------------------------------------------ Client

export class ApiClient {
  constructor(
    readonly base: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const res = await this.fetchFn(this.base + path);
    if (!res.ok) {
      throw new Error(`${path}: HTTP ${res.status}`);
    }
    return (await res.json()) as T;
  }

  meta(): Promise<MetaResponse> {
    return this.getJson<MetaResponse>('/meta');
  }

  async bands(): Promise<BandInfo[]> {
    return (await this.getJson<{ bands: BandInfo[] }>('/bands')).bands;
  }

  async polygons(): Promise<PolygonInfo[]> {
    return (await this.getJson<{ polygons: PolygonInfo[] }>('/polygons')).polygons;
  }

  async cameras(): Promise<CameraInfo[]> {
    return (await this.getJson<{ cameras: CameraInfo[] }>('/cameras')).cameras;
  }

  /** POST /eval; never throws — see EvalResult. */
  async evalExpr(expr: string, metric: string | null): Promise<EvalResult> {
    let res: Response;
    try {
      res = await this.fetchFn(this.base + '/eval', {
        method: 'POST',
        headers: { 'content-type': 'application/json' },
        body: JSON.stringify(metric === null ? { expr } : { expr, metric }),
      });
    } catch (err) {
      return { kind: 'network', message: err instanceof Error ? err.message : String(err) };
    }
    let body: unknown;
    try {
      body = await res.json();
    } catch {
      return { kind: 'api-error', status: res.status, message: 'unparseable response body' };
    }
    if (res.ok) {
      return { kind: 'ok', body: body as EvalResponse };
    }
    const errBody = body as { error?: string; message?: string };
    if (errBody.error === 'parse' || errBody.error === 'type') {
      return { kind: 'expr-error', body: body as ExprErrorBody };
    }
    return {
      kind: 'api-error',
      status: res.status,
      message: errBody.message ?? `HTTP ${res.status}`,
    };
  }

  maskUrl(maskId: string): string {
    return `${this.base}/mask/${maskId}.png`;
  }

  previewUrl(band: string): string {
    return `${this.base}/preview/${band}.png`;
  }
}
