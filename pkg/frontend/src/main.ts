/**
 * trapaudit console — wires the expression editor, parameter sliders, map
 * canvas, and area panel to the HTTP service.
 *
 * Data flow: editor/slider/clip input → render template → debounced POST
 * /eval → (ok) swap mask overlay + area panel + history, (expr error)
 * inline marker, previous overlay retained, (network) banner with retry.
 * Every number in the area panel is copied verbatim from the EvalResponse.
 */
import type { BandInfo, CameraInfo, EvalResult, MetaResponse, PolygonInfo } from './api.js';
import { ApiClient } from './api.js';
import { metersToCanvas, ringToCanvas, worldToCanvas } from './geo.js';
import { markerSegmentsAt } from './markers.js';
import { EvalScheduler, SessionLog } from './session.js';
import type { Rendered } from './template.js';
import { render, scanTemplate } from './template.js';

// ------------------------------------------------------------------ API base

function apiBase(): string {
  const q = new URLSearchParams(location.search).get('api');
  if (q) {
    return q.replace(/\/$/, '');
  }
  return 'http://127.0.0.1:8787';
}

const api = new ApiClient(apiBase());

// ------------------------------------------------------------------ State

interface ParamState {
  value: number;
  min: number;
  max: number;
  step: number;
}

let meta: MetaResponse | null = null;
let bands: BandInfo[] = [];
let polygons: PolygonInfo[] = [];
let cameras: CameraInfo[] = [];

const params = new Map<string, ParamState>();
const log = new SessionLog();

let basemapImg: HTMLImageElement | null = null;
let maskImg: HTMLImageElement | null = null;

// what the most recent (newest-sequence) POST was built from, for error
// mapping back into the template and for the retry button
let lastPosted: { template: string; rendered: Rendered; expr: string; metric: string } | null =
  null;

// ------------------------------------------------------------------ DOM refs

const $ = <T extends HTMLElement>(id: string): T => document.getElementById(id) as T;

const $scenarioInfo = $<HTMLSpanElement>('scenario-info');
const $banner = $<HTMLDivElement>('banner');
const $bannerMsg = $<HTMLSpanElement>('banner-msg');
const $retry = $<HTMLButtonElement>('retry-btn');
const $export = $<HTMLButtonElement>('export-btn');
const $map = $<HTMLCanvasElement>('map');
const $bandSelect = $<HTMLSelectElement>('band-select');
const $showMask = $<HTMLInputElement>('show-mask');
const $showPolys = $<HTMLInputElement>('show-polys');
const $showDisks = $<HTMLInputElement>('show-disks');
const $editor = $<HTMLTextAreaElement>('editor');
const $mirror = $<HTMLPreElement>('mirror');
const $status = $<HTMLDivElement>('editor-status');
const $canonical = $<HTMLDivElement>('canonical');
const $sliders = $<HTMLDivElement>('sliders');
const $clipPolygon = $<HTMLSelectElement>('clip-polygon');
const $clipDisk = $<HTMLSelectElement>('clip-disk');
const $metric = $<HTMLSelectElement>('metric-select');
const $areaKm2 = $<HTMLElement>('area-km2');
const $areaPixels = $<HTMLElement>('area-pixels');
const $areaM2 = $<HTMLElement>('area-m2');
const $baselineSelect = $<HTMLSelectElement>('baseline-select');
const $areaReduction = $<HTMLElement>('area-reduction');
const $evalMs = $<HTMLElement>('eval-ms');
const $historyList = $<HTMLUListElement>('history-list');

// ------------------------------------------------------------------ Helpers

function esc(s: string): string {
  const d = document.createElement('div');
  d.textContent = s;
  return d.innerHTML;
}

function setStatus(kind: 'ok' | 'error', text: string): void {
  $status.className = kind;
  $status.textContent = text;
}

function showBanner(message: string): void {
  $bannerMsg.textContent = message;
  $banner.classList.add('show');
}

function hideBanner(): void {
  $banner.classList.remove('show');
}

// ------------------------------------------------------------------ Canvas

function draw(): void {
  if (!meta) {
    return;
  }
  const ctx = $map.getContext('2d');
  if (!ctx) {
    return;
  }
  const w = meta.width;
  const h = meta.height;
  if ($map.width !== w || $map.height !== h) {
    $map.width = w;
    $map.height = h;
  }
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, w, h);
  if (basemapImg) {
    ctx.drawImage(basemapImg, 0, 0);
  }
  if ($showMask.checked && maskImg) {
    ctx.drawImage(maskImg, 0, 0);
  }
  if ($showPolys.checked) {
    ctx.strokeStyle = '#7bd88f';
    ctx.lineWidth = Math.max(1, w / 256);
    for (const poly of polygons) {
      for (const ring of poly.rings) {
        const pts = ringToCanvas(meta.extent, w, h, ring);
        if (pts.length === 0) {
          continue;
        }
        ctx.beginPath();
        ctx.moveTo(pts[0][0], pts[0][1]);
        for (const [x, y] of pts.slice(1)) {
          ctx.lineTo(x, y);
        }
        ctx.closePath();
        ctx.stroke();
      }
    }
  }
  if ($showDisks.checked) {
    ctx.strokeStyle = '#ffb454';
    ctx.lineWidth = Math.max(1, w / 256);
    ctx.setLineDash([6, 4]);
    for (const cam of cameras) {
      const [x, y] = worldToCanvas(meta.extent, w, h, cam.published[0], cam.published[1]);
      const r = metersToCanvas(meta.extent, w, cam.radius_m);
      ctx.beginPath();
      ctx.arc(x, y, r, 0, Math.PI * 2);
      ctx.stroke();
      ctx.fillStyle = '#ffb454';
      ctx.fillRect(x - 2, y - 2, 4, 4);
    }
    ctx.setLineDash([]);
  }
}

function loadBasemap(band: string): void {
  const img = new Image();
  img.crossOrigin = 'anonymous';
  img.onload = () => {
    basemapImg = img;
    draw();
  };
  img.src = api.previewUrl(band);
}

// ------------------------------------------------------------------ Sliders

function defaultParam(): ParamState {
  return { value: 0.5, min: 0, max: 1, step: 0.01 };
}

function rebuildSliders(names: string[]): void {
  for (const name of names) {
    if (!params.has(name)) {
      params.set(name, defaultParam());
    }
  }
  $sliders.replaceChildren();
  if (names.length === 0) {
    const em = document.createElement('em');
    em.style.color = 'var(--dim)';
    em.textContent = 'add ${name} placeholders to tune';
    $sliders.appendChild(em);
    return;
  }
  for (const name of names) {
    const st = params.get(name)!;
    const row = document.createElement('div');
    row.className = 'slider-row';
    row.innerHTML =
      `<code>\${${esc(name)}}</code>` +
      `<input type="range" data-kind="slide">` +
      `<input type="number" data-kind="value" title="value">` +
      `<input type="number" data-kind="min" title="slider min">` +
      `<input type="number" data-kind="max" title="slider max">`;
    const slide = row.querySelector<HTMLInputElement>('[data-kind=slide]')!;
    const value = row.querySelector<HTMLInputElement>('[data-kind=value]')!;
    const minIn = row.querySelector<HTMLInputElement>('[data-kind=min]')!;
    const maxIn = row.querySelector<HTMLInputElement>('[data-kind=max]')!;

    const sync = () => {
      slide.min = String(st.min);
      slide.max = String(st.max);
      slide.step = String(st.step);
      slide.value = String(st.value);
      value.value = String(st.value);
      minIn.value = String(st.min);
      maxIn.value = String(st.max);
    };
    sync();

    slide.addEventListener('input', () => {
      st.value = Number(slide.value);
      value.value = slide.value;
      scheduleEval();
    });
    value.addEventListener('input', () => {
      const v = Number(value.value);
      if (!Number.isFinite(v)) {
        return;
      }
      st.value = v;
      if (v < st.min) {
        st.min = v;
      }
      if (v > st.max) {
        st.max = v;
      }
      sync();
      scheduleEval();
    });
    minIn.addEventListener('change', () => {
      const v = Number(minIn.value);
      if (Number.isFinite(v)) {
        st.min = v;
        st.step = (st.max - st.min) / 100 || 0.01;
        sync();
      }
    });
    maxIn.addEventListener('change', () => {
      const v = Number(maxIn.value);
      if (Number.isFinite(v)) {
        st.max = v;
        st.step = (st.max - st.min) / 100 || 0.01;
        sync();
      }
    });
    $sliders.appendChild(row);
  }
}

// ------------------------------------------------------------------ Eval flow

function clipSuffix(): string {
  let suffix = '';
  if ($clipPolygon.value) {
    suffix += ` & within_polygon(${$clipPolygon.value})`;
  }
  if ($clipDisk.value) {
    const cam = cameras.find((c) => c.id === $clipDisk.value);
    if (cam) {
      suffix += ` & within_disk(${cam.published[0]}, ${cam.published[1]}, ${cam.radius_m})`;
    }
  }
  return suffix;
}

function clearMarker(): void {
  $mirror.textContent = $editor.value;
}

function placeMarker(templateOffset: number): void {
  const seg = markerSegmentsAt($editor.value, templateOffset);
  $mirror.replaceChildren();
  $mirror.append(seg.before);
  const span = document.createElement('span');
  span.className = 'err';
  span.textContent = seg.marked;
  $mirror.appendChild(span);
  $mirror.append(seg.after);
}

const scheduler = new EvalScheduler(
  (expr, metric) => api.evalExpr(expr, metric),
  (result, expr) => applyResult(result, expr),
);

/** Build the expression from the current template/bindings and queue a POST. */
function scheduleEval(immediate = false): void {
  const template = $editor.value;
  const scan = scanTemplate(template);
  rebuildSlidersIfChanged(scan.params);
  if (scan.problems.length > 0) {
    setStatus('error', scan.problems.join('; '));
    clearMarker();
    return;
  }
  const values: Record<string, number> = {};
  for (const name of scan.params) {
    values[name] = params.get(name)?.value ?? 0;
  }
  let rendered: Rendered;
  try {
    rendered = render(template, values);
  } catch (err) {
    setStatus('error', err instanceof Error ? err.message : String(err));
    return;
  }
  if (rendered.text.trim() === '') {
    setStatus('ok', '');
    return;
  }
  const expr = rendered.text + clipSuffix();
  const metric = $metric.value;
  lastPosted = { template, rendered, expr, metric };
  if (immediate) {
    scheduler.fireNow(expr, metric);
  } else {
    scheduler.request(expr, metric);
  }
}

let lastSliderNames = '';
function rebuildSlidersIfChanged(names: string[]): void {
  const key = names.join(',');
  if (key !== lastSliderNames) {
    lastSliderNames = key;
    rebuildSliders(names);
  }
}

function applyResult(result: EvalResult, expr: string): void {
  if (result.kind === 'network') {
    showBanner(`backend unreachable: ${result.message}`);
    return;
  }
  hideBanner();
  if (result.kind === 'ok') {
    const body = result.body;
    clearMarker();
    setStatus('ok', `${body.report.pixel_count} candidate pixels`);
    $canonical.textContent = body.expr_canonical;
    $areaKm2.textContent = `${body.report.area_km2} km²`;
    $areaPixels.textContent = String(body.report.pixel_count);
    $areaM2.textContent = String(body.report.area_m2);
    $evalMs.textContent = `${body.eval_ms.toFixed(1)} ms`;
    updateBaselines(body.report.baselines, body.report.reductions);
    log.record(expr, lastPosted?.metric ?? null, body.report);
    $export.disabled = !log.canExport();
    appendHistoryRow(expr, body.report.area_km2);
    const img = new Image();
    img.crossOrigin = 'anonymous';
    img.onload = () => {
      maskImg = img; // swap only once loaded; the old overlay stays up till then
      draw();
    };
    img.src = api.maskUrl(body.mask_id);
    return;
  }
  if (result.kind === 'expr-error') {
    const b = result.body;
    // positions are reported against the posted text; fold them back into
    // the template the analyst is looking at
    const tOff =
      lastPosted && expr === lastPosted.expr
        ? Math.min(lastPosted.rendered.toTemplateOffset(b.offset), lastPosted.template.length)
        : b.offset;
    placeMarker(tOff);
    const expected = b.expected.length > 0 ? ` (expected ${b.expected.join(', ')})` : '';
    setStatus('error', `${b.line}:${b.column} ${b.message}${expected}`);
    return; // previous overlay and area panel intentionally retained
  }
  setStatus('error', result.message);
}

let reductions: Record<string, number> = {};
function updateBaselines(baselines: Record<string, number>, reds: Record<string, number>): void {
  reductions = reds;
  const names = Object.keys(baselines).sort();
  const current = $baselineSelect.value;
  $baselineSelect.replaceChildren(
    ...names.map((n) => {
      const opt = document.createElement('option');
      opt.value = n;
      opt.textContent = n;
      return opt;
    }),
  );
  if (names.includes(current)) {
    $baselineSelect.value = current;
  }
  showReduction();
}

function showReduction(): void {
  const r = reductions[$baselineSelect.value];
  $areaReduction.textContent = r === undefined ? '—' : `${(r * 100).toFixed(2)} %`;
}

function appendHistoryRow(expr: string, areaKm2: number): void {
  const li = document.createElement('li');
  const exprSpan = document.createElement('span');
  exprSpan.textContent = expr;
  exprSpan.title = expr;
  const areaSpan = document.createElement('span');
  areaSpan.textContent = `${areaKm2} km²`;
  li.append(exprSpan, areaSpan);
  $historyList.appendChild(li);
  $historyList.scrollTop = $historyList.scrollHeight;
}

// ------------------------------------------------------------------ Export

function exportSession(): void {
  const blob = new Blob([log.exportJson()], { type: 'application/json' });
  const url = URL.createObjectURL(blob);
  const a = document.createElement('a');
  a.href = url;
  a.download = 'trapaudit-session.json';
  a.click();
  URL.revokeObjectURL(url);
}

// ------------------------------------------------------------------ Boot

const DEFAULT_TEMPLATE =
  'near(red > ${red_thr}, min=20, max=160) & grad(elevation) > ${grad_thr}';

async function boot(): Promise<void> {
  $scenarioInfo.textContent = 'connecting…';
  try {
    [meta, bands, polygons, cameras] = await Promise.all([
      api.meta(),
      api.bands(),
      api.polygons(),
      api.cameras(),
    ]);
  } catch (err) {
    showBanner(
      `cannot reach the service at ${api.base}: ${err instanceof Error ? err.message : err}`,
    );
    $scenarioInfo.textContent = 'offline';
    return;
  }
  hideBanner();
  $scenarioInfo.textContent =
    `${meta.width}×${meta.height} px @ ${meta.pixel_size_m} m · ` +
    `anchor ${meta.anchor[0].toFixed(3)}, ${meta.anchor[1].toFixed(3)} · ${api.base}`;

  $bandSelect.replaceChildren(
    ...bands.map((b) => {
      const opt = document.createElement('option');
      opt.value = b.name;
      opt.textContent = b.name;
      return opt;
    }),
  );
  const noneOpt = () => {
    const opt = document.createElement('option');
    opt.value = '';
    opt.textContent = '(none)';
    return opt;
  };
  $clipPolygon.replaceChildren(
    noneOpt(),
    ...polygons.map((p) => {
      const opt = document.createElement('option');
      opt.value = p.id;
      opt.textContent = p.id;
      return opt;
    }),
  );
  $clipDisk.replaceChildren(
    noneOpt(),
    ...cameras.map((c) => {
      const opt = document.createElement('option');
      opt.value = c.id;
      opt.textContent = `${c.id} (${c.radius_m} m)`;
      return opt;
    }),
  );

  if (bands.length > 0) {
    loadBasemap(bands[0].name);
  }
  draw();
  scheduleEval(true);
}

function wireEvents(): void {
  $editor.addEventListener('input', () => {
    clearMarker();
    scheduleEval();
  });
  $editor.addEventListener('scroll', () => {
    $mirror.scrollTop = $editor.scrollTop;
  });
  $metric.addEventListener('change', () => scheduleEval());
  $clipPolygon.addEventListener('change', () => scheduleEval());
  $clipDisk.addEventListener('change', () => scheduleEval());
  $bandSelect.addEventListener('change', () => loadBasemap($bandSelect.value));
  $showMask.addEventListener('change', draw);
  $showPolys.addEventListener('change', draw);
  $showDisks.addEventListener('change', draw);
  $baselineSelect.addEventListener('change', showReduction);
  $export.addEventListener('click', exportSession);
  $retry.addEventListener('click', () => {
    hideBanner();
    if (meta === null) {
      void boot();
    } else if (lastPosted) {
      scheduler.fireNow(lastPosted.expr, lastPosted.metric);
    } else {
      scheduleEval(true);
    }
  });
}

$editor.value = DEFAULT_TEMPLATE;
params.set('red_thr', { value: 0.65, min: 0, max: 1, step: 0.01 });
params.set('grad_thr', { value: 0.25, min: 0, max: 1, step: 0.01 });
clearMarker();
wireEvents();
void boot();
