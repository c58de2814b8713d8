/**
 * `${name}` slider placeholders.
 *
 * The editor text is a *template*: sliders never rewrite what the analyst
 * typed. Substitution renders a fresh string from the template and the
 * current bindings right before each POST, so the expression sent to the
 * backend is always produced by the same mechanical rule. The renderer also
 * keeps an offset map so backend error positions (reported against the
 * rendered text) can be pointed back into the template the analyst sees.
 */

const PLACEHOLDER = /\$\{([^}]*)\}/g;
const NAME = /^[a-z][a-z0-9_]*$/;

export interface TemplateScan {
  /** placeholder names in first-appearance order, deduplicated */
  params: string[];
  /** human-readable complaints (bad placeholder names, unclosed braces) */
  problems: string[];
}

export function scanTemplate(template: string): TemplateScan {
  const params: string[] = [];
  const problems: string[] = [];
  const seen = new Set<string>();
  let matchedOpens = 0;
  for (const m of template.matchAll(PLACEHOLDER)) {
    matchedOpens += m[0].split('${').length - 1;
    const name = m[1];
    if (!NAME.test(name)) {
      problems.push(`bad parameter name \${${name}} — use lowercase letters, digits, _`);
      continue;
    }
    if (!seen.has(name)) {
      seen.add(name);
      params.push(name);
    }
  }
  const opens = template.split('${').length - 1;
  if (opens > matchedOpens) {
    problems.push('unclosed ${ placeholder');
  }
  return { params, problems };
}

/** Format a slider value the way the expression language reads numbers. */
export function formatValue(v: number): string {
  if (!Number.isFinite(v)) {
    throw new Error(`parameter value must be finite, got ${v}`);
  }
  return String(v);
}

export interface Rendered {
  text: string;
  /**
   * Map an offset in the rendered text back to the template: positions
   * inside a substituted value collapse onto their placeholder's `$`.
   */
  toTemplateOffset(renderedOffset: number): number;
}

/** Render the template with every placeholder bound; throws on a free one. */
export function render(template: string, values: Record<string, number>): Rendered {
  // each span: a placeholder's [start,end) in the template and in the output
  const spans: { tStart: number; tEnd: number; rStart: number; rEnd: number }[] = [];
  let out = '';
  let cursor = 0;
  for (const m of template.matchAll(PLACEHOLDER)) {
    const name = m[1];
    if (!NAME.test(name)) {
      throw new Error(`bad parameter name in ${m[0]}`);
    }
    const v = values[name];
    if (v === undefined) {
      throw new Error(`parameter \${${name}} has no value`);
    }
    const tStart = m.index ?? 0;
    out += template.slice(cursor, tStart);
    const rStart = out.length;
    out += formatValue(v);
    spans.push({ tStart, tEnd: tStart + m[0].length, rStart, rEnd: out.length });
    cursor = tStart + m[0].length;
  }
  out += template.slice(cursor);

  const toTemplateOffset = (renderedOffset: number): number => {
    const o = Math.min(Math.max(renderedOffset, 0), out.length);
    let delta = 0;
    for (const s of spans) {
      if (o < s.rStart) {
        break;
      }
      if (o < s.rEnd) {
        return s.tStart;
      }
      delta = s.tEnd - s.rEnd;
    }
    return Math.min(o + delta, template.length);
  };

  return { text: out, toTemplateOffset };
}

/** Render and return just the text (used when no error mapping is needed). */
export function substitute(template: string, values: Record<string, number>): string {
  return render(template, values).text;
}
