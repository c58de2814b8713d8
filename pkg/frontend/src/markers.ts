/**
 * Inline error markers for the expression editor.
 *
 * The editor is a plain textarea with a <pre> mirror behind it; the mirror
 * repeats the text with the offending character wrapped in a highlight span.
 * These helpers do the text math; the DOM part lives in main.ts.
 */

/** 1-based (line, column) → string index, clamped into [0, text.length]. */
export function offsetAt(text: string, line: number, column: number): number {
  const lines = text.split('\n');
  const li = Math.min(Math.max(line, 1), lines.length) - 1;
  let base = 0;
  for (let i = 0; i < li; i++) {
    base += lines[i].length + 1;
  }
  const col = Math.min(Math.max(column, 1), lines[li].length + 1) - 1;
  return base + col;
}

export interface MarkerSegments {
  before: string;
  /** exactly one character; a space when the marker sits at end of line/text */
  marked: string;
  after: string;
}

/** Split the text around a string index for mirror rendering. */
export function markerSegmentsAt(text: string, offset: number): MarkerSegments {
  const at = Math.min(Math.max(offset, 0), text.length);
  const ch = text[at];
  if (ch === undefined || ch === '\n') {
    // highlight a synthetic space so "error at end of line" is visible
    return { before: text.slice(0, at), marked: ' ', after: text.slice(at) };
  }
  return { before: text.slice(0, at), marked: ch, after: text.slice(at + 1) };
}

/** Split around a 1-based (line, column) position. */
export function markerSegments(text: string, line: number, column: number): MarkerSegments {
  return markerSegmentsAt(text, offsetAt(text, line, column));
}
