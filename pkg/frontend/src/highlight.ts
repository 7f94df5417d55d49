/** Split a sentence into plain and highlighted segments from the identifier
 * matches the service reported. Spans arrive non-overlapping. */

import type { IdentifierMatch } from "./types.js";

export interface HighlightSegment {
  text: string;
  /** bias type of the match, or null for plain text */
  type: string | null;
  term: string | null;
}

export function highlightSegments(
  sentence: string,
  matches: readonly IdentifierMatch[],
): HighlightSegment[] {
  const ordered = [...matches].sort((a, b) => a.start - b.start);
  const segments: HighlightSegment[] = [];
  let cursor = 0;
  for (const match of ordered) {
    if (match.start < cursor) continue; // defensive: drop malformed overlap
    if (match.start > cursor) {
      segments.push({ text: sentence.slice(cursor, match.start), type: null, term: null });
    }
    segments.push({
      text: sentence.slice(match.start, match.end),
      type: match.type,
      term: match.term,
    });
    cursor = match.end;
  }
  if (cursor < sentence.length) {
    segments.push({ text: sentence.slice(cursor), type: null, term: null });
  }
  return segments;
}

export function scorePercent(score: number): string {
  return `${Math.round(score * 100)}%`;
}
