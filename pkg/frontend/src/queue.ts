/** Queue view: pending flags in the service's own order (score descending,
 * then arrival, then id), an optional per-type score filter, and a cursor. */

import { highlightSegments, scorePercent, type HighlightSegment } from "./highlight.js";
import type { FlagRecord } from "./types.js";

export interface QueueFilter {
  type?: string;
  /** minimum score for the filtered type (defaults to 0) */
  floor?: number;
}

export interface FlagCard {
  flag: FlagRecord;
  segments: HighlightSegment[];
  scoreLabel: string;
}

export interface QueueView {
  cards: FlagCard[];
  cursor: number;
  filter: QueueFilter;
}

/** Same comparator as the service's next_pending. */
export function queueOrder(a: FlagRecord, b: FlagRecord): number {
  if (a.score !== b.score) return b.score - a.score;
  const ca = a.created_at ?? 0;
  const cb = b.created_at ?? 0;
  if (ca !== cb) return ca - cb;
  return a.flag_id < b.flag_id ? -1 : a.flag_id > b.flag_id ? 1 : 0;
}

export function passesFilter(flag: FlagRecord, filter: QueueFilter): boolean {
  if (!filter.type) return true;
  const score = flag.type_scores[filter.type] ?? 0;
  return score >= (filter.floor ?? 0);
}

export function buildQueueView(flags: readonly FlagRecord[], filter: QueueFilter = {}): QueueView {
  const cards = [...flags]
    .sort(queueOrder)
    .filter((f) => passesFilter(f, filter))
    .map((flag) => ({
      flag,
      segments: highlightSegments(flag.sentence, flag.matches),
      scoreLabel: scorePercent(flag.score),
    }));
  return { cards, cursor: cards.length ? 0 : -1, filter };
}

export function currentCard(view: QueueView): FlagCard | null {
  return view.cursor >= 0 ? (view.cards[view.cursor] ?? null) : null;
}

export function advanceCursor(view: QueueView, step: 1 | -1): QueueView {
  if (!view.cards.length) return view;
  const cursor = Math.min(Math.max(view.cursor + step, 0), view.cards.length - 1);
  return { ...view, cursor };
}

/** Drop a card (a decision landed); the cursor stays on the same position. */
export function removeCard(view: QueueView, flagId: string): QueueView {
  const cards = view.cards.filter((c) => c.flag.flag_id !== flagId);
  const cursor = cards.length ? Math.min(view.cursor, cards.length - 1) : -1;
  return { ...view, cards, cursor };
}
