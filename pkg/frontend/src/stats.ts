/** Stats panel state: last-known counters with a staleness marker when the
 * service stops answering. */

import type { QueueStats } from "./types.js";

export interface StatsPanelState {
  stats: QueueStats | null;
  fetchedAt: string | null;
  stale: boolean;
}

export function emptyStats(): StatsPanelState {
  return { stats: null, fetchedAt: null, stale: false };
}

export function updateStats(state: StatsPanelState, stats: QueueStats, at: Date): StatsPanelState {
  return { stats, fetchedAt: at.toISOString(), stale: false };
}

/** Fetch failed: keep the last-known values, mark them stale. */
export function markStale(state: StatsPanelState): StatsPanelState {
  return { ...state, stale: true };
}

export function totalFlags(stats: QueueStats): number {
  return stats.pending + stats.accepted + stats.rejected;
}
