/** Highlight colors per bias type — the single source for every legend. */

import type { BiasTypeName } from "./types.js";

export const TYPE_COLORS: Record<BiasTypeName, string> = {
  gender: "#8e44ad",
  sex: "#c0392b",
  race: "#2980b9",
  ethnicity: "#16a085",
  age: "#d35400",
  geography: "#27605f",
};

export function colorFor(type: string): string {
  return (TYPE_COLORS as Record<string, string>)[type] ?? "#555555";
}
