/** Decision form state. Mirrors the server invariant exactly: a bias or
 * potential-bias verdict needs at least one type; the server stays the
 * authority (its 422 path is still exercised). */

import type { DecisionPayload, Verdict } from "./types.js";

export interface DecisionFormState {
  verdict: Verdict | null;
  types: ReadonlySet<string>;
  comment: string;
}

export function emptyForm(): DecisionFormState {
  return { verdict: null, types: new Set(), comment: "" };
}

export function setVerdict(form: DecisionFormState, verdict: Verdict): DecisionFormState {
  return { ...form, verdict };
}

export function toggleType(form: DecisionFormState, type: string): DecisionFormState {
  const types = new Set(form.types);
  if (types.has(type)) {
    types.delete(type);
  } else {
    types.add(type);
  }
  return { ...form, types };
}

export function setComment(form: DecisionFormState, comment: string): DecisionFormState {
  return { ...form, comment };
}

export function canSubmit(form: DecisionFormState): boolean {
  if (form.verdict === null) return false;
  if (form.verdict !== "non_bias" && form.types.size === 0) return false;
  return true;
}

export function validationMessage(form: DecisionFormState): string | null {
  if (form.verdict === null) return "choose a verdict";
  if (form.verdict !== "non_bias" && form.types.size === 0) {
    return "bias and potential-bias verdicts need at least one type";
  }
  return null;
}

export function toPayload(form: DecisionFormState, flagId: string): DecisionPayload {
  if (!canSubmit(form)) {
    throw new Error(validationMessage(form) ?? "form incomplete");
  }
  return {
    flag_id: flagId,
    verdict: form.verdict as Verdict,
    types: [...form.types].sort(),
    comment: form.comment.trim() === "" ? null : form.comment.trim(),
  };
}
