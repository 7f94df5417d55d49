/** Browser entry point: queue triage, decision form and stats panel wired to
 * the service API. All state lives in this module; rendering is rebuilt from
 * state on every change. */

import { ApiClient } from "./api.js";
import {
  canSubmit,
  emptyForm,
  setComment,
  setVerdict,
  toggleType,
  toPayload,
  validationMessage,
  type DecisionFormState,
} from "./form.js";
import { colorFor } from "./palette.js";
import {
  advanceCursor,
  buildQueueView,
  currentCard,
  removeCard,
  type QueueFilter,
  type QueueView,
} from "./queue.js";
import { emptyStats, markStale, totalFlags, updateStats, type StatsPanelState } from "./stats.js";
import { BIAS_TYPES, type Verdict } from "./types.js";

const api = new ApiClient(window.location.origin);

let view: QueueView = buildQueueView([]);
let form: DecisionFormState = emptyForm();
let stats: StatsPanelState = emptyStats();
let banner: { kind: "retry" | "conflict" | "invalid"; message: string } | null = null;
let submitting = false;
let filter: QueueFilter = {};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

async function refreshQueue(): Promise<void> {
  try {
    const flags = await api.fetchQueue();
    view = buildQueueView(flags, filter);
    if (banner?.kind === "retry") banner = null;
  } catch {
    banner = { kind: "retry", message: "service unreachable — queue kept as-is" };
  }
  render();
}

async function refreshStats(): Promise<void> {
  try {
    stats = updateStats(stats, await api.fetchStats(), new Date());
  } catch {
    stats = markStale(stats);
  }
  renderStats();
}

async function submitCurrent(): Promise<void> {
  const card = currentCard(view);
  if (!card || submitting || !canSubmit(form)) return;
  submitting = true;
  render();
  const flagId = card.flag.flag_id;
  const payload = toPayload(form, flagId);
  const optimistic = removeCard(view, flagId); // card leaves immediately
  try {
    const result = await api.submitDecision(payload);
    if (result.kind === "ok") {
      view = optimistic;
      form = emptyForm();
      banner = null;
    } else if (result.kind === "conflict") {
      view = optimistic; // decided elsewhere: it is no longer pending
      banner = { kind: "conflict", message: `already decided: ${result.message}` };
    } else {
      banner = { kind: "invalid", message: result.message }; // card stays
    }
  } catch {
    banner = { kind: "retry", message: "submit failed — decision not recorded, try again" };
  } finally {
    submitting = false;
  }
  render();
  void refreshStats();
}

function renderBanner(root: HTMLElement): void {
  if (!banner) return;
  root.append(el("div", { class: `banner banner-${banner.kind}` }, banner.message));
}

function renderCard(root: HTMLElement): void {
  const card = currentCard(view);
  if (!card) {
    root.append(el("p", { class: "empty" }, "queue empty"));
    return;
  }
  const sentence = el("p", { class: "sentence" });
  for (const segment of card.segments) {
    if (segment.type === null) {
      sentence.append(segment.text);
    } else {
      sentence.append(
        el("mark", { style: `background:${colorFor(segment.type)}`, title: segment.type }, segment.text),
      );
    }
  }
  const scores = el("div", { class: "scores" },
    el("span", { class: "score" }, `general ${card.scoreLabel}`));
  for (const [type, score] of Object.entries(card.flag.type_scores).sort()) {
    scores.append(el("span", { style: `color:${colorFor(type)}` },
      `${type} ${Math.round(score * 100)}%`));
  }
  root.append(
    el("div", { class: "meta" },
      `${card.flag.doc_id} p.${card.flag.page_no} — ${view.cursor + 1}/${view.cards.length}`),
    sentence,
    scores,
  );
}

function renderForm(root: HTMLElement): void {
  if (!currentCard(view)) return;
  const verdicts: [Verdict, string][] = [
    ["bias", "bias"], ["potential_bias", "potential bias"], ["non_bias", "non-bias"],
  ];
  const verdictRow = el("div", { class: "verdicts" });
  for (const [value, label] of verdicts) {
    const button = el("button", {
      class: form.verdict === value ? "verdict selected" : "verdict",
    }, label);
    button.addEventListener("click", () => {
      form = setVerdict(form, value);
      render();
    });
    verdictRow.append(button);
  }
  const typeRow = el("div", { class: "types" });
  for (const type of BIAS_TYPES) {
    const box = el("input", { type: "checkbox" }) as HTMLInputElement;
    box.checked = form.types.has(type);
    box.addEventListener("change", () => {
      form = toggleType(form, type);
      render();
    });
    typeRow.append(el("label", { style: `color:${colorFor(type)}` }, box, type));
  }
  const comment = el("textarea", { placeholder: "comment (optional)" }) as HTMLTextAreaElement;
  comment.value = form.comment;
  comment.addEventListener("input", () => {
    form = setComment(form, comment.value);
  });
  const submit = el("button", { class: "submit" }, submitting ? "submitting…" : "submit") as HTMLButtonElement;
  submit.disabled = submitting || !canSubmit(form);
  submit.addEventListener("click", () => void submitCurrent());
  const hint = validationMessage(form);
  root.append(verdictRow, typeRow, comment, submit);
  if (hint) root.append(el("p", { class: "hint" }, hint));
}

function renderNav(root: HTMLElement): void {
  if (view.cards.length < 2) return;
  const prev = el("button", {}, "previous");
  prev.addEventListener("click", () => {
    view = advanceCursor(view, -1);
    render();
  });
  const next = el("button", {}, "next");
  next.addEventListener("click", () => {
    view = advanceCursor(view, 1);
    render();
  });
  root.append(el("div", { class: "nav" }, prev, next));
}

function renderFilter(root: HTMLElement): void {
  const select = el("select", {}) as HTMLSelectElement;
  select.append(el("option", { value: "" }, "all types"));
  for (const type of BIAS_TYPES) {
    const option = el("option", { value: type }, type) as HTMLOptionElement;
    option.selected = filter.type === type;
    select.append(option);
  }
  select.addEventListener("change", () => {
    filter = select.value ? { type: select.value, floor: 0.5 } : {};
    void refreshQueue();
  });
  root.append(el("div", { class: "filter" }, "filter: ", select));
}

function renderStats(): void {
  const root = document.getElementById("stats");
  if (!root) return;
  root.replaceChildren();
  if (!stats.stats) {
    root.append(el("p", {}, "no stats yet"));
    return;
  }
  const body = el("div", { class: stats.stale ? "counters stale" : "counters" },
    el("span", {}, `pending ${stats.stats.pending}`),
    el("span", {}, `accepted ${stats.stats.accepted}`),
    el("span", {}, `rejected ${stats.stats.rejected}`),
    el("span", {}, `total ${totalFlags(stats.stats)}`),
  );
  root.append(body);
  if (stats.fetchedAt) {
    root.append(el("p", { class: "fetched-at" },
      `${stats.stale ? "stale, last seen " : "as of "}${stats.fetchedAt}`));
  }
}

function render(): void {
  const root = document.getElementById("queue");
  if (!root) return;
  root.replaceChildren();
  renderBanner(root);
  renderFilter(root);
  renderCard(root);
  renderForm(root);
  renderNav(root);
}

export function start(): void {
  void refreshQueue();
  void refreshStats();
  window.setInterval(() => void refreshStats(), 5000);
  window.setInterval(() => void refreshQueue(), 15000);
}

if (typeof document !== "undefined" && document.getElementById("queue")) {
  start();
}
