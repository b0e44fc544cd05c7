/**
 * DOM rendering for the annotation console.
 *
 * Rendering is a full rebuild of the root element from ConsoleState.
 * Record text goes through textContent, never innerHTML, so article
 * bodies cannot inject markup.
 */

import type { Label, ProgressReport } from "./api.js";
import { LABEL_TITLES } from "./state.js";
import type { ConsoleState } from "./state.js";

export interface Handlers {
  onLabel: (label: Label) => void;
  onRetry: () => void;
}

const LABEL_KEYS: Array<[string, Label]> = [
  ["1", "R"],
  ["2", "NR"],
  ["3", "I"],
];

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function kappaNode(state: ConsoleState, id = "kappa"): HTMLElement {
  const node = el("span", "kappa");
  node.id = id;
  const report = state.kappa;
  if (report && report.available && report.kappa !== undefined) {
    // exact value from /api/kappa kept in the data attribute,
    // the visible text is just a rounded rendering of it
    node.dataset.kappa = String(report.kappa);
    node.textContent = `kappa ${report.kappa.toFixed(4)}`;
  } else {
    node.dataset.unavailable = "true";
    node.textContent = report?.reason
      ? `kappa pending (${report.reason})`
      : "kappa pending";
  }
  return node;
}

function headerNode(state: ConsoleState): HTMLElement {
  const header = el("header", "console-header");
  header.appendChild(
    el("span", "annotator", `annotator: ${state.annotatorId}`),
  );

  const progress = el("span", "progress");
  progress.id = "progress";
  const { labeled, total, percent } = state.progress;
  progress.dataset.labeled = String(labeled);
  progress.dataset.total = String(total);
  progress.dataset.percent = String(percent);
  progress.textContent = `${labeled} / ${total} labeled (${percent.toFixed(1)}%)`;
  header.appendChild(progress);

  header.appendChild(kappaNode(state));
  return header;
}

function errorBanner(state: ConsoleState, handlers: Handlers): HTMLElement {
  const banner = el("div", "banner");
  banner.id = "error";
  banner.appendChild(el("span", "banner-text", state.error ?? "request failed"));
  const retry = el("button", "retry", "Retry");
  retry.id = "retry";
  retry.onclick = () => handlers.onRetry();
  banner.appendChild(retry);
  return banner;
}

function guidelineNode(text: string): HTMLElement {
  const details = document.createElement("details");
  details.id = "guideline";
  details.className = "guideline";
  details.appendChild(el("summary", undefined, "Labeling guideline"));
  details.appendChild(el("pre", "guideline-text", text));
  return details;
}

function taskNode(state: ConsoleState, handlers: Handlers): HTMLElement {
  const record = state.record;
  if (!record) throw new Error("taskNode called without a record");

  const task = el("section", "task");
  task.dataset.recordId = record.id;

  // empty titles happen in scraped corpora; skip the header entirely
  // rather than rendering a blank element
  if (record.title.trim() !== "") {
    const title = el("h2", "record-title", record.title);
    title.id = "record-title";
    task.appendChild(title);
  }

  const meta = el("p", "record-meta");
  meta.id = "record-meta";
  meta.textContent = `${record.source_name} (${record.source_type}) ${record.date} [${record.language}]`;
  task.appendChild(meta);

  const body = el("div", "record-body", record.body);
  body.id = "record-body";
  task.appendChild(body);

  task.appendChild(guidelineNode(state.guideline));

  const buttons = el("div", "label-buttons");
  for (const [key, label] of LABEL_KEYS) {
    const button = el("button", "label-button") as HTMLButtonElement;
    button.dataset.label = label;
    button.disabled = state.pending;
    button.appendChild(el("kbd", undefined, key));
    button.appendChild(el("span", "label-code", label));
    button.appendChild(el("span", "label-title", LABEL_TITLES[label]));
    button.onclick = () => handlers.onLabel(label);
    buttons.appendChild(button);
  }
  task.appendChild(buttons);

  if (state.pending) {
    task.classList.add("pending");
    task.appendChild(el("p", "pending-note", "submitting..."));
  }
  return task;
}

function doneNode(state: ConsoleState, summary: ProgressReport | null): HTMLElement {
  const done = el("section", "done");
  done.id = "done";
  done.appendChild(el("h2", undefined, "All records labeled"));
  done.appendChild(
    el(
      "p",
      "done-progress",
      `${state.progress.labeled} of ${state.progress.total} records (${state.progress.percent.toFixed(1)}%)`,
    ),
  );
  done.appendChild(kappaNode(state, "final-kappa"));
  if (summary) {
    const lines = Object.entries(summary.annotators)
      .map(([name, p]) => `${name}: ${p.labeled}/${p.total}`)
      .join(", ");
    done.appendChild(
      el("p", "done-summary", `co-labeled: ${summary.co_labeled}; ${lines}`),
    );
  }
  return done;
}

export function render(
  root: HTMLElement,
  state: ConsoleState,
  handlers: Handlers,
  summary: ProgressReport | null = null,
): void {
  root.textContent = "";
  root.className = "console";
  root.appendChild(headerNode(state));
  if (state.error !== null) {
    root.appendChild(errorBanner(state, handlers));
  }
  if (state.done) {
    root.appendChild(doneNode(state, summary));
  } else if (state.record !== null) {
    root.appendChild(taskNode(state, handlers));
  } else if (state.error === null) {
    root.appendChild(el("p", "loading", "loading..."));
  }
}
