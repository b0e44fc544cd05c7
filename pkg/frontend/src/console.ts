/**
 * Annotation console controller.
 *
 * Owns a ConsoleState, talks to the service API, and re-renders the
 * root element after every transition. The server decides which record
 * comes next; the console displays exactly what it was handed and
 * submits exactly that record id, so the session can neither skip nor
 * repeat a record on its own.
 */

import { fetchKappa, fetchNext, fetchProgress, submitLabel } from "./api.js";
import type { Label, ProgressReport } from "./api.js";
import { initialState, KEY_TO_LABEL } from "./state.js";
import type { ConsoleState } from "./state.js";
import { render } from "./view.js";

export interface Console {
  state: ConsoleState;
  loadNext: () => Promise<void>;
  submit: (label: Label) => Promise<void>;
  handleKey: (event: KeyboardEvent) => Promise<void>;
}

export function createConsole(root: HTMLElement, annotatorId: string): Console {
  const state = initialState(annotatorId);
  let summary: ProgressReport | null = null;

  const handlers = {
    onLabel: (label: Label) => {
      void submit(label);
    },
    onRetry: () => {
      void retry();
    },
  };

  function repaint(): void {
    render(root, state, handlers, summary);
  }

  async function refreshKappa(): Promise<void> {
    // the displayed kappa always comes from the service, the console
    // never computes agreement on its own
    state.kappa = await fetchKappa();
  }

  async function loadNext(): Promise<void> {
    state.error = null;
    repaint();
    try {
      const [task] = await Promise.all([
        fetchNext(state.annotatorId),
        refreshKappa(),
      ]);
      state.record = task.record;
      state.guideline = task.guideline;
      state.progress = task.progress;
      state.done = task.done;
      if (task.done) {
        summary = await fetchProgress();
      }
    } catch (err) {
      state.error = err instanceof Error ? err.message : String(err);
    }
    repaint();
  }

  async function submit(label: Label): Promise<void> {
    if (state.pending || state.record === null || state.done) return;
    state.pending = true;
    state.error = null;
    repaint();
    try {
      const ack = await submitLabel(state.record.id, state.annotatorId, label);
      state.progress = { labeled: ack.labeled, total: ack.total, percent: ack.percent };
      state.pending = false;
      await loadNext();
    } catch (err) {
      // rejected submission keeps the current record on screen
      state.pending = false;
      state.error = err instanceof Error ? err.message : String(err);
      repaint();
    }
  }

  async function retry(): Promise<void> {
    if (state.record === null && !state.done) {
      await loadNext();
    } else {
      state.error = null;
      repaint();
    }
  }

  async function handleKey(event: KeyboardEvent): Promise<void> {
    const label = KEY_TO_LABEL[event.key];
    if (label !== undefined) {
      await submit(label);
      return;
    }
    if (event.key === "Enter" && state.error !== null) {
      await retry();
    }
  }

  repaint();
  return { state, loadNext, submit, handleKey };
}
