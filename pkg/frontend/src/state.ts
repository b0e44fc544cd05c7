/**
 * Console state and the transitions the view renders from.
 */

import type { KappaReport, Label, Progress, RecordView } from "./api.js";

export interface ConsoleState {
  annotatorId: string;
  record: RecordView | null;
  guideline: string;
  progress: Progress;
  kappa: KappaReport | null;
  // at most one submission may be in flight
  pending: boolean;
  done: boolean;
  error: string | null;
}

export function initialState(annotatorId: string): ConsoleState {
  return {
    annotatorId,
    record: null,
    guideline: "",
    progress: { labeled: 0, total: 0, percent: 0 },
    kappa: null,
    pending: false,
    done: false,
    error: null,
  };
}

export const KEY_TO_LABEL: Record<string, Label> = {
  "1": "R",
  "2": "NR",
  "3": "I",
};

export const LABEL_TITLES: Record<Label, string> = {
  R: "radical",
  NR: "non-radical",
  I: "irrelevant",
};
