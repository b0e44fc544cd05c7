/**
 * Typed client for the annotation service JSON API.
 *
 * The console consumes exactly four endpoints: GET /api/next,
 * POST /api/label, GET /api/kappa, GET /api/progress.
 */

export interface RecordView {
  id: string;
  title: string;
  body: string;
  source_name: string;
  source_type: string;
  date: string;
  language: string;
}

export interface Progress {
  labeled: number;
  total: number;
  percent: number;
}

export interface NextTask {
  done: boolean;
  record: RecordView | null;
  guideline: string;
  progress: Progress;
}

// /api/kappa: either a report or an insufficient-data marker
export interface KappaReport {
  available: boolean;
  kappa?: number;
  p_o?: number;
  p_e?: number;
  n?: number;
  reason?: string;
}

export interface SubmitAck extends Progress {
  ok: boolean;
}

export interface ProgressReport {
  total: number;
  annotators: Record<string, Progress>;
  co_labeled: number;
}

export type Label = "R" | "NR" | "I";

export class ApiError extends Error {
  status: number;

  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

async function asJson<T>(response: Response): Promise<T> {
  let body: unknown = null;
  try {
    body = await response.json();
  } catch {
    // fall through; non-JSON bodies become a generic error below
  }
  if (!response.ok) {
    const detail =
      body && typeof body === "object" && "error" in body
        ? String((body as { error: unknown }).error)
        : `request failed with status ${response.status}`;
    throw new ApiError(response.status, detail);
  }
  return body as T;
}

export async function fetchNext(annotatorId: string): Promise<NextTask> {
  const response = await fetch(
    `/api/next?annotator=${encodeURIComponent(annotatorId)}`,
  );
  return asJson<NextTask>(response);
}

export async function submitLabel(
  recordId: string,
  annotatorId: string,
  label: Label,
): Promise<SubmitAck> {
  const response = await fetch("/api/label", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({
      record_id: recordId,
      annotator_id: annotatorId,
      label,
    }),
  });
  return asJson<SubmitAck>(response);
}

export async function fetchKappa(): Promise<KappaReport> {
  return asJson<KappaReport>(await fetch("/api/kappa"));
}

export async function fetchProgress(): Promise<ProgressReport> {
  return asJson<ProgressReport>(await fetch("/api/progress"));
}
