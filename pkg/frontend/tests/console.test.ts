/**
 * Browser-level tests for the annotation console, run against an
 * in-memory fake of the service API. Keyboard input goes through real
 * KeyboardEvent dispatch on document, the same path a person uses.
 */

import { afterEach, describe, expect, it, vi } from "vitest";

import { createConsole } from "../src/console.js";
import type { Console } from "../src/console.js";
import type { RecordView } from "../src/api.js";
import { FakeService, makeRecords } from "./fake_service.js";

let removeKeyListener: (() => void) | null = null;

function wireKeyboard(app: Console): void {
  const listener = (event: KeyboardEvent) => {
    void app.handleKey(event);
  };
  document.addEventListener("keydown", listener);
  removeKeyListener = () => document.removeEventListener("keydown", listener);
}

async function startSession(
  records: RecordView[] = makeRecords(10),
  annotatorId = "annotator_1",
): Promise<{ service: FakeService; root: HTMLElement; app: Console }> {
  const service = new FakeService(records);
  vi.stubGlobal("fetch", service.fetch);
  document.body.innerHTML = '<main id="app"></main>';
  const root = document.getElementById("app") as HTMLElement;
  const app = createConsole(root, annotatorId);
  wireKeyboard(app);
  await app.loadNext();
  return { service, root, app };
}

function pressKey(key: string): void {
  document.dispatchEvent(new KeyboardEvent("keydown", { key, bubbles: true }));
}

function taskRecordId(root: HTMLElement): string | null {
  const task = root.querySelector(".task");
  return task === null ? null : task.getAttribute("data-record-id");
}

function displayedKappa(root: HTMLElement, id = "kappa"): string | null {
  const node = root.querySelector(`#${id}`);
  return node === null ? null : node.getAttribute("data-kappa");
}

async function flushMicrotasks(): Promise<void> {
  for (let i = 0; i < 8; i++) await Promise.resolve();
}

afterEach(() => {
  if (removeKeyListener !== null) {
    removeKeyListener();
    removeKeyListener = null;
  }
  vi.unstubAllGlobals();
  document.body.innerHTML = "";
});

describe("keyboard labeling flow", () => {
  it("labels ten records with keys 1/2/3, in order, no repeats, kappa from the API", async () => {
    const records = makeRecords(10);
    const { service, root } = await startSession(records);

    expect(taskRecordId(root)).toBe("r-000");
    // before any submission the kappa marker shows insufficient data
    expect(root.querySelector("#kappa")!.getAttribute("data-unavailable")).toBe("true");

    const keys = ["1", "2", "3", "1", "2", "3", "1", "2", "3", "1"];
    const wantLabels = ["R", "NR", "I", "R", "NR", "I", "R", "NR", "I", "R"];

    for (let i = 0; i < 10; i++) {
      expect(taskRecordId(root)).toBe(records[i].id);
      pressKey(keys[i]);
      await vi.waitFor(() => {
        expect(service.log.length).toBe(i + 1);
        if (i < 9) {
          expect(taskRecordId(root)).toBe(records[i + 1].id);
        } else {
          expect(root.querySelector("#done")).not.toBeNull();
        }
      });
      // displayed agreement must be exactly what /api/kappa returned
      expect(displayedKappa(root)).toBe(String(service.kappaState.kappa));
    }

    // every label in the log, in submission order, no record repeated
    expect(service.log.map((e) => e.record_id)).toEqual(records.map((r) => r.id));
    expect(new Set(service.log.map((e) => e.record_id)).size).toBe(10);
    expect(service.log.map((e) => e.label)).toEqual(wantLabels);
    expect(service.log.every((e) => e.annotator_id === "annotator_1")).toBe(true);

    // completion screen: full progress plus the final kappa
    const progress = root.querySelector("#progress")!;
    expect(progress.getAttribute("data-percent")).toBe("100");
    expect(displayedKappa(root, "final-kappa")).toBe(String(service.kappaState.kappa));
  });

  it("labels via button clicks as well as keys", async () => {
    const { service, root } = await startSession(makeRecords(2));
    (root.querySelector('button[data-label="NR"]') as HTMLButtonElement).click();
    await vi.waitFor(() => expect(service.log.length).toBe(1));
    expect(service.log[0]).toEqual({
      record_id: "r-000",
      annotator_id: "annotator_1",
      label: "NR",
    });
  });

  it("ignores extra activations while a submission is pending", async () => {
    const { service, root } = await startSession(makeRecords(3));
    let release!: () => void;
    service.holdPost = new Promise<void>((resolve) => {
      release = resolve;
    });

    pressKey("1");
    await flushMicrotasks();
    const buttons = root.querySelectorAll<HTMLButtonElement>(".label-button");
    expect(buttons.length).toBe(3);
    for (const button of buttons) expect(button.disabled).toBe(true);

    // both a repeat key and a different key while pending
    pressKey("1");
    pressKey("2");
    await flushMicrotasks();

    service.holdPost = null;
    release();
    await vi.waitFor(() => expect(taskRecordId(root)).toBe("r-001"));
    expect(service.log.length).toBe(1);
    expect(service.log[0].label).toBe("R");
  });
});

describe("task rendering", () => {
  it("shows body, metadata and guideline for the current record", async () => {
    const { root } = await startSession(makeRecords(3));
    expect(root.querySelector("#record-title")!.textContent).toBe("Record number 0");
    expect(root.querySelector("#record-body")!.textContent).toContain(
      "Body text for record 0",
    );
    const meta = root.querySelector("#record-meta")!.textContent!;
    expect(meta).toContain("Valley Tribune");
    expect(meta).toContain("news");
    expect(meta).toContain("2010-03-01");
    expect(root.querySelector("#guideline")!.textContent).toContain("radical");
  });

  it("omits the header element when the title is empty", async () => {
    const records = makeRecords(2);
    records[0].title = "";
    const { root } = await startSession(records);
    expect(root.querySelector("#record-title")).toBeNull();
    expect(root.querySelector("#record-body")).not.toBeNull();
  });

  it("keeps the label buttons alongside a very long body", async () => {
    const records = makeRecords(1);
    records[0].body = Array.from({ length: 520 }, (_, i) => `word${i}`).join(" ");
    const { root } = await startSession(records);
    const body = root.querySelector(".record-body")!;
    expect(body.textContent!.split(/\s+/).filter(Boolean).length).toBeGreaterThanOrEqual(500);
    expect(root.querySelectorAll(".label-button").length).toBe(3);
  });

  it("shows the completion screen when every record is already labeled", async () => {
    const records = makeRecords(4);
    const service = new FakeService(records);
    for (const record of records) {
      service.labeled.get("annotator_1")!.set(record.id, "R");
    }
    service.kappaState = { available: true, kappa: 0.75, p_o: 0.9, p_e: 0.6, n: 4 };
    vi.stubGlobal("fetch", service.fetch);
    document.body.innerHTML = '<main id="app"></main>';
    const root = document.getElementById("app") as HTMLElement;
    const app = createConsole(root, "annotator_1");
    await app.loadNext();

    expect(root.querySelector("#done")).not.toBeNull();
    expect(root.querySelector("#done")!.textContent).toContain("All records labeled");
    expect(displayedKappa(root, "final-kappa")).toBe("0.75");
    expect(root.querySelector("#progress")!.getAttribute("data-percent")).toBe("100");
    expect(root.querySelector(".done-summary")!.textContent).toContain("co-labeled");
  });
});

describe("failure handling", () => {
  it("keeps the record and shows a banner when the server rejects a label", async () => {
    const { service, root } = await startSession(makeRecords(3));
    service.rejectPostWith = { status: 400, error: "label conflict" };

    pressKey("1");
    await vi.waitFor(() => expect(root.querySelector("#error")).not.toBeNull());
    expect(root.querySelector("#error")!.textContent).toContain("label conflict");
    expect(taskRecordId(root)).toBe("r-000");
    expect(service.log.length).toBe(0);

    // next attempt goes through and advances
    pressKey("1");
    await vi.waitFor(() => expect(taskRecordId(root)).toBe("r-001"));
    expect(service.log.length).toBe(1);
  });

  it("shows a retry banner when fetching the next task fails", async () => {
    const service = new FakeService(makeRecords(2));
    service.failNext = true;
    vi.stubGlobal("fetch", service.fetch);
    document.body.innerHTML = '<main id="app"></main>';
    const root = document.getElementById("app") as HTMLElement;
    const app = createConsole(root, "annotator_1");
    wireKeyboard(app);
    await app.loadNext();

    expect(root.querySelector("#error")!.textContent).toContain("synthetic outage");
    expect(root.querySelector("#retry")).not.toBeNull();

    // Enter drives the retry control from the keyboard
    pressKey("Enter");
    await vi.waitFor(() => expect(taskRecordId(root)).toBe("r-000"));
    expect(root.querySelector("#error")).toBeNull();
  });

  it("surfaces an unknown annotator as an error banner", async () => {
    const { root } = await startSession(makeRecords(2), "ghost");
    expect(root.querySelector("#error")!.textContent).toContain("unknown annotator");
    expect(taskRecordId(root)).toBeNull();
  });
});
