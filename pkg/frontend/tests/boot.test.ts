/**
 * Entry-point wiring: query-parameter sessions and the picker screen.
 */

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { FakeService, makeRecords } from "./fake_service.js";

describe("boot", () => {
  beforeEach(() => {
    vi.resetModules();
    document.body.innerHTML = '<main id="app"></main>';
  });

  afterEach(() => {
    vi.unstubAllGlobals();
    document.body.innerHTML = "";
  });

  it("starts a session directly from the ?annotator= parameter", async () => {
    const service = new FakeService(makeRecords(3));
    vi.stubGlobal("fetch", service.fetch);
    window.history.replaceState({}, "", "/?annotator=annotator_2");

    await import("../src/main.js");
    await vi.waitFor(() => expect(document.querySelector(".task")).not.toBeNull());
    expect(document.querySelector(".annotator")!.textContent).toContain("annotator_2");
  });

  it("shows a picker without the parameter and starts on demand", async () => {
    const service = new FakeService(makeRecords(3));
    vi.stubGlobal("fetch", service.fetch);
    window.history.replaceState({}, "", "/");

    await import("../src/main.js");
    const input = document.querySelector("input") as HTMLInputElement;
    expect(input).not.toBeNull();
    input.value = "annotator_1";
    (document.querySelector("button") as HTMLButtonElement).click();

    await vi.waitFor(() => expect(document.querySelector(".task")).not.toBeNull());
    expect(document.querySelector(".annotator")!.textContent).toContain("annotator_1");
  });
});
