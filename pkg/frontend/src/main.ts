/**
 * Entry point. Picks the annotator id from the ?annotator= query
 * parameter or from a small picker screen, then starts the console.
 *
 * One annotator per browser session; nothing is stored locally, all
 * progress lives on the service.
 */

import { createConsole } from "./console.js";

function startConsole(root: HTMLElement, annotatorId: string): void {
  const app = createConsole(root, annotatorId);
  document.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement) return;
    void app.handleKey(event);
  });
  void app.loadNext();
}

function renderPicker(root: HTMLElement): void {
  root.textContent = "";
  root.className = "picker";

  const heading = document.createElement("h2");
  heading.textContent = "Who is annotating?";
  root.appendChild(heading);

  const input = document.createElement("input");
  input.type = "text";
  input.placeholder = "annotator id";
  input.value = "annotator_1";
  root.appendChild(input);

  const start = document.createElement("button");
  start.textContent = "Start";
  start.onclick = () => {
    const id = input.value.trim();
    if (id !== "") startConsole(root, id);
  };
  root.appendChild(start);

  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") start.click();
  });
  input.focus();
}

function boot(): void {
  const root = document.getElementById("app");
  if (root === null) return;
  const annotatorId = new URLSearchParams(window.location.search).get("annotator");
  if (annotatorId !== null && annotatorId.trim() !== "") {
    startConsole(root, annotatorId.trim());
  } else {
    renderPicker(root);
  }
}

boot();
