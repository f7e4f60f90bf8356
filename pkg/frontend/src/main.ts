// Browser shell. All logic lives in the pure modules; this file only turns
// render trees into DOM, routes clicks, and talks to the service through
// ServiceClient.

import { ServiceClient, ServiceError } from "./client.js";
import { renderError, renderNotice, renderTask, type RNode } from "./render.js";
import { buildResponse, emptySelection, toggleToken, type SelectionState } from "./selection.js";
import { buildView, PayloadError, type TaskView } from "./view.js";

function toDom(node: RNode): HTMLElement {
  const element = document.createElement(node.tag);
  for (const [key, value] of Object.entries(node.attrs)) {
    element.setAttribute(key, value);
  }
  for (const child of node.children) {
    element.append(typeof child === "string" ? document.createTextNode(child) : toDom(child));
  }
  return element;
}

interface SessionUi {
  root: HTMLElement;
  client: ServiceClient;
  annotator: string;
  view: TaskView | null;
  selection: SelectionState;
  q1Answer: string | number | null;
  submitted: boolean;
  started: number;
}

function mount(ui: SessionUi, tree: RNode): void {
  ui.root.replaceChildren(toDom(tree));
}

function redraw(ui: SessionUi): void {
  if (!ui.view) return;
  mount(ui, renderTask(ui.view, ui.selection, ui.q1Answer));
}

function showStatus(ui: SessionUi, text: string): void {
  let bar = ui.root.querySelector(".status-bar");
  if (!bar) {
    bar = document.createElement("div");
    bar.className = "status-bar";
    ui.root.prepend(bar);
  }
  bar.textContent = text;
}

async function loadNext(ui: SessionUi): Promise<void> {
  ui.view = null;
  ui.selection = emptySelection();
  ui.q1Answer = null;
  ui.submitted = false;
  mount(ui, renderNotice("Loading next task..."));
  let payload: unknown;
  try {
    payload = await ui.client.nextTask(ui.annotator);
  } catch (err) {
    mountRetry(ui, `Could not reach the server: ${String(err)}`, () => loadNext(ui));
    return;
  }
  if (payload === null) {
    mount(ui, renderNotice("All done. No tasks left for you."));
    return;
  }
  try {
    ui.view = buildView(payload);
  } catch (err) {
    if (err instanceof PayloadError) {
      mount(ui, renderError(`This task could not be displayed: ${err.message}`));
      return;
    }
    throw err;
  }
  ui.started = Date.now();
  redraw(ui);
}

function mountRetry(ui: SessionUi, message: string, retry: () => void): void {
  const tree = renderError(message);
  mount(ui, tree);
  const button = document.createElement("button");
  button.textContent = "Retry";
  button.addEventListener("click", retry);
  ui.root.firstElementChild?.append(button);
}

async function submit(ui: SessionUi): Promise<void> {
  if (!ui.view || ui.q1Answer === null || ui.submitted) return;
  const body = buildResponse(
    ui.view,
    ui.selection,
    ui.q1Answer,
    Math.round((Date.now() - ui.started) / 1000),
  );
  try {
    const ack = await ui.client.submit(body);
    ui.submitted = true;
    showStatus(ui, `Stored. ${ack.completed} of ${ack.total} tasks completed overall.`);
    await loadNext(ui);
  } catch (err) {
    if (err instanceof ServiceError) {
      // Server-side rejection: show the server's wording, keep the state.
      showStatus(ui, `Rejected (${err.status}): ${err.detail}`);
      return;
    }
    mountRetry(ui, `Submission did not go through: ${String(err)}`, () => submit(ui));
  }
}

function chooseAdditionClass(ui: SessionUi): string | null {
  if (!ui.view) return null;
  const answer = window.prompt(
    `Add this word as evidence for which side?\n` +
      `g = ${ui.view.positiveClass} (green), r = ${ui.view.negativeClass} (red)`,
    "g",
  );
  if (answer === null) return null;
  const normalized = answer.trim().toLowerCase();
  if (normalized.startsWith("g")) return ui.view.positiveClass;
  if (normalized.startsWith("r")) return ui.view.negativeClass;
  return null;
}

function onClick(ui: SessionUi, event: Event): void {
  if (!ui.view || ui.submitted) return;
  const target = event.target as HTMLElement;

  const tokenEl = target.closest(".token");
  if (tokenEl instanceof HTMLElement) {
    const index = Number(tokenEl.dataset.index);
    const token = ui.view.tokens[index];
    if (!token) return;
    if (token.highlight === "none" && !tokenEl.classList.contains("added")) {
      const cls = chooseAdditionClass(ui);
      if (cls === null) return;
      ui.selection = toggleToken(ui.view, ui.selection, index, cls);
    } else {
      ui.selection = toggleToken(ui.view, ui.selection, index);
    }
    redraw(ui);
    return;
  }

  if (target.closest(".submit")) {
    void submit(ui);
  }
}

function onInput(ui: SessionUi, event: Event): void {
  if (!ui.view) return;
  const target = event.target as HTMLInputElement;
  if (target.name !== "q1") return;
  if (ui.view.q1.type === "choice") {
    ui.q1Answer = target.value;
  } else {
    const value = Number(target.value);
    ui.q1Answer = Number.isFinite(value) && target.value !== "" ? value : null;
  }
  // Only the submit button's disabled state depends on q1, so update it in
  // place rather than re-rendering and stealing focus from the input.
  const button = ui.root.querySelector(".submit");
  if (button instanceof HTMLButtonElement) button.disabled = ui.q1Answer === null;
}

export function start(root: HTMLElement, baseUrl: string, annotator: string): void {
  const ui: SessionUi = {
    root,
    client: new ServiceClient(baseUrl),
    annotator,
    view: null,
    selection: emptySelection(),
    q1Answer: null,
    submitted: false,
    started: Date.now(),
  };
  root.addEventListener("click", (event) => onClick(ui, event));
  root.addEventListener("change", (event) => onInput(ui, event));
  root.addEventListener("input", (event) => onInput(ui, event));
  void loadNext(ui);
}

function boot(): void {
  const root = document.getElementById("app");
  if (!root) return;
  const params = new URLSearchParams(window.location.search);
  const annotator = params.get("annotator") ?? window.prompt("Annotator id?") ?? "";
  if (annotator === "") {
    root.textContent = "An annotator id is required (add ?annotator=YOURID to the URL).";
    return;
  }
  const base = params.get("service") ?? "";
  start(root, base, annotator);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
