// Rendering is a pure function from (view, selection, q1 answer) to a plain
// tree of nodes; main.ts turns the tree into DOM. Keeping it pure makes
// "same payload, same structure" testable without a browser.

import { additionClass, isRemoved, type SelectionState } from "./selection.js";
import type { TaskView } from "./view.js";

export interface RNode {
  tag: string;
  attrs: Record<string, string>;
  children: (RNode | string)[];
}

function el(tag: string, attrs: Record<string, string> = {}, children: (RNode | string)[] = []): RNode {
  return { tag, attrs, children };
}

// Opacity scales with normalized attribution magnitude; hue encodes the
// feature class (green = positive class, red = negative class).
const GREEN = "46,160,67";
const RED = "218,54,51";

function tokenStyle(highlight: "pos" | "neg", intensity: number): string {
  const rgb = highlight === "pos" ? GREEN : RED;
  return `background-color:rgba(${rgb},${String(intensity)})`;
}

function tokenNode(view: TaskView, state: SelectionState, index: number): RNode {
  const token = view.tokens[index];
  if (!token) throw new RangeError(`no token at index ${index}`);
  const classes = ["token"];
  const attrs: Record<string, string> = { "data-index": String(index) };

  if (token.highlight !== "none") {
    classes.push(token.highlight === "pos" ? "green" : "red");
    attrs.style = tokenStyle(token.highlight, token.intensity);
    if (isRemoved(state, token.featureClass, index)) classes.push("removed");
  } else {
    const added = additionClass(state, index);
    if (added !== null) {
      classes.push("added", added === view.positiveClass ? "green" : "red");
    }
  }
  attrs.class = classes.join(" ");
  return el("span", attrs, [token.text]);
}

function segmentNodes(view: TaskView, state: SelectionState): RNode[] {
  const nodes: RNode[] = [];
  let offset = 0;
  for (let s = 0; s < view.segments.length; s++) {
    const segment = view.segments[s] ?? [];
    const spans: (RNode | string)[] = [];
    for (let i = 0; i < segment.length; i++) {
      if (i > 0) spans.push(" ");
      spans.push(tokenNode(view, state, offset + i));
    }
    nodes.push(el("p", { class: "segment", "data-segment": String(s) }, spans));
    offset += segment.length;
  }
  return nodes;
}

function q1Widget(view: TaskView, answer: string | number | null): RNode {
  if (view.q1.type === "choice") {
    const options = view.q1.options.map((opt) =>
      el(
        "label",
        { class: "q1-option" },
        [
          el("input", {
            type: "radio",
            name: "q1",
            value: opt,
            ...(answer === opt ? { checked: "checked" } : {}),
          }),
          opt,
        ],
      ),
    );
    return el("div", { class: "q1 q1-choice" }, options);
  }
  return el("div", { class: "q1 q1-numeric" }, [
    el("input", {
      type: "number",
      name: "q1",
      min: String(view.q1.min),
      max: String(view.q1.max),
      step: String(view.q1.step),
      ...(answer !== null ? { value: String(answer) } : {}),
    }),
  ]);
}

function questionNodes(view: TaskView, answer: string | number | null): RNode[] {
  return view.questions.map((q) => {
    const children: (RNode | string)[] = [el("span", { class: "question-text" }, [q.text])];
    if (q.id === "q1") {
      children.push(q1Widget(view, answer));
    } else if (q.answer_spec.type === "token_toggle") {
      children.push(
        el("span", {
          class: "toggle-hint",
          "data-action": q.answer_spec.action,
          "data-class": q.answer_spec.class,
        }),
      );
    }
    return el("li", { class: "question", "data-question": q.id }, children);
  });
}

export function renderTask(
  view: TaskView,
  state: SelectionState,
  q1Answer: string | number | null,
): RNode {
  const submitAttrs: Record<string, string> = { class: "submit", type: "button" };
  if (q1Answer === null) submitAttrs.disabled = "disabled";
  return el("div", { class: "task" }, [
    el("div", { class: "task-header" }, [
      el("span", { class: "sample-id" }, [view.sampleId]),
      el("span", { class: "method-id" }, [view.methodId]),
    ]),
    el("div", { class: "text" }, segmentNodes(view, state)),
    el("ol", { class: "questions" }, questionNodes(view, q1Answer)),
    el("button", submitAttrs, ["Submit"]),
  ]);
}

export function renderError(message: string): RNode {
  return el("div", { class: "error-screen" }, [
    el("p", { class: "error-message" }, [message]),
  ]);
}

export function renderNotice(message: string): RNode {
  return el("div", { class: "notice" }, [message]);
}
