// Scripted annotation session: pull a task, build and render it, make a
// deterministic set of token edits, answer Q1, submit, repeat. Used by the
// integration test and handy for smoke-testing a live service.

import { ServiceClient } from "./client.js";
import { renderTask, type RNode } from "./render.js";
import { buildResponse, emptySelection, toggleToken, type SelectionState } from "./selection.js";
import type { ResponseBody, SubmitAck } from "./types.js";
import { buildView, type TaskView } from "./view.js";

export interface CompletedTask {
  view: TaskView;
  tree: RNode;
  body: ResponseBody;
  ack: SubmitAck;
}

function scriptedEdits(view: TaskView): SelectionState {
  let state = emptySelection();

  // One removal per feature class that has highlights: the first such token.
  const seen = new Set<string>();
  for (const token of view.tokens) {
    if (token.featureClass !== null && !seen.has(token.featureClass)) {
      seen.add(token.featureClass);
      state = toggleToken(view, state, token.index);
    }
  }

  // First unhighlighted token becomes a positive-class addition; the second,
  // if any, gets toggled on and straight back off to exercise the involution
  // against a live service.
  const plain = view.tokens.filter((t) => t.highlight === "none");
  if (plain[0]) state = toggleToken(view, state, plain[0].index, view.positiveClass);
  if (plain[1]) {
    state = toggleToken(view, state, plain[1].index, view.negativeClass);
    state = toggleToken(view, state, plain[1].index);
  }
  return state;
}

function scriptedAnswer(view: TaskView): string | number {
  if (view.q1.type === "choice") return view.positiveClass;
  const mid = (view.q1.min + view.q1.max) / 2;
  // Snap to the widget's granularity like a real input would.
  return Math.round(mid / view.q1.step) * view.q1.step;
}

export async function runScriptedSession(
  client: ServiceClient,
  annotator: string,
  maxTasks: number,
): Promise<CompletedTask[]> {
  const done: CompletedTask[] = [];
  for (let n = 0; n < maxTasks; n++) {
    const payload = await client.nextTask(annotator);
    if (payload === null) break;
    const view = buildView(payload);
    const state = scriptedEdits(view);
    const answer = scriptedAnswer(view);
    const tree = renderTask(view, state, answer);
    const body = buildResponse(view, state, answer);
    const ack = await client.submit(body);
    done.push({ view, tree, body, ack });
  }
  return done;
}
