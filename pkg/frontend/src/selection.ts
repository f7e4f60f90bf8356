// Selection state for Q2-Q5 token edits, kept as a pure value. The toggle
// rules make the submission invariants structural: a highlighted token can
// only ever enter the removal set of its own feature class, an unhighlighted
// token can only ever enter an addition set, so removals are always a subset
// of the highlights and additions never intersect them.

import type { ResponseBody } from "./types.js";
import type { TaskView } from "./view.js";

export interface SelectionState {
  // feature class -> token indices
  removals: ReadonlyMap<string, ReadonlySet<number>>;
  additions: ReadonlyMap<string, ReadonlySet<number>>;
}

export function emptySelection(): SelectionState {
  return { removals: new Map(), additions: new Map() };
}

function withToggled(
  sets: ReadonlyMap<string, ReadonlySet<number>>,
  cls: string,
  index: number,
): ReadonlyMap<string, ReadonlySet<number>> {
  const next = new Map<string, Set<number>>();
  for (const [k, v] of sets) next.set(k, new Set(v));
  const target = next.get(cls) ?? new Set<number>();
  if (target.has(index)) {
    target.delete(index);
  } else {
    target.add(index);
  }
  if (target.size === 0) {
    next.delete(cls);
  } else {
    next.set(cls, target);
  }
  return next;
}

function additionClassOf(state: SelectionState, index: number): string | null {
  for (const [cls, indices] of state.additions) {
    if (indices.has(index)) return cls;
  }
  return null;
}

/**
 * Toggle one token. For a highlighted token this flips its membership in the
 * removal set of the token's own feature class; addAs is ignored. For an
 * unhighlighted token already marked as an addition, the mark is cleared no
 * matter which class the caller passes, so toggling twice is always the
 * identity. For a fresh addition addAs picks the class and is required.
 */
export function toggleToken(
  view: TaskView,
  state: SelectionState,
  index: number,
  addAs?: string,
): SelectionState {
  const token = view.tokens[index];
  if (!token) throw new RangeError(`no token at index ${index}`);

  if (token.featureClass !== null) {
    return {
      removals: withToggled(state.removals, token.featureClass, index),
      additions: state.additions,
    };
  }

  const existing = additionClassOf(state, index);
  if (existing !== null) {
    return {
      removals: state.removals,
      additions: withToggled(state.additions, existing, index),
    };
  }
  if (addAs === undefined) {
    throw new RangeError(`adding token ${index} requires a feature class`);
  }
  if (addAs !== view.positiveClass && addAs !== view.negativeClass) {
    throw new RangeError(`unknown feature class ${addAs}`);
  }
  return {
    removals: state.removals,
    additions: withToggled(state.additions, addAs, index),
  };
}

export function isRemoved(state: SelectionState, cls: string | null, index: number): boolean {
  if (cls === null) return false;
  return state.removals.get(cls)?.has(index) ?? false;
}

export function additionClass(state: SelectionState, index: number): string | null {
  return additionClassOf(state, index);
}

function toRecord(sets: ReadonlyMap<string, ReadonlySet<number>>): Record<string, number[]> {
  const out: Record<string, number[]> = {};
  for (const cls of [...sets.keys()].sort()) {
    const indices = [...(sets.get(cls) ?? [])].sort((a, b) => a - b);
    if (indices.length > 0) out[cls] = indices;
  }
  return out;
}

/** Assemble the submission body. q1 must already be answered. */
export function buildResponse(
  view: TaskView,
  state: SelectionState,
  q1Answer: string | number,
  durationSecs?: number,
): ResponseBody {
  const body: ResponseBody = {
    sample_id: view.sampleId,
    method_id: view.methodId,
    annotator_id: view.annotatorId,
    q1_answer: q1Answer,
    removals: toRecord(state.removals),
    additions: toRecord(state.additions),
  };
  if (durationSecs !== undefined) body.duration_secs = durationSecs;
  return body;
}
