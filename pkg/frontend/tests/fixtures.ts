// Hand-built task payloads mirroring what the collection service sends.

import type { Question, TaskPayload } from "../src/types.js";

export function regressionQuestions(): Question[] {
  return [
    {
      id: "q1",
      text: "What do you think the model predicted for this text?",
      answer_spec: { type: "numeric", min: 0, max: 5, step: 0.1 },
    },
    {
      id: "q2",
      text: "Toggle off any green highlighted words you disagree with.",
      answer_spec: { type: "token_toggle", action: "remove", class: "raises_score" },
    },
    {
      id: "q3",
      text: "Toggle off any red highlighted words you disagree with.",
      answer_spec: { type: "token_toggle", action: "remove", class: "lowers_score" },
    },
    {
      id: "q4",
      text: "Toggle on any unhighlighted words that should be green.",
      answer_spec: { type: "token_toggle", action: "add", class: "raises_score" },
    },
    {
      id: "q5",
      text: "Toggle on any unhighlighted words that should be red.",
      answer_spec: { type: "token_toggle", action: "add", class: "lowers_score" },
    },
  ];
}

/**
 * Two segments, five tokens: 0 strongly positive, 1 unhighlighted,
 * 2 weakly negative, 3 unhighlighted, 4 positive.
 */
export function regressionPayload(): TaskPayload {
  return {
    sample_id: "s0000",
    method_id: "method00",
    annotator_id: "alice",
    slot: 1,
    lease_expires_in: 1800,
    task: {
      task_id: "synthetic_regression",
      kind: "regression",
      classes: ["lowers_score", "raises_score"],
      positive_class: "raises_score",
      negative_class: "lowers_score",
      threshold: 2.5,
      score_range: [0, 5],
    },
    segments: [
      ["bright", "and"],
      ["dull", "a", "gem"],
    ],
    tokens: [
      { index: 0, segment: 0, text: "bright", class: "raises_score", sign: "positive_attribution", intensity: 1.0 },
      { index: 1, segment: 0, text: "and", class: null, sign: null, intensity: 0.0 },
      { index: 2, segment: 1, text: "dull", class: "lowers_score", sign: "negative_attribution", intensity: 0.4 },
      { index: 3, segment: 1, text: "a", class: null, sign: null, intensity: 0.0 },
      { index: 4, segment: 1, text: "gem", class: "raises_score", sign: "positive_attribution", intensity: 0.7 },
    ],
    questions: regressionQuestions(),
  };
}

export function classificationPayload(): TaskPayload {
  const base = regressionPayload();
  return {
    ...base,
    task: {
      task_id: "synthetic_classification",
      kind: "binary_classification",
      classes: ["negative", "positive"],
      positive_class: "positive",
      negative_class: "negative",
      threshold: 0.5,
      score_range: null,
    },
    tokens: base.tokens.map((t) => ({
      ...t,
      class: t.class === null ? null : t.class === "raises_score" ? "positive" : "negative",
    })),
    questions: [
      {
        id: "q1",
        text: "What do you think the model predicted for this text?",
        answer_spec: { type: "choice", options: ["negative", "positive"] },
      },
      ...regressionQuestions()
        .slice(1)
        .map((q) => ({
          ...q,
          answer_spec: {
            ...q.answer_spec,
            class:
              (q.answer_spec as { class: string }).class === "raises_score"
                ? "positive"
                : "negative",
          } as Question["answer_spec"],
        })),
    ],
  };
}

/** Payload where nothing survived extraction: no token is highlighted. */
export function allZeroPayload(): TaskPayload {
  const base = regressionPayload();
  return {
    ...base,
    tokens: base.tokens.map((t) => ({ ...t, class: null, sign: null, intensity: 0.0 })),
  };
}

// Small deterministic PRNG for fuzzing (mulberry32).
export function rng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}
