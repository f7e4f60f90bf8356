// Validated, render-ready form of a task payload. buildView checks the whole
// payload up front and throws PayloadError on anything malformed, so a task
// either renders completely or not at all.

import type {
  ChoiceSpec,
  NumericSpec,
  Question,
  TaskKind,
  TaskPayload,
  ToggleSpec,
} from "./types.js";

export class PayloadError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "PayloadError";
  }
}

export type HighlightClass = "pos" | "neg" | "none";

export interface TokenView {
  index: number;
  segment: number;
  text: string;
  highlight: HighlightClass;
  // Feature class for removal bookkeeping; null iff highlight is "none".
  featureClass: string | null;
  intensity: number;
}

export interface TaskView {
  sampleId: string;
  methodId: string;
  annotatorId: string;
  kind: TaskKind;
  positiveClass: string;
  negativeClass: string;
  scoreRange: [number, number] | null;
  segments: string[][];
  tokens: TokenView[];
  questions: Question[];
  q1: ChoiceSpec | NumericSpec;
  toggles: ToggleSpec[];
}

function fail(msg: string): never {
  throw new PayloadError(msg);
}

function isRecord(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

function str(v: unknown, what: string): string {
  if (typeof v !== "string" || v === "") fail(`${what} must be a non-empty string`);
  return v;
}

function num(v: unknown, what: string): number {
  if (typeof v !== "number" || !Number.isFinite(v)) fail(`${what} must be a finite number`);
  return v;
}

function parseAnswerSpec(raw: Record<string, unknown>): Question["answer_spec"] {
  if (raw.type === "choice") {
    const options = raw.options;
    if (!Array.isArray(options)) fail("choice spec needs options");
    return { type: "choice", options: options.map((o, i) => str(o, `option ${i}`)) };
  }
  if (raw.type === "numeric") {
    return {
      type: "numeric",
      min: num(raw.min, "numeric min"),
      max: num(raw.max, "numeric max"),
      step: num(raw.step, "numeric step"),
    };
  }
  if (raw.type === "token_toggle") {
    const action = raw.action;
    if (action !== "remove" && action !== "add") fail("bad toggle action");
    return { type: "token_toggle", action, class: str(raw.class, "toggle class") };
  }
  fail(`unknown answer spec type ${String(raw.type)}`);
}

export function buildView(payload: unknown): TaskView {
  if (!isRecord(payload)) fail("payload must be an object");

  const sampleId = str(payload.sample_id, "sample_id");
  const methodId = str(payload.method_id, "method_id");
  const annotatorId = str(payload.annotator_id, "annotator_id");

  const task = payload.task;
  if (!isRecord(task)) fail("task block missing");
  const kind = str(task.kind, "task.kind");
  if (kind !== "binary_classification" && kind !== "regression") {
    fail(`unknown task kind ${kind}`);
  }
  const positiveClass = str(task.positive_class, "task.positive_class");
  const negativeClass = str(task.negative_class, "task.negative_class");
  if (positiveClass === negativeClass) fail("positive and negative class must differ");

  let scoreRange: [number, number] | null = null;
  if (task.score_range != null) {
    const range = task.score_range;
    if (!Array.isArray(range) || range.length !== 2) fail("score_range must be a pair");
    const lo = num(range[0], "score_range[0]");
    const hi = num(range[1], "score_range[1]");
    if (lo >= hi) fail("score_range must be ordered");
    scoreRange = [lo, hi];
  }

  const segments = payload.segments;
  if (!Array.isArray(segments) || segments.length === 0) fail("segments missing");
  const flat: string[] = [];
  const segmentLists: string[][] = [];
  for (const segment of segments) {
    if (!Array.isArray(segment)) fail("each segment must be a token list");
    const toks = segment.map((t, i) => str(t, `segment token ${i}`));
    segmentLists.push(toks);
    flat.push(...toks);
  }

  const rawTokens = payload.tokens;
  if (!Array.isArray(rawTokens)) fail("tokens missing");
  if (rawTokens.length !== flat.length) {
    fail(`tokens length ${rawTokens.length} does not match segments (${flat.length})`);
  }
  const tokens: TokenView[] = rawTokens.map((raw, i) => {
    if (!isRecord(raw)) fail(`token ${i} must be an object`);
    if (num(raw.index, `token ${i} index`) !== i) fail(`token ${i} out of order`);
    const text = str(raw.text, `token ${i} text`);
    if (text !== flat[i]) fail(`token ${i} text disagrees with segments`);
    const intensity = num(raw.intensity, `token ${i} intensity`);
    if (intensity < 0 || intensity > 1) fail(`token ${i} intensity ${intensity} out of [0, 1]`);
    const cls = raw.class;
    let highlight: HighlightClass;
    let featureClass: string | null;
    if (cls == null) {
      if (raw.sign != null) fail(`token ${i} has a sign but no class`);
      highlight = "none";
      featureClass = null;
    } else if (cls === positiveClass) {
      highlight = "pos";
      featureClass = positiveClass;
    } else if (cls === negativeClass) {
      highlight = "neg";
      featureClass = negativeClass;
    } else {
      fail(`token ${i} has unknown class ${String(cls)}`);
    }
    return {
      index: i,
      segment: num(raw.segment, `token ${i} segment`),
      text,
      highlight,
      featureClass,
      intensity,
    };
  });

  const rawQuestions = payload.questions;
  if (!Array.isArray(rawQuestions) || rawQuestions.length === 0) fail("questions missing");
  const questions: Question[] = [];
  for (const raw of rawQuestions) {
    if (!isRecord(raw) || !isRecord(raw.answer_spec)) fail("malformed question");
    questions.push({
      id: str(raw.id, "question id"),
      text: str(raw.text, "question text"),
      answer_spec: parseAnswerSpec(raw.answer_spec),
    });
  }

  const q1 = questions.find((q) => q.id === "q1");
  if (!q1) fail("q1 missing");
  const q1Spec = q1.answer_spec;
  if (kind === "binary_classification") {
    if (q1Spec.type !== "choice") fail("classification q1 must be a choice");
    if (q1Spec.options.length < 2) fail("q1 needs at least two options");
  } else {
    if (q1Spec.type !== "numeric") fail("regression q1 must be numeric");
    if (!(q1Spec.min < q1Spec.max)) fail("q1 numeric bounds must be ordered");
  }

  const toggles: ToggleSpec[] = [];
  for (const q of questions) {
    if (q.answer_spec.type === "token_toggle") {
      const spec = q.answer_spec;
      if (spec.class !== positiveClass && spec.class !== negativeClass) {
        fail(`toggle class ${spec.class} does not belong to the task`);
      }
      toggles.push(spec);
    }
  }

  return {
    sampleId,
    methodId,
    annotatorId,
    kind,
    positiveClass,
    negativeClass,
    scoreRange,
    segments: segmentLists,
    tokens,
    questions,
    q1: q1Spec,
    toggles,
  };
}

export function highlightedIndices(view: TaskView): Set<number> {
  const out = new Set<number>();
  for (const t of view.tokens) {
    if (t.highlight !== "none") out.add(t.index);
  }
  return out;
}
