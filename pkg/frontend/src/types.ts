// Wire contracts for the annotation collection service. Field names match
// the JSON the service emits and accepts; do not rename casually.

export type TaskKind = "binary_classification" | "regression";

export type AttributionSign = "positive_attribution" | "negative_attribution";

export interface TaskBlock {
  task_id: string;
  kind: TaskKind;
  // Two entries; classes[1] is the positive_class.
  classes: string[];
  positive_class: string;
  negative_class: string;
  threshold: number | null;
  score_range: [number, number] | null;
}

export interface TokenPayload {
  index: number;
  segment: number;
  text: string;
  // Feature class the token's attribution routed to, null when the token
  // carries no surviving attribution.
  class: string | null;
  sign: AttributionSign | null;
  // |attribution| / max |attribution| over the sample, in [0, 1].
  intensity: number;
}

export interface ChoiceSpec {
  type: "choice";
  options: string[];
}

export interface NumericSpec {
  type: "numeric";
  min: number;
  max: number;
  step: number;
}

export interface ToggleSpec {
  type: "token_toggle";
  action: "remove" | "add";
  class: string;
}

export type AnswerSpec = ChoiceSpec | NumericSpec | ToggleSpec;

export interface Question {
  id: string;
  text: string;
  answer_spec: AnswerSpec;
}

export interface TaskPayload {
  sample_id: string;
  method_id: string;
  annotator_id: string;
  slot: number;
  lease_expires_in: number;
  task: TaskBlock;
  segments: string[][];
  tokens: TokenPayload[];
  questions: Question[];
}

export interface ResponseBody {
  sample_id: string;
  method_id: string;
  annotator_id: string;
  q1_answer: string | number;
  removals: Record<string, number[]>;
  additions: Record<string, number[]>;
  duration_secs?: number;
}

export interface SubmitAck {
  status: string;
  slot: number;
  total: number;
  completed: number;
  leased: number;
  open: number;
}

export interface Progress {
  total: number;
  completed: number;
  leased: number;
  open: number;
  by_annotator: Record<string, number>;
}
