// Shapes of the review-service HTTP payloads. These mirror the JSON the
// service emits; the UI never recomputes any of these values client-side.

export interface QueueEntry {
  qa_id: string;
  question: string;
  flags: string[];
  fmt: string;
  skills: string[];
}

export interface AtomDict {
  subtype: string;
  value: unknown;
  unit?: string | null;
}

export interface AnswerFieldDict {
  atom?: AtomDict;
  rationale?: string;
}

export interface AnswerNodeDict {
  kind: string;
  fields: Record<string, AnswerFieldDict>;
}

export interface SeriesChannel {
  name: string;
  unit: string;
  timestamps: string[];
  values: number[];
}

export interface ItemPayload {
  qa_id: string;
  seed_id: string;
  question: string;
  fmt: string;
  assignment: { composition: string[]; [k: string]: unknown };
  intent: { kind: string; params: Record<string, unknown> };
  gold: AnswerNodeDict;
  gold_text: string;
  evidence: Record<string, unknown>;
  plan_source: string;
  status: string;
  flags: string[];
  mcq: { options: Record<string, string>; gold_letter: string } | null;
  series?: { channels: SeriesChannel[] };
}

export type DecisionAction = "keep" | "correct" | "discard" | "skip";

export interface DecisionRequest {
  action: DecisionAction;
  corrected_gold?: AnswerNodeDict;
  corrected_text?: string;
  reviewer?: string;
}

export interface DecisionResponse {
  qa_id: string;
  status: string;
}
