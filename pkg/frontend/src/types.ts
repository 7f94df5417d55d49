/** Wire types of the review service HTTP API, consumed verbatim. */

export const BIAS_TYPES = [
  "gender",
  "sex",
  "race",
  "ethnicity",
  "age",
  "geography",
] as const;

export type BiasTypeName = (typeof BIAS_TYPES)[number];

export type Verdict = "bias" | "potential_bias" | "non_bias";

export interface IdentifierMatch {
  type: string;
  term: string;
  start: number;
  end: number;
}

export interface DecisionContent {
  verdict: Verdict;
  types: string[];
  comment: string | null;
  reviewer_id: string | null;
}

export interface FlagRecord {
  flag_id: string;
  doc_id: string;
  page_no: number;
  sentence: string;
  score: number;
  type_scores: Record<string, number>;
  matches: IdentifierMatch[];
  status: "pending" | "accepted" | "rejected";
  created_at: number | null;
  decision: DecisionContent | null;
}

export interface DecisionPayload {
  flag_id: string;
  verdict: Verdict;
  types: string[];
  comment?: string | null;
  reviewer_id?: string | null;
}

export interface QueueStats {
  pending: number;
  accepted: number;
  rejected: number;
}

export interface PageInput {
  doc_id: string;
  page_no: number;
  text: string;
}
