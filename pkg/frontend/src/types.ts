/*
 * Wire types for the /v1 API. These mirror the JSON Schemas shipped with
 * the service (schemas/*.schema.json); keep the two in sync by hand.
 */

export type Pattern = "A" | "B" | "anomaly" | "advisory" | "malformed";

export type RefusalClass =
  | "explicit_refusal"
  | "safety_warning"
  | "partial_with_escalation"
  | "full_answer";

export type Language = "en" | "ja";

export type ResponseMode = "retrieval" | "instructional";

export interface AskRequest {
  question: string;
  mode?: ResponseMode;
  language?: Language;
}

export interface Reference {
  file: string;
  sections: string[];
}

export interface RetrievalHit {
  doc: string;
  section_id: string;
  score: number;
  method: "embedding" | "lexical";
}

export interface AskResponse {
  body: string;
  pattern: Pattern;
  refusal: RefusalClass;
  language: Language;
  mode: ResponseMode;
  references: Reference[];
  hits: RetrievalHit[];
  provider_calls: number;
  fallback_used: boolean;
}

export interface ManualSection {
  id: string;
  title: string;
  tags: string[];
}

export interface ManualSummary {
  logical_name: string;
  version: number;
  source_file: string;
  language: Language;
  sections: ManualSection[];
}

export interface ManualsResponse {
  manuals: ManualSummary[];
}

export interface CellStats {
  n: number;
  mean: number;
  std: number;
  min: number;
  max: number;
  std_population?: number;
}

export interface MannWhitneySummary {
  u: number;
  p_exact: number;
  p_normal: number;
  method: "count_distribution" | "tie_enumeration" | "normal_approximation";
  xs: "in_manual/rag";
  ys: "out_of_manual/rag";
}

export interface RefusalCounts {
  explicit_refusal: number;
  safety_warning: number;
  partial_with_escalation: number;
  full_answer: number;
}

export interface RubricSummary {
  utility_mean: number;
  safety_mean: number;
  evaluators: number;
}

export interface EvalReport {
  mode: "fixture" | "live";
  cells: Record<string, CellStats>;
  mann_whitney: MannWhitneySummary | null;
  mann_whitney_omitted_reason: string | null;
  refusal_counts: RefusalCounts;
  rubric: RubricSummary | null;
}

export interface HealthResponse {
  status: "ok";
  version: string;
  catalog: { documents: number; sections: number };
  providers: { chat: boolean | null; embed: boolean | null };
  templates: { retrieval_sha256: string; instructional_sha256: string };
}
