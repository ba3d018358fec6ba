// Shapes returned by the refinement HTTP API. The UI never computes domain
// values itself; every number shown on screen comes from these payloads.

export const CHARACTERISTICS = [
  'Necessary',
  'Appropriate',
  'Unambiguous',
  'Complete',
  'Singular',
  'Feasible',
  'Verifiable',
  'Correct',
  'Conforming',
] as const;

export type Characteristic = (typeof CHARACTERISTICS)[number];

export interface Verdict {
  fulfilled: boolean;
  detail: string;
}

export interface ReportView {
  requirement_id: string;
  backend_id: string;
  assessed: string[];
  verdicts: Record<string, Verdict>;
}

export interface RequirementView {
  id: string;
  text: string;
  origin: string;
  parent_id: string | null;
  split_index: number | null;
}

export interface ParentView {
  requirement: RequirementView;
  score: number | null;
  report: ReportView | null;
}

export interface LeafView {
  requirement: RequirementView;
  score: number | null;
  gate_passed: boolean | null;
  pattern_id: string | null;
  report: ReportView | null;
  parent: ParentView | null;
}

export interface ScorePoint {
  seq: number;
  requirement_id: string;
  score: number;
}

export interface SessionSummary {
  id: string;
  status: string;
  mode: string;
  iterations_completed: number;
  max_iterations: number;
  root: RequirementView;
  leaves: LeafView[];
  pending_questions: number;
  score_history: ScorePoint[];
}

export interface PendingQuestion {
  exchange_id: string;
  requirement_id: string;
  target: string;
  text: string;
  suggested_answer: string | null;
  provenance: string[];
}

export interface EventRecord {
  seq: number;
  timestamp: string;
  kind: string;
  payload: Record<string, unknown>;
}

export interface EventPage {
  total: number;
  offset: number;
  limit: number;
  events: EventRecord[];
}
