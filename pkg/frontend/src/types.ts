/** Response shapes of the review service; the UI adds nothing to them. */

export interface MentionReport {
  pos_objects: string[];
  neg_objects: string[];
  pos_actions: string[];
  neg_actions: string[];
}

export interface QualityScore {
  ppl: number;
  bac?: number;
  tem: number;
  spa: number;
  rel?: number;
  con?: number;
  sum: number;
  aggregate: number;
  raw_spa: number;
  raw_tem: number;
  mention_report: MentionReport;
  diagnostics: string[];
}

export interface ClaimState {
  claimed: boolean;
  expert_id?: string;
  lease_expiry?: number;
}

export interface QueueEntry {
  candidate_id: string;
  video_id: string;
  qa_id: string;
  question: string;
  answer: string;
  variant: 'video_cot' | 'topic_cot';
  text: string;
  grounding: { objects: string[]; actions: string[] };
  score: QualityScore | null;
  enqueued_at: number;
  claim: ClaimState;
}

export interface QueuePage {
  entries: QueueEntry[];
  page: number;
  page_size: number;
  total: number;
}

export interface RoundReport {
  round: number;
  generated: number;
  accepted: number;
  queued: number;
  failed: number;
  mean_score: number;
  mean_accepted_score: number;
  score_histogram: Record<string, number>;
}

export interface Stats {
  queue_depth: number;
  round_reports: RoundReport[];
  acceptance_rate: number;
  score_histogram: Record<string, number>;
  refinements_per_expert: Record<string, number>;
  refinement_count: number;
}

export interface RefineResult {
  event: Record<string, unknown>;
  rescored: QualityScore;
  previous_aggregate: number;
  delta: number;
  below_threshold: boolean;
}

export interface QueueFilters {
  variant?: string;
  min_score?: number;
  max_score?: number;
  page?: number;
  page_size?: number;
}
