import type { ClaimState, QualityScore, QueueEntry } from './types.js';

/** Mirrors the server's submit_refinement preconditions client-side. */
export function canSubmit(entry: QueueEntry, draft: string, expertId: string): boolean {
  if (!expertId) return false;
  if (draft.trim() === '' || draft === entry.text) return false;
  if (!entry.claim.claimed || entry.claim.expert_id !== expertId) return false;
  return true;
}

export function isLockedForExpert(claim: ClaimState, expertId: string): boolean {
  return claim.claimed && claim.expert_id !== expertId;
}

/** Grounded terms the rationale never mentions: grounding minus pos sets. */
export function missingTerms(entry: QueueEntry): { objects: string[]; actions: string[] } {
  const report = entry.score?.mention_report;
  const posObjects = new Set(report?.pos_objects ?? []);
  const posActions = new Set(report?.pos_actions ?? []);
  return {
    objects: entry.grounding.objects.filter((t) => !posObjects.has(t)),
    actions: entry.grounding.actions.filter((t) => !posActions.has(t)),
  };
}

export interface Dimension {
  key: string;
  label: string;
  value: number;
  raw?: number;
}

const DIMENSION_LABELS: Record<string, string> = {
  ppl: 'fluency',
  bac: 'background',
  tem: 'temporal',
  spa: 'spatial',
  rel: 'relations',
  con: 'concept',
  sum: 'summary',
};

/** Per-dimension rows in server order, raw values attached for spa/tem. */
export function dimensions(score: QualityScore): Dimension[] {
  const rows: Dimension[] = [];
  for (const key of ['ppl', 'bac', 'tem', 'spa', 'rel', 'con', 'sum'] as const) {
    const value = score[key];
    if (value === undefined) continue;
    const row: Dimension = { key, label: DIMENSION_LABELS[key], value };
    if (key === 'spa') row.raw = score.raw_spa;
    if (key === 'tem') row.raw = score.raw_tem;
    rows.push(row);
  }
  return rows;
}

export function formatScore(value: number): string {
  return value.toFixed(2);
}

export function formatDelta(delta: number): string {
  const sign = delta >= 0 ? '+' : '';
  return `${sign}${delta.toFixed(2)}`;
}

/** Dimensions below 1.0 after a rescore, for the below-threshold warning. */
export function failingDimensions(score: QualityScore): string[] {
  return dimensions(score)
    .filter((d) => d.value < 1.0)
    .map((d) => d.label);
}
