import type { QualityScore, QueueEntry, RefineResult, Stats } from './types.js';
import {
  dimensions,
  failingDimensions,
  formatDelta,
  formatScore,
  isLockedForExpert,
  missingTerms,
} from './viewmodel.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderScoreBadge(score: QualityScore | null): HTMLElement {
  const badge = el('span', 'score-badge', score ? formatScore(score.aggregate) : 'n/a');
  if (score) badge.dataset.aggregate = String(score.aggregate);
  return badge;
}

export function renderMiniBars(score: QualityScore): HTMLElement {
  const wrap = el('div', 'mini-bars');
  for (const dim of dimensions(score)) {
    const bar = el('div', 'mini-bar');
    bar.dataset.dimension = dim.key;
    bar.title = `${dim.label}: ${formatScore(dim.value)}`;
    const fill = el('div', 'mini-bar-fill');
    fill.style.width = `${Math.round(dim.value * 100)}%`;
    bar.appendChild(fill);
    wrap.appendChild(bar);
  }
  return wrap;
}

export function renderQueueList(
  entries: QueueEntry[],
  expertId: string,
  onOpen: (entry: QueueEntry) => void,
): HTMLElement {
  const list = el('ul', 'queue-list');
  if (entries.length === 0) {
    const empty = el('li', 'queue-empty', 'Queue clear — nothing awaiting review.');
    list.appendChild(empty);
    return list;
  }
  for (const entry of entries) {
    const item = el('li', 'queue-item');
    item.dataset.candidateId = entry.candidate_id;
    item.appendChild(renderScoreBadge(entry.score));
    item.appendChild(el('span', 'queue-question', entry.question));
    if (entry.score) item.appendChild(renderMiniBars(entry.score));

    const locked = isLockedForExpert(entry.claim, expertId);
    if (locked) {
      item.classList.add('locked');
      item.appendChild(el('span', 'lock-indicator', `claimed by ${entry.claim.expert_id}`));
    }
    const open = el('button', 'open-button', 'Open');
    open.disabled = locked;
    open.addEventListener('click', () => onOpen(entry));
    item.appendChild(open);
    list.appendChild(item);
  }
  return list;
}

/** Rationale text with grounded mentions and hallucinations marked. */
export function renderAnnotatedText(entry: QueueEntry): HTMLElement {
  const report = entry.score?.mention_report;
  const pos = new Set([...(report?.pos_objects ?? []), ...(report?.pos_actions ?? [])]);
  const neg = new Set([...(report?.neg_objects ?? []), ...(report?.neg_actions ?? [])]);
  const wrap = el('p', 'rationale-text');
  for (const piece of entry.text.split(/(\b[\w']+\b)/)) {
    const token = piece.toLowerCase();
    if (neg.has(token)) {
      wrap.appendChild(el('mark', 'mention-neg', piece));
    } else if (pos.has(token)) {
      wrap.appendChild(el('mark', 'mention-pos', piece));
    } else {
      wrap.appendChild(document.createTextNode(piece));
    }
  }
  return wrap;
}

export function renderDiagnostics(entry: QueueEntry): HTMLElement {
  const panel = el('section', 'diagnostics');
  const score = entry.score;
  if (!score) {
    panel.appendChild(el('p', 'diagnostics-empty', 'No score recorded for this candidate.'));
    return panel;
  }

  const table = el('dl', 'dimension-table');
  for (const dim of dimensions(score)) {
    table.appendChild(el('dt', undefined, dim.label));
    const value = el('dd', `dim-${dim.key}`, formatScore(dim.value));
    if (dim.raw !== undefined && dim.raw !== dim.value) {
      value.appendChild(el('span', 'raw-value', ` (raw ${formatScore(dim.raw)})`));
    }
    table.appendChild(value);
  }
  panel.appendChild(table);

  const chips = el('div', 'indicator-chips');
  for (const dim of dimensions(score)) {
    if (!['bac', 'rel', 'sum', 'con'].includes(dim.key)) continue;
    chips.appendChild(
      el('span', `chip ${dim.value >= 1 ? 'positive' : 'negative'}`, dim.label),
    );
  }
  panel.appendChild(chips);

  panel.appendChild(renderAnnotatedText(entry));

  const missing = missingTerms(entry);
  const checklist = el('ul', 'missing-checklist');
  for (const term of missing.objects) {
    checklist.appendChild(el('li', 'missing-term missing-object', `object not mentioned: ${term}`));
  }
  for (const term of missing.actions) {
    checklist.appendChild(el('li', 'missing-term missing-action', `action not mentioned: ${term}`));
  }
  panel.appendChild(checklist);

  if (score.diagnostics.length) {
    const notes = el('ul', 'diagnostic-notes');
    for (const note of score.diagnostics) notes.appendChild(el('li', undefined, note));
    panel.appendChild(notes);
  }
  return panel;
}

export function renderRefineResult(result: RefineResult): HTMLElement {
  const box = el('div', 'refine-result');
  const delta = el('span', 'delta-badge', formatDelta(result.delta));
  delta.title = `${formatScore(result.previous_aggregate)} → ${formatScore(result.rescored.aggregate)}`;
  box.appendChild(delta);
  box.appendChild(el('span', 'rescored-aggregate', formatScore(result.rescored.aggregate)));
  if (result.below_threshold) {
    const warn = el(
      'p',
      'warning below-threshold',
      `Still below threshold; weak dimensions: ${failingDimensions(result.rescored).join(', ')}`,
    );
    box.appendChild(warn);
  }
  return box;
}

export function renderStats(stats: Stats): HTMLElement {
  const panel = el('section', 'stats-panel');
  const facts = el('dl', 'stats-facts');
  const fact = (cls: string, label: string, value: string) => {
    facts.appendChild(el('dt', undefined, label));
    facts.appendChild(el('dd', cls, value));
  };
  fact('stat-queue-depth', 'queue depth', String(stats.queue_depth));
  fact('stat-acceptance-rate', 'acceptance rate', formatScore(stats.acceptance_rate));
  fact('stat-refinement-count', 'refinements', String(stats.refinement_count));
  panel.appendChild(facts);

  const trend = el('ol', 'round-trend');
  for (const report of stats.round_reports) {
    const item = el('li', 'round-mean', formatScore(report.mean_score));
    item.dataset.round = String(report.round);
    trend.appendChild(item);
  }
  panel.appendChild(trend);

  const histogram = el('div', 'histogram');
  for (const [bucket, count] of Object.entries(stats.score_histogram)) {
    const bar = el('div', 'histogram-bar', String(count));
    bar.dataset.bucket = bucket;
    histogram.appendChild(bar);
  }
  panel.appendChild(histogram);

  const experts = el('ul', 'expert-counts');
  for (const [expert, count] of Object.entries(stats.refinements_per_expert)) {
    const item = el('li', 'expert-count', `${expert}: ${count}`);
    item.dataset.expert = expert;
    experts.appendChild(item);
  }
  panel.appendChild(experts);
  return panel;
}
