import type { FetchLike } from '../src/api.js';
import type { QualityScore, QueueEntry, RefineResult, Stats } from '../src/types.js';

export function makeScore(aggregate: number, overrides: Partial<QualityScore> = {}): QualityScore {
  return {
    ppl: 0.1,
    bac: 0,
    tem: 0,
    spa: 0,
    rel: 0,
    sum: 0,
    aggregate,
    raw_spa: -0.5,
    raw_tem: 0,
    mention_report: { pos_objects: [], neg_objects: [], pos_actions: [], neg_actions: [] },
    diagnostics: [],
    ...overrides,
  };
}

export function makeEntry(id: string, aggregate: number, overrides: Partial<QueueEntry> = {}): QueueEntry {
  return {
    candidate_id: id,
    video_id: 'vid0001',
    qa_id: 'q1',
    question: 'What does the girl do?',
    answer: 'B',
    variant: 'video_cot',
    text: 'A unicorn wanders through. The answer might be B.',
    grounding: { objects: ['girl', 'road'], actions: ['run'] },
    score: makeScore(aggregate),
    enqueued_at: 1000,
    claim: { claimed: false },
    ...overrides,
  };
}

export const EMPTY_STATS: Stats = {
  queue_depth: 0,
  round_reports: [],
  acceptance_rate: 0,
  score_histogram: {},
  refinements_per_expert: {},
  refinement_count: 0,
};

/**
 * In-memory stand-in for the review service, faithful to its contracts:
 * worst-first queue, claim leases, refine preconditions, JSON errors.
 */
export class MockService {
  entries: QueueEntry[];
  stats: Stats;
  refineResult: RefineResult | null = null;
  failNextRequests = 0; // simulate unreachable service
  readonly calls: { method: string; path: string; body?: unknown }[] = [];

  constructor(entries: QueueEntry[], stats: Stats = EMPTY_STATS) {
    this.entries = entries;
    this.stats = stats;
  }

  get fetch(): FetchLike {
    return (input, init) => this.handle(input, init);
  }

  private respond(status: number, body: unknown): Promise<Response> {
    return Promise.resolve(
      new Response(JSON.stringify(body), {
        status,
        headers: { 'Content-Type': 'application/json' },
      }),
    );
  }

  private async handle(input: string, init?: RequestInit): Promise<Response> {
    const url = new URL(input, 'http://mock');
    const method = init?.method ?? 'GET';
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    this.calls.push({ method, path: url.pathname, body });

    if (this.failNextRequests > 0) {
      this.failNextRequests -= 1;
      throw new TypeError('network error');
    }

    if (method === 'GET' && url.pathname === '/queue') {
      const sorted = [...this.entries].sort(
        (a, b) =>
          (a.score?.aggregate ?? 0) - (b.score?.aggregate ?? 0) ||
          a.candidate_id.localeCompare(b.candidate_id),
      );
      return this.respond(200, {
        entries: sorted,
        page: 1,
        page_size: 50,
        total: sorted.length,
      });
    }

    if (method === 'GET' && url.pathname === '/stats') {
      return this.respond(200, this.stats);
    }

    const claimMatch = url.pathname.match(/^\/queue\/([^/]+)\/claim$/);
    if (method === 'POST' && claimMatch) {
      const entry = this.entries.find((e) => e.candidate_id === claimMatch[1]);
      if (!entry) return this.respond(404, { error: 'unknown candidate' });
      if (entry.claim.claimed && entry.claim.expert_id !== body.expert_id) {
        return this.respond(409, { error: `claimed by ${entry.claim.expert_id}` });
      }
      entry.claim = { claimed: true, expert_id: body.expert_id, lease_expiry: 9e9 };
      return this.respond(200, entry);
    }

    const refineMatch = url.pathname.match(/^\/queue\/([^/]+)\/refine$/);
    if (method === 'POST' && refineMatch) {
      const entry = this.entries.find((e) => e.candidate_id === refineMatch[1]);
      if (!entry) return this.respond(404, { error: 'unknown candidate' });
      if (!entry.claim.claimed || entry.claim.expert_id !== body.expert_id) {
        return this.respond(403, { error: 'claim required' });
      }
      if (!body.refined_text || body.refined_text === entry.text) {
        return this.respond(400, { error: 'refined_text must differ' });
      }
      this.entries = this.entries.filter((e) => e !== entry);
      const result: RefineResult = this.refineResult ?? {
        event: { candidate_id: entry.candidate_id },
        rescored: makeScore(0.97, { bac: 1, tem: 1, spa: 1, rel: 1, sum: 1, ppl: 0.7 }),
        previous_aggregate: entry.score?.aggregate ?? 0,
        delta: 0.97 - (entry.score?.aggregate ?? 0),
        below_threshold: false,
      };
      return this.respond(200, result);
    }

    return this.respond(404, { error: `no route for ${method} ${url.pathname}` });
  }
}
