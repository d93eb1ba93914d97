import type { QueueEntry, QueueFilters, QueuePage, RefineResult, Stats } from './types.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

/** Thin typed wrapper over the review-service JSON API. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, init);
    const body = await res.json().catch(() => ({}));
    if (!res.ok) {
      throw new ApiError(res.status, (body as { error?: string }).error ?? res.statusText);
    }
    return body as T;
  }

  getQueue(filters: QueueFilters = {}): Promise<QueuePage> {
    const params = new URLSearchParams();
    for (const [key, value] of Object.entries(filters)) {
      if (value !== undefined) params.set(key, String(value));
    }
    const query = params.toString();
    return this.request<QueuePage>(`/queue${query ? `?${query}` : ''}`);
  }

  getCandidate(candidateId: string): Promise<QueueEntry> {
    return this.request<QueueEntry>(`/candidates/${encodeURIComponent(candidateId)}`);
  }

  claim(candidateId: string, expertId: string, leaseSeconds = 600): Promise<QueueEntry> {
    return this.request<QueueEntry>(`/queue/${encodeURIComponent(candidateId)}/claim`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ expert_id: expertId, lease_seconds: leaseSeconds }),
    });
  }

  refine(candidateId: string, expertId: string, refinedText: string): Promise<RefineResult> {
    return this.request<RefineResult>(`/queue/${encodeURIComponent(candidateId)}/refine`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json', 'X-Expert-Id': expertId },
      body: JSON.stringify({ expert_id: expertId, refined_text: refinedText }),
    });
  }

  getStats(): Promise<Stats> {
    return this.request<Stats>('/stats');
  }
}
