const PREFIX = 'cotforge.draft.';

/** Draft persistence keyed by candidate_id, so expert edits survive reloads. */
export class DraftStore {
  constructor(private readonly storage: Storage = window.localStorage) {}

  load(candidateId: string): string | null {
    return this.storage.getItem(PREFIX + candidateId);
  }

  save(candidateId: string, draft: string): void {
    this.storage.setItem(PREFIX + candidateId, draft);
  }

  clear(candidateId: string): void {
    this.storage.removeItem(PREFIX + candidateId);
  }
}
