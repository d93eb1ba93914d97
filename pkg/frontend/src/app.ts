import { ApiClient, ApiError } from './api.js';
import { DraftStore } from './drafts.js';
import type { QueueEntry, QueueFilters, RefineResult } from './types.js';
import { canSubmit } from './viewmodel.js';
import { renderDiagnostics, renderQueueList, renderRefineResult, renderStats } from './views.js';

export interface AppOptions {
  api: ApiClient;
  drafts: DraftStore;
  expertId: string;
  statsPollMs?: number;
}

/** Review console controller: queue pane, editor pane, stats pane. */
export class App {
  readonly root: HTMLElement;
  private readonly api: ApiClient;
  private readonly drafts: DraftStore;
  private readonly expertId: string;

  private queuePane: HTMLElement;
  private editorPane: HTMLElement;
  private statsPane: HTMLElement;
  private banner: HTMLElement;

  private entries: QueueEntry[] = [];
  private selected: QueueEntry | null = null;
  private filters: QueueFilters = {};

  constructor(root: HTMLElement, options: AppOptions) {
    this.root = root;
    this.api = options.api;
    this.drafts = options.drafts;
    this.expertId = options.expertId;

    this.banner = document.createElement('div');
    this.banner.className = 'banner';
    this.queuePane = document.createElement('div');
    this.queuePane.className = 'queue-pane';
    this.editorPane = document.createElement('div');
    this.editorPane.className = 'editor-pane';
    this.statsPane = document.createElement('div');
    this.statsPane.className = 'stats-pane';
    root.append(this.banner, this.queuePane, this.editorPane, this.statsPane);

    if (options.statsPollMs) {
      setInterval(() => void this.refreshStats(), options.statsPollMs);
    }
  }

  private setBanner(message: string, kind: 'error' | 'info' | '' = '') {
    this.banner.textContent = message;
    this.banner.className = kind ? `banner ${kind}` : 'banner';
  }

  async loadQueue(filters: QueueFilters = this.filters): Promise<void> {
    this.filters = filters;
    try {
      const page = await this.api.getQueue(filters);
      this.entries = page.entries;
      this.setBanner('');
    } catch {
      // keep the last rendered list; the expert loses nothing
      this.setBanner('Service unreachable — retrying keeps your place.', 'error');
      return;
    }
    this.queuePane.replaceChildren(
      renderQueueList(this.entries, this.expertId, (entry) => void this.openEntry(entry)),
    );
  }

  async openEntry(entry: QueueEntry): Promise<void> {
    try {
      entry = await this.api.claim(entry.candidate_id, this.expertId);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        await this.loadQueue();
        this.setBanner('Entry was claimed by another expert.', 'error');
        return;
      }
      throw err;
    }
    this.selected = entry;
    this.renderEditor(entry);
  }

  private renderEditor(entry: QueueEntry): void {
    const pane = this.editorPane;
    pane.replaceChildren();
    pane.appendChild(renderDiagnostics(entry));

    const qa = document.createElement('p');
    qa.className = 'qa-context';
    qa.textContent = `${entry.question} — gold answer: ${entry.answer}`;
    pane.appendChild(qa);

    const textarea = document.createElement('textarea');
    textarea.className = 'draft-editor';
    textarea.value = this.drafts.load(entry.candidate_id) ?? entry.text;
    pane.appendChild(textarea);

    const submit = document.createElement('button');
    submit.className = 'submit-button';
    submit.textContent = 'Submit refinement';
    pane.appendChild(submit);

    const sync = () => {
      this.drafts.save(entry.candidate_id, textarea.value);
      submit.disabled = !canSubmit(entry, textarea.value, this.expertId);
    };
    textarea.addEventListener('input', sync);
    submit.disabled = !canSubmit(entry, textarea.value, this.expertId);

    submit.addEventListener('click', () => void this.submitDraft(entry, textarea.value));
  }

  async submitDraft(entry: QueueEntry, draft: string): Promise<void> {
    let result: RefineResult;
    try {
      result = await this.api.refine(entry.candidate_id, this.expertId, draft);
    } catch (err) {
      if (err instanceof ApiError && (err.status === 409 || err.status === 403)) {
        // lease lost mid-edit: reload the entry, keep the local draft
        await this.loadQueue();
        this.setBanner('Claim lost — entry reloaded, your draft is preserved.', 'error');
        return;
      }
      throw err;
    }
    this.drafts.clear(entry.candidate_id);
    this.entries = this.entries.filter((e) => e.candidate_id !== entry.candidate_id);
    this.selected = null;
    this.queuePane.replaceChildren(
      renderQueueList(this.entries, this.expertId, (e) => void this.openEntry(e)),
    );
    this.editorPane.replaceChildren(renderRefineResult(result));
  }

  async refreshStats(): Promise<void> {
    try {
      const stats = await this.api.getStats();
      this.statsPane.replaceChildren(renderStats(stats));
    } catch {
      // transient; the next poll retries
    }
  }

  get selectedEntry(): QueueEntry | null {
    return this.selected;
  }
}
