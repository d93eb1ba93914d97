import { ApiClient } from './api.js';
import { App } from './app.js';
import { DraftStore } from './drafts.js';

function expertIdFromSession(): string {
  let id = window.sessionStorage.getItem('cotforge.expert_id');
  while (!id) {
    id = window.prompt('Enter your expert id') ?? '';
  }
  window.sessionStorage.setItem('cotforge.expert_id', id);
  return id;
}

const root = document.getElementById('app');
if (root) {
  const app = new App(root, {
    api: new ApiClient(''),
    drafts: new DraftStore(),
    expertId: expertIdFromSession(),
    statsPollMs: 5000,
  });
  void app.loadQueue();
  void app.refreshStats();
}
