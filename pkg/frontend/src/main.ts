// Application wiring: one mutable state cell, re-render on every change.

import { CurationApi } from "./api.js";
import { render } from "./render.js";
import {
  CaseDraft,
  QueueState,
  initialState,
  loadDraft,
  refreshQueue,
  saveDraft,
  submitReview,
} from "./state.js";

export interface App {
  state: QueueState;
  refresh(): Promise<void>;
  submit(): Promise<void>;
}

export function createApp(
  root: HTMLElement,
  api: CurationApi,
  storage: Storage = sessionStorage,
): App {
  let state = initialState();
  let classes: string[] = [];

  const draftFor = (id: string | null): CaseDraft =>
    id ? loadDraft(storage, id) : { verdict: null, hint: { error_summary: "", hint: "" } };

  const repaint = (): void => {
    render(root, state, draftFor(state.currentId), classes, handlers);
  };

  const app: App = {
    get state() {
      return state;
    },
    set state(next: QueueState) {
      state = next;
    },
    async refresh() {
      state = await refreshQueue(api, state);
      repaint();
    },
    async submit() {
      if (state.submitting) return; // rapid double clicks collapse here
      state = { ...state, submitting: true };
      const result = await submitReview(
        api,
        { ...state, submitting: false },
        storage,
        draftFor(state.currentId),
      );
      state = result.state;
      repaint();
    },
  };

  const handlers = {
    onSelectCase(id: string) {
      state = { ...state, currentId: id, conflict: null };
      repaint();
    },
    onClassFilter(value: string) {
      state = { ...state, classFilter: value };
      void app.refresh();
    },
    onVerdictFilter(value: string) {
      state = { ...state, verdictFilter: value };
      void app.refresh();
    },
    onDraftChange(draft: CaseDraft) {
      if (state.currentId) saveDraft(storage, state.currentId, draft);
      repaint();
    },
    onSubmit() {
      void app.submit();
    },
    onRetry() {
      void app.refresh();
    },
  };

  void api
    .listClasses()
    .then((result) => {
      classes = result.present;
      repaint();
    })
    .catch(() => repaint());
  repaint();
  return app;
}

declare global {
  interface Window {
    triageApp?: App;
  }
}

export function bootstrap(): void {
  const root = document.getElementById("app");
  if (!root) return;
  const api = new CurationApi("");
  window.triageApp = createApp(root, api);
  void window.triageApp.refresh();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  bootstrap();
}
