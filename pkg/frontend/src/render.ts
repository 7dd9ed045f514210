// DOM rendering. Pure functions of (state, drafts); handlers are injected
// so tests can drive the app through real DOM events.

import { MismatchCase } from "./api.js";
import {
  CaseDraft,
  QueueState,
  canSubmitHint,
  currentCase,
  pinnedLines,
  segmentCompletion,
} from "./state.js";

export interface Handlers {
  onSelectCase(id: string): void;
  onClassFilter(value: string): void;
  onVerdictFilter(value: string): void;
  onDraftChange(draft: CaseDraft): void;
  onSubmit(): void;
  onRetry(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text) node.textContent = text;
  return node;
}

export function render(
  root: HTMLElement,
  state: QueueState,
  draft: CaseDraft,
  classes: string[],
  handlers: Handlers,
): void {
  root.textContent = "";
  if (state.banner) {
    const banner = el("div", { class: "banner", "data-testid": "banner" }, state.banner);
    const retry = el("button", { "data-testid": "retry" }, "Retry");
    retry.addEventListener("click", handlers.onRetry);
    banner.appendChild(retry);
    root.appendChild(banner);
  }
  root.appendChild(renderFilters(state, classes, handlers));
  const layout = el("div", { class: "layout" });
  layout.appendChild(renderQueue(state, handlers));
  layout.appendChild(renderDetail(state, draft, handlers));
  root.appendChild(layout);
}

function renderFilters(state: QueueState, classes: string[], handlers: Handlers): HTMLElement {
  const bar = el("div", { class: "filters" });
  const classSelect = el("select", { "data-testid": "class-filter" });
  classSelect.appendChild(el("option", { value: "" }, "all classes"));
  for (const name of classes) {
    const option = el("option", { value: name }, name);
    if (name === state.classFilter) option.setAttribute("selected", "selected");
    classSelect.appendChild(option);
  }
  classSelect.addEventListener("change", () => handlers.onClassFilter(classSelect.value));
  bar.appendChild(classSelect);

  const verdictSelect = el("select", { "data-testid": "verdict-filter" });
  for (const value of ["undecided", "", "model_error", "data_error"]) {
    const option = el("option", { value }, value === "" ? "all verdicts" : value);
    if (value === state.verdictFilter) option.setAttribute("selected", "selected");
    verdictSelect.appendChild(option);
  }
  verdictSelect.addEventListener("change", () => handlers.onVerdictFilter(verdictSelect.value));
  bar.appendChild(verdictSelect);
  bar.appendChild(
    el("span", { class: "count", "data-testid": "queue-count" }, `${state.total} cases`),
  );
  return bar;
}

function renderQueue(state: QueueState, handlers: Handlers): HTMLElement {
  const list = el("ul", { class: "queue", "data-testid": "queue" });
  if (state.cases.length === 0) {
    list.appendChild(el("li", { class: "empty" }, "No cases match the current filters."));
    return list;
  }
  for (const item of state.cases) {
    const row = el("li", {
      class: item.instance_id === state.currentId ? "case selected" : "case",
      "data-testid": `case-${item.instance_id}`,
    });
    row.appendChild(el("span", { class: "cls" }, item.class));
    row.appendChild(
      el(
        "span",
        { class: "answers" },
        `model ${formatAnswer(item)} vs reference ${item.reference_answer}`,
      ),
    );
    row.appendChild(el("span", { class: "verdict" }, item.verdict));
    row.addEventListener("click", () => handlers.onSelectCase(item.instance_id));
    list.appendChild(row);
  }
  return list;
}

function formatAnswer(item: MismatchCase): string {
  return item.model_answer.status === "optimal"
    ? String(item.model_answer.value)
    : item.model_answer.status;
}

function renderDetail(state: QueueState, draft: CaseDraft, handlers: Handlers): HTMLElement {
  const pane = el("div", { class: "detail" });
  const item = currentCase(state);
  if (!item) {
    pane.appendChild(el("p", { class: "empty" }, "Select a case to review."));
    return pane;
  }
  pane.appendChild(el("h2", {}, item.instance_id));
  if (state.conflict) {
    pane.appendChild(
      el("div", { class: "conflict", "data-testid": "conflict" }, state.conflict),
    );
  }
  pane.appendChild(el("h3", {}, "Question"));
  pane.appendChild(el("pre", { class: "question" }, item.question));

  pane.appendChild(el("h3", {}, "Decisive output"));
  const pinned = el("div", { class: "pinned", "data-testid": "pinned" });
  for (const line of pinnedLines(item.model_completion)) {
    pinned.appendChild(el("code", {}, line));
  }
  pane.appendChild(pinned);

  pane.appendChild(el("h3", {}, `Model completion (reference ${item.reference_answer})`));
  for (const segment of segmentCompletion(item.model_completion)) {
    if (segment.kind === "code") {
      pane.appendChild(el("pre", { class: "code" }, segment.content));
    } else {
      // prose and solver log collapsed by default; the pinned lines above
      // carry the verdict-relevant content
      const details = el("details", { class: "log" });
      details.appendChild(el("summary", {}, "log / reasoning"));
      details.appendChild(el("pre", {}, segment.content));
      pane.appendChild(details);
    }
  }
  pane.appendChild(renderReviewForm(item, draft, handlers));
  return pane;
}

function renderReviewForm(item: MismatchCase, draft: CaseDraft, handlers: Handlers): HTMLElement {
  const form = el("div", { class: "review" });
  const decided = item.verdict !== "undecided";
  form.appendChild(el("h3", {}, decided ? `Verdict: ${item.verdict}` : "Verdict"));
  if (!decided) {
    for (const verdict of ["model_error", "data_error"] as const) {
      const label = el("label", { class: "verdict-option" });
      const radio = el("input", {
        type: "radio",
        name: "verdict",
        value: verdict,
        "data-testid": `verdict-${verdict}`,
      }) as HTMLInputElement;
      radio.checked = draft.verdict === verdict;
      radio.addEventListener("change", () =>
        handlers.onDraftChange({ ...draft, verdict }),
      );
      label.appendChild(radio);
      label.appendChild(document.createTextNode(verdict));
      form.appendChild(label);
    }
  }

  const hintBox = el("fieldset", { class: "hint-box" });
  hintBox.appendChild(el("legend", {}, "Error / hint pair"));
  const hintEnabled = draft.verdict === "model_error" && !decided;
  const errorInput = el("textarea", {
    "data-testid": "error-summary",
    placeholder: "short error summary",
  }) as HTMLTextAreaElement;
  errorInput.value = draft.hint.error_summary;
  errorInput.addEventListener("input", () =>
    handlers.onDraftChange({
      ...draft,
      hint: { ...draft.hint, error_summary: errorInput.value },
    }),
  );
  const hintInput = el("textarea", {
    "data-testid": "hint-text",
    placeholder: "concrete hint that would have prevented the mistake",
  }) as HTMLTextAreaElement;
  hintInput.value = draft.hint.hint;
  hintInput.addEventListener("input", () =>
    handlers.onDraftChange({ ...draft, hint: { ...draft.hint, hint: hintInput.value } }),
  );
  if (!hintEnabled) {
    errorInput.setAttribute("disabled", "disabled");
    hintInput.setAttribute("disabled", "disabled");
  }
  hintBox.appendChild(errorInput);
  hintBox.appendChild(hintInput);
  form.appendChild(hintBox);

  const submit = el("button", { "data-testid": "submit" }, "Submit review") as HTMLButtonElement;
  submit.disabled = decided || !draft.verdict;
  submit.addEventListener("click", handlers.onSubmit);
  form.appendChild(submit);
  if (draft.verdict && draft.verdict !== "model_error" && draft.hint.hint) {
    form.appendChild(
      el("p", { class: "note" }, "Hints attach only to model_error verdicts."),
    );
  }
  if (!canSubmitHint(draft) && hintEnabled && (draft.hint.hint || draft.hint.error_summary)) {
    form.appendChild(el("p", { class: "note" }, "Both hint fields are required."));
  }
  return form;
}
