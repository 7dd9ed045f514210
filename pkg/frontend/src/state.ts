// Queue state and the review workflow, kept free of DOM concerns so the
// rules (hint drafts require a model_error verdict; drafts survive
// navigation; double submits collapse into one state change) are testable
// on their own.

import { ApiError, CurationApi, MismatchCase, Verdict } from "./api.js";

export interface HintDraft {
  error_summary: string;
  hint: string;
}

export interface CaseDraft {
  verdict: Verdict | null;
  hint: HintDraft;
}

export interface QueueState {
  classFilter: string;
  verdictFilter: string;
  cases: MismatchCase[];
  total: number;
  currentId: string | null;
  banner: string | null; // service trouble, shown with a retry control
  conflict: string | null; // existing verdict surfaced on double-submit
  submitting: boolean;
}

const EMPTY_DRAFT: CaseDraft = { verdict: null, hint: { error_summary: "", hint: "" } };

export function initialState(): QueueState {
  return {
    classFilter: "",
    verdictFilter: "undecided",
    cases: [],
    total: 0,
    currentId: null,
    banner: null,
    conflict: null,
    submitting: false,
  };
}

// Drafts are keyed per case in sessionStorage so unsaved work survives
// navigating around the queue within a session.
const DRAFT_PREFIX = "triage-draft:";

export function loadDraft(storage: Storage, caseId: string): CaseDraft {
  const raw = storage.getItem(DRAFT_PREFIX + caseId);
  if (!raw) return structuredClone(EMPTY_DRAFT);
  try {
    return JSON.parse(raw) as CaseDraft;
  } catch {
    return structuredClone(EMPTY_DRAFT);
  }
}

export function saveDraft(storage: Storage, caseId: string, draft: CaseDraft): void {
  storage.setItem(DRAFT_PREFIX + caseId, JSON.stringify(draft));
}

export function clearDraft(storage: Storage, caseId: string): void {
  storage.removeItem(DRAFT_PREFIX + caseId);
}

export function canSubmitHint(draft: CaseDraft): boolean {
  return (
    draft.verdict === "model_error" &&
    draft.hint.error_summary.trim().length > 0 &&
    draft.hint.hint.trim().length > 0
  );
}

export function currentCase(state: QueueState): MismatchCase | null {
  return state.cases.find((c) => c.instance_id === state.currentId) ?? null;
}

export async function refreshQueue(api: CurationApi, state: QueueState): Promise<QueueState> {
  try {
    const page = await api.listMismatches({
      classFilter: state.classFilter || undefined,
      verdict: state.verdictFilter || undefined,
      pageSize: 100,
    });
    const cases = page.cases;
    const currentStillVisible = cases.some((c) => c.instance_id === state.currentId);
    return {
      ...state,
      cases,
      total: page.total,
      banner: null,
      currentId: currentStillVisible ? state.currentId : (cases[0]?.instance_id ?? null),
    };
  } catch (err) {
    return { ...state, banner: describeFailure(err) };
  }
}

export interface SubmitResult {
  state: QueueState;
  hintStatus: "created" | "duplicate" | null;
}

// Verdict first, then the optional hint; a 409 on the verdict surfaces the
// existing decision instead of erroring, so replayed submits are harmless.
export async function submitReview(
  api: CurationApi,
  state: QueueState,
  storage: Storage,
  draft: CaseDraft,
): Promise<SubmitResult> {
  const reviewed = currentCase(state);
  if (!reviewed || !draft.verdict || state.submitting) {
    return { state, hintStatus: null };
  }
  let working: QueueState = { ...state, submitting: true, conflict: null };
  let hintStatus: SubmitResult["hintStatus"] = null;
  try {
    await api.submitVerdict(reviewed.instance_id, draft.verdict);
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      working = { ...working, conflict: err.detail };
      const existing = await api.getMismatch(reviewed.instance_id);
      if (existing.verdict !== draft.verdict) {
        // a different decision already exists: stop, surface it, keep draft
        return { state: { ...working, submitting: false }, hintStatus: null };
      }
    } else {
      return {
        state: { ...working, submitting: false, banner: describeFailure(err) },
        hintStatus: null,
      };
    }
  }
  if (canSubmitHint(draft)) {
    try {
      const created = await api.createHint(
        reviewed.instance_id,
        draft.hint.error_summary.trim(),
        draft.hint.hint.trim(),
      );
      hintStatus = created.status;
    } catch (err) {
      return {
        state: { ...working, submitting: false, banner: describeFailure(err) },
        hintStatus: null,
      };
    }
  }
  clearDraft(storage, reviewed.instance_id);
  const refreshed = await refreshQueue(api, { ...working, submitting: false });
  return { state: refreshed, hintStatus };
}

function describeFailure(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  return "curation service unreachable";
}

// The decisive solver lines experts scan for first.
export function pinnedLines(completion: string): string[] {
  return completion
    .split("\n")
    .filter(
      (line) =>
        line.includes("__OPTIMIND_OBJ__") ||
        line.includes("__OPTIMIND_STATUS__") ||
        line.includes("Model is infeasible") ||
        line.includes("Model is unbounded") ||
        line.includes("Optimal solution found"),
    );
}

export interface CompletionSegment {
  kind: "text" | "code";
  content: string;
}

// Split a completion into prose and ```python code blocks for rendering.
export function segmentCompletion(completion: string): CompletionSegment[] {
  const segments: CompletionSegment[] = [];
  const fence = /```python[^\S\n]*\n([\s\S]*?)```/g;
  let cursor = 0;
  for (const match of completion.matchAll(fence)) {
    const start = match.index ?? 0;
    if (start > cursor) {
      segments.push({ kind: "text", content: completion.slice(cursor, start) });
    }
    segments.push({ kind: "code", content: match[1] });
    cursor = start + match[0].length;
  }
  if (cursor < completion.length) {
    segments.push({ kind: "text", content: completion.slice(cursor) });
  }
  return segments;
}
