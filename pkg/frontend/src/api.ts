// Typed client for the curation service. Every mutation the UI ever makes
// goes through the methods below; contract tests assert nothing else is hit.

export type Verdict = "undecided" | "model_error" | "data_error";

export interface NumericAnswer {
  status: string;
  value?: number;
}

export interface MismatchCase {
  instance_id: string;
  class: string;
  question: string;
  model_completion: string;
  model_answer: NumericAnswer;
  reference_answer: number;
  verdict: Verdict;
  note: string;
  linked_hint_ids: string[];
}

export interface MismatchPage {
  cases: MismatchCase[];
  page: number;
  page_count: number;
  total: number;
}

export interface HintEntry {
  id: string;
  error: string;
  hint: string;
  author: string;
  created_at: string;
}

export interface HintCreated {
  id: string;
  status: "created" | "duplicate";
  entry: Omit<HintEntry, "id">;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class CurationApi {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  private url(path: string, params?: Record<string, string>): string {
    const query = params
      ? "?" +
        Object.entries(params)
          .filter(([, v]) => v !== "")
          .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(v)}`)
          .join("&")
      : "";
    return `${this.baseUrl}${path}${query}`;
  }

  listMismatches(opts: {
    classFilter?: string;
    verdict?: string;
    page?: number;
    pageSize?: number;
  }): Promise<MismatchPage> {
    const params: Record<string, string> = {};
    if (opts.classFilter) params["class"] = opts.classFilter;
    if (opts.verdict) params["verdict"] = opts.verdict;
    if (opts.page) params["page"] = String(opts.page);
    if (opts.pageSize) params["page_size"] = String(opts.pageSize);
    return this.fetchFn(this.url("/api/mismatches", params)).then((r) =>
      parseOrThrow<MismatchPage>(r),
    );
  }

  getMismatch(id: string): Promise<MismatchCase> {
    return this.fetchFn(this.url(`/api/mismatches/${encodeURIComponent(id)}`)).then((r) =>
      parseOrThrow<MismatchCase>(r),
    );
  }

  submitVerdict(id: string, verdict: Verdict, note = ""): Promise<MismatchCase> {
    return this.fetchFn(this.url(`/api/mismatches/${encodeURIComponent(id)}/verdict`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ verdict, note }),
    }).then((r) => parseOrThrow<MismatchCase>(r));
  }

  createHint(
    caseId: string,
    errorSummary: string,
    hint: string,
    author = "",
  ): Promise<HintCreated> {
    return this.fetchFn(this.url("/api/hints"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        case_id: caseId,
        error_summary: errorSummary,
        hint,
        author,
      }),
    }).then((r) => parseOrThrow<HintCreated>(r));
  }

  listHints(): Promise<{ classes: Record<string, HintEntry[]> }> {
    return this.fetchFn(this.url("/api/hints")).then((r) =>
      parseOrThrow<{ classes: Record<string, HintEntry[]> }>(r),
    );
  }

  listClasses(): Promise<{ taxonomy: string[]; present: string[] }> {
    return this.fetchFn(this.url("/api/classes")).then((r) =>
      parseOrThrow<{ taxonomy: string[]; present: string[] }>(r),
    );
  }
}
