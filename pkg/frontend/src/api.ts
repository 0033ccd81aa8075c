/**
 * Typed client over the /api/v1 surface. Every number or string the UI
 * displays comes out of these response shapes; the UI never computes scores
 * or node content on its own.
 */

export interface SessionCounts {
  total: number;
  answered: number;
  skipped: number;
  pending: number;
}

export interface SessionItem {
  id: string;
  node_id: string;
  question: string;
  layer: string;
  status: "pending" | "answered" | "skipped";
}

export interface SessionReport {
  session_id: string;
  user_id: string;
  items: SessionItem[];
  counts: SessionCounts;
  feedback_stats: { n: number; total_words: number; mean_words: number; total_t_units: number };
  version_pre: number;
  version_post: number | null;
}

export interface NextItem {
  id: string;
  node_id: string;
  question: string;
  layer: string;
}

export interface NextResponse {
  item: NextItem | null;
  complete: boolean;
  counts: SessionCounts;
}

export interface AnswerResult {
  item_id: string;
  node_id: string;
  status: string;
  content_before?: string;
  content_after?: string;
  revision_count?: number;
  word_count?: number;
  t_unit_count?: number;
  session: SessionCounts;
  complete: boolean;
}

export interface GraphNode {
  id: string;
  layer: string;
  title?: string;
  content?: string;
  revision_count?: number;
  source_instances?: string[];
  source_nodes?: string[];
  dimension_id?: string;
  dimension_title?: string;
  what?: string;
  when?: string;
  where?: string;
  who?: string;
  why?: string;
  how?: string;
  date?: string;
}

export interface GraphExport {
  user_id: string;
  version: number;
  generated_at: string;
  nodes: GraphNode[];
}

export interface TraceInstance {
  id: string;
  what: string;
  when: string;
  where: string;
  who: string;
  why: string;
  how: string;
  date: string;
  journal_entry_id: string;
}

export interface ScoreBlock {
  precision: number | null;
  recall: number | null;
  f1: number | null;
  sd: number | null;
  n: number;
  tp: number;
  fp: number;
  fn: number;
}

export interface LayerSemanticsBlock {
  layer: string;
  coherence: number | null;
  similarity: number | null;
  silhouette: number | null;
  topic_count: number | null;
  defined: boolean;
}

export interface EvalReport {
  condition: string;
  overall: ScoreBlock;
  by_layer: Record<string, ScoreBlock>;
  semantics?: LayerSemanticsBlock[];
  jaccard_by_layer?: Record<string, number>;
  likert?: unknown;
  t_tests?: Record<string, unknown>;
  unanswered?: number;
  unevaluated?: number;
}

export class ApiError extends Error {
  constructor(
    public code: number,
    message: string,
    public detail: string,
  ) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private base: string = "/api/v1",
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const response = await this.fetchFn(`${this.base}${path}`, init);
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(
        payload.code ?? response.status,
        payload.message ?? "request failed",
        payload.detail ?? "",
      );
    }
    return payload as T;
  }

  session(user: string): Promise<SessionReport> {
    return this.request("GET", `/users/${user}/hitl/session`);
  }

  next(user: string): Promise<NextResponse> {
    return this.request("GET", `/users/${user}/hitl/next`);
  }

  answer(user: string, itemId: string, answer: string): Promise<AnswerResult> {
    return this.request("POST", `/users/${user}/hitl/items/${itemId}/answer`, { answer });
  }

  skip(user: string, itemId: string): Promise<AnswerResult> {
    return this.request("POST", `/users/${user}/hitl/items/${itemId}/answer`, { skip: true });
  }

  graph(user: string, layer?: string): Promise<GraphExport | GraphNode[]> {
    const suffix = layer ? `?layer=${encodeURIComponent(layer)}` : "";
    return this.request("GET", `/users/${user}/graph${suffix}`);
  }

  layerNodes(user: string, layer: string): Promise<GraphNode[]> {
    return this.graph(user, layer) as Promise<GraphNode[]>;
  }

  trace(user: string, nodeId: string): Promise<{ node_id: string; instances: TraceInstance[] }> {
    return this.request("GET", `/users/${user}/nodes/${nodeId}/trace`);
  }

  report(user: string, condition: "pre" | "post"): Promise<EvalReport> {
    return this.request("GET", `/users/${user}/eval/report?condition=${condition}`);
  }

  likert(user: string, nodeId: string, phase: string, rating: number): Promise<unknown> {
    return this.request("POST", `/users/${user}/likert`, {
      node_id: nodeId,
      phase,
      rating,
    });
  }
}
