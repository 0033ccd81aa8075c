/**
 * Review-session state: mirrors the server after every round-trip and never
 * holds locally fabricated node content. Drafts persist locally so a reload
 * or failed submit loses nothing.
 */

import { ApiClient, NextItem, SessionCounts } from "./api.js";

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export interface RefinementDiff {
  itemId: string;
  nodeId: string;
  before: string;
  after: string;
  wordCount: number;
  tUnitCount: number;
}

export interface QueueState {
  user: string;
  loading: boolean;
  current: NextItem | null;
  counts: SessionCounts | null;
  complete: boolean;
  lastDiff: RefinementDiff | null;
  error: string | null;
  noSession: boolean;
}

const memoryStorage = (): StorageLike => {
  const map = new Map<string, string>();
  return {
    getItem: (k) => map.get(k) ?? null,
    setItem: (k, v) => void map.set(k, v),
    removeItem: (k) => void map.delete(k),
  };
};

export class SessionStore {
  state: QueueState;
  private listeners: Array<(state: QueueState) => void> = [];

  constructor(
    private api: ApiClient,
    user: string,
    private storage: StorageLike = typeof localStorage !== "undefined"
      ? localStorage
      : memoryStorage(),
  ) {
    this.state = {
      user,
      loading: false,
      current: null,
      counts: null,
      complete: false,
      lastDiff: null,
      error: null,
      noSession: false,
    };
  }

  subscribe(listener: (state: QueueState) => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private set(patch: Partial<QueueState>): void {
    this.state = { ...this.state, ...patch };
    this.emit();
  }

  private draftKey(itemId: string): string {
    return `layermind-draft-${this.state.user}-${itemId}`;
  }

  draft(): string {
    if (!this.state.current) return "";
    return this.storage.getItem(this.draftKey(this.state.current.id)) ?? "";
  }

  saveDraft(text: string): void {
    if (!this.state.current) return;
    this.storage.setItem(this.draftKey(this.state.current.id), text);
  }

  private clearDraft(itemId: string): void {
    this.storage.removeItem(this.draftKey(itemId));
  }

  async load(): Promise<void> {
    this.set({ loading: true, error: null });
    try {
      const next = await this.api.next(this.state.user);
      this.set({
        loading: false,
        current: next.item,
        counts: next.counts,
        complete: next.complete,
        noSession: false,
      });
    } catch (error) {
      const missing = (error as { code?: number }).code === 404;
      this.set({
        loading: false,
        noSession: missing,
        error: missing ? null : String((error as Error).message ?? error),
      });
    }
  }

  /** Submit the answer; on failure the draft stays put for retry. */
  async submit(answer: string): Promise<void> {
    const item = this.state.current;
    if (!item || !answer.trim()) return;
    this.saveDraft(answer);
    this.set({ loading: true, error: null });
    try {
      const result = await this.api.answer(this.state.user, item.id, answer);
      this.clearDraft(item.id);
      this.set({
        loading: false,
        counts: result.session,
        complete: result.complete,
        lastDiff: {
          itemId: item.id,
          nodeId: result.node_id,
          before: result.content_before ?? "",
          after: result.content_after ?? "",
          wordCount: result.word_count ?? 0,
          tUnitCount: result.t_unit_count ?? 0,
        },
      });
      await this.load();
    } catch (error) {
      this.set({ loading: false, error: String((error as Error).message ?? error) });
    }
  }

  async skip(): Promise<void> {
    const item = this.state.current;
    if (!item) return;
    this.set({ loading: true, error: null });
    try {
      const result = await this.api.skip(this.state.user, item.id);
      this.clearDraft(item.id);
      this.set({ loading: false, counts: result.session, complete: result.complete });
      await this.load();
    } catch (error) {
      this.set({ loading: false, error: String((error as Error).message ?? error) });
    }
  }
}

export function countWords(text: string): number {
  return text.split(/\s+/).filter((w) => w.length > 0).length;
}
