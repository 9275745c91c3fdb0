import {
  ApiClient,
  ApiError,
  RecomputePending,
  pollWhileRecomputing,
  type PollOptions,
} from "./api.js";
import type {
  DiffResponse,
  GeojsonResponse,
  MetricLayer,
  Mutation,
  MutationAction,
} from "./types.js";

export interface TreeNode {
  id: string;
  name: string;
  parentId: string | null;
  mutation: Mutation | null;
}

export interface DraftValidation {
  ok: boolean;
  reason?: string;
}

export interface AppState {
  activeScenarioId: string | null;
  comparisonScenarioId: string | null;
  layer: MetricLayer;
  selection: number[];
  draft: Mutation | null;
  offline: boolean;
  recomputing: boolean;
  geojson: GeojsonResponse | null;
  diff: DiffResponse | null;
  tree: TreeNode[];
}

export type Listener = (state: AppState) => void;

/** All client state and transitions. The store renders nothing and computes
 * no metrics: it shuttles served snapshots and enforces the scenario tree
 * (undo switches the active id; the server is never rolled back). */
export class AppStore {
  state: AppState = {
    activeScenarioId: null,
    comparisonScenarioId: null,
    layer: "S",
    selection: [],
    draft: null,
    offline: false,
    recomputing: false,
    geojson: null,
    diff: null,
    tree: [],
  };

  private listeners: Listener[] = [];
  fetches = 0; // observable for tests: how many snapshot fetches happened

  constructor(
    private api: ApiClient,
    private pollOpts: PollOptions = {},
  ) {}

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  private emit(): void {
    for (const l of this.listeners) l(this.state);
  }

  private patch(partial: Partial<AppState>): void {
    this.state = { ...this.state, ...partial };
    this.emit();
  }

  node(id: string): TreeNode | undefined {
    return this.state.tree.find((n) => n.id === id);
  }

  /** Create the root scenario (no mutations) and load its snapshot. */
  async init(name = "base"): Promise<void> {
    try {
      const sc = await this.api.createScenario(name);
      this.patch({
        tree: [{ id: sc.id, name: sc.name, parentId: null, mutation: null }],
        offline: false,
      });
      await this.activate(sc.id);
    } catch (err) {
      this.markConnectivity(err);
      throw err;
    }
  }

  /** Switch the active scenario and (re)load its served snapshot. */
  async activate(id: string): Promise<void> {
    this.patch({ activeScenarioId: id, recomputing: true, diff: null });
    try {
      const geojson = await pollWhileRecomputing(
        () => this.api.getGeojson(id),
        this.pollOpts,
      );
      this.fetches += 1;
      this.patch({ geojson, recomputing: false, offline: false });
    } catch (err) {
      this.patch({ recomputing: false });
      this.markConnectivity(err);
      throw err;
    }
  }

  /** Styling-only: switching the layer never refetches a current snapshot. */
  setLayer(layer: MetricLayer): void {
    this.patch({ layer });
  }

  toggleSelect(cityId: number): void {
    const sel = this.state.selection.includes(cityId)
      ? this.state.selection.filter((c) => c !== cityId)
      : [...this.state.selection, cityId];
    this.patch({ selection: sel });
  }

  clearSelection(): void {
    this.patch({ selection: [], draft: null });
  }

  /** Validity rules for composing a mutation from the current selection. */
  validateDraft(action: MutationAction, k?: number): DraftValidation {
    const n = this.state.selection.length;
    switch (action) {
      case "merge":
        return n >= 2
          ? { ok: true }
          : { ok: false, reason: "merge needs at least 2 selected cities" };
      case "fragment":
        if (n !== 1) return { ok: false, reason: "fragment needs exactly 1 selected city" };
        if (!k || !Number.isInteger(k) || k < 2)
          return { ok: false, reason: "fragment needs an integer K >= 2" };
        return { ok: true };
      case "add_edge":
      case "remove_edge":
        return n === 2
          ? { ok: true }
          : { ok: false, reason: `${action} needs exactly 2 selected cities` };
    }
  }

  composeMutation(action: MutationAction, k?: number): DraftValidation {
    const v = this.validateDraft(action, k);
    if (!v.ok) {
      this.patch({ draft: null });
      return v;
    }
    const sel = this.state.selection;
    let draft: Mutation;
    switch (action) {
      case "merge":
        draft = { op: "merge", cities: [...sel] };
        break;
      case "fragment":
        draft = { op: "fragment", city: sel[0]!, k: k! };
        break;
      case "add_edge":
        draft = { op: "add_edge", a: sel[0]!, b: sel[1]! };
        break;
      case "remove_edge":
        draft = { op: "remove_edge", a: sel[0]!, b: sel[1]! };
        break;
    }
    this.patch({ draft });
    return { ok: true };
  }

  /** Apply the draft as a child scenario of the active one.
   *
   * The parent's served log plus the draft is replayed into a fresh
   * scenario, so history stays a tree and undo is a pure id switch. The
   * panel shows "recomputing" until the stale flag clears, then the diff
   * against the parent.
   */
  async submitDraft(): Promise<void> {
    const draft = this.state.draft;
    const parentId = this.state.activeScenarioId;
    if (!draft || !parentId) throw new Error("no draft to submit");
    this.patch({ recomputing: true });
    try {
      const parentLog = await this.api.getLog(parentId);
      const parent = this.node(parentId);
      const sc = await this.api.createScenario(
        `${parent?.name ?? parentId}+${draft.op}`,
        [...parentLog.mutations, draft],
      );
      const tree: TreeNode[] = [
        ...this.state.tree,
        { id: sc.id, name: sc.name, parentId, mutation: draft },
      ];
      this.patch({ tree, draft: null, selection: [] });
      await this.activate(sc.id);
      const diff = await pollWhileRecomputing(
        () => this.api.getDiff(sc.id, parentId),
        this.pollOpts,
      );
      this.patch({ diff, recomputing: false });
    } catch (err) {
      this.patch({ recomputing: false });
      this.markConnectivity(err);
      throw err;
    }
  }

  /** Revert to the parent scenario. Server state is untouched. */
  async undo(): Promise<void> {
    const active = this.state.activeScenarioId;
    if (!active) return;
    const parent = this.node(active)?.parentId;
    if (!parent) return;
    await this.activate(parent);
    const diff = await pollWhileRecomputing(
      () => this.api.getDiff(parent, parent),
      this.pollOpts,
    );
    this.patch({ diff });
  }

  /** Load the delta view against another scenario (choropleth source). */
  async compare(otherId: string): Promise<void> {
    const active = this.state.activeScenarioId;
    if (!active) throw new Error("no active scenario");
    this.patch({ comparisonScenarioId: otherId });
    const diff = await pollWhileRecomputing(
      () => this.api.getDiff(active, otherId),
      this.pollOpts,
    );
    this.patch({ diff });
  }

  /** Zone rows whose served numbers changed; feeds the diff panel verbatim. */
  affectedZones(): DiffResponse["per_zone"] {
    const diff = this.state.diff;
    if (!diff) return [];
    return diff.per_zone.filter((row) => {
      if (row.before === null || row.after === null) return true;
      return (
        row.delta !== null &&
        Object.values(row.delta).some((v) => v !== null && v !== 0)
      );
    });
  }

  private markConnectivity(err: unknown): void {
    // network failure -> offline banner; HTTP errors mean the service is up
    if (!(err instanceof ApiError) || err instanceof RecomputePending) {
      this.patch({ offline: !(err instanceof RecomputePending) });
    }
  }
}
