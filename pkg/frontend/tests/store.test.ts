import { describe, expect, it } from "vitest";

import { ApiClient, RecomputePending } from "../src/api.js";
import { AppStore } from "../src/store.js";
import type {
  DiffResponse,
  GeojsonResponse,
  Mutation,
  ScenarioLog,
  ScenarioSummary,
} from "../src/types.js";

function summary(id: string, name: string): ScenarioSummary {
  return { id, name, version: 0, stale: false, n_mutations: 0, n_cities: 2, n_edges: 1 };
}

function geojson(id: string): GeojsonResponse {
  return {
    type: "FeatureCollection",
    features: [
      {
        type: "Feature",
        geometry: { type: "Point", coordinates: [0, 0] },
        properties: {
          city_id: 1, name: "a", population: 1e5,
          D: 1, B: 0, S: 0, A: 0, A_star: null, vulnerable: false,
        },
      },
      {
        type: "Feature",
        geometry: { type: "Point", coordinates: [1, 1] },
        properties: {
          city_id: 2, name: "b", population: 2e5,
          D: 1, B: 0, S: 0, A: 0, A_star: null, vulnerable: false,
        },
      },
    ],
    properties: { scenario_id: id, version: 0 },
  };
}

function emptyDiff(id: string, against: string): DiffResponse {
  return { against, scenario: id, per_city: [], per_zone: [] };
}

/** In-memory stand-in for the service with optional 409s before success. */
class FakeApi extends ApiClient {
  created: Array<{ name: string; mutations?: Mutation[] }> = [];
  geojsonCalls = 0;
  pending409 = 0;
  nextId = 0;
  logs = new Map<string, Mutation[]>();
  diffs: DiffResponse[] = [];

  constructor() {
    super("http://unused", (() => {
      throw new Error("fake api uses no fetch");
    }) as unknown as typeof fetch);
  }

  override async createScenario(name: string, mutations?: Mutation[]) {
    this.created.push({ name, mutations });
    const id = `s${this.nextId++}`;
    this.logs.set(id, mutations ?? []);
    return summary(id, name);
  }

  override async getLog(id: string): Promise<ScenarioLog> {
    return { name: id, mutations: this.logs.get(id) ?? [] };
  }

  override async getGeojson(id: string) {
    if (this.pending409 > 0) {
      this.pending409 -= 1;
      throw new RecomputePending(409, { detail: "pending" });
    }
    this.geojsonCalls += 1;
    return geojson(id);
  }

  override async getDiff(id: string, against: string) {
    const diff = this.diffs.shift() ?? emptyDiff(id, against);
    return { ...diff, scenario: id, against };
  }
}

const fastPoll = { initialDelayMs: 1, maxDelayMs: 2, sleep: async () => {} };

describe("AppStore", () => {
  it("init creates a root scenario and loads markers", async () => {
    const api = new FakeApi();
    const store = new AppStore(api, fastPoll);
    await store.init("base");
    expect(store.state.tree).toHaveLength(1);
    expect(store.state.activeScenarioId).toBe("s0");
    expect(store.state.geojson?.features).toHaveLength(2);
    expect(store.state.offline).toBe(false);
  });

  it("layer switch is styling-only: no snapshot refetch", async () => {
    const api = new FakeApi();
    const store = new AppStore(api, fastPoll);
    await store.init();
    const calls = api.geojsonCalls;
    store.setLayer("D");
    store.setLayer("B");
    expect(api.geojsonCalls).toBe(calls);
    expect(store.state.layer).toBe("B");
  });

  it("validates mutation drafts against the selection", async () => {
    const api = new FakeApi();
    const store = new AppStore(api, fastPoll);
    await store.init();
    expect(store.validateDraft("merge").ok).toBe(false);
    store.toggleSelect(1);
    expect(store.validateDraft("merge").reason).toMatch(/at least 2/);
    expect(store.validateDraft("fragment", 2).ok).toBe(true);
    expect(store.validateDraft("fragment", 1).ok).toBe(false);
    expect(store.validateDraft("add_edge").ok).toBe(false);
    store.toggleSelect(2);
    expect(store.validateDraft("merge").ok).toBe(true);
    expect(store.validateDraft("add_edge").ok).toBe(true);
    expect(store.validateDraft("fragment", 2).ok).toBe(false);
  });

  it("submit creates a child scenario from the parent log (tree history)", async () => {
    const api = new FakeApi();
    const store = new AppStore(api, fastPoll);
    await store.init("base");
    store.toggleSelect(1);
    store.composeMutation("fragment", 2);
    await store.submitDraft();
    expect(api.created).toHaveLength(2);
    expect(api.created[1]?.mutations).toEqual([{ op: "fragment", city: 1, k: 2 }]);
    const child = store.state.tree[1]!;
    expect(child.parentId).toBe("s0");
    expect(store.state.activeScenarioId).toBe(child.id);
    expect(store.state.diff).not.toBeNull();

    // a second mutation from the child replays the full log
    store.toggleSelect(1);
    store.toggleSelect(2);
    store.composeMutation("remove_edge");
    await store.submitDraft();
    expect(api.created[2]?.mutations).toEqual([
      { op: "fragment", city: 1, k: 2 },
      { op: "remove_edge", a: 1, b: 2 },
    ]);
  });

  it("undo switches to the parent id without touching the server", async () => {
    const api = new FakeApi();
    const store = new AppStore(api, fastPoll);
    await store.init("base");
    store.toggleSelect(1);
    store.composeMutation("fragment", 2);
    await store.submitDraft();
    const created = api.created.length;
    await store.undo();
    expect(store.state.activeScenarioId).toBe("s0");
    expect(api.created.length).toBe(created); // no new scenarios, no mutations
    expect(store.state.tree).toHaveLength(2); // child kept in the tree
  });

  it("polls through 409s until the recompute clears", async () => {
    const api = new FakeApi();
    api.pending409 = 3;
    const store = new AppStore(api, fastPoll);
    await store.init("base");
    expect(store.state.geojson).not.toBeNull();
    expect(store.state.recomputing).toBe(false);
    expect(store.state.offline).toBe(false);
  });

  it("flags offline on network failure", async () => {
    const api = new FakeApi();
    api.createScenario = async () => {
      throw new TypeError("fetch failed");
    };
    const store = new AppStore(api, fastPoll);
    await expect(store.init("base")).rejects.toThrow();
    expect(store.state.offline).toBe(true);
  });

  it("affectedZones keeps only rows with served changes", async () => {
    const api = new FakeApi();
    const store = new AppStore(api, fastPoll);
    await store.init("base");
    const zones: DiffResponse = {
      against: "s0",
      scenario: "s1",
      per_city: [],
      per_zone: [
        { center_city_id: 1,
          before: { D_z: 1, B_z: 2, S_z: 2, A_z: 0, A_star: null },
          after: { D_z: 1, B_z: 2, S_z: 2, A_z: 0, A_star: null },
          delta: { D_z: 0, B_z: 0, S_z: 0, A_z: 0, A_star: null } },
        { center_city_id: 2,
          before: { D_z: 1, B_z: 9, S_z: 9, A_z: 0, A_star: null },
          after: { D_z: 1, B_z: 4.5, S_z: 4.5, A_z: 0, A_star: null },
          delta: { D_z: 0, B_z: -4.5, S_z: -4.5, A_z: 0, A_star: null } },
        { center_city_id: 3, before: null,
          after: { D_z: 1, B_z: 0, S_z: 0, A_z: 0, A_star: null }, delta: null },
      ],
    };
    api.diffs.push(zones);
    await store.compare("s0");
    const affected = store.affectedZones();
    expect(affected.map((r) => r.center_city_id)).toEqual([2, 3]);
  });
});
