/** Payload shapes served by the scenario service. The UI never computes
 * metrics; every number below arrives from the server as-is. */

export type MetricLayer = "D" | "B" | "S" | "A" | "A_star" | "vulnerability";

export interface ScenarioSummary {
  id: string;
  name: string;
  version: number;
  stale: boolean;
  n_mutations: number;
  n_cities: number;
  n_edges: number;
}

export interface CityMetrics {
  city_id: number;
  name: string;
  population: number;
  degree: number;
  betweenness: number;
  strategic: number;
}

export interface MetricsResponse {
  scenario: ScenarioSummary;
  theta: number;
  version: number;
  cities: CityMetrics[];
}

export interface PointFeature {
  type: "Feature";
  geometry: { type: "Point"; coordinates: [number, number] };
  properties: {
    city_id: number;
    name: string;
    population: number;
    D: number;
    B: number;
    S: number;
    A: number;
    A_star: number | null;
    vulnerable: boolean;
  };
}

export interface GeojsonResponse {
  type: "FeatureCollection";
  features: PointFeature[];
  properties: { scenario_id: string; version: number };
}

export interface ZoneNumbers {
  D_z: number;
  B_z: number;
  S_z: number;
  A_z: number;
  A_star: number | null;
}

export interface PerZoneDiff {
  center_city_id: number;
  before: ZoneNumbers | null;
  after: ZoneNumbers | null;
  delta: Record<string, number | null> | null;
}

export interface PerCityDiff {
  city_id: number;
  before: { degree: number; betweenness: number; strategic: number } | null;
  after: { degree: number; betweenness: number; strategic: number } | null;
  delta: { degree: number; betweenness: number; strategic: number } | null;
}

export interface DiffResponse {
  against: string;
  scenario: string;
  per_city: PerCityDiff[];
  per_zone: PerZoneDiff[];
}

export type MutationAction = "merge" | "fragment" | "add_edge" | "remove_edge";

export type Mutation =
  | { op: "merge"; cities: number[] }
  | { op: "fragment"; city: number; k: number }
  | { op: "add_edge"; a: number; b: number }
  | { op: "remove_edge"; a: number; b: number };

export interface ScenarioLog {
  name: string;
  mutations: Mutation[];
}
