// Typed client for the uxprop HTTP service. Every statistic the planner
// displays is a field of one of these response types.

export interface TxPlacement {
  x: number;
  y: number;
  altitude_m: number;
  ue_height_m?: number;
}

export interface SceneSummary {
  bounds: [number, number, number, number];
  building_count: number;
  source: string | null;
  config_digest: string;
}

export interface Footprint {
  id: string;
  height_m: number;
  footprint: [number, number][];
}

export interface LosMapResponse {
  artifact_id: string;
  p_los: number;
  p_nlos: number;
  width: number;
  height: number;
  config_digest: string;
}

export interface ChanMapResponse extends LosMapResponse {
  seed: number;
}

export interface MapMeta {
  origin: [number, number];
  resolution_m: number;
  extent: [number, number, number, number];
  kind: string;
  report: { p_los: number; p_nlos: number };
}

export interface RunsStats {
  segments: [string, number, number][];
  run_lengths: { LOS: number[]; NLOS: number[] };
  p_state: { LOS: number; NLOS: number; BUILDING: number };
  building_crossing_m: number;
  total_length_m: number;
}

export interface OutageStats {
  eirp_dbm: number;
  sensitivity_dbm: number;
  threshold_db: number;
  p_outage: number;
  outage_m: number;
  segments: [number, number][];
}

export interface RouteResponse {
  trace: {
    arc_s: number[];
    states: string[];
    attenuation_db: (number | null)[];
    step_m: number;
  };
  runs: RunsStats;
  outage: OutageStats[];
  config_digest: string;
}

export interface ServiceError {
  error: string;
  field?: string;
  message?: string;
}

export class ApiError extends Error {
  constructor(public status: number, public body: ServiceError) {
    super(body.message ?? body.error);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (...args) => fetch(...args)
  ) {}

  private async req<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const body = await resp.json();
    if (!resp.ok) {
      throw new ApiError(resp.status, body as ServiceError);
    }
    return body as T;
  }

  getSceneSummary(): Promise<SceneSummary> {
    return this.req("/scene/summary");
  }

  getFootprints(): Promise<{ buildings: Footprint[] }> {
    return this.req("/scene/footprints");
  }

  getDefaultParams(): Promise<{ params: Record<string, unknown> }> {
    return this.req("/params/default");
  }

  postLosmap(body: { tx: TxPlacement; resolution_m?: number; radius_m?: number }): Promise<LosMapResponse> {
    return this.req("/losmap", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  postChanmap(body: {
    tx: TxPlacement;
    resolution_m?: number;
    radius_m?: number;
    seed?: number;
  }): Promise<ChanMapResponse> {
    return this.req("/chanmap", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getMapMeta(artifactId: string): Promise<MapMeta> {
    return this.req(`/map/${artifactId}/meta`);
  }

  postRoute(body: {
    artifact_id: string;
    waypoints: [number, number][];
    eirp_dbm: number[];
    sensitivity_dbm?: number;
  }): Promise<RouteResponse> {
    return this.req("/route", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  mapPngUrl(artifactId: string, layer?: string, eirpDbm?: number): string {
    const params = new URLSearchParams();
    if (layer) params.set("layer", layer);
    if (eirpDbm !== undefined) params.set("eirp_dbm", String(eirpDbm));
    const qs = params.toString();
    return `${this.baseUrl}/map/${artifactId}.png${qs ? "?" + qs : ""}`;
  }
}
