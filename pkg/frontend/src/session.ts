// Planner session state machine. Holds the current placement, layer and
// route, issues service requests, and guards against stale responses with
// monotonic sequence numbers. Displayed statistics are always verbatim
// fields of the last applied service response (this is contract-tested).

import {
  ApiClient,
  ApiError,
  ChanMapResponse,
  Footprint,
  LosMapResponse,
  OutageStats,
  RouteResponse,
  SceneSummary,
  TxPlacement,
} from "./api.js";

export type LayerChoice = "los" | "total" | "outage";

export const ALTITUDE_MIN_M = 10;
export const ALTITUDE_MAX_M = 150;
export const DEFAULT_UE_HEIGHT_M = 1.5;
export const DEFAULT_EIRP_DBM = [13, 23];
export const DEFAULT_SENSITIVITY_DBM = -84.7;

export interface PlacementView {
  tx: TxPlacement | null;
  artifactId: string | null;
  chanArtifactId: string | null;
  pLos: number | null;
  pNlos: number | null;
  mapUrl: string | null;
}

export interface RouteView {
  waypoints: [number, number][];
  response: RouteResponse | null;
  /** stats entry for the currently selected EIRP (a service response field) */
  outage: OutageStats | null;
}

export type SessionListener = (session: PlannerSession) => void;

export class PlannerSession {
  scene: SceneSummary | null = null;
  footprints: Footprint[] = [];
  layer: LayerChoice = "los";
  eirpDbm: number = DEFAULT_EIRP_DBM[0];
  sensitivityDbm: number = DEFAULT_SENSITIVITY_DBM;
  ueHeightM: number = DEFAULT_UE_HEIGHT_M;
  busy = false;
  error: string | null = null;

  placement: PlacementView = {
    tx: null,
    artifactId: null,
    chanArtifactId: null,
    pLos: null,
    pNlos: null,
    mapUrl: null,
  };
  route: RouteView = { waypoints: [], response: null, outage: null };

  private seq = 0;
  private appliedSeq = 0;
  private listeners: SessionListener[] = [];

  constructor(private api: ApiClient) {}

  onChange(fn: SessionListener): void {
    this.listeners.push(fn);
  }

  private notify(): void {
    for (const fn of this.listeners) fn(this);
  }

  async loadScene(): Promise<void> {
    this.scene = await this.api.getSceneSummary();
    this.footprints = (await this.api.getFootprints()).buildings;
    this.notify();
  }

  /** Returns a message when the placement is invalid; no request is sent then. */
  validatePlacement(x: number, y: number, altitudeM: number): string | null {
    if (altitudeM <= this.ueHeightM) {
      return `altitude_m must exceed the user height (${this.ueHeightM} m)`;
    }
    if (altitudeM < ALTITUDE_MIN_M || altitudeM > ALTITUDE_MAX_M) {
      return `altitude_m must be within [${ALTITUDE_MIN_M}, ${ALTITUDE_MAX_M}] m`;
    }
    if (this.scene) {
      const [xmin, ymin, xmax, ymax] = this.scene.bounds;
      if (x < xmin || x > xmax || y < ymin || y > ymax) {
        return "transmitter outside scene bounds";
      }
    }
    return null;
  }

  /**
   * Place (or move) the transmitter. Issues POST /losmap, plus POST
   * /chanmap when an attenuation-dependent layer is active. Responses for
   * superseded placements are dropped.
   */
  async placeTx(x: number, y: number, altitudeM: number): Promise<void> {
    const invalid = this.validatePlacement(x, y, altitudeM);
    if (invalid) {
      this.error = invalid;
      this.notify();
      return;
    }
    const mySeq = ++this.seq;
    const tx: TxPlacement = { x, y, altitude_m: altitudeM, ue_height_m: this.ueHeightM };
    this.busy = true;
    this.error = null;
    this.notify();
    try {
      const needChan = this.layer !== "los";
      let los: LosMapResponse;
      let chan: ChanMapResponse | null = null;
      if (needChan) {
        chan = await this.api.postChanmap({ tx });
        los = chan;
      } else {
        los = await this.api.postLosmap({ tx });
      }
      if (mySeq <= this.appliedSeq) return; // superseded by a newer placement
      this.appliedSeq = mySeq;
      this.placement = {
        tx,
        artifactId: los.artifact_id,
        chanArtifactId: chan ? chan.artifact_id : null,
        pLos: los.p_los,
        pNlos: los.p_nlos,
        mapUrl: this.mapUrl(chan ? chan.artifact_id : los.artifact_id),
      };
      this.route = { waypoints: this.route.waypoints, response: null, outage: null };
    } catch (err) {
      if (mySeq <= this.appliedSeq) return;
      this.error = err instanceof ApiError ? describeApiError(err) : String(err);
    } finally {
      if (mySeq === this.seq) this.busy = false;
      this.notify();
    }
  }

  private mapUrl(artifactId: string): string {
    if (this.layer === "total") return this.api.mapPngUrl(artifactId, "total");
    if (this.layer === "outage") {
      return this.api.mapPngUrl(artifactId, "outage", this.eirpDbm);
    }
    return this.api.mapPngUrl(artifactId, "los_state");
  }

  /** Switch the displayed layer; recomputes the channel map if needed. */
  async setLayer(layer: LayerChoice): Promise<void> {
    this.layer = layer;
    const p = this.placement;
    if (!p.tx) {
      this.notify();
      return;
    }
    if (layer !== "los" && !p.chanArtifactId) {
      await this.placeTx(p.tx.x, p.tx.y, p.tx.altitude_m);
      return;
    }
    const id = layer === "los" ? p.artifactId : p.chanArtifactId;
    if (id) this.placement = { ...p, mapUrl: this.mapUrl(id) };
    this.notify();
  }

  /**
   * Select an EIRP. Statistics switch to the matching entry of the cached
   * route response (no recomputation when only the threshold changed); a
   * missing entry triggers one re-request.
   */
  async setEirp(eirpDbm: number): Promise<void> {
    this.eirpDbm = eirpDbm;
    const resp = this.route.response;
    if (resp) {
      const entry = resp.outage.find((o) => o.eirp_dbm === eirpDbm) ?? null;
      if (entry) {
        this.route = { ...this.route, outage: entry };
      } else if (this.route.waypoints.length >= 2) {
        await this.analyzeRoute(this.route.waypoints);
        return;
      }
    }
    if (this.layer === "outage" && this.placement.chanArtifactId) {
      this.placement = {
        ...this.placement,
        mapUrl: this.mapUrl(this.placement.chanArtifactId),
      };
    }
    this.notify();
  }

  /** True when the analyze action is meaningful (>= 2 waypoints, map ready). */
  canAnalyzeRoute(waypoints: [number, number][]): boolean {
    return waypoints.length >= 2 && this.placement.artifactId !== null;
  }

  async analyzeRoute(waypoints: [number, number][]): Promise<void> {
    if (!this.canAnalyzeRoute(waypoints)) {
      this.error = "route needs at least 2 waypoints and a computed map";
      this.notify();
      return;
    }
    let artifactId = this.placement.chanArtifactId;
    if (!artifactId) {
      // attenuation stats need the channel layers
      const tx = this.placement.tx!;
      const chan = await this.api.postChanmap({ tx });
      artifactId = chan.artifact_id;
      this.placement = { ...this.placement, chanArtifactId: chan.artifact_id };
    }
    this.busy = true;
    this.error = null;
    this.notify();
    try {
      const resp = await this.api.postRoute({
        artifact_id: artifactId,
        waypoints,
        eirp_dbm: DEFAULT_EIRP_DBM,
        sensitivity_dbm: this.sensitivityDbm,
      });
      const outage = resp.outage.find((o) => o.eirp_dbm === this.eirpDbm) ?? null;
      this.route = { waypoints, response: resp, outage };
    } catch (err) {
      this.error = err instanceof ApiError ? describeApiError(err) : String(err);
    } finally {
      this.busy = false;
      this.notify();
    }
  }

  /**
   * Per-sample outage flags for route re-coloring, derived from the cached
   * trace and the active threshold. Used only for drawing; the displayed
   * p_outage always comes from the service response.
   */
  routeOutageFlags(): boolean[] {
    const resp = this.route.response;
    if (!resp) return [];
    const threshold = this.eirpDbm - this.sensitivityDbm;
    return resp.trace.attenuation_db.map((a) => a !== null && a > threshold);
  }
}

function describeApiError(err: ApiError): string {
  const field = err.body.field ? `${err.body.field}: ` : "";
  return `${field}${err.body.message ?? err.body.error}`;
}
