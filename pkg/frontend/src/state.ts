/** View state for the planner: the origin/destination pick flow, the current
 * result, and the notices the page should show.
 *
 * Destination only becomes selectable once an origin is picked, and at most
 * one route request is in flight; a newer pick wins over a slower response.
 */

import { ApiClient, ApiError } from "./api.js";
import { insideExtent } from "./transform.js";
import type { Extent, RouteResponse, WorldPoint } from "./types.js";

export type Phase = "pickOrigin" | "pickDestination" | "planning" | "result";

export interface Notice {
  kind: "hint" | "login" | "noRoute" | "error";
  message: string;
}

export interface StateSnapshot {
  phase: Phase;
  origin: WorldPoint | null;
  destination: WorldPoint | null;
  result: RouteResponse | null;
  notice: Notice | null;
  compact: boolean;
}

export class PlannerState {
  phase: Phase = "pickOrigin";
  origin: WorldPoint | null = null;
  destination: WorldPoint | null = null;
  result: RouteResponse | null = null;
  notice: Notice | null = null;
  compact = false;
  when: string | null = null;

  private requestSeq = 0;
  private listeners: Array<(s: StateSnapshot) => void> = [];

  constructor(
    private readonly api: ApiClient,
    private readonly extent: Extent,
  ) {}

  onChange(listener: (s: StateSnapshot) => void): void {
    this.listeners.push(listener);
  }

  snapshot(): StateSnapshot {
    return {
      phase: this.phase,
      origin: this.origin,
      destination: this.destination,
      result: this.result,
      notice: this.notice,
      compact: this.compact,
    };
  }

  private emit(): void {
    const snap = this.snapshot();
    for (const listener of this.listeners) {
      listener(snap);
    }
  }

  /** The future-date picker is only usable with a session. */
  canPickDate(): boolean {
    return this.api.hasSession();
  }

  setCompact(compact: boolean): void {
    this.compact = compact;
    this.emit();
  }

  setWhen(when: string | null): void {
    this.when = when;
  }

  reset(): void {
    this.phase = "pickOrigin";
    this.origin = null;
    this.destination = null;
    this.result = null;
    this.notice = null;
    this.emit();
  }

  /** Handle one map click in world coordinates. */
  async pick(point: WorldPoint): Promise<void> {
    if (!insideExtent(point, this.extent)) {
      this.notice = { kind: "hint", message: "That point is outside the map." };
      this.emit();
      return;
    }
    if (this.phase === "pickOrigin") {
      this.origin = point;
      this.destination = null;
      this.result = null;
      this.notice = null;
      this.phase = "pickDestination";
      this.emit();
      return;
    }
    if (this.phase === "pickDestination") {
      this.destination = point;
      await this.plan();
      return;
    }
    // A click on a finished or in-flight view starts a fresh selection.
    this.reset();
    await this.pick(point);
  }

  private async plan(): Promise<void> {
    if (this.origin === null || this.destination === null) {
      return;
    }
    const seq = ++this.requestSeq;
    this.phase = "planning";
    this.notice = null;
    this.emit();
    try {
      const result = await this.api.planRoute({
        origin: { x: this.origin.x, y: this.origin.y },
        destination: { x: this.destination.x, y: this.destination.y },
        ...(this.when !== null ? { when: this.when } : {}),
        ...(this.compact ? { compact: true } : {}),
      });
      if (seq !== this.requestSeq) {
        return; // a newer pick superseded this response
      }
      this.result = result;
      this.phase = "result";
      this.emit();
    } catch (error) {
      if (seq !== this.requestSeq) {
        return;
      }
      this.phase = "pickOrigin";
      this.origin = null;
      this.destination = null;
      this.notice = this.noticeFor(error);
      this.emit();
    }
  }

  private noticeFor(error: unknown): Notice {
    if (error instanceof ApiError) {
      if (error.status === 403 && error.body.code === "FUTURE_QUERY_REQUIRES_ACCOUNT") {
        return { kind: "login", message: "Log in to plan future trips." };
      }
      if (error.status === 404) {
        return { kind: "noRoute", message: "No route found between those points." };
      }
      return { kind: "error", message: error.body.detail ?? "Request failed." };
    }
    return { kind: "error", message: "Network problem, please retry." };
  }
}
