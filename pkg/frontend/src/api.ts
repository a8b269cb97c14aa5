/** Thin typed client for the route-service JSON API.
 *
 * fetch is injectable so tests can run without a server or a browser.
 */

import type {
  NetworkDocument,
  NotificationRecord,
  RouteResponse,
  RuleDocument,
  SessionPayload,
  TripPayload,
  UserPayload,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: { error?: string; detail?: string; code?: string },
  ) {
    super(body.detail ?? `request failed with status ${status}`);
    this.name = "ApiError";
  }
}

export interface RouteRequest {
  origin: unknown;
  destination: unknown;
  when?: string;
  mode?: "strict" | "faithful";
  compact?: boolean;
}

export class ApiClient {
  private token: string | null = null;

  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  setToken(token: string | null): void {
    this.token = token;
  }

  hasSession(): boolean {
    return this.token !== null;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
    }
    if (this.token !== null) {
      headers["Authorization"] = `Bearer ${this.token}`;
    }
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (response.status === 204) {
      return undefined as T;
    }
    const isJson = (response.headers.get("content-type") ?? "").includes("json");
    if (!response.ok) {
      const payload = isJson ? await response.json() : { detail: await response.text() };
      throw new ApiError(response.status, payload);
    }
    return (isJson ? response.json() : response.text()) as Promise<T>;
  }

  getNetwork(): Promise<NetworkDocument> {
    return this.request("GET", "/api/network");
  }

  planRoute(body: RouteRequest): Promise<RouteResponse> {
    return this.request("POST", "/api/route", body);
  }

  getMapSvg(mapUrl: string): Promise<string> {
    return this.request("GET", mapUrl);
  }

  getNetworkMapSvg(): Promise<string> {
    return this.request("GET", "/api/maps/network.svg");
  }

  register(username: string, password: string, profile: Record<string, string> = {}): Promise<UserPayload> {
    return this.request("POST", "/api/users", { username, password, ...profile });
  }

  async login(username: string, password: string): Promise<SessionPayload> {
    const session = await this.request<SessionPayload>("POST", "/api/sessions", {
      username,
      password,
    });
    this.token = session.token;
    return session;
  }

  updateProfile(fields: Record<string, string>): Promise<UserPayload> {
    return this.request("PATCH", "/api/users/me", fields);
  }

  getRules(): Promise<RuleDocument[]> {
    return this.request("GET", "/api/rules");
  }

  addRule(rule: RuleDocument): Promise<RuleDocument> {
    return this.request("POST", "/api/rules", rule);
  }

  updateRule(rule: RuleDocument): Promise<RuleDocument> {
    return this.request("PUT", `/api/rules/${rule.id}`, rule);
  }

  deleteRule(ruleId: number): Promise<void> {
    return this.request("DELETE", `/api/rules/${ruleId}`);
  }

  createTrip(body: {
    origin: unknown;
    destination: unknown;
    travel_at: string;
    channels?: string[];
  }): Promise<TripPayload> {
    return this.request("POST", "/api/trips", body);
  }

  getTrips(): Promise<TripPayload[]> {
    return this.request("GET", "/api/trips");
  }

  getAlerts(): Promise<NotificationRecord[]> {
    return this.request("GET", "/api/alerts");
  }
}
