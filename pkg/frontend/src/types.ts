/** Wire types for the route-service JSON API. */

export interface WorldPoint {
  x: number;
  y: number;
}

export interface NetworkVertex {
  id: number;
  x: number;
  y: number;
  name?: string;
}

export interface NetworkSegment {
  id: number;
  name: string;
  from: number;
  to: number;
  geometry: [number, number][];
  base_cost: number;
}

export interface NetworkDocument {
  crs_label: string;
  vertices: NetworkVertex[];
  segments: NetworkSegment[];
}

export interface DirectionStep {
  instruction: string;
  road_name: string;
  distance_m: number;
}

export interface RouteResponse {
  instant: string;
  cost: number | null;
  no_route?: boolean;
  vertices: number[];
  segments: number[];
  steps?: DirectionStep[];
  snap: { origin_m: number; destination_m: number };
  map_url: string;
}

export type ScheduleDocument =
  | { kind: "WEEKLY"; weekdays: string[]; start_minute: number; end_minute: number }
  | { kind: "ABSOLUTE"; start_at: string; end_at?: string };

export interface RuleDocument {
  id: number;
  segment_id: number;
  kind: "CLOSED" | "ONE_WAY_FORWARD" | "ONE_WAY_REVERSE" | "CONGESTION";
  schedule: ScheduleDocument;
  multiplier?: number;
  note?: string;
}

export interface UserPayload {
  id: number;
  username: string;
  role: "REGISTERED" | "ADMIN";
  full_name: string;
  email: string;
  phone: string;
  address: string;
  closest_city: string;
}

export interface SessionPayload {
  token: string;
  expires_at: string;
  user: UserPayload;
}

export interface TripPayload {
  id: number;
  origin: unknown;
  destination: unknown;
  travel_at: string;
  channels: string[];
  last_result: RouteResponse | null;
}

export interface NotificationRecord {
  id: string;
  trip_id: number;
  event_id: number;
  channel: string;
  body: string;
  created_at: string;
  delivery_state: "PENDING" | "SENT" | "FAILED";
  failure_reason: string;
}

export interface Extent {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
}
