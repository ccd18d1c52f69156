// API payload shapes, mirroring the service's canonical JSON.

export interface Zone {
  zone_id: string;
  name: string;
}

export interface GuesthouseInfo {
  guesthouse_id: string;
  name: string;
  address: string;
  telephone: string;
}

export interface RoomCounts {
  single: number;
  double: number;
  triple: number;
}

export interface Leg {
  guesthouse_id: string;
  interval: { arrival: string; departure: string };
  rooms: RoomCounts;
  leg_price: number;
}

export interface Proposal {
  proposal_id: string;
  request_id: string;
  legs: Leg[];
  total_price: number;
}

export interface Classification {
  request_id: string;
  proposals: Proposal[];
  criteria: { primary: string };
}

export interface ClassificationResponse {
  status: "pending" | "classified" | "booked";
  request_id: string;
  classification?: Classification | null;
  booking?: { booking_id: string; proposal_id: string } | null;
}

export interface HistoryEntry {
  user_id: string;
  timestamp: number;
  request: Record<string, unknown>;
  classification: Classification | null;
  outcome: string | null;
  seq: number;
}

export interface CalendarEntry {
  date: string;
  type: "single" | "double" | "triple";
  free: number; // the editable offered-rooms count
  available: number;
  booked: number;
}

export interface RequestForm {
  zone: string | null;
  persons: number;
  arrival: string;
  departure: string;
  rooms: RoomCounts;
  max_total_price: number | null;
  required_facilities: string[];
}

export interface Session {
  token: string;
  kind: "user" | "admin";
  principalId: string;
}
