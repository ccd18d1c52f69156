// Single-store reducer: every UI transition flows through dispatch().

import type {
  CalendarEntry,
  Classification,
  HistoryEntry,
  RequestForm,
  Session,
  Zone,
} from "./types.js";

export type SearchPhase =
  | { phase: "idle" }
  | { phase: "submitting" }
  | { phase: "pending"; requestId: string }
  | {
      phase: "classified";
      requestId: string;
      classification: Classification;
      selecting: string | null; // proposal id in flight
      conflict: string | null; // last 409 reason, shown inline
    }
  | {
      phase: "booked";
      requestId: string;
      classification: Classification;
      bookingId: string;
      proposalId: string;
    };

export interface AdminState {
  guesthouseId: string | null;
  from: string;
  to: string;
  entries: CalendarEntry[];
  edits: Record<string, number>; // "date|type" -> edited offered count
  saveError: string | null;
  loadError: string | null;
}

export interface AppState {
  session: Session | null;
  loginError: string | null;
  route: "search" | "history" | "admin";
  zones: Zone[];
  facilities: string[];
  form: RequestForm;
  formError: string | null;
  search: SearchPhase;
  history: HistoryEntry[];
  admin: AdminState;
}

export type Action =
  | { type: "SESSION_SET"; session: Session }
  | { type: "LOGIN_FAILED"; error: string }
  | { type: "ROUTE_SET"; route: AppState["route"] }
  | { type: "DIRECTORY_LOADED"; zones: Zone[]; facilities: string[] }
  | { type: "FORM_SET"; patch: Partial<RequestForm> }
  | { type: "FORM_INVALID"; error: string }
  | { type: "SUBMIT_STARTED" }
  | { type: "SUBMIT_ACCEPTED"; requestId: string }
  | { type: "SUBMIT_REJECTED"; error: string }
  | { type: "CLASSIFICATION_READY"; classification: Classification }
  | { type: "SELECT_STARTED"; proposalId: string }
  | { type: "SELECT_BOOKED"; bookingId: string; proposalId: string }
  | { type: "SELECT_CONFLICT"; reason: string }
  | { type: "CLASSIFICATION_REFRESHED"; classification: Classification }
  | { type: "HISTORY_LOADED"; entries: HistoryEntry[] }
  | { type: "ADMIN_GRID_LOADED"; guesthouseId: string; from: string; to: string; entries: CalendarEntry[] }
  | { type: "ADMIN_GRID_FAILED"; error: string }
  | { type: "ADMIN_EDIT"; date: string; roomType: string; value: number }
  | { type: "ADMIN_SAVED"; entries: CalendarEntry[] }
  | { type: "ADMIN_SAVE_FAILED"; error: string };

export function initialState(): AppState {
  return {
    session: null,
    loginError: null,
    route: "search",
    zones: [],
    facilities: [],
    form: {
      zone: null,
      persons: 2,
      arrival: "",
      departure: "",
      rooms: { single: 0, double: 1, triple: 0 },
      max_total_price: null,
      required_facilities: [],
    },
    formError: null,
    search: { phase: "idle" },
    history: [],
    admin: {
      guesthouseId: null,
      from: "",
      to: "",
      entries: [],
      edits: {},
      saveError: null,
      loadError: null,
    },
  };
}

export function validateForm(form: RequestForm): string | null {
  if (!form.arrival || !form.departure) return "arrival and departure dates are required";
  if (form.departure <= form.arrival) return "departure must be after arrival";
  if (!Number.isInteger(form.persons) || form.persons < 1) return "at least one person";
  const rooms = form.rooms.single + form.rooms.double + form.rooms.triple;
  if (rooms < 1) return "at least one room";
  const capacity = form.rooms.single + 2 * form.rooms.double + 3 * form.rooms.triple;
  if (capacity < form.persons) return "the rooms cannot sleep everyone";
  if (form.max_total_price !== null && form.max_total_price <= 0)
    return "the price cap must be positive";
  return null;
}

export function reducer(state: AppState, action: Action): AppState {
  switch (action.type) {
    case "SESSION_SET":
      return {
        ...state,
        session: action.session,
        loginError: null,
        route: action.session.kind === "admin" ? "admin" : "search",
        admin:
          action.session.kind === "admin"
            ? { ...state.admin, guesthouseId: action.session.principalId }
            : state.admin,
      };
    case "LOGIN_FAILED":
      return { ...state, loginError: action.error };
    case "ROUTE_SET":
      return { ...state, route: action.route };
    case "DIRECTORY_LOADED":
      return { ...state, zones: action.zones, facilities: action.facilities };
    case "FORM_SET":
      return { ...state, form: { ...state.form, ...action.patch }, formError: null };
    case "FORM_INVALID":
      return { ...state, formError: action.error };
    case "SUBMIT_STARTED":
      return { ...state, formError: null, search: { phase: "submitting" } };
    case "SUBMIT_ACCEPTED":
      return { ...state, search: { phase: "pending", requestId: action.requestId } };
    case "SUBMIT_REJECTED":
      return { ...state, formError: action.error, search: { phase: "idle" } };
    case "CLASSIFICATION_READY": {
      if (state.search.phase !== "pending") return state;
      return {
        ...state,
        search: {
          phase: "classified",
          requestId: state.search.requestId,
          classification: action.classification,
          selecting: null,
          conflict: null,
        },
      };
    }
    case "SELECT_STARTED": {
      // Booking is only reachable from a received classification.
      if (state.search.phase !== "classified") return state;
      if (state.search.selecting && state.search.selecting !== action.proposalId) return state;
      return { ...state, search: { ...state.search, selecting: action.proposalId } };
    }
    case "SELECT_BOOKED": {
      if (state.search.phase !== "classified") return state;
      return {
        ...state,
        search: {
          phase: "booked",
          requestId: state.search.requestId,
          classification: state.search.classification,
          bookingId: action.bookingId,
          proposalId: action.proposalId,
        },
      };
    }
    case "SELECT_CONFLICT": {
      if (state.search.phase !== "classified") return state;
      return {
        ...state,
        search: { ...state.search, selecting: null, conflict: action.reason },
      };
    }
    case "CLASSIFICATION_REFRESHED": {
      if (state.search.phase !== "classified") return state;
      return {
        ...state,
        search: { ...state.search, classification: action.classification },
      };
    }
    case "HISTORY_LOADED":
      return { ...state, history: action.entries };
    case "ADMIN_GRID_LOADED":
      return {
        ...state,
        admin: {
          ...state.admin,
          guesthouseId: action.guesthouseId,
          from: action.from,
          to: action.to,
          entries: action.entries,
          edits: {},
          saveError: null,
          loadError: null,
        },
      };
    case "ADMIN_GRID_FAILED":
      return { ...state, admin: { ...state.admin, loadError: action.error } };
    case "ADMIN_EDIT":
      return {
        ...state,
        admin: {
          ...state.admin,
          edits: { ...state.admin.edits, [`${action.date}|${action.roomType}`]: action.value },
          saveError: null,
        },
      };
    case "ADMIN_SAVED":
      return {
        ...state,
        admin: { ...state.admin, entries: action.entries, edits: {}, saveError: null },
      };
    case "ADMIN_SAVE_FAILED":
      return { ...state, admin: { ...state.admin, saveError: action.error } };
    default:
      return state;
  }
}

export type Dispatch = (action: Action) => void;

export interface Store {
  getState(): AppState;
  dispatch: Dispatch;
  subscribe(listener: () => void): () => void;
}

export function createStore(state: AppState = initialState()): Store {
  const listeners = new Set<() => void>();
  return {
    getState: () => state,
    dispatch(action: Action) {
      state = reducer(state, action);
      listeners.forEach((fn) => fn());
    },
    subscribe(listener: () => void) {
      listeners.add(listener);
      return () => listeners.delete(listener);
    },
  };
}
