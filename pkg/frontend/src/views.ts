// DOM rendering. Pure functions of state; no data invented client-side,
// and proposal lists are rendered exactly in server order.

import type { AppState, Dispatch } from "./state.js";
import type { CalendarEntry, HistoryEntry, Proposal } from "./types.js";
import type { AppController } from "./controller.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: Array<Node | string> = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) node.append(child);
  return node;
}

function money(minor: number): string {
  return (minor / 100).toFixed(2);
}

export function renderLogin(state: AppState, controller: AppController): HTMLElement {
  const user = el("input", { id: "login-id", placeholder: "user id (or guesthouse id)" });
  const password = el("input", { id: "login-password", type: "password", placeholder: "password" });
  const asAdmin = el("input", { id: "login-admin", type: "checkbox" });
  const button = el("button", { id: "login-submit" }, ["Sign in"]);
  button.addEventListener("click", () => {
    const id = (user as HTMLInputElement).value.trim();
    const principal = (asAdmin as HTMLInputElement).checked
      ? { guesthouse_id: id }
      : { user_id: id };
    void controller.login(principal, (password as HTMLInputElement).value);
  });
  const error = state.loginError
    ? [el("p", { class: "error", id: "login-error" }, [state.loginError])]
    : [];
  return el("section", { class: "login" }, [
    el("h1", {}, ["Guesthouse stays"]),
    user,
    password,
    el("label", {}, [asAdmin, " guesthouse administrator"]),
    button,
    ...error,
  ]);
}

export function renderSearchForm(state: AppState, controller: AppController): HTMLElement {
  const form = state.form;
  const zone = el("select", { id: "form-zone" });
  zone.append(el("option", { value: "" }, ["any zone (national search)"]));
  for (const z of state.zones) {
    const option = el("option", { value: z.zone_id }, [`${z.name} (${z.zone_id})`]);
    if (form.zone === z.zone_id) option.setAttribute("selected", "selected");
    zone.append(option);
  }
  const arrival = el("input", { id: "form-arrival", type: "date", value: form.arrival });
  const departure = el("input", { id: "form-departure", type: "date", value: form.departure });
  const persons = el("input", {
    id: "form-persons", type: "number", min: "1", value: String(form.persons),
  });
  const rooms: Record<string, HTMLInputElement> = {};
  const roomInputs = (["single", "double", "triple"] as const).map((t) => {
    const input = el("input", {
      id: `form-rooms-${t}`, type: "number", min: "0", value: String(form.rooms[t]),
    });
    rooms[t] = input as HTMLInputElement;
    return el("label", { class: "room" }, [`${t} `, input]);
  });
  const cap = el("input", {
    id: "form-cap", type: "number", min: "1",
    value: form.max_total_price === null ? "" : String(form.max_total_price),
    placeholder: "max total (minor units)",
  });
  const facilities = el("fieldset", { id: "form-facilities" });
  for (const token of state.facilities) {
    const box = el("input", { type: "checkbox", value: token, id: `fac-${token}` });
    if (form.required_facilities.includes(token)) box.setAttribute("checked", "checked");
    facilities.append(el("label", {}, [box, ` ${token}`]));
  }
  const submit = el("button", { id: "form-submit" }, ["Search stays"]);
  submit.addEventListener("click", () => {
    const chosen = Array.from(
      facilities.querySelectorAll("input:checked"),
    ).map((input) => (input as HTMLInputElement).value);
    const parsedCap = (cap as HTMLInputElement).value.trim();
    void controller.submit({
      zone: (zone as HTMLSelectElement).value || null,
      persons: Number((persons as HTMLInputElement).value),
      arrival: (arrival as HTMLInputElement).value,
      departure: (departure as HTMLInputElement).value,
      rooms: {
        single: Number(rooms.single.value),
        double: Number(rooms.double.value),
        triple: Number(rooms.triple.value),
      },
      max_total_price: parsedCap ? Number(parsedCap) : null,
      required_facilities: chosen,
    });
  });
  const error = state.formError
    ? [el("p", { class: "error", id: "form-error" }, [state.formError])]
    : [];
  return el("section", { class: "search-form" }, [
    el("h2", {}, ["Find a stay"]),
    el("div", { class: "row" }, [zone]),
    el("div", { class: "row" }, ["from ", arrival, " to ", departure]),
    el("div", { class: "row" }, ["persons ", persons, ...roomInputs]),
    el("div", { class: "row" }, [cap]),
    facilities,
    submit,
    ...error,
  ]);
}

function renderProposal(
  proposal: Proposal,
  index: number,
  search: Extract<AppState["search"], { phase: "classified" }>,
  controller: AppController,
): HTMLElement {
  const legs = proposal.legs.map((leg) =>
    el("li", { class: "leg" }, [
      `${leg.guesthouse_id}: ${leg.interval.arrival} to ${leg.interval.departure} ` +
        `(${money(leg.leg_price)})`,
    ]),
  );
  const button = el("button", { class: "book", "data-proposal": proposal.proposal_id }, [
    search.selecting === proposal.proposal_id ? "Booking..." : "Book",
  ]);
  if (search.selecting) button.setAttribute("disabled", "disabled");
  button.addEventListener("click", () => void controller.book(proposal.proposal_id));
  return el("li", { class: "proposal", "data-proposal": proposal.proposal_id }, [
    el("strong", {}, [`#${index + 1} ${money(proposal.total_price)}`]),
    proposal.legs.length > 1 ? el("em", {}, [` split stay, ${proposal.legs.length} legs`]) : "",
    el("ul", { class: "legs" }, legs),
    button,
  ]);
}

export function renderResults(state: AppState, controller: AppController): HTMLElement {
  const search = state.search;
  if (search.phase === "idle") return el("section", { class: "results" });
  if (search.phase === "submitting" || search.phase === "pending") {
    return el("section", { class: "results" }, [
      el("p", { class: "pending" }, ["Collecting offers from the guesthouses..."]),
    ]);
  }
  if (search.phase === "booked") {
    const legs = search.classification.proposals
      .find((p) => p.proposal_id === search.proposalId)
      ?.legs.map((leg) =>
        el("li", {}, [`${leg.guesthouse_id}: ${leg.interval.arrival} to ${leg.interval.departure}`]),
      );
    return el("section", { class: "results" }, [
      el("p", { class: "booked", id: "booking-confirmation" }, [
        `Booked! Reference ${search.bookingId}`,
      ]),
      el("ul", { class: "booked-legs" }, legs ?? []),
    ]);
  }
  const proposals = search.classification.proposals;
  if (proposals.length === 0) {
    return el("section", { class: "results" }, [
      el("p", { class: "empty", id: "no-offers" }, ["No offers matched your request."]),
    ]);
  }
  const conflict = search.conflict
    ? [el("p", { class: "error", id: "booking-conflict" }, [
        `That offer is gone (${search.conflict}); the list was refreshed.`,
      ])]
    : [];
  return el("section", { class: "results" }, [
    ...conflict,
    el("ol", { class: "proposals", id: "proposal-list" },
       proposals.map((p, i) => renderProposal(p, i, search, controller))),
  ]);
}

export function renderHistory(entries: HistoryEntry[]): HTMLElement {
  if (entries.length === 0) {
    return el("section", { class: "history" }, [el("p", {}, ["No past requests."])]);
  }
  const items = entries.map((entry) => {
    const req = entry.request as { interval?: { arrival?: string; departure?: string } };
    const dates = req.interval ? `${req.interval.arrival} to ${req.interval.departure}` : "";
    const offers = entry.classification?.proposals.length ?? 0;
    const outcome = entry.outcome
      ? el("span", { class: "outcome", "data-booking": entry.outcome }, [
          ` booked (${entry.outcome})`,
        ])
      : el("span", { class: "outcome" }, [` ${offers} offers`]);
    return el("li", { class: "history-entry" }, [`${dates}`, outcome]);
  });
  return el("section", { class: "history" }, [el("ul", {}, items)]);
}

export function renderAdminGrid(state: AppState, controller: AppController): HTMLElement {
  const admin = state.admin;
  if (!admin.guesthouseId) {
    return el("section", { class: "admin" }, [el("p", {}, ["No guesthouse selected."])]);
  }
  const from = el("input", { id: "admin-from", type: "date", value: admin.from });
  const to = el("input", { id: "admin-to", type: "date", value: admin.to });
  const load = el("button", { id: "admin-load" }, ["Load"]);
  load.addEventListener("click", () =>
    void controller.loadAdminGrid(
      admin.guesthouseId!,
      (from as HTMLInputElement).value,
      (to as HTMLInputElement).value,
    ),
  );
  const byDate = new Map<string, CalendarEntry[]>();
  for (const entry of admin.entries) {
    const bucket = byDate.get(entry.date) ?? [];
    bucket.push(entry);
    byDate.set(entry.date, bucket);
  }
  const header = el("tr", {}, [
    el("th", {}, ["date"]),
    ...["single", "double", "triple"].map((t) => el("th", {}, [t])),
  ]);
  const rows = Array.from(byDate.entries()).map(([date, entries]) => {
    const cells = (["single", "double", "triple"] as const).map((roomType) => {
      const entry = entries.find((e) => e.type === roomType);
      if (!entry) return el("td", {}, ["-"]);
      const edited = admin.edits[`${date}|${roomType}`];
      const input = el("input", {
        class: "cap",
        type: "number",
        min: "0",
        value: String(edited ?? entry.free),
        "data-date": date,
        "data-type": roomType,
      });
      input.addEventListener("input", () => {
        store_dispatch_edit(controller, date, roomType, Number((input as HTMLInputElement).value));
      });
      return el("td", {}, [input, el("small", {}, [` booked ${entry.booked}`])]);
    });
    return el("tr", {}, [el("td", {}, [date]), ...cells]);
  });
  const save = el("button", { id: "admin-save" }, ["Save"]);
  save.addEventListener("click", () => void controller.saveAdminGrid());
  const errors: HTMLElement[] = [];
  if (admin.saveError)
    errors.push(el("p", { class: "error", id: "admin-save-error" }, [admin.saveError]));
  if (admin.loadError)
    errors.push(el("p", { class: "error", id: "admin-load-error" }, [admin.loadError]));
  return el("section", { class: "admin" }, [
    el("h2", {}, [`Calendar for ${admin.guesthouseId}`]),
    el("div", { class: "row" }, [from, to, load]),
    el("table", { class: "grid" }, [header, ...rows]),
    save,
    ...errors,
  ]);
}

function store_dispatch_edit(
  controller: AppController,
  date: string,
  roomType: string,
  value: number,
): void {
  controller.store.dispatch({ type: "ADMIN_EDIT", date, roomType, value });
}

export function renderApp(root: HTMLElement, state: AppState, controller: AppController): void {
  root.replaceChildren();
  if (!state.session) {
    root.append(renderLogin(state, controller));
    return;
  }
  const nav = el("nav", {}, []);
  if (state.session.kind === "user") {
    for (const route of ["search", "history"] as const) {
      const link = el("a", { href: `#/${route}`, id: `nav-${route}` }, [route]);
      nav.append(link);
    }
  } else {
    nav.append(el("a", { href: "#/admin", id: "nav-admin" }, ["calendar"]));
  }
  root.append(nav);
  if (state.route === "search") {
    root.append(renderSearchForm(state, controller));
    root.append(renderResults(state, controller));
  } else if (state.route === "history") {
    root.append(renderHistory(state.history));
  } else {
    root.append(renderAdminGrid(state, controller));
  }
}
