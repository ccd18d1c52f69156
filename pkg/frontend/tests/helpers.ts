import type { Classification, Proposal } from "../src/types.js";

export function proposal(
  id: string,
  price: number,
  guesthouses: string[] = ["G2"],
): Proposal {
  const legs = guesthouses.map((gh, i) => ({
    guesthouse_id: gh,
    interval:
      guesthouses.length === 1
        ? { arrival: "2026-07-01", departure: "2026-07-08" }
        : i === 0
          ? { arrival: "2026-07-01", departure: "2026-07-05" }
          : { arrival: "2026-07-05", departure: "2026-07-08" },
    rooms: { single: 0, double: 1, triple: 0 },
    leg_price: Math.floor(price / guesthouses.length),
  }));
  legs[legs.length - 1].leg_price = price - legs.slice(0, -1).reduce((a, l) => a + l.leg_price, 0);
  return { proposal_id: id, request_id: "req-1", legs, total_price: price };
}

export function classification(proposals: Proposal[]): Classification {
  return { request_id: "req-1", proposals, criteria: { primary: "price" } };
}

export function validForm() {
  return {
    zone: null,
    persons: 2,
    arrival: "2026-07-01",
    departure: "2026-07-08",
    rooms: { single: 0, double: 1, triple: 0 },
    max_total_price: null,
    required_facilities: ["parking"],
  };
}
