// Session state machine for the readability trial.
//
// All transitions are pure functions of (state, event), so the flow is
// unit-testable without a browser. Invariants encoded here:
//  - phase only moves loading -> answering -> (loading | done);
//  - an image (current) exists only while answering;
//  - a second submit while one is in flight is a no-op.

export interface ChallengeRef {
  id: string;
  imageUrl: string;
}

export type Phase = "loading" | "answering" | "done";

export interface SessionState {
  phase: Phase;
  /** Challenges left to answer, including the one on screen. */
  remaining: number;
  submitted: number;
  current: ChallengeRef | null;
  /** True between submit start and the server's reply. */
  inFlight: boolean;
  error: string | null;
  log: string[];
}

export type SessionEvent =
  | { kind: "challenge_loaded"; challenge: ChallengeRef }
  | { kind: "challenge_failed"; message: string }
  | { kind: "retry" }
  | { kind: "submit_started" }
  | { kind: "submit_accepted" }
  | { kind: "submit_gone" }
  | { kind: "submit_failed"; message: string };

export function initialState(n: number): SessionState {
  const count = Math.max(0, Math.floor(n));
  return {
    phase: count === 0 ? "done" : "loading",
    remaining: count,
    submitted: 0,
    current: null,
    inFlight: false,
    error: null,
    log: [],
  };
}

export function reduce(state: SessionState, event: SessionEvent): SessionState {
  switch (event.kind) {
    case "challenge_loaded":
      if (state.phase !== "loading") return state;
      return {
        ...state,
        phase: "answering",
        current: event.challenge,
        error: null,
        inFlight: false,
      };

    case "challenge_failed":
      if (state.phase !== "loading") return state;
      return { ...state, error: event.message };

    case "retry":
      if (state.phase !== "loading") return state;
      return { ...state, error: null };

    case "submit_started":
      // Guards the double-submit invariant: only one attempt per challenge.
      if (state.phase !== "answering" || state.inFlight) return state;
      return { ...state, inFlight: true, error: null };

    case "submit_accepted": {
      if (state.phase !== "answering" || !state.inFlight) return state;
      const remaining = state.remaining - 1;
      return {
        ...state,
        phase: remaining === 0 ? "done" : "loading",
        remaining,
        submitted: state.submitted + 1,
        current: null,
        inFlight: false,
      };
    }

    case "submit_gone":
      // The challenge expired server-side (410): replace it without
      // counting progress either way.
      if (state.phase !== "answering" || !state.inFlight) return state;
      return {
        ...state,
        phase: "loading",
        current: null,
        inFlight: false,
        log: [...state.log, `challenge ${state.current?.id} expired; fetching a replacement`],
      };

    case "submit_failed":
      if (state.phase !== "answering" || !state.inFlight) return state;
      return { ...state, inFlight: false, error: event.message };
  }
}

export function canSubmit(state: SessionState, rating: number | null): boolean {
  return (
    state.phase === "answering" &&
    !state.inFlight &&
    rating !== null &&
    Number.isInteger(rating) &&
    rating >= 1 &&
    rating <= 10
  );
}
