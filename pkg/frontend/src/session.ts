// DOM-free session controller: drives the state machine against the API.
//
// At most one request is in flight at any time; every state change is
// funneled through reduce() and reported via onChange.

import { ApiError, Report, TrialApi } from "./api.js";
import { SessionEvent, SessionState, initialState, reduce } from "./state.js";

export interface SessionOptions {
  n: number;
  radius?: number;
  onChange?: (state: SessionState) => void;
}

export class SessionController {
  state: SessionState;
  report: Report | null = null;

  constructor(private api: TrialApi, private options: SessionOptions) {
    this.state = initialState(options.n);
  }

  private dispatch(event: SessionEvent): SessionState {
    this.state = reduce(this.state, event);
    this.options.onChange?.(this.state);
    return this.state;
  }

  async start(): Promise<void> {
    if (this.state.phase === "loading") {
      await this.fetchNext();
    } else if (this.state.phase === "done") {
      await this.loadReport();
    }
  }

  async retry(): Promise<void> {
    if (this.state.phase !== "loading") return;
    this.dispatch({ kind: "retry" });
    await this.fetchNext();
  }

  private async fetchNext(): Promise<void> {
    try {
      const created = await this.api.createChallenge(this.options.radius);
      this.dispatch({
        kind: "challenge_loaded",
        challenge: { id: created.id, imageUrl: created.image_url },
      });
    } catch (err) {
      this.dispatch({ kind: "challenge_failed", message: describe(err) });
    }
  }

  async submit(answer: string, rating: number): Promise<void> {
    if (this.state.phase !== "answering" || this.state.inFlight) return;
    const current = this.state.current;
    if (!current) return;
    this.dispatch({ kind: "submit_started" });
    let after: SessionState;
    try {
      await this.api.submitAnswer(current.id, answer, rating);
      after = this.dispatch({ kind: "submit_accepted" });
    } catch (err) {
      if (err instanceof ApiError && err.status === 410) {
        after = this.dispatch({ kind: "submit_gone" });
      } else {
        this.dispatch({ kind: "submit_failed", message: describe(err) });
        return;
      }
    }
    if (after.phase === "loading") {
      await this.fetchNext();
    } else if (after.phase === "done") {
      await this.loadReport();
    }
  }

  private async loadReport(): Promise<void> {
    try {
      this.report = await this.api.fetchReport();
    } catch {
      this.report = null; // summary is best-effort; the session still ends
    }
    this.options.onChange?.(this.state);
  }
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}
