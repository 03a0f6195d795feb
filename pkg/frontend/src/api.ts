// Thin fetch client for the challenge service JSON API.

export interface CreatedChallenge {
  id: string;
  image_url: string;
  expires_at: number;
}

export interface BucketRow {
  responder: string;
  radius: number;
  n: number;
  avg_char_similarity: number;
  exact_match_pct: number;
  readable_pct: number;
  avg_rating: number | null;
}

export interface Report {
  schema_version: number;
  buckets: BucketRow[];
  totals: Record<string, BucketRow | null>;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export interface TrialApi {
  createChallenge(radius?: number): Promise<CreatedChallenge>;
  submitAnswer(id: string, response: string, rating: number): Promise<void>;
  fetchReport(): Promise<Report | null>;
}

async function expectJson<T>(res: Response): Promise<T> {
  if (!res.ok) {
    throw new ApiError(res.status, `${res.status} ${res.statusText}`);
  }
  return (await res.json()) as T;
}

export function httpApi(baseUrl = ""): TrialApi {
  return {
    async createChallenge(radius?: number): Promise<CreatedChallenge> {
      const body = radius === undefined ? {} : { radius };
      const res = await fetch(`${baseUrl}/api/challenge`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
      return expectJson<CreatedChallenge>(res);
    },

    async submitAnswer(id: string, response: string, rating: number): Promise<void> {
      const res = await fetch(`${baseUrl}/api/trial/answer`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ id, response, rating }),
      });
      await expectJson<{ recorded: boolean }>(res);
    },

    async fetchReport(): Promise<Report | null> {
      const res = await fetch(`${baseUrl}/api/report`);
      if (res.status === 204) return null;
      return expectJson<Report>(res);
    },
  };
}
