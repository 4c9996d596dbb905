/** Typed client for the diagnosis session HTTP API. */

export interface Proposal {
  wire: string;
  wireEntropy: number;
  component?: string;
  componentPosterior?: number;
  oracleValue?: number;
}

export interface SessionState {
  id: string;
  phase: "compiling" | "ready" | "failed";
  status?: "running" | "done" | "stuck" | "failed" | "compiling";
  circuit: string;
  mode?: string;
  heuristic?: string;
  cost?: number;
  observation?: Record<string, number>;
  measurements?: [string, number][];
  faults?: string[];
  posteriors?: Record<string, number>;
  implications?: Record<string, number>;
  proposal?: Proposal;
  error?: string;
}

export interface AbstractionReport {
  abstraction: string[];
  cones: Record<string, { members: string[]; inputs: string[] }>;
}

export interface CreateRequest {
  circuit: { name?: string; bench?: string };
  observation: Record<string, number>;
  mode?: string;
  heuristic?: string;
  k?: number | null;
  faults?: string[];
  seed?: number;
}

export class ApiError extends Error {
  constructor(public code: string, message: string, public status: number) {
    super(message);
  }
}

async function unwrap<T>(resp: Response): Promise<T> {
  const body = await resp.json();
  if (!resp.ok) {
    const err = body?.error ?? body?.detail ?? {};
    throw new ApiError(err.code ?? "error", err.message ?? resp.statusText,
      resp.status);
  }
  return body as T;
}

export class SessionApi {
  constructor(private base: string, private fetcher: typeof fetch = fetch) {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  async listCircuits(): Promise<string[]> {
    const body = await unwrap<{ circuits: string[] }>(
      await this.fetcher(this.url("/circuits")));
    return body.circuits;
  }

  async circuitText(name: string): Promise<string> {
    const body = await unwrap<{ bench: string }>(
      await this.fetcher(this.url(`/circuits/${name}`)));
    return body.bench;
  }

  async createSession(req: CreateRequest): Promise<SessionState> {
    return unwrap(await this.fetcher(this.url("/sessions"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    }));
  }

  async getSession(id: string): Promise<SessionState> {
    return unwrap(await this.fetcher(this.url(`/sessions/${id}`)));
  }

  async getAbstraction(id: string): Promise<AbstractionReport> {
    return unwrap(await this.fetcher(this.url(`/sessions/${id}/abstraction`)));
  }

  async getProposal(id: string): Promise<Proposal> {
    return unwrap(await this.fetcher(this.url(`/sessions/${id}/proposal`)));
  }

  async postMeasurement(id: string, wire: string, value: number):
      Promise<SessionState> {
    return unwrap(await this.fetcher(this.url(`/sessions/${id}/measurements`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ wire, value }),
    }));
  }

  async deleteSession(id: string): Promise<void> {
    await this.fetcher(this.url(`/sessions/${id}`), { method: "DELETE" });
  }
}
