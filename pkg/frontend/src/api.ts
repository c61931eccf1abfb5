/** Thin typed client over the scheduling service; every user action in the
 * app maps to exactly one of these calls. */

import type {
  ContrastDocument,
  EditOp,
  Instance,
  JustificationDocument,
  MusDocument,
  Outcome,
  SessionState,
} from "./types";

export class ServiceError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const detail =
      typeof body === "object" && body !== null && "detail" in body
        ? String((body as { detail: unknown }).detail)
        : response.statusText;
    throw new ServiceError(response.status, detail);
  }
  return body as T;
}

export class PlannerClient {
  constructor(readonly base: string) {}

  health(): Promise<{ status: string }> {
    return request(`${this.base}/health`);
  }

  async createSession(instance: Instance): Promise<string> {
    const body = await request<{ id: string }>(`${this.base}/sessions`, {
      method: "POST",
      body: JSON.stringify({ instance }),
    });
    return body.id;
  }

  getSession(id: string): Promise<SessionState> {
    return request(`${this.base}/sessions/${id}`);
  }

  solve(id: string, timeLimitS = 30): Promise<Outcome> {
    return request(`${this.base}/sessions/${id}/solve`, {
      method: "POST",
      body: JSON.stringify({ time_limit_s: timeLimitS }),
    });
  }

  edit(id: string, ops: EditOp[]): Promise<SessionState> {
    return request(`${this.base}/sessions/${id}/edit`, {
      method: "POST",
      body: JSON.stringify({ ops }),
    });
  }

  explainUnsat(id: string): Promise<MusDocument> {
    return request(`${this.base}/sessions/${id}/explain/unsat`, {
      method: "POST",
      body: JSON.stringify({}),
    });
  }

  explainWhy(id: string, atom: string): Promise<JustificationDocument> {
    return request(`${this.base}/sessions/${id}/explain/why`, {
      method: "POST",
      body: JSON.stringify({ atom }),
    });
  }

  explainContrast(
    id: string,
    keep: string,
    instead: string,
  ): Promise<ContrastDocument> {
    return request(`${this.base}/sessions/${id}/explain/contrast`, {
      method: "POST",
      body: JSON.stringify({ keep, instead }),
    });
  }

  addBackground(
    id: string,
    facts: string[],
  ): Promise<{ satisfiable: boolean; mus: { label: string; description: string }[] | null }> {
    return request(`${this.base}/sessions/${id}/background`, {
      method: "POST",
      body: JSON.stringify({ facts }),
    });
  }

  /** What-if loop: apply edits, re-solve, and hand back the fresh state. */
  async whatIf(
    id: string,
    ops: EditOp[],
    timeLimitS = 30,
  ): Promise<{ outcome: Outcome; state: SessionState }> {
    await this.edit(id, ops);
    const outcome = await this.solve(id, timeLimitS);
    const state = await this.getSession(id);
    return { outcome, state };
  }
}
