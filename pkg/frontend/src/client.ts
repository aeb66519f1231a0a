import { BestPayload, Pick, SessionPayload } from './types.js';

export class ConflictError extends Error {
  detail: unknown;

  constructor(detail: unknown) {
    super('conflict');
    this.detail = detail;
  }
}

export class ApiError extends Error {
  status: number;
  detail: unknown;

  constructor(status: number, detail: unknown) {
    super(`request failed with ${status}`);
    this.status = status;
    this.detail = detail;
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function errorFor(resp: Response): Promise<Error> {
  let detail: unknown = null;
  try {
    detail = (await resp.json()).detail;
  } catch {
    // non-JSON error body; keep the status alone
  }
  return resp.status === 409 ? new ConflictError(detail) : new ApiError(resp.status, detail);
}

export class ServiceClient {
  baseUrl: string;
  private fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/$/, '');
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path);
    if (!resp.ok) throw await errorFor(resp);
    return (await resp.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
    if (!resp.ok) throw await errorFor(resp);
    return (await resp.json()) as T;
  }

  health(): Promise<{ status: string; sessions: number }> {
    return this.getJson('/health');
  }

  generators(): Promise<{ id: string }[]> {
    return this.getJson('/generators');
  }

  createSession(generator: string, preset: string, seed: number): Promise<SessionPayload> {
    return this.postJson('/sessions', { generator, preset, seed });
  }

  getSession(sessionId: string): Promise<SessionPayload> {
    return this.getJson(`/sessions/${sessionId}`);
  }

  submitSelection(sessionId: string, picks: Pick[], iteration: number): Promise<SessionPayload> {
    return this.postJson(`/sessions/${sessionId}/selection`, { picks, iteration });
  }

  undo(sessionId: string): Promise<SessionPayload> {
    return this.postJson(`/sessions/${sessionId}/undo`, {});
  }

  getBest(sessionId: string): Promise<BestPayload> {
    return this.getJson(`/sessions/${sessionId}/best`);
  }

  imageUrl(imageId: string): string {
    return `${this.baseUrl}/images/${imageId}.png`;
  }

  async imageBytes(imageId: string): Promise<Uint8Array> {
    const resp = await this.fetchFn(this.imageUrl(imageId));
    if (!resp.ok) throw await errorFor(resp);
    return new Uint8Array(await resp.arrayBuffer());
  }
}
