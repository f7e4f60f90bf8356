// Thin fetch wrapper over the collection service. Server rejections carry
// the status and the server's own detail text so the UI can show them
// verbatim; network failures reject with the underlying error untouched.

import type { Progress, ResponseBody, SubmitAck, TaskPayload } from "./types.js";

export class ServiceError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(`service returned ${status}: ${detail}`);
    this.name = "ServiceError";
    this.status = status;
    this.detail = detail;
  }
}

async function detailOf(res: Response): Promise<string> {
  try {
    const body = (await res.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body);
  } catch {
    return res.statusText || "unknown error";
  }
}

export class ServiceClient {
  private readonly base: string;
  private readonly fetchImpl: typeof fetch;

  constructor(baseUrl: string, fetchImpl: typeof fetch = fetch) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl;
  }

  /** Lease the next task; null when the queue is drained for this annotator. */
  async nextTask(annotator: string): Promise<TaskPayload | null> {
    const url = `${this.base}/tasks/next?annotator=${encodeURIComponent(annotator)}`;
    const res = await this.fetchImpl(url);
    if (res.status === 204) return null;
    if (!res.ok) throw new ServiceError(res.status, await detailOf(res));
    return (await res.json()) as TaskPayload;
  }

  async submit(body: ResponseBody): Promise<SubmitAck> {
    const res = await this.fetchImpl(`${this.base}/responses`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) throw new ServiceError(res.status, await detailOf(res));
    return (await res.json()) as SubmitAck;
  }

  async progress(): Promise<Progress> {
    const res = await this.fetchImpl(`${this.base}/progress`);
    if (!res.ok) throw new ServiceError(res.status, await detailOf(res));
    return (await res.json()) as Progress;
  }

  /** The raw response log, one JSON object per line. */
  async exportLog(): Promise<string> {
    const res = await this.fetchImpl(`${this.base}/export`);
    if (!res.ok) throw new ServiceError(res.status, await detailOf(res));
    return res.text();
  }
}
