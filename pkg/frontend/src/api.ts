/*
 * Thin typed client for the /v1 API, plus the client-side send queue.
 * The queue keeps at most one query in flight; later sends wait their turn
 * so answers always land in request order.
 */

import type {
  AskRequest,
  AskResponse,
  EvalReport,
  HealthResponse,
  ManualsResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function requestJson<T>(path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(path, init);
  if (!response.ok) {
    throw new ApiError(response.status, await response.text());
  }
  return (await response.json()) as T;
}

export function ask(payload: AskRequest): Promise<AskResponse> {
  return requestJson<AskResponse>("/v1/ask", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(payload),
  });
}

export function listManuals(): Promise<ManualsResponse> {
  return requestJson<ManualsResponse>("/v1/manuals");
}

export function health(): Promise<HealthResponse> {
  return requestJson<HealthResponse>("/v1/health");
}

export function runEval(datasetPath: string, rubricPath?: string): Promise<EvalReport> {
  return requestJson<EvalReport>("/v1/eval", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(
      rubricPath
        ? { dataset_path: datasetPath, rubric_path: rubricPath }
        : { dataset_path: datasetPath },
    ),
  });
}

/** Serializes async work: one task runs at a time, FIFO. */
export class SendQueue {
  private tail: Promise<unknown> = Promise.resolve();
  private pending = 0;

  get size(): number {
    return this.pending;
  }

  enqueue<T>(task: () => Promise<T>): Promise<T> {
    this.pending += 1;
    const run = this.tail.then(task);
    // Keep the chain alive whether the task resolves or rejects.
    this.tail = run.then(
      () => undefined,
      () => undefined,
    );
    return run.finally(() => {
      this.pending -= 1;
    });
  }
}
