// Thin client over the gateway's documented endpoints; nothing else.

import type { ApiError, RunSummary, TaskInfo } from "./types.js";

export type FeedbackResult =
  | { ok: true }
  | { ok: false; status: number; code: string; message: string };

async function getJson<T>(url: string, fetchImpl: typeof fetch): Promise<T> {
  const response = await fetchImpl(url);
  if (!response.ok) {
    throw new Error(`${url} -> ${response.status}`);
  }
  return (await response.json()) as T;
}

export function listTasks(baseUrl: string, fetchImpl: typeof fetch = fetch) {
  return getJson<TaskInfo[]>(`${baseUrl}/v1/tasks`, fetchImpl);
}

export function listRuns(baseUrl: string, fetchImpl: typeof fetch = fetch) {
  return getJson<RunSummary[]>(`${baseUrl}/v1/runs`, fetchImpl);
}

export function getRun(baseUrl: string, runId: string, fetchImpl: typeof fetch = fetch) {
  return getJson<RunSummary>(`${baseUrl}/v1/runs/${runId}`, fetchImpl);
}

export async function startRun(
  baseUrl: string,
  body: { task_id: string; setup?: string },
  fetchImpl: typeof fetch = fetch,
): Promise<{ run_id: string }> {
  const response = await fetchImpl(`${baseUrl}/v1/runs`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
  const payload = (await response.json()) as { run_id?: string } & ApiError;
  if (response.status !== 202 || !payload.run_id) {
    throw new Error(payload.message ?? `start failed: ${response.status}`);
  }
  return { run_id: payload.run_id };
}

export async function submitFeedback(
  baseUrl: string,
  runId: string,
  solved: boolean,
  feedback: string,
  fetchImpl: typeof fetch = fetch,
): Promise<FeedbackResult> {
  const response = await fetchImpl(`${baseUrl}/v1/runs/${runId}/feedback`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ solved, feedback }),
  });
  if (response.status === 204) {
    return { ok: true };
  }
  let code = "error";
  let message = `feedback rejected: ${response.status}`;
  try {
    const body = (await response.json()) as ApiError;
    code = body.code ?? code;
    message = body.message ?? message;
  } catch {
    // non-JSON error body; keep defaults
  }
  return { ok: false, status: response.status, code, message };
}
