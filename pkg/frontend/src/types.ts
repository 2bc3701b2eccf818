// Wire types mirroring the gateway's JSON bodies.

export type StageName = "recruit" | "decide" | "execute" | "evaluate";

export interface StageEvent {
  seq: number;
  round: number;
  stage: StageName;
  kind: string;
  agent: string | null;
  payload: Record<string, unknown>;
  ts?: string;
}

export interface RunSummary {
  run_id: string;
  task_id?: string;
  goal: string;
  status: string;
  round: number;
  rounds: number;
  terminal: boolean;
  updated_at: string | null;
}

export interface TaskInfo {
  id: string;
  goal: string;
  kind: string;
}

export interface ApiError {
  code: string;
  message: string;
  details?: unknown;
}

export function parseEventLine(line: string): StageEvent {
  const raw = JSON.parse(line) as Record<string, unknown>;
  if (typeof raw.seq !== "number" || typeof raw.kind !== "string") {
    throw new Error(`malformed event line: ${line.slice(0, 80)}`);
  }
  return raw as unknown as StageEvent;
}
