// Pure view model: a run view is a fold over its stage events.
// No DOM here, so the whole rendering pipeline is snapshot-testable.

import type { StageEvent } from "./types.js";

export type ConnectionState = "connecting" | "live" | "disconnected" | "ended";

export interface Panel {
  seq: number;
  round: number;
  stage: string;
  kind: string;
  agent: string | null;
  title: string;
  body: string;
}

export interface RunView {
  runId: string;
  goal: string | null;
  status: string;
  panels: Panel[];
  lastSeq: number;
  awaitingFeedback: boolean;
  connection: ConnectionState;
  formError: string | null;
}

export function initialView(runId: string): RunView {
  return {
    runId,
    goal: null,
    status: "running",
    panels: [],
    lastSeq: -1,
    awaitingFeedback: false,
    connection: "connecting",
    formError: null,
  };
}

function text(value: unknown): string {
  if (value == null) return "";
  if (typeof value === "string") return value;
  return JSON.stringify(value, null, 1);
}

export function panelFor(event: StageEvent): Panel {
  const p = event.payload;
  let title = event.kind;
  let body = "";
  switch (event.kind) {
    case "run_started":
      title = "run started";
      body = `${text(p.goal)}\nsetup=${text(p.setup)} structure=${text(p.structure)} experts=${text(p.n_experts)}`;
      break;
    case "prompt": {
      title = `${event.agent ?? "agent"} prompt`;
      const messages = (p.messages as Array<{ role: string; content: string }>) ?? [];
      body = messages.map((m) => `[${m.role}] ${m.content}`).join("\n");
      break;
    }
    case "response":
      title = `${event.agent ?? "agent"} answered`;
      body = text(p.text);
      break;
    case "profiles": {
      title = p.source === "manual_override" ? "experts (manual group)" : "experts recruited";
      const profiles = (p.profiles as Array<{ name: string; description: string }>) ?? [];
      body = profiles.map((x) => `${x.name}: ${x.description}`).join("\n");
      break;
    }
    case "proposal":
      title = `${event.agent} proposed`;
      body = text(p.text);
      break;
    case "review":
      title = `${event.agent} reviewed`;
      body = text(p.text);
      break;
    case "turn":
      title = `${event.agent} said`;
      body = text(p.text);
      break;
    case "summary":
      title = "summarizer";
      body = text(p.text);
      break;
    case "decision": {
      title = `decision (refinements=${text(p.refinements)}, ${text(p.terminated_by)})`;
      const assignments = (p.assignments as Record<string, string>) ?? {};
      const lines = Object.entries(assignments).map(([k, v]) => `${k}: ${v}`);
      body = text(p.decision_text) + (lines.length ? `\n--\n${lines.join("\n")}` : "");
      break;
    }
    case "action":
      title = `${event.agent} acted`;
      body = `${text(p.action)}${p.ok ? "" : ` REJECTED: ${text(p.reason)}`}`;
      break;
    case "tool_call":
      title = `${event.agent} called ${text((p as { tool?: string }).tool)}`;
      body = `args=${text(p.arguments)}\nobservation=${text(p.observation)}`;
      break;
    case "conclusion":
      title = `${event.agent} concluded (${text(p.status)})`;
      body = text(p.summary);
      break;
    case "report":
      title = "execution report";
      body = text(p.summary);
      break;
    case "verdict":
      title = p.solved ? "verdict: solved" : "verdict: rejected";
      body = text(p.feedback);
      break;
    case "awaiting_human":
      title = "awaiting your verdict";
      body = text(p.observation);
      break;
    case "aborted":
      title = "run aborted";
      body = text(p.cause);
      break;
    case "run_finished":
      title = `run finished: ${text(p.status)}`;
      break;
    default:
      body = text(p);
  }
  return {
    seq: event.seq,
    round: event.round,
    stage: event.stage,
    kind: event.kind,
    agent: event.agent ?? null,
    title,
    body,
  };
}

// Rendered order must equal received seq order; a regressing or duplicate
// seq is a client bug (the reconnect cursor guarantees gapless delivery).
export function applyEvent(view: RunView, event: StageEvent): RunView {
  if (event.seq <= view.lastSeq) {
    throw new Error(
      `event out of order: seq ${event.seq} after ${view.lastSeq} (run ${view.runId})`,
    );
  }
  const next: RunView = {
    ...view,
    panels: [...view.panels, panelFor(event)],
    lastSeq: event.seq,
  };
  switch (event.kind) {
    case "run_started":
      next.goal = String(event.payload.goal ?? "");
      break;
    case "awaiting_human":
      next.status = "awaiting_human";
      next.awaitingFeedback = true;
      break;
    case "verdict":
      next.awaitingFeedback = false;
      next.formError = null;
      break;
    case "run_finished":
      next.status = String(event.payload.status ?? "finished");
      next.awaitingFeedback = false;
      break;
    case "aborted":
      next.status = "aborted";
      break;
  }
  return next;
}

export function applyAll(view: RunView, events: StageEvent[]): RunView {
  return events.reduce(applyEvent, view);
}

export interface RoundGroup {
  round: number;
  stages: { stage: string; panels: Panel[] }[];
}

// Panels grouped per round and stage, preserving seq order inside each group.
export function groupPanels(panels: Panel[]): RoundGroup[] {
  const rounds = new Map<number, Map<string, Panel[]>>();
  for (const panel of panels) {
    if (!rounds.has(panel.round)) rounds.set(panel.round, new Map());
    const stages = rounds.get(panel.round)!;
    if (!stages.has(panel.stage)) stages.set(panel.stage, []);
    stages.get(panel.stage)!.push(panel);
  }
  return [...rounds.entries()]
    .sort((a, b) => a[0] - b[0])
    .map(([round, stages]) => ({
      round,
      stages: [...stages.entries()].map(([stage, inner]) => ({ stage, panels: inner })),
    }));
}

export function validateFeedback(solved: boolean, feedback: string): string | null {
  if (!solved && feedback.trim() === "") {
    return "a rejection needs feedback for the next round";
  }
  return null;
}
