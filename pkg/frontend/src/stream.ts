// NDJSON event stream client with a reconnect cursor: after any disconnect
// it resumes from the last seen seq + 1, so the view never gaps or repeats.

import { parseEventLine, type StageEvent } from "./types.js";
import type { ConnectionState } from "./model.js";

export interface SubscribeOptions {
  baseUrl: string;
  runId: string;
  fromSeq?: number;
  onEvent: (event: StageEvent) => void;
  onConnection?: (state: ConnectionState) => void;
  retryDelayMs?: number;
  maxReconnects?: number;
  fetchImpl?: typeof fetch;
}

export interface Subscription {
  stop(): void;
  done: Promise<void>;
}

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export function subscribeEvents(options: SubscribeOptions): Subscription {
  const fetchImpl = options.fetchImpl ?? fetch;
  const retryDelayMs = options.retryDelayMs ?? 1000;
  const maxReconnects = options.maxReconnects ?? Number.POSITIVE_INFINITY;
  const notify = options.onConnection ?? (() => {});
  const controller = new AbortController();
  let cursor = options.fromSeq ?? 0;
  let stopped = false;
  let finished = false;

  async function readOnce(): Promise<void> {
    const url = `${options.baseUrl}/v1/runs/${options.runId}/events?from=${cursor}`;
    const response = await fetchImpl(url, { signal: controller.signal });
    if (!response.ok || !response.body) {
      throw new Error(`stream request failed: ${response.status}`);
    }
    notify("live");
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let newline = buffer.indexOf("\n");
      while (newline >= 0) {
        const line = buffer.slice(0, newline).trim();
        buffer = buffer.slice(newline + 1);
        newline = buffer.indexOf("\n");
        if (!line) continue; // keep-alive
        const event = parseEventLine(line);
        cursor = event.seq + 1;
        if (event.kind === "run_finished") finished = true;
        options.onEvent(event);
      }
    }
  }

  const done = (async () => {
    let attempts = 0;
    notify("connecting");
    while (!stopped && !finished) {
      try {
        await readOnce();
      } catch (error) {
        if (stopped) break;
      }
      if (finished || stopped) break;
      attempts += 1;
      if (attempts > maxReconnects) break;
      notify("disconnected");
      await sleep(retryDelayMs);
      if (!stopped) notify("connecting");
    }
    if (finished) notify("ended");
  })();

  return {
    stop() {
      stopped = true;
      controller.abort();
    },
    done,
  };
}
