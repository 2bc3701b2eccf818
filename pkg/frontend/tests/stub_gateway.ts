// A recorded-fixture gateway stub: replays a transcript over the documented
// endpoints, optionally pausing delivery at the first awaiting_human event
// until a feedback verdict is posted.

import { createServer, type Server } from "node:http";
import { readFileSync } from "node:fs";
import type { AddressInfo } from "node:net";

export interface StubOptions {
  pauseAtAwaiting?: boolean;
  // Close the stream after serving this many lines per request (forces the
  // client to reconnect); Infinity streams everything available.
  chunkSize?: number;
  keepAliveBlanks?: boolean;
}

export interface Stub {
  url: string;
  posted: Array<{ solved: boolean; feedback: string }>;
  requests: string[];
  close(): Promise<void>;
}

interface Line {
  seq: number;
  kind: string;
  text: string;
}

export function loadFixture(path: string): string[] {
  return readFileSync(path, "utf-8")
    .split("\n")
    .filter((line) => line.trim().length > 0);
}

export function startStub(lines: string[], options: StubOptions = {}): Promise<Stub> {
  const parsed: Line[] = lines.map((text) => {
    const raw = JSON.parse(text) as { seq: number; kind: string };
    return { seq: raw.seq, kind: raw.kind, text };
  });
  const pauseIndex = options.pauseAtAwaiting
    ? parsed.findIndex((line) => line.kind === "awaiting_human")
    : -1;
  // barrier: index one past the last line currently visible to clients
  let barrier = pauseIndex >= 0 ? pauseIndex + 1 : parsed.length;
  const posted: Array<{ solved: boolean; feedback: string }> = [];
  const requests: string[] = [];
  const chunkSize = options.chunkSize ?? Number.POSITIVE_INFINITY;

  const server: Server = createServer((request, response) => {
    const url = new URL(request.url ?? "/", "http://stub");
    requests.push(`${request.method} ${url.pathname}${url.search}`);

    if (request.method === "GET" && /\/v1\/runs\/[^/]+\/events$/.test(url.pathname)) {
      const from = Number(url.searchParams.get("from") ?? "0");
      response.writeHead(200, { "content-type": "application/x-ndjson" });
      if (options.keepAliveBlanks) response.write("\n");
      let served = 0;
      for (const line of parsed) {
        if (line.seq < from) continue;
        if (parsed.indexOf(line) >= barrier) break;
        response.write(line.text + "\n");
        if (options.keepAliveBlanks) response.write("\n");
        served += 1;
        if (served >= chunkSize) break;
      }
      response.end();
      return;
    }

    if (request.method === "GET" && /\/v1\/runs\/[^/]+$/.test(url.pathname)) {
      const visible = parsed.slice(0, barrier);
      const awaiting = visible[visible.length - 1]?.kind === "awaiting_human";
      response.writeHead(200, { "content-type": "application/json" });
      response.end(
        JSON.stringify({
          run_id: url.pathname.split("/").pop(),
          goal: "fixture goal",
          status: awaiting ? "awaiting_human" : "solved",
          round: 0,
          rounds: 1,
          terminal: barrier >= parsed.length,
          updated_at: null,
        }),
      );
      return;
    }

    if (request.method === "POST" && /\/v1\/runs\/[^/]+\/feedback$/.test(url.pathname)) {
      let body = "";
      request.on("data", (chunk) => (body += chunk));
      request.on("end", () => {
        const verdict = JSON.parse(body) as { solved: boolean; feedback: string };
        if (!verdict.solved && verdict.feedback.trim() === "") {
          response.writeHead(422, { "content-type": "application/json" });
          response.end(
            JSON.stringify({ code: "empty_feedback", message: "a rejection requires feedback text" }),
          );
          return;
        }
        if (barrier >= parsed.length) {
          response.writeHead(409, { "content-type": "application/json" });
          response.end(
            JSON.stringify({ code: "not_awaiting", message: "run is not awaiting_human" }),
          );
          return;
        }
        posted.push(verdict);
        barrier = parsed.length; // release the rest of the transcript
        response.writeHead(204).end();
      });
      return;
    }

    response.writeHead(404, { "content-type": "application/json" });
    response.end(JSON.stringify({ code: "unknown", message: "not found" }));
  });

  return new Promise((resolve) => {
    server.listen(0, "127.0.0.1", () => {
      const { port } = server.address() as AddressInfo;
      resolve({
        url: `http://127.0.0.1:${port}`,
        posted,
        requests,
        close: () =>
          new Promise<void>((done) => {
            server.close(() => done());
          }),
      });
    });
  });
}
