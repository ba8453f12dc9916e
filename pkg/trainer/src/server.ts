/**
 * Minimal inference server for trained checkpoints.
 *
 * Speaks the same wire contract the core pipeline's HTTP backend expects:
 * POST /generate with {"prompt", "max_tokens", "temperature"} returns
 * {"text": ...}. Greedy decoding at temperature 0; seeded sampling above.
 */

import * as fs from "fs";
import * as http from "http";

import { Checkpoint, CharLm, loadCheckpoint, makeRng } from "./model";

export interface ServerOptions {
  checkpointPath: string;
  port: number;
  host?: string;
  maxChars?: number;
  seed?: number;
}

export function loadModel(checkpointPath: string): CharLm {
  const checkpoint = JSON.parse(fs.readFileSync(checkpointPath, "utf-8")) as Checkpoint;
  return loadCheckpoint(checkpoint);
}

export function createServer(options: ServerOptions): http.Server {
  const model = loadModel(options.checkpointPath);
  const cap = options.maxChars ?? 512;
  let requestCounter = 0;

  return http.createServer((req, res) => {
    if (req.method !== "POST" || req.url !== "/generate") {
      res.writeHead(404, { "Content-Type": "application/json" });
      res.end(JSON.stringify({ error: "POST /generate only" }));
      return;
    }
    let body = "";
    req.on("data", (chunk) => (body += chunk));
    req.on("end", () => {
      let payload: { prompt?: unknown; max_tokens?: unknown; temperature?: unknown };
      try {
        payload = JSON.parse(body);
      } catch {
        res.writeHead(400, { "Content-Type": "application/json" });
        res.end(JSON.stringify({ error: "invalid JSON body" }));
        return;
      }
      if (typeof payload.prompt !== "string") {
        res.writeHead(400, { "Content-Type": "application/json" });
        res.end(JSON.stringify({ error: "prompt must be a string" }));
        return;
      }
      const maxTokens = typeof payload.max_tokens === "number" ? payload.max_tokens : 512;
      const temperature = typeof payload.temperature === "number" ? payload.temperature : 0;
      const rng =
        temperature > 0 ? makeRng((options.seed ?? 7) + requestCounter++) : undefined;
      const text = model.generate(payload.prompt, Math.min(maxTokens, cap), temperature, rng);
      const out = JSON.stringify({ text });
      res.writeHead(200, { "Content-Type": "application/json" });
      res.end(out);
    });
  });
}

export function serve(options: ServerOptions): Promise<http.Server> {
  const server = createServer(options);
  return new Promise((resolve) => {
    server.listen(options.port, options.host ?? "127.0.0.1", () => resolve(server));
  });
}
