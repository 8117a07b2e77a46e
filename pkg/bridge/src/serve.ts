import * as net from "node:net";
import * as readline from "node:readline";
import type { Readable, Writable } from "node:stream";

import { encode, handleLine, newSession, type Model } from "./protocol.js";

/** Serve one session over a pair of line streams; resolves when input ends. */
export function serveStreams(input: Readable, output: Writable, model: Model): Promise<void> {
  const state = newSession();
  const lines = readline.createInterface({ input, crlfDelay: Infinity });
  return new Promise((resolve) => {
    lines.on("line", (line) => {
      if (line.trim().length === 0) return;
      output.write(encode(handleLine(line, model, state)));
    });
    lines.on("close", () => resolve());
  });
}

/** Mirror the stdio protocol over TCP; every connection is its own session. */
export function serveTcp(port: number, model: Model): net.Server {
  const server = net.createServer((socket) => {
    void serveStreams(socket, socket, model).then(() => socket.end());
  });
  server.listen(port);
  return server;
}
