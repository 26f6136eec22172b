/**
 * WebSocket-to-TCP bridge so index.html can reach the serve socket:
 *
 *   node dist/bridge.js 127.0.0.1:8765 8766
 *
 * Each browser connection gets its own TCP connection; lines pass through
 * untouched in both directions.
 */

import * as net from "node:net";

import { WebSocketServer } from "ws";

import { splitEndpoint } from "./client.js";

const target = process.argv[2] ?? "127.0.0.1:8765";
const listenPort = Number(process.argv[3] ?? "8766");
const [host, port] = splitEndpoint(target);

const server = new WebSocketServer({ port: listenPort });
server.on("connection", (browser) => {
  const upstream = net.createConnection({ host, port: Number(port) });
  upstream.on("data", (chunk) => browser.send(chunk));
  upstream.on("close", () => browser.close());
  upstream.on("error", () => browser.close());
  browser.on("message", (message) => upstream.write(message.toString() as string));
  browser.on("close", () => upstream.end());
});

console.log(`bridging ws://127.0.0.1:${listenPort} <-> tcp ${target}`);
