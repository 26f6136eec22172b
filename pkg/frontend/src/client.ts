/**
 * Session API client: line-delimited JSON over any byte transport.
 * Transports only move bytes; all protocol handling lives here so the
 * same client runs over a raw TCP socket (node) or a WebSocket bridge.
 */

import type { Command, SessionEvent } from "./types.js";

/** Reassembles UTF-8 NDJSON lines from arbitrary chunk boundaries. */
export class LineDecoder {
  private buffer = new Uint8Array(0);

  push(chunk: Uint8Array): string[] {
    const merged = new Uint8Array(this.buffer.length + chunk.length);
    merged.set(this.buffer);
    merged.set(chunk, this.buffer.length);
    const lines: string[] = [];
    let start = 0;
    for (let i = 0; i < merged.length; i++) {
      if (merged[i] === 0x0a) {
        lines.push(new TextDecoder().decode(merged.subarray(start, i)));
        start = i + 1;
      }
    }
    this.buffer = merged.slice(start);
    return lines.filter((line) => line.trim().length > 0);
  }
}

export interface Transport {
  send(line: string): void;
  close(): void;
}

export interface ClientHooks {
  onEvent: (event: SessionEvent) => void;
  onClose?: () => void;
  onProtocolError?: (detail: string) => void;
}

export class SessionClient {
  private readonly decoder = new LineDecoder();
  private lastSeq = -1;

  constructor(
    private readonly transport: Transport,
    private readonly hooks: ClientHooks,
  ) {}

  /** Feed raw bytes from the transport. */
  receive(chunk: Uint8Array): void {
    for (const line of this.decoder.push(chunk)) {
      let event: SessionEvent;
      try {
        event = JSON.parse(line) as SessionEvent;
      } catch {
        this.hooks.onProtocolError?.(`unparseable event line: ${line.slice(0, 80)}`);
        continue;
      }
      if (typeof event.seq !== "number" || event.seq <= this.lastSeq) {
        this.hooks.onProtocolError?.(`sequence regression at ${String(event.seq)}`);
        continue;
      }
      this.lastSeq = event.seq;
      this.hooks.onEvent(event);
    }
  }

  send(command: Command): void {
    this.transport.send(JSON.stringify(command) + "\n");
  }

  closed(): void {
    this.hooks.onClose?.();
  }

  close(): void {
    this.transport.close();
  }
}

/** Raw TCP transport for node (the serve endpoint's native carrier). */
export async function connectTcp(
  endpoint: string,
  hooks: ClientHooks,
): Promise<SessionClient> {
  const net = await import("node:net");
  const [host, portText] = splitEndpoint(endpoint);
  const socket = net.createConnection({ host, port: Number(portText) });
  const client = new SessionClient(
    {
      send: (line) => socket.write(line),
      close: () => socket.end(),
    },
    hooks,
  );
  socket.on("data", (chunk: Buffer) => client.receive(chunk));
  socket.on("close", () => client.closed());
  await new Promise<void>((resolve, reject) => {
    socket.once("connect", resolve);
    socket.once("error", reject);
  });
  return client;
}

export function splitEndpoint(endpoint: string): [string, string] {
  const at = endpoint.lastIndexOf(":");
  if (at < 1) {
    throw new Error(`endpoint must be host:port, got ${endpoint}`);
  }
  return [endpoint.slice(0, at), endpoint.slice(at + 1)];
}
