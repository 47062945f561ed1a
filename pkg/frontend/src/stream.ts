// Listen-topic stream: the service delivers inbound envelopes as
// newline-delimited JSON over a long-lived GET. The parser is separated
// from the transport so it can be tested on raw chunks.

import type { Envelope } from "./types.js";

/** Incremental NDJSON splitter: feed chunks, get complete JSON lines. */
export class NdjsonParser {
  private buffer = "";

  push(chunk: string): Envelope[] {
    this.buffer += chunk;
    const out: Envelope[] = [];
    let idx: number;
    while ((idx = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, idx).trim();
      this.buffer = this.buffer.slice(idx + 1);
      if (line) out.push(JSON.parse(line) as Envelope);
    }
    return out;
  }
}

export interface StreamCallbacks {
  onEnvelope: (env: Envelope) => void;
  onDown?: () => void; // connection lost, retrying
  onUp?: () => void; // (re)connected
}

const RETRY_MS = 1000;

/** Long-lived envelope stream with automatic reconnect. */
export class ListenStream {
  private stopped = false;
  private controller: AbortController | null = null;

  constructor(
    private url: string,
    private token: string,
    private callbacks: StreamCallbacks,
  ) {}

  start(): void {
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
  }

  private async loop(): Promise<void> {
    while (!this.stopped) {
      try {
        this.controller = new AbortController();
        const resp = await fetch(this.url, {
          headers: { Authorization: `Bearer ${this.token}` },
          signal: this.controller.signal,
        });
        if (!resp.ok || !resp.body) throw new Error(`stream HTTP ${resp.status}`);
        this.callbacks.onUp?.();
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        const parser = new NdjsonParser();
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          for (const env of parser.push(decoder.decode(value, { stream: true }))) {
            this.callbacks.onEnvelope(env);
          }
        }
      } catch {
        // fall through to retry
      }
      if (this.stopped) return;
      this.callbacks.onDown?.();
      await new Promise((r) => setTimeout(r, RETRY_MS));
    }
  }
}
