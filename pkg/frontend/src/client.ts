// Session-service client: REST calls plus a resumable event stream.
// The SSE parsing is pure over text chunks so tests can drive it without
// a network.

import type { SceneSnapshot, SessionDescriptor, SessionEvent } from "./types.js";

export interface SseFrame {
  id: number | null;
  event: string | null;
  data: string;
}

// Incremental SSE parser; feed() returns completed frames.
export class SseParser {
  private buffer = "";

  feed(chunk: string): SseFrame[] {
    this.buffer += chunk;
    const frames: SseFrame[] = [];
    let boundary = this.buffer.indexOf("\n\n");
    while (boundary !== -1) {
      const raw = this.buffer.slice(0, boundary);
      this.buffer = this.buffer.slice(boundary + 2);
      const frame: SseFrame = { id: null, event: null, data: "" };
      for (const line of raw.split("\n")) {
        if (line.startsWith("id: ")) {
          frame.id = Number(line.slice(4));
        } else if (line.startsWith("event: ")) {
          frame.event = line.slice(7);
        } else if (line.startsWith("data: ")) {
          frame.data += line.slice(6);
        }
      }
      if (frame.data !== "") {
        frames.push(frame);
      }
      boundary = this.buffer.indexOf("\n\n");
    }
    return frames;
  }
}

export function parseEvents(chunks: Iterable<string>): SessionEvent[] {
  const parser = new SseParser();
  const events: SessionEvent[] = [];
  for (const chunk of chunks) {
    for (const frame of parser.feed(chunk)) {
      events.push(JSON.parse(frame.data) as SessionEvent);
    }
  }
  return events;
}

export class SessionClient {
  constructor(private readonly baseUrl: string) {}

  async createSession(scenario: string, seed: number, config: Record<string, unknown> = {}): Promise<SessionDescriptor> {
    const response = await fetch(`${this.baseUrl}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ scenario, seed, config }),
    });
    if (!response.ok) {
      throw new Error(`create session failed: HTTP ${response.status}`);
    }
    return (await response.json()) as SessionDescriptor;
  }

  async submitInstruction(sessionId: string, text: string): Promise<{ busy: boolean }> {
    const response = await fetch(`${this.baseUrl}/sessions/${sessionId}/instructions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ text }),
    });
    if (response.status === 409) {
      return { busy: true };
    }
    if (!response.ok) {
      throw new Error(`submit failed: HTTP ${response.status}`);
    }
    return { busy: false };
  }

  async fetchScene(sessionId: string): Promise<SceneSnapshot> {
    const response = await fetch(`${this.baseUrl}/sessions/${sessionId}/scene`);
    if (!response.ok) {
      throw new Error(`scene fetch failed: HTTP ${response.status}`);
    }
    return (await response.json()) as SceneSnapshot;
  }

  /**
   * Follow the event stream from a sequence number, invoking onEvent per
   * event in order. On disconnect it resumes from the last seen seq, so
   * the subscriber never observes a gap or duplicate.
   */
  async streamEvents(
    sessionId: string,
    fromSeq: number,
    onEvent: (event: SessionEvent) => boolean | void,
    options: { follow?: boolean; maxReconnects?: number } = {},
  ): Promise<number> {
    const follow = options.follow ?? true;
    let nextSeq = fromSeq;
    let reconnects = 0;
    const maxReconnects = options.maxReconnects ?? 20;
    for (;;) {
      const url =
        `${this.baseUrl}/sessions/${sessionId}/events` +
        `?from_seq=${nextSeq}&follow=${follow ? "true" : "false"}`;
      const response = await fetch(url);
      if (!response.ok || response.body === null) {
        throw new Error(`event stream failed: HTTP ${response.status}`);
      }
      const reader = response.body.getReader();
      const decoder = new TextDecoder();
      const parser = new SseParser();
      try {
        for (;;) {
          const { done, value } = await reader.read();
          if (done) {
            break;
          }
          for (const frame of parser.feed(decoder.decode(value, { stream: true }))) {
            const event = JSON.parse(frame.data) as SessionEvent;
            if (event.seq < nextSeq) {
              continue; // duplicate after reconnect
            }
            nextSeq = event.seq + 1;
            if (onEvent(event) === false) {
              await reader.cancel();
              return nextSeq - 1;
            }
          }
        }
      } catch {
        // fall through to reconnect with the resume cursor
      }
      if (!follow) {
        return nextSeq - 1;
      }
      reconnects += 1;
      if (reconnects > maxReconnects) {
        throw new Error("event stream kept dropping; giving up");
      }
    }
  }
}
