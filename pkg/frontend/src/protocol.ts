// Wire protocol shared with the session gateway: JSON control messages.
// Over TCP they travel length-prefixed (4-byte big-endian length + UTF-8
// JSON); over the WebSocket bridge each socket message is one JSON message.

export interface EgoInfo {
  x: number;
  y: number;
  theta: number;
  speed: number;
}

export interface ObstacleInfo {
  id: string;
  x: number;
  y: number;
  theta: number;
  half_length: number;
  half_width: number;
}

export interface FrameMessage {
  type: "frame";
  index: number;
  time: number;
  ego: EgoInfo;
  obstacles: ObstacleInfo[];
  trajectory: [number, number][];
  grid?: string;
}

export interface QueryMessage {
  type: "query";
  id: string;
  text: string;
  options: string[];
  presented_at: number;
  grids?: Record<string, string>;
  default_tau?: string;
}

export interface AppliedMessage {
  type: "applied";
  id: string;
  apply_at: number;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  detail: string;
}

export interface HelloMessage {
  type: "hello";
  version: number;
  scenario?: string;
  seed?: number;
}

export interface EndMessage {
  type: "end";
  result: Record<string, unknown>;
}

export type GatewayMessage =
  | FrameMessage
  | QueryMessage
  | AppliedMessage
  | ErrorMessage
  | HelloMessage
  | EndMessage;

export interface AnswerMessage {
  type: "answer";
  id: string;
  option: string;
  answered_at: number;
}

export function encodeMessage(msg: object): Uint8Array {
  const payload = new TextEncoder().encode(JSON.stringify(msg));
  const out = new Uint8Array(4 + payload.length);
  new DataView(out.buffer).setUint32(0, payload.length, false);
  out.set(payload, 4);
  return out;
}

/** Incremental decoder for the length-prefixed TCP framing.  Feed arbitrary
 * chunk boundaries; complete messages come out in order. */
export class MessageDecoder {
  private buffer = new Uint8Array(0);

  feed(chunk: Uint8Array): GatewayMessage[] {
    const joined = new Uint8Array(this.buffer.length + chunk.length);
    joined.set(this.buffer, 0);
    joined.set(chunk, this.buffer.length);
    this.buffer = joined;

    const out: GatewayMessage[] = [];
    for (;;) {
      if (this.buffer.length < 4) break;
      const view = new DataView(this.buffer.buffer, this.buffer.byteOffset);
      const length = view.getUint32(0, false);
      if (this.buffer.length < 4 + length) break;
      const payload = this.buffer.slice(4, 4 + length);
      this.buffer = this.buffer.slice(4 + length);
      out.push(JSON.parse(new TextDecoder().decode(payload)) as GatewayMessage);
    }
    return out;
  }
}

export function decodeBase64(b64: string): Uint8Array {
  if (typeof atob === "function") {
    const raw = atob(b64);
    const out = new Uint8Array(raw.length);
    for (let i = 0; i < raw.length; i++) out[i] = raw.charCodeAt(i);
    return out;
  }
  // Node fallback (test environment)
  const nodeBuffer = (globalThis as Record<string, any>).Buffer;
  return new Uint8Array(nodeBuffer.from(b64, "base64"));
}
