// Console state: the socket reader feeds messages in, the renderer and the
// answer panel read a consistent snapshot out.  The what-if latency slider
// is display-only: switching tau never sends anything.

import { decodeGrid, RiskGrid } from "./grid.js";
import {
  AnswerMessage,
  FrameMessage,
  GatewayMessage,
  QueryMessage,
  decodeBase64,
} from "./protocol.js";

export interface OpenQuery {
  id: string;
  text: string;
  options: string[];
  presentedAt: number;
  /** monotonic clock reading when the query was shown */
  shownAtMono: number;
  grids: Map<string, RiskGrid>;
  locked: boolean;
}

export interface AnswerRecord {
  queryId: string;
  option: string;
  reactionSeconds: number;
}

export type Sender = (msg: AnswerMessage) => void;

export class ConsoleState {
  connected = false;
  frame: FrameMessage | null = null;
  lastFrameIndex = -1;
  framesSeen = 0;
  frameGaps = 0;
  query: OpenQuery | null = null;
  selectedTau: string | null = null;
  answers: AnswerRecord[] = [];
  errors: string[] = [];
  ended: Record<string, unknown> | null = null;

  constructor(
    private readonly send: Sender,
    private readonly mono: () => number = () =>
      (typeof performance !== "undefined" ? performance.now() : Date.now()) / 1000,
  ) {}

  /** The grid the overlay should draw: the selected what-if tau when a
   * query is open, otherwise the frame-attached grid. */
  activeGrid(): RiskGrid | null {
    if (this.query && this.selectedTau) {
      return this.query.grids.get(this.selectedTau) ?? null;
    }
    if (this.frame?.grid) {
      try {
        return decodeGrid(decodeBase64(this.frame.grid));
      } catch {
        return null;
      }
    }
    return null;
  }

  handle(msg: GatewayMessage): void {
    switch (msg.type) {
      case "hello":
        this.connected = true;
        break;
      case "frame":
        if (msg.index <= this.lastFrameIndex) return; // stale or duplicate
        this.frameGaps += msg.index - this.lastFrameIndex - 1;
        this.lastFrameIndex = msg.index;
        this.framesSeen += 1;
        this.frame = msg;
        break;
      case "query":
        this.openQuery(msg);
        break;
      case "applied":
        if (this.query && this.query.id === msg.id) {
          this.query = null;
          this.selectedTau = null;
        }
        break;
      case "error":
        this.errors.push(`${msg.code}: ${msg.detail}`);
        if (this.query?.locked) this.query = null;
        break;
      case "end":
        this.ended = msg.result;
        this.query = null;
        break;
    }
  }

  private openQuery(msg: QueryMessage): void {
    const grids = new Map<string, RiskGrid>();
    for (const [tau, b64] of Object.entries(msg.grids ?? {})) {
      try {
        grids.set(tau, decodeGrid(decodeBase64(b64)));
      } catch {
        // a corrupt sweep entry disables that slider stop only
      }
    }
    this.query = {
      id: msg.id,
      text: msg.text,
      options: msg.options,
      presentedAt: msg.presented_at,
      shownAtMono: this.mono(),
      grids,
      locked: false,
    };
    // default slider position: the session's expected latency
    this.selectedTau =
      msg.default_tau && grids.has(msg.default_tau)
        ? msg.default_tau
        : grids.keys().next().value ?? null;
  }

  /** Elapsed thinking time for the open query, in seconds. */
  elapsed(): number {
    if (!this.query) return 0;
    return this.mono() - this.query.shownAtMono;
  }

  availableTaus(): string[] {
    return this.query ? [...this.query.grids.keys()].sort() : [];
  }

  /** Display-only what-if switch; ignores unavailable stops. */
  selectTau(tau: string): void {
    if (this.query && this.query.grids.has(tau)) {
      this.selectedTau = tau;
    }
  }

  /** Send the chosen option exactly once; the panel locks until the
   * gateway confirms (applied) or rejects (error). */
  submitAnswer(option: string): boolean {
    const q = this.query;
    if (!q || q.locked || !q.options.includes(option)) return false;
    const reaction = this.mono() - q.shownAtMono;
    q.locked = true;
    this.answers.push({ queryId: q.id, option, reactionSeconds: reaction });
    this.send({
      type: "answer",
      id: q.id,
      option,
      answered_at: q.presentedAt + reaction,
    });
    return true;
  }
}
