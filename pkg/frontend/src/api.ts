import { BoardDoc, PredictRequest, PredictResponse } from "./types.js";

/** Thin fetch wrapper; at most one prediction in flight, stale responses are
 * dropped by sequence number. */
export class Api {
  private seq = 0;
  private controller: AbortController | null = null;

  constructor(private base: string = "") {}

  async board(): Promise<BoardDoc> {
    const resp = await fetch(`${this.base}/board`);
    if (!resp.ok) throw new Error(`GET /board failed: ${resp.status}`);
    return (await resp.json()) as BoardDoc;
  }

  /** Resolves with null when a newer request superseded this one. */
  async predict(body: PredictRequest): Promise<PredictResponse | null> {
    const mySeq = ++this.seq;
    this.controller?.abort();
    this.controller = new AbortController();
    let resp: Response;
    try {
      resp = await fetch(`${this.base}/predict`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
        signal: this.controller.signal,
      });
    } catch (err) {
      if (mySeq !== this.seq) return null; // superseded, not an error
      throw err;
    }
    if (mySeq !== this.seq) return null;
    if (!resp.ok) {
      let message = `POST /predict failed: ${resp.status}`;
      try {
        const doc = (await resp.json()) as { error?: { message?: string } };
        if (doc.error?.message) message = doc.error.message;
      } catch {
        // keep the status-based message
      }
      throw new Error(message);
    }
    return (await resp.json()) as PredictResponse;
  }
}
