/** Wire types for protocol v1 (newline-delimited JSON over stdio). */

export const PROTOCOL_VERSION = "1";

export const LABELS = ["P1", "P2", "P3", "P4", "P5"] as const;
export type Label = (typeof LABELS)[number];

export interface WireRecord {
  bug_id: number;
  text: string;
  label?: Label;
}

export interface WorkerRequest {
  v: string;
  id: number;
  op: "TRAIN" | "PREDICT" | "SHUTDOWN";
  topic_id: number;
  epochs?: number;
  records: WireRecord[];
}

export interface WirePrediction {
  bug_id: number;
  priority: Label;
  scores: number[];
}

export interface WorkerResponse {
  v: string;
  id: number | null;
  op?: string;
  topic_id?: number;
  status: "OK" | "ERROR";
  predictions?: WirePrediction[];
  error?: string;
}

export function labelIndex(label: string): number {
  const index = LABELS.indexOf(label as Label);
  if (index < 0) throw new Error(`unknown label ${JSON.stringify(label)}`);
  return index;
}

export function parseRequest(line: string): WorkerRequest {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch {
    throw new Error("malformed request line");
  }
  const req = raw as Partial<WorkerRequest>;
  if (req.v !== PROTOCOL_VERSION) {
    throw new Error(`unsupported protocol version ${JSON.stringify(req.v)}`);
  }
  if (typeof req.id !== "number") throw new Error("request id must be a number");
  if (req.op !== "TRAIN" && req.op !== "PREDICT" && req.op !== "SHUTDOWN") {
    throw new Error(`unknown op ${JSON.stringify(req.op)}`);
  }
  if (typeof req.topic_id !== "number") throw new Error("topic_id must be a number");
  const records = Array.isArray(req.records) ? req.records : [];
  for (const record of records) {
    if (typeof record.bug_id !== "number" || typeof record.text !== "string") {
      throw new Error("records need a numeric bug_id and a text string");
    }
    if (req.op === "TRAIN") {
      labelIndex(String(record.label));
    }
  }
  if (req.op === "TRAIN" && typeof req.epochs !== "number") {
    throw new Error("TRAIN requires an epochs count");
  }
  return { ...req, records } as WorkerRequest;
}
