/**
 * Request loop: one fine-tuned classifier per topic, LRU-bounded in memory,
 * persisted as JSON under the cache directory so training and prediction
 * can happen in different worker processes.  Any per-request failure turns
 * into an ERROR response; the loop itself never dies on bad input.
 */

import * as fs from "fs";
import * as path from "path";
import * as readline from "readline";

import { DEFAULT_CONFIG, EncoderConfig, TextClassifierModel, hashTokens } from "./encoder";
import {
  LABELS,
  PROTOCOL_VERSION,
  WirePrediction,
  WorkerRequest,
  WorkerResponse,
  labelIndex,
  parseRequest,
} from "./protocol";

export interface ServeOptions {
  config: EncoderConfig;
  cacheDir?: string;
  pretrainedPath?: string;
  maxModelsInMemory: number;
  log: (line: string) => void;
}

export const DEFAULT_OPTIONS: ServeOptions = {
  config: DEFAULT_CONFIG,
  maxModelsInMemory: 16,
  log: (line) => process.stderr.write(line + "\n"),
};

const MODEL_FORMAT = "worker-model/1";

export class TopicModelStore {
  /** Map iteration order doubles as the LRU order (oldest first). */
  private models = new Map<number, TextClassifierModel>();

  constructor(private options: ServeOptions) {}

  private cachePath(topicId: number): string | null {
    if (!this.options.cacheDir) return null;
    return path.join(this.options.cacheDir, `topic_${topicId}.json`);
  }

  private touch(topicId: number, model: TextClassifierModel): void {
    this.models.delete(topicId);
    this.models.set(topicId, model);
    while (this.models.size > this.options.maxModelsInMemory) {
      const oldest = this.models.keys().next().value as number;
      this.models.delete(oldest);
      this.options.log(`[worker] evict topic=${oldest}`);
    }
  }

  fresh(topicId: number): TextClassifierModel {
    // one deterministic stream per topic so topics don't share init noise
    const model = new TextClassifierModel({
      ...this.options.config,
      seed: this.options.config.seed + topicId + 1,
    });
    if (this.options.pretrainedPath) {
      const payload = JSON.parse(fs.readFileSync(this.options.pretrainedPath, "utf-8"));
      model.loadEncoderWeights(payload.params ?? {});
    }
    return model;
  }

  get(topicId: number): TextClassifierModel | null {
    const cached = this.models.get(topicId);
    if (cached) {
      this.touch(topicId, cached);
      return cached;
    }
    const file = this.cachePath(topicId);
    if (file && fs.existsSync(file)) {
      const payload = JSON.parse(fs.readFileSync(file, "utf-8"));
      if (payload.format !== MODEL_FORMAT) {
        throw new Error(`unsupported cached model format ${payload.format}`);
      }
      const model = TextClassifierModel.deserialize(payload);
      this.touch(topicId, model);
      return model;
    }
    return null;
  }

  put(topicId: number, model: TextClassifierModel): void {
    this.touch(topicId, model);
    const file = this.cachePath(topicId);
    if (file) {
      fs.mkdirSync(path.dirname(file), { recursive: true });
      fs.writeFileSync(file, JSON.stringify({ format: MODEL_FORMAT, ...model.serialize() }));
    }
  }
}

export function handleRequest(req: WorkerRequest, store: TopicModelStore,
                              options: ServeOptions): WorkerResponse {
  const base = { v: PROTOCOL_VERSION, id: req.id, op: req.op, topic_id: req.topic_id };

  if (req.op === "TRAIN") {
    if (req.records.length === 0) {
      return { ...base, status: "ERROR", error: "no training records" };
    }
    const docs = req.records.map((record) => ({
      ids: hashTokens(record.text, options.config),
      label: labelIndex(String(record.label)),
    }));
    const model = store.get(req.topic_id) ?? store.fresh(req.topic_id);
    const epochs = req.epochs ?? 1;
    let loss = NaN;
    for (let e = 0; e < epochs; e++) {
      loss = model.trainEpoch(docs);
    }
    store.put(req.topic_id, model);
    options.log(
      `[worker] TRAIN topic=${req.topic_id} epochs=${epochs} ` +
      `records=${req.records.length} loss=${loss.toFixed(4)}`,
    );
    return { ...base, status: "OK" };
  }

  if (req.op === "PREDICT") {
    const model = store.get(req.topic_id);
    if (!model) {
      return { ...base, status: "ERROR", error: `untrained topic ${req.topic_id}` };
    }
    const predictions: WirePrediction[] = req.records.map((record) => {
      const probs = model.predictProbs(hashTokens(record.text, options.config));
      let best = 0;
      for (let c = 1; c < probs.length; c++) if (probs[c] > probs[best]) best = c;
      return {
        bug_id: record.bug_id,
        priority: LABELS[best],
        scores: Array.from(probs),
      };
    });
    options.log(`[worker] PREDICT topic=${req.topic_id} records=${req.records.length}`);
    return { ...base, status: "OK", predictions };
  }

  return { ...base, status: "OK" };
}

export function serve(
  options: ServeOptions,
  input: NodeJS.ReadableStream = process.stdin,
  output: NodeJS.WritableStream = process.stdout,
): Promise<void> {
  const store = new TopicModelStore(options);
  const send = (payload: WorkerResponse | { protocol_version: string }) => {
    output.write(JSON.stringify(payload) + "\n");
  };

  send({ protocol_version: PROTOCOL_VERSION });

  const reader = readline.createInterface({ input, terminal: false });
  return new Promise((resolve) => {
    reader.on("line", (line) => {
      if (!line.trim()) return;
      let req: WorkerRequest;
      try {
        req = parseRequest(line);
      } catch (err) {
        send({
          v: PROTOCOL_VERSION, id: null, status: "ERROR",
          error: err instanceof Error ? err.message : String(err),
        });
        return;
      }
      let response: WorkerResponse;
      try {
        response = handleRequest(req, store, options);
      } catch (err) {
        response = {
          v: PROTOCOL_VERSION, id: req.id, op: req.op, topic_id: req.topic_id,
          status: "ERROR", error: err instanceof Error ? err.message : String(err),
        };
      }
      send(response);
      if (req.op === "SHUTDOWN" && response.status === "OK") {
        options.log("[worker] SHUTDOWN");
        reader.close();
        resolve();
      }
    });
    reader.on("close", () => resolve());
  });
}
