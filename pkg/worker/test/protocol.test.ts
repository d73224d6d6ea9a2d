import { ChildProcess, spawn } from "child_process";
import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { afterEach, describe, expect, it } from "vitest";

const WORKER = path.join(__dirname, "..", "dist", "main.js");

/** Minimal line-protocol client for driving the built worker in tests. */
class Client {
  proc: ChildProcess;
  stderr = "";
  private buffer = "";
  private waiters: ((line: string) => void)[] = [];
  private lines: string[] = [];

  constructor(args: string[] = []) {
    this.proc = spawn("node", [WORKER, ...args], {
      stdio: ["pipe", "pipe", "pipe"],
    });
    this.proc.stdout!.on("data", (chunk: Buffer) => {
      this.buffer += chunk.toString("utf-8");
      let index;
      while ((index = this.buffer.indexOf("\n")) >= 0) {
        const line = this.buffer.slice(0, index);
        this.buffer = this.buffer.slice(index + 1);
        const waiter = this.waiters.shift();
        if (waiter) waiter(line);
        else this.lines.push(line);
      }
    });
    this.proc.stderr!.on("data", (chunk: Buffer) => {
      this.stderr += chunk.toString("utf-8");
    });
  }

  readLine(timeoutMs = 30_000): Promise<string> {
    const queued = this.lines.shift();
    if (queued !== undefined) return Promise.resolve(queued);
    return new Promise((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error("timed out waiting for worker output")),
        timeoutMs,
      );
      this.waiters.push((line) => {
        clearTimeout(timer);
        resolve(line);
      });
    });
  }

  send(payload: object): void {
    this.proc.stdin!.write(JSON.stringify(payload) + "\n");
  }

  sendRaw(line: string): void {
    this.proc.stdin!.write(line + "\n");
  }

  async request(payload: object): Promise<any> {
    this.send(payload);
    return JSON.parse(await this.readLine());
  }

  exited(): Promise<number | null> {
    return new Promise((resolve) => this.proc.on("exit", resolve));
  }

  kill(): void {
    if (this.proc.exitCode === null) this.proc.kill("SIGKILL");
  }
}

async function handshake(client: Client): Promise<void> {
  const line = JSON.parse(await client.readLine());
  expect(line.protocol_version).toBe("1");
}

const TRAIN_RECORDS = [
  { bug_id: 1, text: "crash on startup with data loss", label: "P1" },
  { bug_id: 2, text: "crash while saving the workspace", label: "P1" },
  { bug_id: 3, text: "tooltip typo in preferences", label: "P5" },
  { bug_id: 4, text: "crash loop inside the indexer", label: "P1" },
  { bug_id: 5, text: "cosmetic spacing in about box", label: "P5" },
];

let clients: Client[] = [];
function client(args: string[] = []): Client {
  const c = new Client(args);
  clients.push(c);
  return c;
}

afterEach(() => {
  for (const c of clients) c.kill();
  clients = [];
});

describe("protocol v1", () => {
  it("handshakes, trains, and answers aligned predictions", async () => {
    const c = client(["--seed", "7"]);
    await handshake(c);

    const train = await c.request({
      v: "1", id: 0, op: "TRAIN", topic_id: 0, epochs: 3, records: TRAIN_RECORDS,
    });
    expect(train).toMatchObject({ v: "1", id: 0, op: "TRAIN", topic_id: 0, status: "OK" });

    const predict = await c.request({
      v: "1", id: 1, op: "PREDICT", topic_id: 0,
      records: [
        { bug_id: 11, text: "crash immediately" },
        { bug_id: 12, text: "slight misalignment" },
        { bug_id: 13, text: "crash crash crash" },
      ],
    });
    expect(predict.status).toBe("OK");
    expect(predict.predictions.map((p: any) => p.bug_id)).toEqual([11, 12, 13]);
    for (const p of predict.predictions) {
      expect(["P1", "P2", "P3", "P4", "P5"]).toContain(p.priority);
      expect(p.scores).toHaveLength(5);
      const sum = p.scores.reduce((a: number, b: number) => a + b, 0);
      expect(Math.abs(sum - 1.0)).toBeLessThanOrEqual(1e-5);
    }

    const bye = await c.request({ v: "1", id: 2, op: "SHUTDOWN", topic_id: -1, records: [] });
    expect(bye.status).toBe("OK");
    expect(await c.exited()).toBe(0);
  });

  it("rejects prediction for an untrained topic but stays alive", async () => {
    const c = client();
    await handshake(c);
    const response = await c.request({
      v: "1", id: 0, op: "PREDICT", topic_id: 6,
      records: [{ bug_id: 1, text: "anything" }],
    });
    expect(response.status).toBe("ERROR");
    expect(response.error).toMatch(/untrained topic 6/);

    // still serving after the error
    const train = await c.request({
      v: "1", id: 1, op: "TRAIN", topic_id: 6, epochs: 1, records: TRAIN_RECORDS,
    });
    expect(train.status).toBe("OK");
  });

  it("answers malformed and invalid requests with ERROR, not death", async () => {
    const c = client();
    await handshake(c);
    c.sendRaw("{definitely not json");
    const broken = JSON.parse(await c.readLine());
    expect(broken.status).toBe("ERROR");

    const badVersion = await c.request({ v: "2", id: 0, op: "TRAIN", topic_id: 0, records: [] });
    expect(badVersion.status).toBe("ERROR");
    expect(badVersion.error).toMatch(/version/);

    const emptyTrain = await c.request({ v: "1", id: 1, op: "TRAIN", topic_id: 0, epochs: 1, records: [] });
    expect(emptyTrain.status).toBe("ERROR");

    const fine = await c.request({ v: "1", id: 2, op: "TRAIN", topic_id: 0, epochs: 1, records: TRAIN_RECORDS });
    expect(fine.status).toBe("OK");
  });

  it("echoes ids so every request is answered exactly once, in order", async () => {
    const c = client();
    await handshake(c);
    for (let id = 0; id < 4; id++) {
      const response = await c.request({
        v: "1", id, op: "TRAIN", topic_id: id, epochs: 1, records: TRAIN_RECORDS,
      });
      expect(response.id).toBe(id);
    }
  });
});

describe("epoch policy", () => {
  it("runs the per-topic epoch counts the driver requests (15 default, 1 for topic 9)", async () => {
    const c = client(["--seed", "3"]);
    await handshake(c);
    for (let topic = 0; topic <= 9; topic++) {
      const epochs = topic === 9 ? 1 : 15;
      const response = await c.request({
        v: "1", id: topic, op: "TRAIN", topic_id: topic, epochs,
        records: TRAIN_RECORDS,
      });
      expect(response.status).toBe("OK");
    }
    await c.request({ v: "1", id: 99, op: "SHUTDOWN", topic_id: -1, records: [] });
    await c.exited();

    const trained = new Map<number, number>();
    for (const line of c.stderr.split("\n")) {
      const match = /\[worker\] TRAIN topic=(-?\d+) epochs=(\d+)/.exec(line);
      if (match) trained.set(Number(match[1]), Number(match[2]));
    }
    for (let topic = 0; topic <= 8; topic++) expect(trained.get(topic)).toBe(15);
    expect(trained.get(9)).toBe(1);
  }, 120_000);
});

describe("model cache", () => {
  it("persists per-topic models so a fresh process can predict", async () => {
    const cacheDir = fs.mkdtempSync(path.join(os.tmpdir(), "worker-cache-"));
    const first = client(["--cache-dir", cacheDir, "--seed", "5"]);
    await handshake(first);
    await first.request({
      v: "1", id: 0, op: "TRAIN", topic_id: 2, epochs: 5, records: TRAIN_RECORDS,
    });
    await first.request({ v: "1", id: 1, op: "SHUTDOWN", topic_id: -1, records: [] });
    await first.exited();
    expect(fs.existsSync(path.join(cacheDir, "topic_2.json"))).toBe(true);

    const second = client(["--cache-dir", cacheDir, "--seed", "5"]);
    await handshake(second);
    const response = await second.request({
      v: "1", id: 0, op: "PREDICT", topic_id: 2,
      records: [{ bug_id: 7, text: "crash on startup" }],
    });
    expect(response.status).toBe("OK");
    expect(response.predictions[0].bug_id).toBe(7);
  });
});

describe("flags", () => {
  it("exits 2 on an unknown flag", async () => {
    const c = client(["--what-is-this"]);
    expect(await c.exited()).toBe(2);
  });

  it("accepts the documented flag set", async () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "worker-flags-"));
    const c = client([
      "--seed", "1", "--device", "cpu", "--cache-dir", dir,
      "--max-len", "32", "--cap", "4", "--lr", "0.004",
    ]);
    await handshake(c);
    await c.request({ v: "1", id: 0, op: "SHUTDOWN", topic_id: -1, records: [] });
    expect(await c.exited()).toBe(0);
  });
});
