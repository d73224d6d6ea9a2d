/**
 * Compact transformer encoder with a 5-way classification head.
 *
 * Forward and backward passes are written out by hand over flat
 * Float64Arrays: token/position embeddings, pre-norm self-attention blocks
 * with residuals, a feed-forward sublayer, mean pooling, and a softmax
 * cross-entropy head.  Everything is CPU double precision and seeded, so
 * training is bit-reproducible; the finite-difference test in
 * test/encoder.test.ts guards every parameter group's gradient.
 */

import { Rng } from "./rng";

export interface EncoderConfig {
  vocab: number;     // hashed token buckets
  maxLen: number;    // truncation length in tokens
  dim: number;       // model width, divisible by heads
  heads: number;
  ffDim: number;
  layers: number;
  classes: number;
  lr: number;
  seed: number;
}

export const DEFAULT_CONFIG: EncoderConfig = {
  vocab: 1024,
  maxLen: 64,
  dim: 32,
  heads: 4,
  ffDim: 64,
  layers: 2,
  classes: 5,
  lr: 5e-3,
  seed: 42,
};

const LN_EPS = 1e-5;
const ADAM_B1 = 0.9;
const ADAM_B2 = 0.999;
const ADAM_EPS = 1e-8;

export class Param {
  w: Float64Array;
  g: Float64Array;
  private m: Float64Array;
  private v: Float64Array;

  constructor(public name: string, size: number) {
    this.w = new Float64Array(size);
    this.g = new Float64Array(size);
    this.m = new Float64Array(size);
    this.v = new Float64Array(size);
  }

  zeroGrad(): void {
    this.g.fill(0);
  }

  adamStep(lr: number, t: number): void {
    const bc1 = 1 - Math.pow(ADAM_B1, t);
    const bc2 = 1 - Math.pow(ADAM_B2, t);
    for (let i = 0; i < this.w.length; i++) {
      const g = this.g[i];
      this.m[i] = ADAM_B1 * this.m[i] + (1 - ADAM_B1) * g;
      this.v[i] = ADAM_B2 * this.v[i] + (1 - ADAM_B2) * g * g;
      this.w[i] -= (lr * (this.m[i] / bc1)) / (Math.sqrt(this.v[i] / bc2) + ADAM_EPS);
    }
  }
}

/** Lowercased alphanumeric runs hashed into [1, vocab); 0 is the pad bucket. */
export function hashTokens(text: string, config: EncoderConfig): number[] {
  const matches = text.toLowerCase().match(/[a-z0-9]+/g) ?? [];
  const ids: number[] = [];
  for (const token of matches.slice(0, config.maxLen)) {
    let h = 0x811c9dc5;
    for (let i = 0; i < token.length; i++) {
      h ^= token.charCodeAt(i);
      h = Math.imul(h, 0x01000193) >>> 0;
    }
    ids.push(1 + (h % (config.vocab - 1)));
  }
  return ids.length ? ids : [0];
}

interface BlockCache {
  xin: Float64Array;       // block input (n*d)
  xn1: Float64Array;       // after LN1
  ln1Mu: Float64Array;     // per-row mean
  ln1Inv: Float64Array;    // per-row 1/sqrt(var+eps)
  q: Float64Array;
  k: Float64Array;
  v: Float64Array;
  att: Float64Array;       // heads*n*n softmax rows
  hcat: Float64Array;      // attention context (n*d)
  xres1: Float64Array;     // after first residual
  xn2: Float64Array;
  ln2Mu: Float64Array;
  ln2Inv: Float64Array;
  z1: Float64Array;        // pre-relu (n*f)
  u: Float64Array;         // post-relu (n*f)
}

interface ForwardCache {
  ids: number[];
  n: number;
  blocks: BlockCache[];
  xout: Float64Array;      // final hidden states (n*d)
  pooled: Float64Array;    // (d)
  probs: Float64Array;     // (classes)
}

export class TextClassifierModel {
  readonly config: EncoderConfig;
  readonly params: Param[] = [];
  private byName = new Map<string, Param>();
  private step = 0;
  private rng: Rng;

  constructor(config: Partial<EncoderConfig> = {}) {
    this.config = { ...DEFAULT_CONFIG, ...config };
    const { vocab, maxLen, dim, ffDim, layers, classes, heads, seed } = this.config;
    if (dim % heads !== 0) throw new Error("dim must be divisible by heads");
    this.rng = new Rng(seed);

    const add = (name: string, size: number) => {
      const param = new Param(name, size);
      this.params.push(param);
      this.byName.set(name, param);
      return param;
    };

    this.initGauss(add("emb", vocab * dim), 0.02);
    this.initGauss(add("pos", maxLen * dim), 0.02);
    for (let b = 0; b < layers; b++) {
      add(`ln1g.${b}`, dim).w.fill(1);
      add(`ln1b.${b}`, dim);
      this.initXavier(add(`wq.${b}`, dim * dim), dim, dim);
      this.initXavier(add(`wk.${b}`, dim * dim), dim, dim);
      this.initXavier(add(`wv.${b}`, dim * dim), dim, dim);
      this.initXavier(add(`wo.${b}`, dim * dim), dim, dim);
      add(`ln2g.${b}`, dim).w.fill(1);
      add(`ln2b.${b}`, dim);
      this.initXavier(add(`w1.${b}`, dim * ffDim), dim, ffDim);
      add(`b1.${b}`, ffDim);
      this.initXavier(add(`w2.${b}`, ffDim * dim), ffDim, dim);
      add(`b2.${b}`, dim);
    }
    this.initXavier(add("wc", dim * classes), dim, classes);
    add("bc", classes);
  }

  private initGauss(param: Param, scale: number): void {
    for (let i = 0; i < param.w.length; i++) param.w[i] = this.rng.gauss() * scale;
  }

  private initXavier(param: Param, fanIn: number, fanOut: number): void {
    const scale = Math.sqrt(2.0 / (fanIn + fanOut));
    for (let i = 0; i < param.w.length; i++) param.w[i] = this.rng.gauss() * scale;
  }

  param(name: string): Param {
    const param = this.byName.get(name);
    if (!param) throw new Error(`unknown parameter ${name}`);
    return param;
  }

  // --- forward ---------------------------------------------------------

  private layerNorm(
    x: Float64Array, n: number, d: number, g: Float64Array, b: Float64Array,
    outMu: Float64Array, outInv: Float64Array,
  ): Float64Array {
    const y = new Float64Array(n * d);
    for (let i = 0; i < n; i++) {
      let mu = 0;
      for (let j = 0; j < d; j++) mu += x[i * d + j];
      mu /= d;
      let variance = 0;
      for (let j = 0; j < d; j++) {
        const c = x[i * d + j] - mu;
        variance += c * c;
      }
      variance /= d;
      const inv = 1.0 / Math.sqrt(variance + LN_EPS);
      outMu[i] = mu;
      outInv[i] = inv;
      for (let j = 0; j < d; j++) {
        y[i * d + j] = g[j] * (x[i * d + j] - mu) * inv + b[j];
      }
    }
    return y;
  }

  /** y(n×m) = x(n×k) @ w(k×m), plus optional bias(m). */
  private linear(
    x: Float64Array, w: Float64Array, n: number, k: number, m: number,
    bias?: Float64Array,
  ): Float64Array {
    const y = new Float64Array(n * m);
    for (let i = 0; i < n; i++) {
      for (let p = 0; p < k; p++) {
        const xv = x[i * k + p];
        if (xv === 0) continue;
        for (let j = 0; j < m; j++) y[i * m + j] += xv * w[p * m + j];
      }
      if (bias) for (let j = 0; j < m; j++) y[i * m + j] += bias[j];
    }
    return y;
  }

  forward(ids: number[]): ForwardCache {
    const { dim: d, heads, ffDim: f, layers, classes } = this.config;
    const dh = d / heads;
    const n = ids.length;

    let x = new Float64Array(n * d);
    const emb = this.param("emb").w;
    const pos = this.param("pos").w;
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < d; j++) {
        x[i * d + j] = emb[ids[i] * d + j] + pos[i * d + j];
      }
    }

    const blocks: BlockCache[] = [];
    for (let b = 0; b < layers; b++) {
      const cache: Partial<BlockCache> = { xin: x };
      cache.ln1Mu = new Float64Array(n);
      cache.ln1Inv = new Float64Array(n);
      const xn1 = this.layerNorm(
        x, n, d, this.param(`ln1g.${b}`).w, this.param(`ln1b.${b}`).w,
        cache.ln1Mu, cache.ln1Inv,
      );
      cache.xn1 = xn1;

      const q = this.linear(xn1, this.param(`wq.${b}`).w, n, d, d);
      const k = this.linear(xn1, this.param(`wk.${b}`).w, n, d, d);
      const v = this.linear(xn1, this.param(`wv.${b}`).w, n, d, d);
      cache.q = q;
      cache.k = k;
      cache.v = v;

      const att = new Float64Array(heads * n * n);
      const hcat = new Float64Array(n * d);
      const scale = 1.0 / Math.sqrt(dh);
      for (let hh = 0; hh < heads; hh++) {
        const off = hh * dh;
        for (let i = 0; i < n; i++) {
          const row = hh * n * n + i * n;
          let max = -Infinity;
          for (let j = 0; j < n; j++) {
            let s = 0;
            for (let c = 0; c < dh; c++) s += q[i * d + off + c] * k[j * d + off + c];
            s *= scale;
            att[row + j] = s;
            if (s > max) max = s;
          }
          let denom = 0;
          for (let j = 0; j < n; j++) {
            const e = Math.exp(att[row + j] - max);
            att[row + j] = e;
            denom += e;
          }
          for (let j = 0; j < n; j++) att[row + j] /= denom;
          for (let j = 0; j < n; j++) {
            const a = att[row + j];
            if (a === 0) continue;
            for (let c = 0; c < dh; c++) hcat[i * d + off + c] += a * v[j * d + off + c];
          }
        }
      }
      cache.att = att;
      cache.hcat = hcat;

      const out = this.linear(hcat, this.param(`wo.${b}`).w, n, d, d);
      const xres1 = new Float64Array(n * d);
      for (let i = 0; i < n * d; i++) xres1[i] = x[i] + out[i];
      cache.xres1 = xres1;

      cache.ln2Mu = new Float64Array(n);
      cache.ln2Inv = new Float64Array(n);
      const xn2 = this.layerNorm(
        xres1, n, d, this.param(`ln2g.${b}`).w, this.param(`ln2b.${b}`).w,
        cache.ln2Mu, cache.ln2Inv,
      );
      cache.xn2 = xn2;

      const z1 = this.linear(xn2, this.param(`w1.${b}`).w, n, d, f, this.param(`b1.${b}`).w);
      cache.z1 = z1;
      const u = new Float64Array(n * f);
      for (let i = 0; i < n * f; i++) u[i] = z1[i] > 0 ? z1[i] : 0;
      cache.u = u;
      const ff = this.linear(u, this.param(`w2.${b}`).w, n, f, d, this.param(`b2.${b}`).w);

      const xNext = new Float64Array(n * d);
      for (let i = 0; i < n * d; i++) xNext[i] = xres1[i] + ff[i];
      blocks.push(cache as BlockCache);
      x = xNext;
    }

    const pooled = new Float64Array(d);
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < d; j++) pooled[j] += x[i * d + j];
    }
    for (let j = 0; j < d; j++) pooled[j] /= n;

    const wc = this.param("wc").w;
    const bc = this.param("bc").w;
    const logits = new Float64Array(classes);
    for (let c = 0; c < classes; c++) {
      let s = bc[c];
      for (let j = 0; j < d; j++) s += pooled[j] * wc[j * classes + c];
      logits[c] = s;
    }
    let max = -Infinity;
    for (const l of logits) if (l > max) max = l;
    let denom = 0;
    const probs = new Float64Array(classes);
    for (let c = 0; c < classes; c++) {
      probs[c] = Math.exp(logits[c] - max);
      denom += probs[c];
    }
    for (let c = 0; c < classes; c++) probs[c] /= denom;

    return { ids, n, blocks, xout: x, pooled, probs };
  }

  predictProbs(ids: number[]): Float64Array {
    return this.forward(ids).probs;
  }

  loss(ids: number[], label: number): number {
    return -Math.log(Math.max(this.forward(ids).probs[label], 1e-300));
  }

  // --- backward --------------------------------------------------------

  private layerNormBackward(
    dy: Float64Array, x: Float64Array, n: number, d: number,
    g: Float64Array, mu: Float64Array, inv: Float64Array,
    dg: Float64Array, db: Float64Array,
  ): Float64Array {
    const dx = new Float64Array(n * d);
    for (let i = 0; i < n; i++) {
      let sumDxhat = 0;
      let sumDxhatXhat = 0;
      for (let j = 0; j < d; j++) {
        const xhat = (x[i * d + j] - mu[i]) * inv[i];
        const dyv = dy[i * d + j];
        dg[j] += dyv * xhat;
        db[j] += dyv;
        const dxhat = dyv * g[j];
        sumDxhat += dxhat;
        sumDxhatXhat += dxhat * xhat;
      }
      for (let j = 0; j < d; j++) {
        const xhat = (x[i * d + j] - mu[i]) * inv[i];
        const dxhat = dy[i * d + j] * g[j];
        dx[i * d + j] = inv[i] * (dxhat - sumDxhat / d - (xhat * sumDxhatXhat) / d);
      }
    }
    return dx;
  }

  /** dX for y = x @ w; also accumulates dW (+db). */
  private linearBackward(
    dy: Float64Array, x: Float64Array, w: Float64Array,
    n: number, k: number, m: number, dw: Float64Array, db?: Float64Array,
  ): Float64Array {
    const dx = new Float64Array(n * k);
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < m; j++) {
        const dyv = dy[i * m + j];
        if (dyv === 0) continue;
        if (db) db[j] += dyv;
        for (let p = 0; p < k; p++) {
          dx[i * k + p] += dyv * w[p * m + j];
          dw[p * m + j] += dyv * x[i * k + p];
        }
      }
    }
    return dx;
  }

  /** Forward + backward for one labeled document; returns the loss. */
  computeGradients(ids: number[], label: number): number {
    const { dim: d, heads, ffDim: f, layers, classes } = this.config;
    const dh = d / heads;
    const cache = this.forward(ids);
    const n = cache.n;

    const dlogits = Float64Array.from(cache.probs);
    dlogits[label] -= 1.0;

    const wc = this.param("wc");
    const bc = this.param("bc");
    const dpooled = new Float64Array(d);
    for (let c = 0; c < classes; c++) {
      bc.g[c] += dlogits[c];
      for (let j = 0; j < d; j++) {
        wc.g[j * classes + c] += cache.pooled[j] * dlogits[c];
        dpooled[j] += wc.w[j * classes + c] * dlogits[c];
      }
    }

    let dx: Float64Array = new Float64Array(n * d);
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < d; j++) dx[i * d + j] = dpooled[j] / n;
    }

    for (let b = layers - 1; b >= 0; b--) {
      const c = cache.blocks[b];

      // feed-forward sublayer: x_next = xres1 + relu(LN2(xres1) w1 + b1) w2 + b2
      const dff = dx; // residual passes dx through untouched
      const du = this.linearBackward(
        dff, c.u, this.param(`w2.${b}`).w, n, f, d,
        this.param(`w2.${b}`).g, this.param(`b2.${b}`).g,
      );
      for (let i = 0; i < n * f; i++) if (c.z1[i] <= 0) du[i] = 0;
      const dxn2 = this.linearBackward(
        du, c.xn2, this.param(`w1.${b}`).w, n, d, f,
        this.param(`w1.${b}`).g, this.param(`b1.${b}`).g,
      );
      const dxres1 = this.layerNormBackward(
        dxn2, c.xres1, n, d, this.param(`ln2g.${b}`).w, c.ln2Mu, c.ln2Inv,
        this.param(`ln2g.${b}`).g, this.param(`ln2b.${b}`).g,
      );
      for (let i = 0; i < n * d; i++) dxres1[i] += dx[i];

      // attention sublayer: xres1 = xin + (softmax(QK^T/s) V) wo
      const dhcat = this.linearBackward(
        dxres1, c.hcat, this.param(`wo.${b}`).w, n, d, d, this.param(`wo.${b}`).g,
      );
      const dq = new Float64Array(n * d);
      const dk = new Float64Array(n * d);
      const dv = new Float64Array(n * d);
      const scale = 1.0 / Math.sqrt(dh);
      for (let hh = 0; hh < heads; hh++) {
        const off = hh * dh;
        for (let i = 0; i < n; i++) {
          const row = hh * n * n + i * n;
          // dA from context gradient, then softmax jacobian to dS
          const da = new Float64Array(n);
          for (let j = 0; j < n; j++) {
            let s = 0;
            for (let cc = 0; cc < dh; cc++) {
              s += dhcat[i * d + off + cc] * c.v[j * d + off + cc];
            }
            da[j] = s;
          }
          let dot = 0;
          for (let j = 0; j < n; j++) dot += da[j] * c.att[row + j];
          for (let j = 0; j < n; j++) {
            const ds = c.att[row + j] * (da[j] - dot) * scale;
            for (let cc = 0; cc < dh; cc++) {
              dq[i * d + off + cc] += ds * c.k[j * d + off + cc];
              dk[j * d + off + cc] += ds * c.q[i * d + off + cc];
            }
          }
          for (let j = 0; j < n; j++) {
            const a = c.att[row + j];
            if (a === 0) continue;
            for (let cc = 0; cc < dh; cc++) {
              dv[j * d + off + cc] += a * dhcat[i * d + off + cc];
            }
          }
        }
      }

      const dxn1 = this.linearBackward(
        dq, c.xn1, this.param(`wq.${b}`).w, n, d, d, this.param(`wq.${b}`).g,
      );
      const dxn1K = this.linearBackward(
        dk, c.xn1, this.param(`wk.${b}`).w, n, d, d, this.param(`wk.${b}`).g,
      );
      const dxn1V = this.linearBackward(
        dv, c.xn1, this.param(`wv.${b}`).w, n, d, d, this.param(`wv.${b}`).g,
      );
      for (let i = 0; i < n * d; i++) dxn1[i] += dxn1K[i] + dxn1V[i];

      const dxin = this.layerNormBackward(
        dxn1, c.xin, n, d, this.param(`ln1g.${b}`).w, c.ln1Mu, c.ln1Inv,
        this.param(`ln1g.${b}`).g, this.param(`ln1b.${b}`).g,
      );
      for (let i = 0; i < n * d; i++) dxin[i] += dxres1[i];
      dx = dxin;
    }

    const emb = this.param("emb");
    const pos = this.param("pos");
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < d; j++) {
        emb.g[cache.ids[i] * d + j] += dx[i * d + j];
        pos.g[i * d + j] += dx[i * d + j];
      }
    }
    return -Math.log(Math.max(cache.probs[label], 1e-300));
  }

  // --- training --------------------------------------------------------

  /** One pass over the documents in seeded-shuffled order; mean loss. */
  trainEpoch(docs: { ids: number[]; label: number }[]): number {
    const order = docs.map((_, i) => i);
    this.rng.shuffle(order);
    let total = 0;
    for (const index of order) {
      for (const param of this.params) param.zeroGrad();
      total += this.computeGradients(docs[index].ids, docs[index].label);
      this.step += 1;
      for (const param of this.params) param.adamStep(this.config.lr, this.step);
    }
    return total / docs.length;
  }

  // --- persistence -----------------------------------------------------

  serialize(): { config: EncoderConfig; step: number; params: Record<string, number[]> } {
    const params: Record<string, number[]> = {};
    for (const param of this.params) params[param.name] = Array.from(param.w);
    return { config: this.config, step: this.step, params };
  }

  static deserialize(payload: {
    config: EncoderConfig; step?: number; params: Record<string, number[]>;
  }): TextClassifierModel {
    const model = new TextClassifierModel(payload.config);
    model.step = payload.step ?? 0;
    for (const param of model.params) {
      const stored = payload.params[param.name];
      if (!stored || stored.length !== param.w.length) {
        throw new Error(`stored parameter ${param.name} is missing or misshapen`);
      }
      param.w.set(stored);
    }
    return model;
  }

  /** Overwrite encoder weights (not the head) from a saved parameter map. */
  loadEncoderWeights(params: Record<string, number[]>): void {
    for (const param of this.params) {
      if (param.name === "wc" || param.name === "bc") continue;
      const stored = params[param.name];
      if (stored && stored.length === param.w.length) param.w.set(stored);
    }
  }
}
