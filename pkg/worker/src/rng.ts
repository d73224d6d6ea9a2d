/** Deterministic PRNG (splitmix64-seeded xorshift128+) with gaussian draws. */

export class Rng {
  private s0: bigint;
  private s1: bigint;
  private spare: number | null = null;

  constructor(seed: number) {
    // splitmix64 expansion of the 32/53-bit seed into two 64-bit states
    let x = BigInt(Math.floor(seed)) & 0xffffffffffffffffn;
    const next = () => {
      x = (x + 0x9e3779b97f4a7c15n) & 0xffffffffffffffffn;
      let z = x;
      z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & 0xffffffffffffffffn;
      z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & 0xffffffffffffffffn;
      return z ^ (z >> 31n);
    };
    this.s0 = next();
    this.s1 = next();
    if (this.s0 === 0n && this.s1 === 0n) this.s1 = 1n;
  }

  /** Uniform in [0, 1) with 53 bits of precision. */
  next(): number {
    let s1 = this.s0;
    const s0 = this.s1;
    this.s0 = s0;
    s1 = (s1 ^ (s1 << 23n)) & 0xffffffffffffffffn;
    s1 ^= s1 >> 17n;
    s1 ^= s0 ^ (s0 >> 26n);
    this.s1 = s1;
    const sum = (s0 + s1) & 0xffffffffffffffffn;
    return Number(sum >> 11n) / 9007199254740992;
  }

  int(bound: number): number {
    return Math.floor(this.next() * bound);
  }

  /** Standard normal via Box-Muller, caching the spare draw. */
  gauss(): number {
    if (this.spare !== null) {
      const value = this.spare;
      this.spare = null;
      return value;
    }
    let u = 0;
    let v = 0;
    do {
      u = this.next();
    } while (u === 0);
    v = this.next();
    const radius = Math.sqrt(-2.0 * Math.log(u));
    this.spare = radius * Math.sin(2.0 * Math.PI * v);
    return radius * Math.cos(2.0 * Math.PI * v);
  }

  /** In-place Fisher-Yates shuffle. */
  shuffle<T>(items: T[]): void {
    for (let i = items.length - 1; i > 0; i--) {
      const j = this.int(i + 1);
      [items[i], items[j]] = [items[j], items[i]];
    }
  }
}
