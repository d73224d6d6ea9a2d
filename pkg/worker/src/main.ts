/**
 * Entry point: parse flags, start the stdio request loop.
 *
 *   node dist/main.js [--seed N] [--cache-dir DIR] [--model WEIGHTS.json]
 *                     [--device cpu] [--max-len N] [--cap N] [--lr X]
 *
 * --model points at a locally stored encoder weight file (the stand-in for
 * a downloaded pretrained checkpoint); without it the encoder starts from
 * the seeded random initialization.  --device exists for interface parity
 * and accepts only "cpu".
 */

import { DEFAULT_CONFIG } from "./encoder";
import { DEFAULT_OPTIONS, ServeOptions, serve } from "./serve";

function parseArgs(argv: string[]): ServeOptions {
  const options: ServeOptions = {
    ...DEFAULT_OPTIONS,
    config: { ...DEFAULT_CONFIG },
  };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const value = () => {
      const v = argv[++i];
      if (v === undefined) throw new Error(`${flag} needs a value`);
      return v;
    };
    switch (flag) {
      case "--seed":
        options.config.seed = Number(value());
        break;
      case "--cache-dir":
        options.cacheDir = value();
        break;
      case "--model":
        options.pretrainedPath = value();
        break;
      case "--device": {
        const device = value();
        if (device !== "cpu") throw new Error(`unsupported device ${device}`);
        break;
      }
      case "--max-len":
        options.config.maxLen = Number(value());
        break;
      case "--cap":
        options.maxModelsInMemory = Number(value());
        break;
      case "--lr":
        options.config.lr = Number(value());
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  return options;
}

async function main(): Promise<void> {
  let options: ServeOptions;
  try {
    options = parseArgs(process.argv.slice(2));
  } catch (err) {
    process.stderr.write(`${err instanceof Error ? err.message : err}\n`);
    process.exit(2);
  }
  await serve(options);
}

main().then(
  () => process.exit(0),
  (err) => {
    process.stderr.write(`[worker] fatal: ${err?.stack ?? err}\n`);
    process.exit(1);
  },
);
