/**
 * Figure renderer over an artifact directory.
 *
 *   node dist/cli.js --kind rate-plot --inputs 'out/rmse_*.csv' \
 *        --ref 0.5 --out figures/rate.svg
 *   node dist/cli.js --all out/ --out figures/
 *
 * `--all` inspects the directory and emits every figure its artifacts
 * support (density grid, rate plots, phase portraits, contraction decay).
 */

import * as fs from "fs";
import * as path from "path";

import { MissingArtifact, ParseError, resolveGlob } from "./csv";
import { FigureKind, FigureSpec, renderSpec } from "./figures";

interface Args {
  kind?: string;
  inputs: string[];
  refs: number[];
  out?: string;
  all?: string;
  title?: string;
}

function parseArgs(argv: string[]): Args {
  const args: Args = { inputs: [], refs: [] };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const next = () => {
      if (i + 1 >= argv.length) throw new Error(`${flag} needs a value`);
      return argv[++i];
    };
    switch (flag) {
      case "--kind": args.kind = next(); break;
      case "--inputs": args.inputs.push(next()); break;
      case "--ref": args.refs.push(Number(next())); break;
      case "--out": args.out = next(); break;
      case "--all": args.all = next(); break;
      case "--title": args.title = next(); break;
      default: throw new Error(`unknown flag ${flag}`);
    }
  }
  return args;
}

function writeFigure(spec: FigureSpec): void {
  const svg = renderSpec(spec);
  fs.mkdirSync(path.dirname(spec.output), { recursive: true });
  fs.writeFileSync(spec.output, svg);
  console.log(`wrote ${spec.output}`);
}

function renderAll(dir: string, outDir: string): number {
  let count = 0;
  const maybe = (spec: FigureSpec) => {
    try {
      writeFigure(spec);
      count += 1;
    } catch (err) {
      if (!(err instanceof MissingArtifact)) throw err;
    }
  };
  maybe({ kind: "density-grid", inputs: [path.join(dir, "density_*.csv")],
          output: path.join(outDir, "density-grid.svg") });
  for (const metric of ["rmse", "path"]) {
    const files = resolveGlob(path.join(dir, `${metric}_*.csv`));
    if (files.length) {
      maybe({ kind: "rate-plot", inputs: [path.join(dir, `${metric}_*.csv`)],
              referenceSlopes: [0.5], title: `strong error (${metric})`,
              output: path.join(outDir, `rate-${metric}.svg`) });
    }
  }
  maybe({ kind: "rate-plot", inputs: [path.join(dir, "poc_*.csv")],
          referenceSlopes: [-0.5], title: "particle-count error",
          output: path.join(outDir, "rate-poc.svg") });
  maybe({ kind: "phase-portrait", inputs: [path.join(dir, "tracks_*.csv")],
          output: path.join(outDir, "phase-portrait.svg") });
  maybe({ kind: "contraction", inputs: [path.join(dir, "contraction.csv")],
          title: "coupled mean-square distance",
          output: path.join(outDir, "contraction.svg") });
  return count;
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err));
    return 2;
  }
  try {
    if (args.all) {
      const out = args.out ?? path.join(args.all, "figures");
      const count = renderAll(args.all, out);
      if (count === 0) {
        console.error(`no renderable artifacts under ${args.all}`);
        return 1;
      }
      return 0;
    }
    if (!args.kind || !args.out || args.inputs.length === 0) {
      console.error("need --kind, --inputs and --out (or --all DIR)");
      return 2;
    }
    writeFigure({
      kind: args.kind as FigureKind,
      inputs: args.inputs,
      referenceSlopes: args.refs,
      title: args.title,
      output: args.out,
    });
    return 0;
  } catch (err) {
    if (err instanceof MissingArtifact || err instanceof ParseError) {
      console.error(String(err));
      return 1;
    }
    throw err;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
