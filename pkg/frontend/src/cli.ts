/** Figure-script entry point: --recipe file.json or individual flags. */

import { readFileSync } from "fs";

import { FIGURE_KINDS, FigureRecipe, render, validateRecipe } from "./recipes.js";
import { SchemaError } from "./schema.js";

const USAGE = `usage:
  subgap-figures --recipe <recipe.json>
  subgap-figures --kind <${FIGURE_KINDS.join("|")}> --input a.csv [--input b.csv]
                 --out figure.svg [--x-range lo:hi] [--y-range lo:hi]`;

export function parseArgs(argv: string[]): FigureRecipe {
  const args = [...argv];
  const raw: Record<string, unknown> = {};
  const inputs: string[] = [];
  while (args.length > 0) {
    const flag = args.shift() as string;
    const needValue = () => {
      const v = args.shift();
      if (v === undefined) throw new SchemaError(`missing value for ${flag}`);
      return v;
    };
    switch (flag) {
      case "--recipe": {
        const parsed = JSON.parse(readFileSync(needValue(), "utf-8"));
        return validateRecipe(parsed);
      }
      case "--kind":
        raw.kind = needValue();
        break;
      case "--input":
        inputs.push(needValue());
        break;
      case "--out":
        raw.output = needValue();
        break;
      case "--x-range":
      case "--y-range": {
        const [lo, hi] = needValue().split(":").map(Number);
        raw[flag === "--x-range" ? "xRange" : "yRange"] = [lo, hi];
        break;
      }
      case "--help":
      case "-h":
        console.log(USAGE);
        process.exit(0);
        break;
      default:
        throw new SchemaError(`unknown flag ${flag}`);
    }
  }
  raw.inputs = inputs;
  return validateRecipe(raw);
}

export function main(argv: string[]): number {
  try {
    const recipe = parseArgs(argv);
    render(recipe);
    console.log(`wrote ${recipe.output}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`error: ${err.message}`);
      console.error(USAGE);
      return 2;
    }
    throw err;
  }
}

const invokedDirectly = process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() as string);
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
