import { execFileSync } from "child_process";
import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { parseArgs } from "../src/cli.js";
import { FigureRecipe, render, validateRecipe } from "../src/recipes.js";
import { SWEEP_COLUMNS, SchemaError, parseSweepCsv } from "../src/schema.js";

const DATA = join(__dirname, "..", "testdata");

function tmp(): string {
  return mkdtempSync(join(tmpdir(), "subgap-fig-"));
}

function recipe(kind: FigureRecipe["kind"], inputs: string[], output: string): FigureRecipe {
  return { kind, inputs, output };
}

describe("csv schema", () => {
  it("parses a committed sweep file", () => {
    const rows = parseSweepCsv(readFileSync(join(DATA, "iv_g05.csv"), "utf-8"), "iv_g05.csv");
    expect(rows.length).toBeGreaterThan(10);
    expect(rows[0].g_L).toBe(0.5);
  });

  it("rejects a header mismatch", () => {
    const bad = "V,omega,WRONG\n1,2,3\n";
    expect(() => parseSweepCsv(bad, "bad.csv")).toThrow(SchemaError);
  });

  it("rejects reordered columns", () => {
    const cols = [...SWEEP_COLUMNS];
    [cols[0], cols[1]] = [cols[1], cols[0]];
    const bad = cols.join(",") + "\n" + cols.map(() => "1").join(",") + "\n";
    expect(() => parseSweepCsv(bad, "bad.csv")).toThrow(/header mismatch/);
  });

  it("rejects an empty csv", () => {
    const empty = SWEEP_COLUMNS.join(",") + "\n";
    expect(() => parseSweepCsv(empty, "empty.csv")).toThrow(/no data rows/);
    expect(() => parseSweepCsv("", "void.csv")).toThrow(/no header/);
  });

  it("rejects non-numeric cells", () => {
    const row = SWEEP_COLUMNS.map(() => "1").join(",");
    const bad = SWEEP_COLUMNS.join(",") + "\n" + row.replace(/^1/, "abc") + "\n";
    expect(() => parseSweepCsv(bad, "bad.csv")).toThrow(/not numeric/);
  });
});

describe("recipes", () => {
  it("validates figure kinds and required fields", () => {
    expect(() => validateRecipe({ kind: "pie-chart", inputs: ["a"], output: "x.svg" }))
      .toThrow(/unknown figure kind/);
    expect(() => validateRecipe({ kind: "iv-overlay", inputs: [], output: "x.svg" }))
      .toThrow(/non-empty/);
    expect(() => validateRecipe({ kind: "iv-overlay", inputs: ["a.csv"], output: "" }))
      .toThrow(/output/);
    expect(() => validateRecipe({ kind: "iv-overlay", inputs: ["a.csv"],
                                  output: "x.svg", xRange: [1] }))
      .toThrow(/xRange/);
  });

  it("renders the iv overlay byte-deterministically", () => {
    const dir = tmp();
    const out1 = join(dir, "iv1.svg");
    const out2 = join(dir, "iv2.svg");
    const inputs = [join(DATA, "iv_g0.csv"), join(DATA, "iv_g05.csv")];
    render(recipe("iv-overlay", inputs, out1));
    render(recipe("iv-overlay", inputs, out2));
    const a = readFileSync(out1, "utf-8");
    const b = readFileSync(out2, "utf-8");
    expect(a).toBe(b);
    expect(a.startsWith("<svg")).toBe(true);
    expect(a).toContain("g = 0.5");
  });

  it("renders the conductance heatmap byte-deterministically", () => {
    const dir = tmp();
    const out1 = join(dir, "map1.svg");
    const out2 = join(dir, "map2.svg");
    const inputs = [join(DATA, "map_g0.csv"), join(DATA, "map_g08.csv")];
    render(recipe("conductance-heatmap", inputs, out1));
    render(recipe("conductance-heatmap", inputs, out2));
    expect(readFileSync(out1, "utf-8")).toBe(readFileSync(out2, "utf-8"));
    expect(readFileSync(out1, "utf-8")).toContain("<rect");
  });

  it("is byte-deterministic across two separate cli processes", () => {
    const cliPath = join(__dirname, "..", "dist", "cli.js");
    if (!existsSync(cliPath)) {
      throw new Error("dist/cli.js missing; run `npm run build` before the tests");
    }
    const dir = tmp();
    const runs = ["a", "b"].map(tag => {
      const ivOut = join(dir, `iv_${tag}.svg`);
      const mapOut = join(dir, `map_${tag}.svg`);
      execFileSync("node", [cliPath, "--kind", "iv-overlay",
                            "--input", join(DATA, "iv_g0.csv"),
                            "--input", join(DATA, "iv_g05.csv"),
                            "--out", ivOut]);
      execFileSync("node", [cliPath, "--kind", "conductance-heatmap",
                            "--input", join(DATA, "map_g0.csv"),
                            "--input", join(DATA, "map_g08.csv"),
                            "--out", mapOut]);
      return [readFileSync(ivOut, "utf-8"), readFileSync(mapOut, "utf-8")];
    });
    expect(runs[0][0]).toBe(runs[1][0]);
    expect(runs[0][1]).toBe(runs[1][1]);
  });

  it("renders loss, dephasing and nonreciprocal figures", () => {
    const dir = tmp();
    render(recipe("loss-panel", [join(DATA, "loss_sweeps.csv")], join(dir, "loss.svg")));
    render(recipe("dephasing-panel", [join(DATA, "dephasing_sweeps.csv")],
                  join(dir, "deph.svg")));
    render(recipe("nonreciprocal-overlay", [join(DATA, "nonreciprocal.csv")],
                  join(dir, "nr.svg")));
    for (const name of ["loss.svg", "deph.svg", "nr.svg"]) {
      expect(readFileSync(join(dir, name), "utf-8")).toContain("</svg>");
    }
  });

  it("fails fast on an empty csv without writing an image", () => {
    const dir = tmp();
    const empty = join(dir, "empty.csv");
    writeFileSync(empty, SWEEP_COLUMNS.join(",") + "\n");
    const out = join(dir, "never.svg");
    expect(() => render(recipe("iv-overlay", [empty], out))).toThrow(/no data rows/);
    expect(() => readFileSync(out)).toThrow();
  });

  it("honours explicit axis ranges", () => {
    const dir = tmp();
    const out = join(dir, "ranged.svg");
    render({ kind: "iv-overlay", inputs: [join(DATA, "iv_g05.csv")],
             output: out, xRange: [0, 6], yRange: [0, 5] });
    expect(readFileSync(out, "utf-8")).toContain(">6<");
  });
});

describe("cli", () => {
  it("parses individual flags into a recipe", () => {
    const r = parseArgs(["--kind", "iv-overlay", "--input", "a.csv",
                         "--input", "b.csv", "--out", "fig.svg",
                         "--x-range", "0:5"]);
    expect(r.kind).toBe("iv-overlay");
    expect(r.inputs).toEqual(["a.csv", "b.csv"]);
    expect(r.xRange).toEqual([0, 5]);
  });

  it("parses a recipe file", () => {
    const dir = tmp();
    const path = join(dir, "recipe.json");
    writeFileSync(path, JSON.stringify({
      kind: "conductance-heatmap",
      inputs: [join(DATA, "map_g0.csv")],
      output: join(dir, "map.svg"),
    }));
    const r = parseArgs(["--recipe", path]);
    expect(r.kind).toBe("conductance-heatmap");
  });

  it("rejects unknown flags", () => {
    expect(() => parseArgs(["--bogus"])).toThrow(/unknown flag/);
  });
});
