/** Figure dispatch and file output (SVG vector, PNG raster via resvg). */

import { readFileSync, writeFileSync } from "node:fs";

import { parseBenchJson, parseRows, SchemaError } from "./csv";
import { bars6, rhoBars, sweepDelay, sweepMeanPhoton } from "./charts";

export const KINDS = ["bars6", "sweep_n", "sweep_delay", "rho_bars"] as const;
export type FigureKind = (typeof KINDS)[number];

export interface FigureSpec {
  kind: FigureKind;
  input: string;
  output: string;
}

export function buildSvg(kind: FigureKind, inputText: string): string {
  switch (kind) {
    case "bars6":
      return bars6(parseRows(inputText));
    case "sweep_n":
      return sweepMeanPhoton(parseRows(inputText));
    case "sweep_delay":
      return sweepDelay(parseRows(inputText));
    case "rho_bars":
      return rhoBars(parseBenchJson(inputText));
  }
}

export function render(spec: FigureSpec): void {
  const inputText = readFileSync(spec.input, "utf8");
  const svg = buildSvg(spec.kind, inputText);
  if (spec.output.endsWith(".svg")) {
    writeFileSync(spec.output, svg);
    return;
  }
  if (spec.output.endsWith(".png")) {
    // lazy import: vector-only use works without the native module
    const { Resvg } = require("@resvg/resvg-js");
    const png = new Resvg(svg, { background: "white" }).render().asPng();
    writeFileSync(spec.output, png);
    return;
  }
  throw new SchemaError(
    `unsupported output format for ${spec.output}; use .svg or .png`,
  );
}
