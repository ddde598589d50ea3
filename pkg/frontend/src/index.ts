export { BASE_COLUMNS, parseBenchJson, parseRows, SchemaError } from "./csv";
export type { BenchJson, ResultRow } from "./csv";
export {
  bars6,
  KM_PER_US,
  rhoBars,
  sweepDelay,
  sweepMeanPhoton,
  THRESHOLD,
} from "./charts";
export { buildSvg, KINDS, render } from "./render";
export type { FigureKind, FigureSpec } from "./render";
