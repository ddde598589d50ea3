/**
 * Minimal deterministic SVG builder.
 *
 * Attribute order is exactly the insertion order and numbers go through one
 * fixed formatter, so identical inputs produce byte-identical files.
 */

export type Attrs = Record<string, string | number>;

export function fmt(x: number): string {
  if (!Number.isFinite(x)) {
    throw new Error(`cannot format non-finite coordinate ${x}`);
  }
  const s = x.toFixed(4);
  return s.replace(/\.?0+$/, "").replace(/^-0$/, "0");
}

function renderAttrs(attrs: Attrs): string {
  return Object.entries(attrs)
    .map(([k, v]) => ` ${k}="${typeof v === "number" ? fmt(v) : v}"`)
    .join("");
}

export function el(tag: string, attrs: Attrs, children: string[] = []): string {
  const open = `<${tag}${renderAttrs(attrs)}`;
  if (children.length === 0) {
    return `${open}/>`;
  }
  return `${open}>${children.join("")}</${tag}>`;
}


export function escapeText(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function document(
  width: number,
  height: number,
  children: string[],
): string {
  const open =
    `<svg xmlns="http://www.w3.org/2000/svg" width="${fmt(width)}"` +
    ` height="${fmt(height)}" viewBox="0 0 ${fmt(width)} ${fmt(height)}">`;
  return `${open}${children.join("")}</svg>\n`;
}

/** Linear scale mapping [d0, d1] onto [r0, r1]. */
export interface Scale {
  (x: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(
  domain: [number, number],
  range: [number, number],
): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0;
  if (span === 0) {
    throw new Error("degenerate scale domain");
  }
  const scale = ((x: number) => r0 + ((x - d0) / span) * (r1 - r0)) as Scale;
  scale.domain = domain;
  scale.range = range;
  return scale;
}

/** Round ticks covering the domain: step chosen from {1, 2, 5} x 10^k. */
export function ticks(domain: [number, number], count = 6): number[] {
  const [lo, hi] = domain;
  const rawStep = (hi - lo) / Math.max(count - 1, 1);
  const power = Math.floor(Math.log10(rawStep));
  const base = 10 ** power;
  let step = base;
  for (const m of [1, 2, 5, 10]) {
    if (m * base >= rawStep) {
      step = m * base;
      break;
    }
  }
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    out.push(Number(v.toFixed(10)));
  }
  return out;
}
