/**
 * Figure builders. Each returns a complete SVG document string.
 *
 * Every data mark carries data-* attributes holding the source values
 * verbatim, so tests (and downstream tooling) can check the rendered
 * geometry against the CSV/JSON numbers without re-deriving layout.
 */

import { BenchJson, ResultRow, SchemaError } from "./csv";
import { document, el, fmt, linearScale, ticks, Scale } from "./svg";

export const THRESHOLD = 2 / 3;
export const KM_PER_US = 0.2; // tau * c/1.5 with c/1.5 = 2e8 m/s

const W = 640;
const H = 400;
const MARGIN = { top: 48, right: 24, bottom: 56, left: 64 };
const PLOT_W = W - MARGIN.left - MARGIN.right;
const PLOT_H = H - MARGIN.top - MARGIN.bottom;

const FONT = `font-family="Helvetica, Arial, sans-serif" font-size="12"`;

function frame(): string {
  return el("rect", {
    x: MARGIN.left,
    y: MARGIN.top,
    width: PLOT_W,
    height: PLOT_H,
    fill: "none",
    stroke: "#222",
    "stroke-width": 1,
  });
}

function thresholdLine(y: Scale): string {
  return el("line", {
    class: "threshold",
    x1: MARGIN.left,
    x2: MARGIN.left + PLOT_W,
    y1: y(THRESHOLD),
    y2: y(THRESHOLD),
    stroke: "#555",
    "stroke-dasharray": "6 4",
    "data-threshold": String(THRESHOLD),
  });
}

function yAxis(y: Scale, label: string): string {
  const parts: string[] = [];
  for (const t of ticks(y.domain, 6)) {
    parts.push(
      el("line", {
        x1: MARGIN.left - 5,
        x2: MARGIN.left,
        y1: y(t),
        y2: y(t),
        stroke: "#222",
      }),
      `<text x="${fmt(MARGIN.left - 9)}" y="${fmt(y(t) + 4)}" ${FONT}` +
        ` text-anchor="end">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<text x="16" y="${fmt(MARGIN.top + PLOT_H / 2)}" ${FONT}` +
      ` text-anchor="middle" transform="rotate(-90 16 ${fmt(
        MARGIN.top + PLOT_H / 2,
      )})">${label}</text>`,
  );
  return parts.join("");
}

function xAxisLinear(x: Scale, label: string): string {
  const parts: string[] = [];
  for (const t of ticks(x.domain, 7)) {
    parts.push(
      el("line", {
        x1: x(t),
        x2: x(t),
        y1: MARGIN.top + PLOT_H,
        y2: MARGIN.top + PLOT_H + 5,
        stroke: "#222",
      }),
      `<text x="${fmt(x(t))}" y="${fmt(MARGIN.top + PLOT_H + 20)}" ${FONT}` +
        ` text-anchor="middle">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${fmt(MARGIN.left + PLOT_W / 2)}" y="${fmt(H - 12)}" ${FONT}` +
      ` text-anchor="middle">${label}</text>`,
  );
  return parts.join("");
}

function fidelityDomain(rows: ResultRow[]): [number, number] {
  let lo = THRESHOLD;
  for (const r of rows) {
    lo = Math.min(lo, r.fidelity - r.stderr);
  }
  return [Math.max(0, Math.floor(lo * 20) / 20 - 0.05), 1.0];
}

export function bars6(rows: ResultRow[]): string {
  if (rows.length === 0) {
    throw new SchemaError("no rows to plot");
  }
  const y = linearScale([0, 1], [MARGIN.top + PLOT_H, MARGIN.top]);
  const slot = PLOT_W / rows.length;
  const barW = slot * 0.6;
  const marks: string[] = [];
  rows.forEach((row, i) => {
    const xPos = MARGIN.left + slot * i + (slot - barW) / 2;
    marks.push(
      el("rect", {
        class: "bar",
        x: xPos,
        y: y(row.fidelity),
        width: barW,
        height: y(0) - y(row.fidelity),
        fill: "#e8853d",
        stroke: "#222",
        "data-state": String(row.sweptValue),
        "data-fidelity": String(row.fidelity),
      }),
    );
    if (row.stderr > 0) {
      marks.push(errorBar(xPos + barW / 2, y, row));
    }
    marks.push(
      `<text x="${fmt(xPos + barW / 2)}" y="${fmt(
        MARGIN.top + PLOT_H + 20,
      )}" ${FONT} text-anchor="middle">${String(row.sweptValue)}</text>`,
    );
  });
  return document(W, H, [
    frame(),
    ...marks,
    thresholdLine(y),
    yAxis(y, "teleportation fidelity"),
  ]);
}

function errorBar(cx: number, y: Scale, row: ResultRow): string {
  return el("line", {
    class: "errorbar",
    x1: cx,
    x2: cx,
    y1: y(row.fidelity - row.stderr),
    y2: y(row.fidelity + row.stderr),
    stroke: "#222",
    "data-stderr": String(row.stderr),
  });
}

function sweepChart(
  rows: ResultRow[],
  xLabel: string,
  topAxisKm: boolean,
): string {
  if (rows.length === 0) {
    throw new SchemaError("no rows to plot");
  }
  const values = rows.map((r) => {
    if (typeof r.sweptValue !== "number") {
      throw new SchemaError(
        `swept_value ${JSON.stringify(r.sweptValue)} is not a number`,
      );
    }
    return r.sweptValue;
  });
  const x = linearScale(
    [Math.min(...values), Math.max(...values)],
    [MARGIN.left, MARGIN.left + PLOT_W],
  );
  const y = linearScale(fidelityDomain(rows), [MARGIN.top + PLOT_H, MARGIN.top]);
  const marks: string[] = [];
  const points = rows
    .map((r) => `${fmt(x(r.sweptValue as number))},${fmt(y(r.fidelity))}`)
    .join(" ");
  marks.push(
    el("polyline", {
      class: "curve",
      points,
      fill: "none",
      stroke: "#2a6fb0",
      "stroke-width": 1.5,
    }),
  );
  for (const r of rows) {
    const cx = x(r.sweptValue as number);
    if (r.stderr > 0) {
      marks.push(errorBar(cx, y, r));
    }
    marks.push(
      el("circle", {
        class: "point",
        cx,
        cy: y(r.fidelity),
        r: 3,
        fill: "#2a6fb0",
        "data-x": String(r.sweptValue),
        "data-fidelity": String(r.fidelity),
      }),
    );
  }
  const axes: string[] = [xAxisLinear(x, xLabel), yAxis(y, "teleportation fidelity")];
  if (topAxisKm) {
    for (const t of ticks(x.domain, 7)) {
      const km = t * KM_PER_US;
      axes.push(
        el("line", {
          x1: x(t),
          x2: x(t),
          y1: MARGIN.top,
          y2: MARGIN.top - 5,
          stroke: "#222",
        }),
        `<text class="top-axis" x="${fmt(x(t))}" y="${fmt(
          MARGIN.top - 10,
        )}" ${FONT} text-anchor="middle" data-tau="${String(t)}"` +
          ` data-km="${String(km)}">${fmt(km)}</text>`,
      );
    }
    axes.push(
      `<text x="${fmt(MARGIN.left + PLOT_W / 2)}" y="${fmt(
        MARGIN.top - 28,
      )}" ${FONT} text-anchor="middle">length equivalent (km)</text>`,
    );
  }
  return document(W, H, [frame(), ...marks, thresholdLine(y), ...axes]);
}

export function sweepMeanPhoton(rows: ResultRow[]): string {
  return sweepChart(rows, "mean photon number", false);
}

export function sweepDelay(rows: ResultRow[]): string {
  for (const r of rows) {
    if (r.lengthKm === null) {
      throw new SchemaError("delay sweep rows must carry the length_km column");
    }
    const expected = (r.sweptValue as number) * KM_PER_US;
    if (Math.abs(r.lengthKm - expected) > 1e-9) {
      throw new SchemaError(
        `length_km ${r.lengthKm} inconsistent with tau ${String(r.sweptValue)}`,
      );
    }
  }
  return sweepChart(rows, "inserted delay (us)", true);
}

export function rhoBars(bench: BenchJson): string {
  const states = Object.keys(bench.density_matrices);
  if (states.length === 0) {
    throw new SchemaError("no density matrices to plot");
  }
  const cols = 3;
  const rowsCount = Math.ceil(states.length / cols);
  const cellW = (W - MARGIN.left - MARGIN.right) / cols;
  const cellH = (H - MARGIN.top - MARGIN.bottom) / rowsCount;
  const marks: string[] = [];
  states.forEach((state, idx) => {
    const dm = bench.density_matrices[state];
    const originX = MARGIN.left + (idx % cols) * cellW + 10;
    const originY = MARGIN.top + Math.floor(idx / cols) * cellH;
    const innerH = cellH - 40;
    const zero = originY + innerH; // bars measure Re(rho_ij) in [-1, 1]
    const y = linearScale([-1, 1], [zero + innerH / 2, zero - innerH / 2]);
    const labels = ["00", "01", "10", "11"];
    const barW = (cellW - 40) / 4;
    labels.forEach((lab, k) => {
      const i = Math.floor(k / 2);
      const j = k % 2;
      const re = dm.re[i][j];
      const im = dm.im[i][j];
      const xPos = originX + k * barW;
      marks.push(
        el("rect", {
          class: "rho-bar",
          x: xPos,
          y: Math.min(y(re), y(0)),
          width: barW * 0.7,
          height: Math.abs(y(re) - y(0)),
          fill: "#7aa6cc",
          stroke: "#222",
          "data-state": state,
          "data-element": lab,
          "data-re": String(re),
          "data-im": String(im),
        }),
      );
    });
    marks.push(
      el("line", {
        x1: originX - 4,
        x2: originX + 4 * barW,
        y1: y(0),
        y2: y(0),
        stroke: "#222",
      }),
      `<text x="${fmt(originX + 2 * barW)}" y="${fmt(
        originY + innerH + 26,
      )}" ${FONT} text-anchor="middle">${state}</text>`,
    );
  });
  marks.push(
    `<text x="${fmt(W / 2)}" y="24" ${FONT} text-anchor="middle">` +
      `Re of Bob's conditional density matrices (average fidelity ${fmt(
        bench.average_fidelity,
      )})</text>`,
  );
  return document(W, H, marks);
}
