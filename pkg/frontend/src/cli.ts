#!/usr/bin/env node
/** plot --kind KIND --in FILE --out FILE[.svg|.png] */

import { FigureKind, KINDS, render } from "./render";

function usage(): string {
  return `usage: plot --kind ${KINDS.join("|")} --in FILE --out FILE[.svg|.png]`;
}

export function main(argv: string[]): number {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      process.stderr.write(
        JSON.stringify({ error: { type: "UsageError", message: usage() } }) +
          "\n",
      );
      return 2;
    }
    args.set(key.slice(2), value);
  }
  const kind = args.get("kind");
  const input = args.get("in");
  const output = args.get("out");
  if (!kind || !input || !output || !KINDS.includes(kind as FigureKind)) {
    process.stderr.write(
      JSON.stringify({ error: { type: "UsageError", message: usage() } }) + "\n",
    );
    return 2;
  }
  try {
    render({ kind: kind as FigureKind, input, output });
    return 0;
  } catch (err) {
    const e = err as Error;
    process.stderr.write(
      JSON.stringify({ error: { type: e.constructor.name, message: e.message } }) +
        "\n",
    );
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
