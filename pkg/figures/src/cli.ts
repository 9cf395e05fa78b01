/** CLI: `figures render --spec <file.json>`
 *
 * The spec file holds one figure definition or an array of them:
 *   { "kind": "ta-mse", "input": "sweep.csv", "output": "fig.svg",
 *     "receivers": ["Rx1", "Rx4"], "title": "..." }
 * Paths are resolved relative to the spec file.
 */

import { readFileSync, writeFileSync } from "fs";
import { dirname, resolve } from "path";
import { FigureSpec, KINDS, render } from "./figures";

function usage(): never {
  process.stderr.write(
    `usage: figures render --spec <file.json>\n` +
      `       figure kinds: ${KINDS.join(", ")}\n`,
  );
  process.exit(2);
}

export function main(argv: string[]): number {
  if (argv.length < 1 || argv[0] !== "render") usage();
  const flagIdx = argv.indexOf("--spec");
  if (flagIdx < 0 || flagIdx + 1 >= argv.length) usage();
  const specPath = argv[flagIdx + 1];
  const base = dirname(resolve(specPath));
  const doc = JSON.parse(readFileSync(specPath, "utf-8"));
  const specs: FigureSpec[] = Array.isArray(doc) ? doc : [doc];
  for (const spec of specs) {
    if (!spec.kind || !spec.input || !spec.output) {
      throw new Error("figure spec needs kind, input and output");
    }
    const csv = readFileSync(resolve(base, spec.input), "utf-8");
    const svg = render(spec, csv);
    writeFileSync(resolve(base, spec.output), svg);
    process.stdout.write(`${spec.kind} -> ${spec.output}\n`);
  }
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
