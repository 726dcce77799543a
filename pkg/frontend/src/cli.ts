#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { FIGURE_IDS, FigureId } from "./figures.js";
import { renderFigure } from "./render.js";

export async function main(argv: string[]): Promise<number> {
  let exitCode = 0;
  await yargs(argv)
    .scriptName("plots")
    .command(
      "render <figure>",
      "render one figure from a directory of experiment CSVs",
      (cmd) =>
        cmd
          .positional("figure", {
            describe: "figure to render",
            choices: FIGURE_IDS,
            demandOption: true,
          })
          .option("in", {
            type: "string",
            demandOption: true,
            describe: "directory containing the experiment CSVs",
          })
          .option("out", {
            type: "string",
            demandOption: true,
            describe: "directory to write the SVG into",
          }),
      (args) => {
        try {
          const result = renderFigure(
            args.figure as FigureId,
            args.in as string,
            args.out as string,
          );
          console.log(`wrote ${result.outPath}`);
        } catch (err) {
          console.error(`error: ${(err as Error).message}`);
          exitCode = 1;
        }
      },
    )
    .demandCommand(1)
    .strict()
    .fail((msg, err) => {
      console.error(`error: ${msg ?? err?.message}`);
      exitCode = 1;
    })
    .exitProcess(false)
    .parseAsync();
  return exitCode;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
