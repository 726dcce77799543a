import fs from "node:fs";
import path from "node:path";
import { BarChart, LineChart } from "echarts/charts";
import {
  GridComponent,
  LegendComponent,
  TitleComponent,
} from "echarts/components";
import * as echarts from "echarts/core";
import { SVGRenderer } from "echarts/renderers";

import { FigureId, buildOption, loadInputs } from "./figures.js";

echarts.use([
  LineChart,
  BarChart,
  GridComponent,
  LegendComponent,
  TitleComponent,
  SVGRenderer,
]);

/**
 * The SVG renderer names CSS classes after a process-global instance
 * counter, so two renders of the same data differ in class names only.
 * Remap them to sequential first-appearance ids to make output bytes a
 * pure function of the input CSVs.
 */
function canonicalizeClassNames(svg: string): string {
  const seen = new Map<string, string>();
  return svg.replace(/zr\d+-cls-\d+/g, (name) => {
    let mapped = seen.get(name);
    if (mapped === undefined) {
      mapped = `zr-cls-${seen.size}`;
      seen.set(name, mapped);
    }
    return mapped;
  });
}

export interface RenderResult {
  figure: FigureId;
  outPath: string;
}

/**
 * Render one figure from the CSVs in `inDir` to `<outDir>/<figure>.svg`.
 * Reads inputs only; re-rendering the same inputs writes identical bytes.
 */
export function renderFigure(
  figure: FigureId,
  inDir: string,
  outDir: string,
): RenderResult {
  const tables = loadInputs(figure, inDir);
  const option = buildOption(figure, tables);
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width: 900,
    height: 560,
  });
  try {
    chart.setOption(option);
    const svg = canonicalizeClassNames(chart.renderToSVGString());
    fs.mkdirSync(outDir, { recursive: true });
    const outPath = path.join(outDir, `${figure}.svg`);
    fs.writeFileSync(outPath, svg, "utf8");
    return { figure, outPath };
  } finally {
    chart.dispose();
  }
}
