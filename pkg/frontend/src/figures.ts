import path from "node:path";
import type { BarSeriesOption, LineSeriesOption } from "echarts/charts";
import type {
  GridComponentOption,
  LegendComponentOption,
  TitleComponentOption,
} from "echarts/components";
import type { ComposeOption } from "echarts/core";

export type SeriesOption = LineSeriesOption | BarSeriesOption;
export type EChartsOption = ComposeOption<
  SeriesOption | GridComponentOption | LegendComponentOption | TitleComponentOption
>;

import { Table, distinct, numbers, readTable, where } from "./csv.js";

export const FIGURE_IDS = ["fig2", "fig4", "fig5b", "fig6", "fig7"] as const;
export type FigureId = (typeof FIGURE_IDS)[number];

/** Input CSVs (relative to the run directory) and their required columns. */
export const FIGURE_INPUTS: Record<FigureId, Record<string, string[]>> = {
  fig2: {
    "haar_bench_cost.csv": ["N", "iteration", "cost", "grad_norm"],
  },
  fig4: {
    "dephasing_infidelity.csv": [
      "N",
      "parameter",
      "mean_if_in_f",
      "mean_if_e_rec",
      "final_cost",
    ],
  },
  fig5b: {
    "depolarizing_infidelity.csv": [
      "N",
      "parameter",
      "mean_if_in_f",
      "mean_if_e_rec",
      "final_cost",
    ],
    "damping_infidelity.csv": [
      "N",
      "parameter",
      "mean_if_in_f",
      "mean_if_e_rec",
      "final_cost",
    ],
  },
  fig6: {
    "time_noise_sx.csv": ["schedule", "t", "gamma", "sx_true", "sx_rec", "final_cost"],
  },
  fig7: {
    "compare_resources.csv": [
      "method",
      "N",
      "iterations",
      "evaluations_per_iter",
      "stored_entries",
      "final_cost",
      "mean_test_fidelity",
    ],
  },
};

export function loadInputs(figure: FigureId, inDir: string): Record<string, Table> {
  const tables: Record<string, Table> = {};
  for (const [name, required] of Object.entries(FIGURE_INPUTS[figure])) {
    tables[name] = readTable(path.join(inDir, name), required);
  }
  return tables;
}

const BASE: EChartsOption = {
  animation: false,
  backgroundColor: "#ffffff",
  legend: { top: 28 },
};

/** Cost vs iteration of the Haar-random compilation benchmark, one curve per N. */
function fig2(tables: Record<string, Table>): EChartsOption {
  const t = tables["haar_bench_cost.csv"];
  const series: SeriesOption[] = distinct(t, "N").map((n) => ({
    type: "line",
    name: `N = ${n}`,
    showSymbol: false,
    data: where(t, { N: n }).map((r) => [Number(r.iteration), Number(r.cost)]),
  }));
  return {
    ...BASE,
    title: { text: "Compilation cost vs iteration (Haar-random targets)" },
    xAxis: { type: "value", name: "iteration" },
    yAxis: { type: "log", name: "cost", min: "dataMin" },
    series,
  };
}

/** Reconstruction infidelity bars across the dephasing-strength grid. */
function fig4(tables: Record<string, Table>): EChartsOption {
  const t = tables["dephasing_infidelity.csv"];
  const gammas = distinct(t, "parameter");
  const series: SeriesOption[] = [];
  for (const n of distinct(t, "N")) {
    const rows = where(t, { N: n });
    series.push({
      type: "bar",
      name: `forward, N = ${n}`,
      data: numbers(rows, "mean_if_e_rec"),
    });
    series.push({
      type: "bar",
      name: `recovered input, N = ${n}`,
      data: numbers(rows, "mean_if_in_f"),
    });
  }
  return {
    ...BASE,
    title: { text: "Dephasing reconstruction infidelity vs strength" },
    xAxis: {
      type: "category",
      name: "gamma",
      data: gammas.map((g) => String(g)),
    },
    yAxis: { type: "log", name: "mean infidelity" },
    series,
  };
}

/** Recovered-input infidelity vs noise strength for depolarizing and damping. */
function fig5b(tables: Record<string, Table>): EChartsOption {
  const labels: Record<string, string> = {
    "depolarizing_infidelity.csv": "depolarizing",
    "damping_infidelity.csv": "damping",
  };
  const series: SeriesOption[] = [];
  for (const [name, t] of Object.entries(tables)) {
    for (const n of distinct(t, "N")) {
      series.push({
        type: "line",
        name: `${labels[name]}, N = ${n}`,
        data: where(t, { N: n }).map((r) => [
          Number(r.parameter),
          Number(r.mean_if_in_f),
        ]),
      });
    }
  }
  return {
    ...BASE,
    title: { text: "Recovered-input infidelity vs noise strength" },
    xAxis: { type: "value", name: "noise strength" },
    yAxis: { type: "log", name: "mean infidelity", min: "dataMin" },
    series,
  };
}

/**
 * <sigma_x> decay under time-dependent dephasing: true vs reconstructed for
 * both schedules, with a small-time inset repeating the first time points.
 */
function fig6(tables: Record<string, Table>): EChartsOption {
  const t = tables["time_noise_sx.csv"];
  const tMax = Math.max(...numbers(t.rows, "t"));
  const tInset = tMax / 4;
  const series: SeriesOption[] = [];
  for (const schedule of distinct(t, "schedule")) {
    const rows = where(t, { schedule });
    const pairs = (col: string) => rows.map((r) => [Number(r.t), Number(r[col])]);
    for (const [col, label, dashed] of [
      ["sx_true", "true", false],
      ["sx_rec", "reconstructed", true],
    ] as const) {
      const base = {
        type: "line" as const,
        name: `${schedule}, ${label}`,
        data: pairs(col),
        lineStyle: { type: dashed ? ("dashed" as const) : ("solid" as const) },
      };
      series.push({ ...base, xAxisIndex: 0, yAxisIndex: 0 });
      // The inset repeats the same series on the zoomed small-time axes.
      series.push({
        ...base,
        xAxisIndex: 1,
        yAxisIndex: 1,
        data: base.data.filter(([x]) => x <= tInset),
        legendHoverLink: false,
      });
    }
  }
  return {
    ...BASE,
    title: [
      { text: "<sigma_x> decay under time-dependent dephasing" },
      {
        text: "small-time inset",
        left: "58%",
        top: "56%",
        textStyle: { fontSize: 12 },
      },
    ],
    grid: [
      { left: 70, right: 30, top: 70, bottom: 50 },
      { left: "60%", right: "6%", top: "62%", bottom: "12%", show: true },
    ],
    xAxis: [
      { type: "value", name: "t", gridIndex: 0 },
      { type: "value", gridIndex: 1, max: tInset },
    ],
    yAxis: [
      { type: "value", name: "<sigma_x>", gridIndex: 0 },
      { type: "value", gridIndex: 1 },
    ],
    series,
  };
}

/** Per-iteration evaluation counts of the two routes, log scale. */
function fig7(tables: Record<string, Table>): EChartsOption {
  const t = tables["compare_resources.csv"];
  const ns = distinct(t, "N");
  const series: SeriesOption[] = distinct(t, "method").map((method) => ({
    type: "line",
    name: String(method),
    data: ns.map((n) => {
      const rows = where(t, { method, N: n });
      return rows.length > 0 ? Number(rows[0].evaluations_per_iter) : null;
    }),
  }));
  return {
    ...BASE,
    title: { text: "Evaluations per iteration: compilation vs measurement" },
    xAxis: { type: "category", name: "N", data: ns.map((n) => String(n)) },
    yAxis: { type: "log", name: "evaluations / iteration" },
    series,
  };
}

const BUILDERS: Record<FigureId, (tables: Record<string, Table>) => EChartsOption> = {
  fig2,
  fig4,
  fig5b,
  fig6,
  fig7,
};

export function buildOption(figure: FigureId, tables: Record<string, Table>): EChartsOption {
  return BUILDERS[figure](tables);
}
