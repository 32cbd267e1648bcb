/** Pure mappings from API responses to the numbers the panels display.
 * Values pass through untouched (no rounding, no arithmetic) so that what is
 * rendered is exactly what the API returned; formatting for humans happens
 * only in the DOM layer, which also stores the raw value on each cell. */

import type {
  BracketShares,
  EstateCompareResponse,
  LafferPoint,
  OptimumResponse,
  SteadyStateResponse,
} from "./api.js";
import type { Series, Marker } from "./charts.js";

export interface LafferView {
  series: Series[];
  marker: Marker;
  optimumRate: number;
  revenueTable: { label: string; value: number }[];
}

export function lafferView(
  behavioral: LafferPoint[],
  mechanical: LafferPoint[],
  optimum: OptimumResponse,
  current: SteadyStateResponse,
  currentRate: number,
): LafferView {
  const onCurve = behavioral.find((p) => p.rate === optimum.rate);
  const markerY = onCurve
    ? onCurve.revenue_long_run
    : interpolate(behavioral, optimum.rate);
  return {
    series: [
      {
        label: "static",
        xs: behavioral.map((p) => p.rate),
        ys: behavioral.map((p) => p.revenue_static),
        color: "#ff7f0e",
        dashed: true,
      },
      {
        label: "mechanical",
        xs: mechanical.map((p) => p.rate),
        ys: mechanical.map((p) => p.revenue_long_run),
        color: "#9467bd",
      },
      {
        label: "behavioral",
        xs: behavioral.map((p) => p.rate),
        ys: behavioral.map((p) => p.revenue_long_run),
        color: "#1f77b4",
      },
    ],
    marker: { x: optimum.rate, y: markerY, label: "revenue-max" },
    optimumRate: optimum.rate,
    revenueTable: [
      { label: "static revenue at current rate", value: current.revenue_static },
      { label: "long-run revenue at current rate", value: current.revenue_long_run },
      { label: "revenue-maximizing rate", value: optimum.rate },
    ],
  };
}

function interpolate(points: LafferPoint[], rate: number): number {
  let best = points[0];
  for (const p of points) {
    if (Math.abs(p.rate - rate) < Math.abs(best.rate - rate)) best = p;
  }
  return best.revenue_long_run;
}

export interface DistributionView {
  bracketLabels: string[];
  sharesBefore: number[];
  sharesAfter: number[];
  rebate: number | null;
  shareTable: { label: string; value: number }[];
}

const BRACKETS: Array<[keyof BracketShares, string]> = [
  ["bottom50", "bottom 50%"],
  ["middle40", "middle 40%"],
  ["next9", "next 9%"],
  ["top1", "top 1%"],
];

export function distributionView(res: SteadyStateResponse): DistributionView {
  return {
    bracketLabels: BRACKETS.map(([, label]) => label),
    sharesBefore: BRACKETS.map(([key]) => res.bracket_shares_before[key]),
    sharesAfter: BRACKETS.map(([key]) => res.bracket_shares_after[key]),
    rebate: res.rebate,
    shareTable: BRACKETS.map(([key, label]) => ({
      label: `${label} share after tax`,
      value: res.bracket_shares_after[key],
    })),
  };
}

export interface EstateView {
  series: Series[];
  asymptote: number;
}

export function estateView(res: EstateCompareResponse): EstateView {
  return {
    series: [
      {
        label: "annual wealth tax",
        xs: res.rates,
        ys: res.alpha_annual_tax,
        color: "#1f77b4",
      },
      {
        label: "inheritance tax",
        xs: res.rates,
        ys: res.alpha_inheritance_tax,
        color: "#2ca02c",
      },
    ],
    asymptote: res.alpha_full_inheritance_tax,
  };
}
