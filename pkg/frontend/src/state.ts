/** Scenario state and its URL-hash round trip (shareable links). */

import type { Schedule } from "./api.js";

export interface UiScenario {
  thresholdUsd: number;          // first bracket threshold, displayed in dollars
  rates: number[];               // 1..3 marginal rates, increasing thresholds
  epsilon: number;               // avoidance elasticity, slider 0..5
  eta: number;                   // consumption elasticity, slider 0..5
  rebate: boolean;
  pinned?: UiScenario;           // comparison slot (not serialized recursively)
}

export const DEFAULT_SCENARIO: UiScenario = {
  thresholdUsd: 50_000_000,
  rates: [0.12],
  epsilon: 1,
  eta: 1,
  rebate: false,
};

export function validate(s: UiScenario): string | null {
  if (!(s.thresholdUsd > 0)) return "threshold must be positive";
  if (s.rates.length < 1 || s.rates.length > 3) return "1 to 3 brackets";
  if (s.rates.some((r) => r < 0 || r > 1)) return "rates must lie in [0, 1]";
  if (s.epsilon < 0 || s.epsilon > 5 || s.eta < 0 || s.eta > 5)
    return "elasticities must lie in [0, 5]";
  return null;
}

/** Bracket schedule in model units (multiples of average income); brackets
 * above the first sit at 2x and 4x the base threshold. */
export function toSchedule(s: UiScenario, avgIncomeUsd: number): Schedule {
  const base = s.thresholdUsd / avgIncomeUsd;
  return s.rates.map((rate, k) => [base * Math.pow(2, k), rate] as [number, number]);
}

export function encodeHash(s: UiScenario): string {
  const parts = [
    `t=${s.thresholdUsd}`,
    `r=${s.rates.join("_")}`,
    `e=${s.epsilon}`,
    `n=${s.eta}`,
    `b=${s.rebate ? 1 : 0}`,
  ];
  return "#" + parts.join("&");
}

export function decodeHash(hash: string): UiScenario | null {
  if (!hash.startsWith("#")) return null;
  const fields = new Map<string, string>();
  for (const part of hash.slice(1).split("&")) {
    const [k, v] = part.split("=");
    if (k && v !== undefined) fields.set(k, v);
  }
  if (!fields.has("t") || !fields.has("r")) return null;
  const scenario: UiScenario = {
    thresholdUsd: Number(fields.get("t")),
    rates: fields.get("r")!.split("_").map(Number),
    epsilon: Number(fields.get("e") ?? "1"),
    eta: Number(fields.get("n") ?? "1"),
    rebate: fields.get("b") === "1",
  };
  return validate(scenario) === null ? scenario : null;
}
