/** Panel wiring: sliders -> debounced API calls -> SVG panels and tables.
 * At most one in-flight request per panel (latest wins); failures show an
 * inline banner and keep the last good chart. */

import { ApiClient, BaselineResponse } from "./api.js";
import { barPairs, lineChart } from "./charts.js";
import { debouncedLatest, Runner } from "./debounce.js";
import {
  DEFAULT_SCENARIO,
  UiScenario,
  decodeHash,
  encodeHash,
  toSchedule,
  validate,
} from "./state.js";
import { distributionView, estateView, lafferView, LafferView } from "./viewmodel.js";

export const DEBOUNCE_MS = 250;
const RATE_GRID = Array.from({ length: 26 }, (_, k) => k / 25);

export class App {
  scenario: UiScenario = { ...DEFAULT_SCENARIO };
  baseline!: BaselineResponse;
  private lafferRun: Runner<LafferView>;
  private distRun: Runner<ReturnType<typeof distributionView>>;
  private estateRun: Runner<ReturnType<typeof estateView>>;
  // the curves and optimum depend on thresholds and elasticities but not on
  // the current rate, so rate moves reuse them and refetch only the steady state
  private curveCache: { key: string; value: CurveBundle } | null = null;
  /** resolved after each completed render, for scripted tests */
  onRendered: (panel: string) => void = () => {};

  constructor(private api: ApiClient, private doc: Document) {
    this.lafferRun = debouncedLatest(DEBOUNCE_MS, (v) => this.paintLaffer(v), (e) =>
      this.banner("laffer", e),
    );
    this.distRun = debouncedLatest(DEBOUNCE_MS, (v) => this.paintDistribution(v), (e) =>
      this.banner("distribution", e),
    );
    this.estateRun = debouncedLatest(DEBOUNCE_MS, (v) => this.paintEstate(v), (e) =>
      this.banner("estate", e),
    );
  }

  async start(): Promise<void> {
    const fromUrl = decodeHash(this.doc.location?.hash ?? "");
    if (fromUrl) this.scenario = fromUrl;
    this.baseline = await this.api.baseline();
    this.bindControls();
    this.refreshAll();
  }

  private bindControls(): void {
    const bind = (id: string, apply: (value: number) => void) => {
      const el = this.doc.getElementById(id) as HTMLInputElement | null;
      if (!el) return;
      el.addEventListener("input", () => {
        apply(Number(el.value));
        this.syncHash();
        this.refreshAll();
      });
    };
    bind("rate", (v) => (this.scenario.rates = [v, ...this.scenario.rates.slice(1)]));
    bind("threshold", (v) => (this.scenario.thresholdUsd = v));
    bind("epsilon", (v) => (this.scenario.epsilon = v));
    bind("eta", (v) => (this.scenario.eta = v));
    const rebate = this.doc.getElementById("rebate") as HTMLInputElement | null;
    rebate?.addEventListener("input", () => {
      this.scenario.rebate = rebate.checked;
      this.syncHash();
      this.refreshAll();
    });
    const pin = this.doc.getElementById("pin");
    pin?.addEventListener("click", () => {
      this.scenario.pinned = { ...this.scenario, pinned: undefined };
    });
  }

  private syncHash(): void {
    if (this.doc.location) this.doc.location.hash = encodeHash(this.scenario);
  }

  refreshAll(): void {
    const problem = validate(this.scenario);
    if (problem) {
      this.banner("laffer", new Error(problem));
      return;
    }
    const schedule = toSchedule(this.scenario, this.baseline.avg_income_usd);
    const { epsilon, eta, rebate } = this.scenario;
    const currentRate = this.scenario.rates[this.scenario.rates.length - 1];

    const curveKey = JSON.stringify([schedule.map(([t]) => t), epsilon, eta]);
    this.lafferRun(async (signal) => {
      let bundle = this.curveCache?.key === curveKey ? this.curveCache.value : null;
      if (!bundle) {
        const [behavioral, mechanical, optimum] = await Promise.all([
          this.api.laffer(schedule, epsilon, eta, RATE_GRID, signal),
          this.api.laffer(schedule, 0, 0, RATE_GRID, signal),
          this.api.optimum(schedule, epsilon, eta, signal),
        ]);
        bundle = { behavioral: behavioral.points, mechanical: mechanical.points, optimum };
        this.curveCache = { key: curveKey, value: bundle };
      }
      const current = await this.api.steadyState(schedule, epsilon, eta, rebate, signal);
      return lafferView(bundle.behavioral, bundle.mechanical, bundle.optimum, current,
        currentRate);
    });
    this.distRun(async (signal) =>
      distributionView(await this.api.steadyState(schedule, epsilon, eta, rebate, signal)),
    );
    this.estateRun(async (signal) =>
      estateView(await this.api.estateCompare(-0.04, 0.4, 0.02,
        Array.from({ length: 21 }, (_, k) => k / 20), signal)),
    );
  }

  private clearBanner(panel: string): void {
    const el = this.doc.getElementById(`${panel}-error`);
    if (el) el.textContent = "";
  }

  private banner(panel: string, err: unknown): void {
    const el = this.doc.getElementById(`${panel}-error`);
    if (el) el.textContent = String(err instanceof Error ? err.message : err);
  }

  private table(id: string, rows: { label: string; value: number }[]): void {
    const el = this.doc.getElementById(id);
    if (!el) return;
    el.innerHTML = rows
      .map(
        (r) =>
          `<tr><td>${r.label}</td><td class="num" data-value="${r.value}">` +
          `${formatNumber(r.value)}</td></tr>`,
      )
      .join("");
  }

  private paintLaffer(view: LafferView): void {
    this.clearBanner("laffer");
    const el = this.doc.getElementById("laffer-chart");
    if (el) el.innerHTML = lineChart(view.series, view.marker, "Laffer curves");
    const marker = this.doc.getElementById("laffer-optimum");
    if (marker) {
      marker.setAttribute("data-value", String(view.optimumRate));
      marker.textContent = `revenue-maximizing rate: ${formatNumber(view.optimumRate)}`;
    }
    this.table("laffer-table", view.revenueTable);
    this.onRendered("laffer");
  }

  private paintDistribution(view: ReturnType<typeof distributionView>): void {
    this.clearBanner("distribution");
    const el = this.doc.getElementById("distribution-chart");
    if (el)
      el.innerHTML = barPairs(view.bracketLabels, view.sharesBefore, view.sharesAfter,
        "Wealth shares before and after");
    this.table("distribution-table", view.shareTable);
    const rebateEl = this.doc.getElementById("rebate-amount");
    if (rebateEl && view.rebate !== null) {
      rebateEl.setAttribute("data-value", String(view.rebate));
      rebateEl.textContent = `lump-sum rebate: ${formatNumber(view.rebate)}`;
    }
    this.onRendered("distribution");
  }

  private paintEstate(view: ReturnType<typeof estateView>): void {
    this.clearBanner("estate");
    const el = this.doc.getElementById("estate-chart");
    if (el)
      el.innerHTML = lineChart(view.series, undefined,
        "Tail exponent: annual vs inheritance tax");
    this.onRendered("estate");
  }
}

export function formatNumber(v: number): string {
  if (!Number.isFinite(v)) return "-";
  const abs = Math.abs(v);
  if (abs !== 0 && (abs < 1e-3 || abs >= 1e6)) return v.toExponential(3);
  return v.toLocaleString("en-US", { maximumSignificantDigits: 6 });
}

export function mount(doc: Document, baseUrl = ""): App {
  const app = new App(new ApiClient(baseUrl), doc);
  void app.start();
  return app;
}
