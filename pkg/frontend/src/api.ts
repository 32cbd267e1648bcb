/** Typed client for the wealthdyn HTTP API. The UI performs no economic
 * computation of its own: every displayed number originates here. */

export type Schedule = Array<[number, number]>; // [threshold (x avg income), marginal rate]

export interface BaselineResponse {
  grid: { lower_asinh: number; bin_width: number; n_bins: number };
  centers_asinh: number[];
  mass: number[];
  tail_alpha: number;
  avg_income_usd: number;
  bracket_shares: BracketShares;
}

export interface BracketShares {
  bottom50: number;
  middle40: number;
  next9: number;
  top1: number;
}

export interface LafferPoint {
  rate: number;
  revenue_static: number;
  revenue_long_run: number;
}

export interface SteadyStateResponse {
  theta: number[];
  mass_before: number[];
  mass_after: number[];
  revenue_static: number;
  revenue_long_run: number;
  rebate: number | null;
  bracket_shares_before: BracketShares;
  bracket_shares_after: BracketShares;
}

export interface OptimumResponse {
  rate: number;
  curve: Array<{ rate: number; revenue_long_run: number }>;
}

export interface EstateCompareResponse {
  rates: number[];
  alpha_annual_tax: number[];
  alpha_inheritance_tax: number[];
  alpha_full_inheritance_tax: number;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`API ${status}: ${detail}`);
  }
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private async post<T>(path: string, body: unknown, signal?: AbortSignal): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
      signal,
    });
    if (!res.ok) {
      const payload = await res.json().catch(() => ({ detail: res.statusText }));
      throw new ApiError(res.status, payload.detail ?? res.statusText);
    }
    return res.json() as Promise<T>;
  }

  async baseline(signal?: AbortSignal): Promise<BaselineResponse> {
    const res = await fetch(this.baseUrl + "/api/baseline", { signal });
    if (!res.ok) throw new ApiError(res.status, res.statusText);
    return res.json() as Promise<BaselineResponse>;
  }

  laffer(
    schedule: Schedule,
    epsilon: number,
    eta: number,
    rateGrid: number[],
    signal?: AbortSignal,
  ): Promise<{ points: LafferPoint[] }> {
    return this.post("/api/tax/laffer", { schedule, epsilon, eta, rate_grid: rateGrid }, signal);
  }

  steadyState(
    schedule: Schedule,
    epsilon: number,
    eta: number,
    rebate: boolean,
    signal?: AbortSignal,
  ): Promise<SteadyStateResponse> {
    return this.post("/api/tax/steady-state", { schedule, epsilon, eta, rebate }, signal);
  }

  optimum(schedule: Schedule, epsilon: number, eta: number, signal?: AbortSignal): Promise<OptimumResponse> {
    return this.post("/api/tax/optimum", { schedule, epsilon, eta }, signal);
  }

  estateCompare(
    mu: number,
    sigma: number,
    delta: number,
    rates: number[],
    signal?: AbortSignal,
  ): Promise<EstateCompareResponse> {
    return this.post("/api/tax/estate-compare", { mu, sigma, delta, rates }, signal);
  }
}
