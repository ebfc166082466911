/**
 * Client for the ifrl reward service.
 *
 * Wraps POST /v1/score and POST /v1/advantages with transparent
 * batching and retries. The client adds no numerics of its own: every
 * returned value is the parsed service JSON, order-preserving.
 */

export interface ClientConfig {
  baseUrl: string;
  /** request timeout in seconds */
  timeout?: number;
  /** retries after the first attempt; 5xx and network errors only */
  maxRetries?: number;
  /** first backoff in seconds, doubled per retry */
  backoffBase?: number;
  /** largest number of items sent in one /v1/score request */
  maxBatch?: number;
}

export interface ConstraintJson {
  id: string;
  kind: "hard" | "soft";
  rule?: { rule_type: string; params?: Record<string, unknown> };
  text?: string;
  category?: string;
}

export interface ScoreItem {
  response: string;
  constraints: ConstraintJson[];
}

export interface ConstraintReward {
  id: string;
  reward: number;
  source: "rule" | "model";
}

export interface RewardBreakdown {
  reward: number;
  per_constraint: ConstraintReward[];
}

/** Non-retryable service rejection (4xx); carries the response body. */
export class ApiError extends Error {
  readonly status: number;
  readonly body: string;

  constructor(status: number, body: string) {
    super(`service returned ${status}: ${body}`);
    this.status = status;
    this.body = body;
  }
}

/** All retries exhausted against 5xx responses or network failures. */
export class RetriesExhaustedError extends Error {
  readonly attempts: number;

  constructor(attempts: number, lastError: string) {
    super(`request failed after ${attempts} attempts: ${lastError}`);
    this.attempts = attempts;
  }
}

const DEFAULTS = {
  timeout: 30,
  maxRetries: 3,
  backoffBase: 0.1,
  maxBatch: 256,
};

function sleep(seconds: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, seconds * 1000));
}

export class RewardClient {
  private readonly baseUrl: string;
  private readonly timeout: number;
  private readonly maxRetries: number;
  private readonly backoffBase: number;
  private readonly maxBatch: number;

  constructor(config: ClientConfig) {
    const timeout = config.timeout ?? DEFAULTS.timeout;
    const maxRetries = config.maxRetries ?? DEFAULTS.maxRetries;
    if (!(timeout > 0)) {
      throw new RangeError(`timeout must be positive, got ${timeout}`);
    }
    if (!Number.isInteger(maxRetries) || maxRetries < 0 || maxRetries > 10) {
      throw new RangeError(`maxRetries must be an integer in [0, 10], got ${maxRetries}`);
    }
    const maxBatch = config.maxBatch ?? DEFAULTS.maxBatch;
    if (!Number.isInteger(maxBatch) || maxBatch < 1) {
      throw new RangeError(`maxBatch must be a positive integer, got ${maxBatch}`);
    }
    this.baseUrl = config.baseUrl.replace(/\/+$/, "");
    this.timeout = timeout;
    this.maxRetries = maxRetries;
    this.backoffBase = config.backoffBase ?? DEFAULTS.backoffBase;
    this.maxBatch = maxBatch;
  }

  /** Sample-level rewards for each item, in input order. */
  async scoreBatch(items: ScoreItem[], mode?: string): Promise<RewardBreakdown[]> {
    if (items.length === 0) {
      return [];
    }
    const out: RewardBreakdown[] = [];
    for (let start = 0; start < items.length; start += this.maxBatch) {
      const chunk = items.slice(start, start + this.maxBatch);
      const body: Record<string, unknown> = { items: chunk };
      if (mode !== undefined) {
        body.mode = mode;
      }
      const reply = await this.post("/v1/score", body);
      out.push(...(reply as { results: RewardBreakdown[] }).results);
    }
    return out;
  }

  /** Group-relative advantages, mirroring /v1/advantages. */
  async advantages(groups: number[][], eps?: number): Promise<number[][]> {
    if (groups.length === 0) {
      return [];
    }
    const body: Record<string, unknown> = { groups };
    if (eps !== undefined) {
      body.eps = eps;
    }
    const reply = await this.post("/v1/advantages", body);
    return (reply as { advantages: number[][] }).advantages;
  }

  /** Service liveness and model identity. */
  async health(): Promise<{ status: string; model_version: string; catalog_size: number }> {
    const reply = await this.request("GET", "/healthz", undefined);
    return reply as { status: string; model_version: string; catalog_size: number };
  }

  private post(path: string, body: unknown): Promise<unknown> {
    return this.request("POST", path, body);
  }

  private async request(method: string, path: string, body: unknown): Promise<unknown> {
    let lastError = "unknown";
    for (let attempt = 0; attempt <= this.maxRetries; attempt++) {
      if (attempt > 0) {
        await sleep(this.backoffBase * 2 ** (attempt - 1));
      }
      let response: Response;
      try {
        response = await fetch(this.baseUrl + path, {
          method,
          headers: body === undefined ? undefined : { "content-type": "application/json" },
          body: body === undefined ? undefined : JSON.stringify(body),
          signal: AbortSignal.timeout(this.timeout * 1000),
        });
      } catch (error) {
        lastError = error instanceof Error ? error.message : String(error);
        continue; // network failure or timeout: retryable
      }
      if (response.status >= 500) {
        lastError = `status ${response.status}`;
        continue;
      }
      const text = await response.text();
      if (!response.ok) {
        throw new ApiError(response.status, text);
      }
      return JSON.parse(text);
    }
    throw new RetriesExhaustedError(this.maxRetries + 1, lastError);
  }
}
