/**
 * Integration tests against a live reward service.
 *
 * Spawns the service in rule-only mode on a local port and checks that
 * the client returns the service JSON unchanged.
 */

import { ChildProcess, spawn } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, RewardClient, ScoreItem } from "../src/index.js";

const PORT = 8917;
const BASE = `http://127.0.0.1:${PORT}`;

let service: ChildProcess;

async function waitForHealth(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const reply = await fetch(`${BASE}/healthz`);
      if (reply.ok) {
        return;
      }
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  throw new Error("service did not become healthy in time");
}

beforeAll(async () => {
  service = spawn(
    "python3",
    ["-m", "ifrl.cli", "serve", "--bind", `127.0.0.1:${PORT}`, "--mode", "rule_only"],
    { stdio: "ignore" },
  );
  await waitForHealth();
}, 30_000);

afterAll(() => {
  service?.kill();
});

const ITEMS: ScoreItem[] = [
  {
    response: "short and clean",
    constraints: [
      { id: "c1", kind: "hard", rule: { rule_type: "no_commas" } },
      {
        id: "c2",
        kind: "hard",
        rule: { rule_type: "word_count", params: { relation: "at_most", count: 5 } },
      },
    ],
  },
  {
    response: "one, two, three, four, five, six words and commas",
    constraints: [
      { id: "c1", kind: "hard", rule: { rule_type: "no_commas" } },
      {
        id: "c2",
        kind: "hard",
        rule: { rule_type: "word_count", params: { relation: "at_most", count: 5 } },
      },
    ],
  },
];

describe("live service", () => {
  const client = new RewardClient({ baseUrl: BASE });

  it("reports health", async () => {
    const health = await client.health();
    expect(health.status).toBe("ok");
    expect(health.catalog_size).toBeGreaterThanOrEqual(15);
  });

  it("scoreBatch equals a direct /v1/score call", async () => {
    const viaClient = await client.scoreBatch(ITEMS);
    const direct = await fetch(`${BASE}/v1/score`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ items: ITEMS }),
    }).then((r) => r.json());
    expect(viaClient).toEqual(direct.results);
    expect(viaClient[0].reward).toBe(1.0);
    expect(viaClient[1].reward).toBe(0.0);
  });

  it("chunks large batches without reordering", async () => {
    const many = Array.from({ length: 7 }, (_, i) => ITEMS[i % 2]);
    const chunked = new RewardClient({ baseUrl: BASE, maxBatch: 3 });
    const viaChunks = await chunked.scoreBatch(many);
    const oneShot = await client.scoreBatch(many);
    expect(viaChunks).toEqual(oneShot);
  });

  it("advantages equals a direct /v1/advantages call", async () => {
    const groups = [
      [0.0, 1.0],
      [0.5, 0.5],
    ];
    const viaClient = await client.advantages(groups);
    const direct = await fetch(`${BASE}/v1/advantages`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ groups }),
    }).then((r) => r.json());
    expect(viaClient).toEqual(direct.advantages);
    expect(viaClient[1]).toEqual([0.0, 0.0]);
    expect(viaClient[0][0]).toBeCloseTo(-1.0, 5);
    expect(viaClient[0][1]).toBeCloseTo(1.0, 5);
  });

  it("surfaces the service's 400 message verbatim", async () => {
    try {
      await client.advantages([[1, 2], [1, 2, 3]]);
      expect.unreachable("expected an ApiError");
    } catch (error) {
      expect(error).toBeInstanceOf(ApiError);
      expect((error as ApiError).status).toBe(400);
      expect((error as ApiError).body).toContain("ragged");
    }
  });
});
