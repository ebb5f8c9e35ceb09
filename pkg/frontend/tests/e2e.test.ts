/**
 * End-to-end review sessions against a really spawned review service.
 *
 * Each test builds a fresh ten-item fixture workspace through the
 * audit CLI, starts the HTTP service, loads the real page shell into
 * jsdom, and drives the UI the way a reviewer would: one pass with
 * pointer clicks, one pass with nothing but keystrokes.  Both sessions
 * label all ten items — including one engineered disagreement that is
 * resolved without consensus and therefore defaults to a false
 * positive — and both end by checking that the server's validated
 * export contains exactly the items scripted as true positives.
 */

import { spawn, spawnSync } from "node:child_process";
import type { ChildProcess } from "node:child_process";
import { mkdirSync, mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterEach, expect, test } from "vitest";

import { TriageClient } from "../src/api.js";
import { TriageApp } from "../src/app.js";
import { loadShell } from "./helpers.js";

const PYTHON = process.env.LEAKLENS_PYTHON ?? "python3";
const LONG = { timeout: 180_000 };

// ---- fixture workspace -------------------------------------------------

function cli(configPath: string, args: string[]): string {
  const result = spawnSync(PYTHON, ["-m", "leaklens.cli", "--config", configPath, ...args], {
    encoding: "utf-8",
  });
  if (result.status !== 0) {
    throw new Error(
      `leaklens ${args.join(" ")} exited ${result.status}:\n${result.stdout}\n${result.stderr}`,
    );
  }
  return result.stdout;
}

/**
 * Demo corpus (nine flagged items) plus one extra hand-written capture
 * so the review queue holds exactly ten.
 */
function buildFixture(tag: string): { root: string; configPath: string } {
  const root = mkdtempSync(join(tmpdir(), `leaklens-ui-${tag}-`));
  const demo = spawnSync(
    PYTHON,
    ["-m", "leaklens.cli", "demo", "--out", root, "--skip-labels"],
    { encoding: "utf-8" },
  );
  if (demo.status !== 0) {
    throw new Error(`demo generation failed:\n${demo.stdout}\n${demo.stderr}`);
  }
  const configPath = join(root, "config.json");

  const extraDir = join(root, "capture", "extra-shop", "order-1");
  mkdirSync(extraDir, { recursive: true });
  writeFileSync(
    join(extraDir, "ui.txt"),
    "EXTRA SHOP\nOrder for Jordan Pine\njordan.pine@mail.test\n",
  );
  writeFileSync(
    join(extraDir, "order-1.manifest.json"),
    JSON.stringify({
      url: "https://extra-shop.test/o/XK42",
      final_url: "https://extra-shop.test/o/XK42",
      crawled_at: "2026-04-02T09:00:00Z",
      ui_text: "ui.txt",
    }),
  );
  cli(configPath, ["bundles", "ingest"]);
  cli(configPath, ["extract"]);
  cli(configPath, ["screen"]);
  return { root, configPath };
}

// ---- service lifecycle -------------------------------------------------

interface Service {
  child: ChildProcess;
  base: string;
}

async function startService(configPath: string, port: number): Promise<Service> {
  const child = spawn(
    PYTHON,
    ["-m", "leaklens.cli", "--config", configPath, "triage", "serve", "--port", String(port)],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  const logs: string[] = [];
  child.stdout?.on("data", (chunk: Buffer) => logs.push(String(chunk)));
  child.stderr?.on("data", (chunk: Buffer) => logs.push(String(chunk)));

  const base = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 30_000;
  while (Date.now() < deadline) {
    if (child.exitCode !== null) {
      throw new Error(`review service exited early:\n${logs.join("")}`);
    }
    try {
      const probe = await fetch(`${base}/items`);
      if (probe.ok) return { child, base };
    } catch {
      // not accepting connections yet
    }
    await sleep(150);
  }
  child.kill("SIGKILL");
  throw new Error(`review service never came up:\n${logs.join("")}`);
}

async function stopService(service: Service): Promise<void> {
  service.child.kill("SIGTERM");
  const gone = new Promise<void>((resolve) => service.child.once("exit", () => resolve()));
  await Promise.race([gone, sleep(5_000).then(() => service.child.kill("SIGKILL"))]);
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

// ---- session drivers ---------------------------------------------------

/** The ten-item script: which queue positions end as true positives. */
const TRUE_POSITIVE_INDEXES = [0, 2, 4, 6, 8];
const CONFLICT_INDEX = 1;

interface Driver {
  select(index: number): Promise<void>;
  labelTruePositive(reviewer: "a" | "b"): Promise<void>;
  labelFalsePositive(reviewer: "a" | "b"): Promise<void>;
  resolveNoConsensus(): Promise<void>;
  exportValidated(): Promise<void>;
}

function $(selector: string): HTMLElement {
  const node = document.querySelector<HTMLElement>(selector);
  if (node === null) throw new Error(`expected ${selector} in the page`);
  return node;
}

function pointerDriver(app: TriageApp): Driver {
  return {
    async select(index) {
      $(`#item-list [data-index="${index}"]`).click();
      await app.idle();
    },
    async labelTruePositive(reviewer) {
      $(`[data-action="reviewer-${reviewer}"]`).click();
      $("#decision-true").click();
      $("#submit-label").click();
      await app.idle();
    },
    async labelFalsePositive(reviewer) {
      $(`[data-action="reviewer-${reviewer}"]`).click();
      $("#decision-false").click();
      $("#submit-label").click();
      await app.idle();
    },
    async resolveNoConsensus() {
      $("#resolve-default").click();
      await app.idle();
    },
    async exportValidated() {
      $("#export-button").click();
      await app.idle();
    },
  };
}

function keyboardDriver(app: TriageApp): Driver {
  const press = async (key: string) => {
    window.dispatchEvent(new KeyboardEvent("keydown", { key, bubbles: true }));
    await app.idle();
  };
  return {
    async select(index) {
      // Walk the selection with j/k only.
      let current = app.store.state.selectedIndex;
      if (current < 0) {
        await press("j");
        current = app.store.state.selectedIndex;
      }
      while (current < index) {
        await press("j");
        current = app.store.state.selectedIndex;
      }
      while (current > index) {
        await press("k");
        current = app.store.state.selectedIndex;
      }
      expect(current).toBe(index);
    },
    async labelTruePositive(reviewer) {
      await press(reviewer);
      await press("t");
      await press("s");
    },
    async labelFalsePositive(reviewer) {
      await press(reviewer);
      await press("f");
      await press("s");
    },
    async resolveNoConsensus() {
      await press("u");
    },
    async exportValidated() {
      await press("e");
    },
  };
}

// ---- the scripted session ----------------------------------------------

interface SessionResult {
  itemIds: string[];
  truePositiveIds: string[];
  conflictId: string;
  verdictTypes: Map<string, string[]>;
}

async function runScriptedSession(app: TriageApp, driver: Driver): Promise<SessionResult> {
  const items = app.store.state.items;
  expect(items).toHaveLength(10);
  expect(items.every((item) => item.status === "pending")).toBe(true);

  const itemIds = items.map((item) => item.item_id);
  const verdictTypes = new Map(items.map((item) => [item.item_id, [...item.pii_types]]));

  for (let index = 0; index < itemIds.length; index += 1) {
    await driver.select(index);
    if (index === CONFLICT_INDEX) {
      // Engineered disagreement: the reviewers split, nobody budges in
      // discussion, so the item falls back to a false positive.
      await driver.labelTruePositive("a");
      await driver.labelFalsePositive("b");
      expect($("#conflict-card").textContent).toContain("Reviewers disagree");
      await driver.resolveNoConsensus();
      expect($("#resolution-card").textContent).toContain("default_false_positive");
    } else if (TRUE_POSITIVE_INDEXES.includes(index)) {
      await driver.labelTruePositive("a");
      await driver.labelTruePositive("b");
      expect($("#resolution-card").textContent).toContain("true_positive via agreement");
    } else {
      await driver.labelFalsePositive("a");
      await driver.labelFalsePositive("b");
      expect($("#resolution-card").textContent).toContain("false_positive via agreement");
    }
  }

  await driver.exportValidated();

  return {
    itemIds,
    truePositiveIds: TRUE_POSITIVE_INDEXES.map((index) => itemIds[index]),
    conflictId: itemIds[CONFLICT_INDEX],
    verdictTypes,
  };
}

async function assertServerState(base: string, script: SessionResult): Promise<void> {
  // Every item resolved; none left pending or in conflict.
  const items = (await (await fetch(`${base}/items`)).json()) as Array<{
    item_id: string;
    status: string;
  }>;
  expect(items).toHaveLength(10);
  expect(items.every((item) => item.status === "resolved")).toBe(true);

  // The disagreement resolved as a default false positive.
  const conflict = (await (
    await fetch(`${base}/items/${encodeURIComponent(script.conflictId)}`)
  ).json()) as {
    resolution: { final_decision: string; final_types: string[]; method: string };
  };
  expect(conflict.resolution.method).toBe("default_false_positive");
  expect(conflict.resolution.final_decision).toBe("false_positive");
  expect(conflict.resolution.final_types).toEqual([]);

  // The export — fetched straight from the server, no force needed —
  // holds exactly the scripted true positives with their verdict types.
  const exported = (await (await fetch(`${base}/export/validated`)).json()) as {
    count: number;
    validated: Array<{ item_id: string; pii_types: string[] }>;
  };
  expect(exported.count).toBe(script.truePositiveIds.length);
  expect(exported.validated.map((row) => row.item_id).sort()).toEqual(
    [...script.truePositiveIds].sort(),
  );
  for (const row of exported.validated) {
    expect(row.pii_types).toEqual(script.verdictTypes.get(row.item_id));
  }
}

// ---- tests -------------------------------------------------------------

const cleanups: Array<() => Promise<void> | void> = [];

afterEach(async () => {
  while (cleanups.length > 0) {
    await cleanups.pop()!();
  }
});

async function bootSession(tag: string, port: number): Promise<{ app: TriageApp; base: string }> {
  const fixture = buildFixture(tag);
  cleanups.push(() => rmSync(fixture.root, { recursive: true, force: true }));
  const service = await startService(fixture.configPath, port);
  cleanups.push(() => stopService(service));

  loadShell();
  const app = new TriageApp(document, new TriageClient(service.base));
  cleanups.push(() => app.stop());
  await app.start(window);
  await app.idle();
  return { app, base: service.base };
}

test("pointer-driven session labels ten items and exports the true positives", LONG, async () => {
  const { app, base } = await bootSession("ptr", 8461);
  const script = await runScriptedSession(app, pointerDriver(app));

  // The UI shows the export result the server produced.
  const pane = $("#export-pane");
  expect(pane.hidden).toBe(false);
  expect(pane.textContent).toContain(`Validated findings: ${script.truePositiveIds.length}`);
  for (const itemId of script.truePositiveIds) {
    expect(pane.querySelector(`[data-item-id="${itemId}"]`)).toBeTruthy();
  }

  await assertServerState(base, script);
});

test("keyboard-only session completes the same flow", LONG, async () => {
  const { app, base } = await bootSession("kbd", 8462);
  const script = await runScriptedSession(app, keyboardDriver(app));

  const pane = $("#export-pane");
  expect(pane.hidden).toBe(false);
  expect(pane.textContent).toContain(`Validated findings: ${script.truePositiveIds.length}`);

  await assertServerState(base, script);
});
