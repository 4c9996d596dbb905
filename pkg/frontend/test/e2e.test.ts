/** End-to-end workbench test against a live service instance: create the
 * two-gate-cone demo session, check the proposal (wire J, entropy 1.0),
 * submit J=1 through the view, and verify the rendered done state shows
 * fault J. */
import { spawn, ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { SessionApi } from "../src/api";
import { SessionView } from "../src/view";
import { waitReady } from "../src/app";

const PORT = 8791;
const BASE = `http://127.0.0.1:${PORT}`;
let server: ChildProcess;

async function serviceUp(): Promise<void> {
  for (let i = 0; i < 300; i++) {
    try {
      const r = await fetch(`${BASE}/circuits`);
      if (r.ok) return;
    } catch {
      /* not yet */
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  server = spawn("python3", ["-m", "circuitdiag.cli", "serve",
    "--port", String(PORT)], {
    cwd: `${__dirname}/../..`,
    stdio: "ignore",
  });
  await serviceUp();
});

afterAll(() => {
  server?.kill();
});

describe("workbench demo session", () => {
  it("runs the two-gate-cone demo to completion", async () => {
    const api = new SessionApi(BASE);

    const names = await api.listCircuits();
    expect(names).toContain("two_gate_cone");

    const created = await api.createSession({
      circuit: { name: "two_gate_cone" },
      observation: { P: 1, D: 1, A: 1 },
      mode: "flat",
      heuristic: "fp",
      faults: ["J"],
    });
    await waitReady(api, created.id);

    const root = document.createElement("div");
    document.body.appendChild(root);
    const view = new SessionView(api, root);
    await view.load(created.id);

    // two posterior bars at ~0.5263
    const bars = root.querySelectorAll(".posterior-row");
    expect(bars.length).toBe(2);
    for (const comp of ["J", "A"]) {
      const row = root.querySelector(`[data-component="${comp}"]`);
      expect(row?.querySelector(".posterior-value")?.textContent)
        .toBe("0.5263");
    }

    // the proposed wire J is highlighted with entropy 1.0
    const proposal = await api.getProposal(created.id);
    expect(proposal.wire).toBe("J");
    expect(proposal.wireEntropy).toBeCloseTo(1.0, 9);
    const highlighted = root.querySelector(".node.proposed");
    expect(highlighted?.getAttribute("data-wire")).toBe("J");
    expect(root.querySelector(".proposal")?.textContent)
      .toContain("measure J");

    // submit J = 1 through the controls
    const wireInput =
      root.querySelector<HTMLInputElement>(".measure-wire")!;
    expect(wireInput.value).toBe("J");
    const valueSelect =
      root.querySelector<HTMLSelectElement>(".measure-value")!;
    valueSelect.value = String(proposal.oracleValue ?? 1);
    root.querySelector<HTMLButtonElement>(".measure-submit")!.click();
    await waitFor(() => view.state?.status === "done");
    view.render();

    // done: fault J highlighted, controls disabled, cost 1
    expect(view.state?.faults).toEqual(["J"]);
    expect(view.state?.cost).toBe(1);
    const fault = root.querySelector(".node.fault");
    expect(fault?.getAttribute("data-wire")).toBe("J");
    expect(root.querySelector(".faults")?.textContent).toContain("J");
    expect(root.querySelector<HTMLButtonElement>(".measure-submit")!.disabled)
      .toBe(true);

    // a second measurement on a known wire is rejected inline
    await view.submitMeasurement("D", 1);
    expect(view.lastError).not.toBe("");
  });

  it("shows an error banner for an unknown session", async () => {
    const api = new SessionApi(BASE);
    const root = document.createElement("div");
    const view = new SessionView(api, root);
    await view.load("doesnotexist");
    expect(root.querySelector(".error-banner")).not.toBeNull();
    expect(view.state).toBeNull();
  });
});

async function waitFor(cond: () => boolean, ms = 5000): Promise<void> {
  const t0 = Date.now();
  while (!cond()) {
    if (Date.now() - t0 > ms) throw new Error("condition not met");
    await new Promise((resolve) => setTimeout(resolve, 50));
  }
}
