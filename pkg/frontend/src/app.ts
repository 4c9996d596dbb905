/** Workbench entry point: session creation form plus the live view. */

import { SessionApi } from "./api";
import { SessionView } from "./view";

export function mountApp(root: HTMLElement, baseUrl: string): SessionView {
  const api = new SessionApi(baseUrl);
  root.innerHTML = `
    <header class="topbar">
      <h1>circuit diagnosis workbench</h1>
    </header>
    <section class="create">
      <select id="circuit-select"></select>
      <input id="observation" placeholder="P=1,Q=1,R=0,V=1" />
      <select id="mode">
        <option value="hierarchical">hierarchical</option>
        <option value="flat">flat</option>
      </select>
      <input id="faults" placeholder="demo faults (optional): J,B" />
      <label><input type="checkbox" id="free-choice" /> free choice</label>
      <button id="create">start session</button>
    </section>
    <main id="view"></main>
  `;
  const viewRoot = root.querySelector<HTMLElement>("#view")!;
  const view = new SessionView(api, viewRoot);

  void api.listCircuits().then((names) => {
    const select = root.querySelector<HTMLSelectElement>("#circuit-select")!;
    for (const n of names) {
      const opt = document.createElement("option");
      opt.value = n;
      opt.textContent = n;
      select.appendChild(opt);
    }
  });

  root.querySelector<HTMLButtonElement>("#create")!
    .addEventListener("click", async () => {
      const name =
        root.querySelector<HTMLSelectElement>("#circuit-select")!.value;
      const obsText =
        root.querySelector<HTMLInputElement>("#observation")!.value;
      const observation: Record<string, number> = {};
      for (const pair of obsText.split(",")) {
        const [w, v] = pair.split("=").map((t) => t.trim());
        if (w) observation[w] = Number(v);
      }
      const faultsText =
        root.querySelector<HTMLInputElement>("#faults")!.value.trim();
      const faults = faultsText
        ? faultsText.split(",").map((t) => t.trim()) : undefined;
      const mode = root.querySelector<HTMLSelectElement>("#mode")!.value;
      view.options.freeChoice =
        root.querySelector<HTMLInputElement>("#free-choice")!.checked;
      const state = await api.createSession(
        { circuit: { name }, observation, mode, faults });
      await waitReady(api, state.id);
      await view.load(state.id);
    });
  return view;
}

/** Poll until the service finishes compiling the session. */
export async function waitReady(api: SessionApi, id: string,
                                timeoutMs = 60000): Promise<void> {
  const t0 = Date.now();
  for (;;) {
    const state = await api.getSession(id);
    if (state.phase !== "compiling") return;
    if (Date.now() - t0 > timeoutMs) throw new Error("compile timeout");
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
}
