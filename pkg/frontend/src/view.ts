/** Session view: renders the circuit schematic, the pending proposal, the
 * per-component failure posteriors, and the measurement history.  The view
 * is a pure function of service state plus the layout cache; it never
 * computes probabilities locally. */

import { AbstractionReport, Proposal, SessionApi, SessionState } from "./api";
import { Layout, layeredLayout, Netlist, parseBench } from "./layout";

export interface ViewOptions {
  /** free-choice mode lets the user measure any legal candidate, not just
   * the proposed wire */
  freeChoice?: boolean;
}

export class SessionView {
  state: SessionState | null = null;
  abstraction: AbstractionReport | null = null;
  layout: Layout | null = null;
  netlist: Netlist | null = null;
  collapsed = new Set<string>();
  lastError = "";

  constructor(
    public api: SessionApi,
    public root: HTMLElement,
    public options: ViewOptions = {},
  ) {}

  async load(id: string, benchText?: string): Promise<void> {
    try {
      this.state = await this.api.getSession(id);
      if (!benchText && this.state.circuit !== "inline") {
        benchText = await this.api.circuitText(this.state.circuit);
      }
      if (benchText) {
        this.netlist = parseBench(benchText);
        this.layout = layeredLayout(this.netlist);
      }
      try {
        this.abstraction = await this.api.getAbstraction(id);
      } catch {
        this.abstraction = null;
      }
      this.lastError = "";
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
    }
    this.render();
  }

  async refresh(): Promise<void> {
    if (this.state?.id) {
      try {
        this.state = await this.api.getSession(this.state.id);
        this.lastError = "";
      } catch (err) {
        this.lastError = err instanceof Error ? err.message : String(err);
      }
      this.render();
    }
  }

  /** Post a measured value and re-render; errors surface inline. */
  async submitMeasurement(wire: string, value: number): Promise<void> {
    if (!this.state) return;
    try {
      this.state = await this.api.postMeasurement(this.state.id, wire, value);
      this.lastError = "";
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
    }
    this.render();
  }

  knownValue(wire: string): number | undefined {
    const s = this.state;
    if (!s) return undefined;
    if (s.observation && wire in s.observation) return s.observation[wire];
    const measured = (s.measurements ?? []).find(([w]) => w === wire);
    if (measured) return measured[1];
    if (s.implications && wire in s.implications) return s.implications[wire];
    return undefined;
  }

  render(): void {
    const s = this.state;
    this.root.innerHTML = "";
    if (this.lastError) {
      const banner = el("div", "error-banner", this.lastError);
      this.root.appendChild(banner);
    }
    if (!s) return;
    this.root.appendChild(this.renderStatus(s));
    if (this.layout) this.root.appendChild(this.renderSchematic(s));
    this.root.appendChild(this.renderPosteriors(s));
    this.root.appendChild(this.renderHistory(s));
    this.root.appendChild(this.renderControls(s));
  }

  private renderStatus(s: SessionState): HTMLElement {
    const box = el("div", "status");
    box.appendChild(el("span", "status-phase", s.phase));
    box.appendChild(el("span", `status-value status-${s.status}`,
      s.status ?? ""));
    box.appendChild(el("span", "status-cost",
      s.cost !== undefined ? `${s.cost} measurements` : ""));
    if (s.status === "done") {
      box.appendChild(el("span", "faults",
        s.faults?.length ? `faults: ${s.faults.join(", ")}` : "no faults"));
    }
    return box;
  }

  private renderSchematic(s: SessionState): HTMLElement {
    const wrap = el("div", "schematic");
    const svgNS = "http://www.w3.org/2000/svg";
    const svg = document.createElementNS(svgNS, "svg");
    const layout = this.layout!;
    svg.setAttribute("width", String(80 + layout.layers * 130));
    svg.setAttribute("height", String(80 + layout.rows * 64));
    const faults = new Set(s.faults ?? []);
    const proposal = s.proposal?.wire;
    const coneOf = new Map<string, string>();
    if (this.abstraction) {
      for (const [root, cone] of Object.entries(this.abstraction.cones)) {
        for (const m of cone.members) coneOf.set(m, root);
      }
    }
    for (const e of layout.edges) {
      const a = layout.nodes.get(e.from);
      const b = layout.nodes.get(e.to);
      if (!a || !b) continue;
      if (this.isCollapsed(coneOf, e.from) && this.isCollapsed(coneOf, e.to) &&
          coneOf.get(e.from) === coneOf.get(e.to)) continue;
      const line = document.createElementNS(svgNS, "line");
      line.setAttribute("x1", String(a.x));
      line.setAttribute("y1", String(a.y));
      line.setAttribute("x2", String(b.x));
      line.setAttribute("y2", String(b.y));
      line.setAttribute("class", "wire");
      svg.appendChild(line);
    }
    for (const node of layout.nodes.values()) {
      const root = coneOf.get(node.id);
      if (root && root !== node.id && this.collapsed.has(root)) continue;
      const g = document.createElementNS(svgNS, "g");
      const classes = ["node", `kind-${node.kind.toLowerCase()}`];
      if (node.id === proposal) classes.push("proposed");
      if (faults.has(node.id)) classes.push("fault");
      const value = this.knownValue(node.id);
      if (value !== undefined) classes.push(`val-${value}`);
      if (root && this.collapsed.has(root) && root === node.id) {
        classes.push("cone-collapsed");
      }
      g.setAttribute("class", classes.join(" "));
      g.setAttribute("data-wire", node.id);
      const rect = document.createElementNS(svgNS, "rect");
      rect.setAttribute("x", String(node.x - 34));
      rect.setAttribute("y", String(node.y - 16));
      rect.setAttribute("width", "68");
      rect.setAttribute("height", "32");
      rect.setAttribute("rx", "6");
      g.appendChild(rect);
      const label = document.createElementNS(svgNS, "text");
      label.setAttribute("x", String(node.x));
      label.setAttribute("y", String(node.y + 4));
      label.setAttribute("text-anchor", "middle");
      label.textContent = value === undefined ? node.id
        : `${node.id}=${value}`;
      g.appendChild(label);
      g.addEventListener("click", () => this.onNodeClick(node.id));
      svg.appendChild(g);
    }
    wrap.appendChild(svg);
    return wrap;
  }

  private isCollapsed(coneOf: Map<string, string>, wire: string): boolean {
    const root = coneOf.get(wire);
    return !!root && this.collapsed.has(root) && root !== wire;
  }

  toggleCone(root: string): void {
    if (this.collapsed.has(root)) this.collapsed.delete(root);
    else this.collapsed.add(root);
    this.render();
  }

  private onNodeClick(wire: string): void {
    if (this.abstraction && wire in this.abstraction.cones) {
      this.toggleCone(wire);
    }
  }

  private renderPosteriors(s: SessionState): HTMLElement {
    const box = el("div", "posteriors");
    const entries = Object.entries(s.posteriors ?? {});
    entries.sort((a, b) => b[1] - a[1]);
    for (const [comp, p] of entries) {
      const row = el("div", "posterior-row");
      row.setAttribute("data-component", comp);
      row.appendChild(el("span", "posterior-name", comp));
      const bar = el("div", "posterior-bar");
      const fill = el("div", "posterior-fill");
      fill.style.width = `${Math.round(p * 100)}%`;
      bar.appendChild(fill);
      row.appendChild(bar);
      row.appendChild(el("span", "posterior-value", p.toFixed(4)));
      box.appendChild(row);
    }
    return box;
  }

  private renderHistory(s: SessionState): HTMLElement {
    const box = el("div", "history");
    const list = el("ol", "history-list");
    for (const [wire, value] of s.measurements ?? []) {
      list.appendChild(el("li", "history-row", `${wire} = ${value}`));
    }
    box.appendChild(list);
    return box;
  }

  private renderControls(s: SessionState): HTMLElement {
    const box = el("div", "controls");
    const running = s.status === "running" && s.phase === "ready";
    const prop = s.proposal;
    if (prop) {
      const txt = `measure ${prop.wire} (entropy ${prop.wireEntropy.toFixed(4)}` +
        (prop.component
          ? `, ${prop.component} failing ${prop.componentPosterior?.toFixed(4)}`
          : "") + ")";
      box.appendChild(el("div", "proposal", txt));
    }
    const wireInput = document.createElement("input");
    wireInput.className = "measure-wire";
    wireInput.value = prop?.wire ?? "";
    wireInput.readOnly = !this.options.freeChoice;
    const valueInput = document.createElement("select");
    valueInput.className = "measure-value";
    for (const v of ["0", "1"]) {
      const opt = document.createElement("option");
      opt.value = v;
      opt.textContent = v;
      valueInput.appendChild(opt);
    }
    const button = document.createElement("button");
    button.className = "measure-submit";
    button.textContent = "record measurement";
    button.disabled = !running;
    button.addEventListener("click", () => {
      void this.submitMeasurement(wireInput.value,
        Number(valueInput.value));
    });
    box.appendChild(wireInput);
    box.appendChild(valueInput);
    box.appendChild(button);
    return box;
  }
}

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}
