/** Client-side netlist parsing and layered DAG layout (longest-path
 * layering).  The engine never sees any of this; it is presentation only. */

export interface NetGate {
  id: string;
  kind: string;
  fanin: string[];
}

export interface Netlist {
  inputs: string[];
  outputs: string[];
  gates: NetGate[];
}

export function parseBench(text: string): Netlist {
  const inputs: string[] = [];
  const outputs: string[] = [];
  const gates: NetGate[] = [];
  for (const raw of text.split("\n")) {
    const line = raw.split("#")[0].trim();
    if (!line) continue;
    let m = line.match(/^INPUT\s*\(\s*([^\s()]+)\s*\)$/i);
    if (m) { inputs.push(m[1]); continue; }
    m = line.match(/^OUTPUT\s*\(\s*([^\s()]+)\s*\)$/i);
    if (m) { outputs.push(m[1]); continue; }
    m = line.match(/^([^\s=()]+)\s*=\s*([A-Za-z]+)\s*\(([^()]*)\)$/);
    if (m) {
      gates.push({
        id: m[1],
        kind: m[2].toUpperCase(),
        fanin: m[3].split(",").map((w) => w.trim()).filter(Boolean),
      });
      continue;
    }
    throw new Error(`cannot parse netlist line: ${line}`);
  }
  return { inputs, outputs, gates };
}

export interface NodePosition {
  id: string;
  kind: string; // "input" or the gate kind
  layer: number;
  row: number;
  x: number;
  y: number;
}

export interface Edge {
  from: string;
  to: string;
}

export interface Layout {
  nodes: Map<string, NodePosition>;
  edges: Edge[];
  layers: number;
  rows: number;
}

const X_STEP = 130;
const Y_STEP = 64;

/** Longest-path layering: inputs in layer 0, every gate one layer past its
 * deepest fanin; rows assigned per layer in stable order. */
export function layeredLayout(net: Netlist): Layout {
  const layer = new Map<string, number>();
  for (const w of net.inputs) layer.set(w, 0);
  // gates may be declared out of topological order
  const pending = [...net.gates];
  while (pending.length) {
    let progressed = false;
    for (let i = 0; i < pending.length; i++) {
      const g = pending[i];
      if (g.fanin.every((w) => layer.has(w))) {
        layer.set(g.id, 1 + Math.max(...g.fanin.map((w) => layer.get(w)!)));
        pending.splice(i, 1);
        progressed = true;
        i--;
      }
    }
    if (!progressed) throw new Error("netlist has a cycle or missing wire");
  }
  const kinds = new Map<string, string>();
  for (const w of net.inputs) kinds.set(w, "input");
  for (const g of net.gates) kinds.set(g.id, g.kind);

  const perLayer = new Map<number, string[]>();
  const order = [...net.inputs, ...net.gates.map((g) => g.id)];
  for (const id of order) {
    const l = layer.get(id)!;
    if (!perLayer.has(l)) perLayer.set(l, []);
    perLayer.get(l)!.push(id);
  }
  const nodes = new Map<string, NodePosition>();
  let maxRow = 0;
  for (const [l, ids] of perLayer) {
    ids.forEach((id, row) => {
      maxRow = Math.max(maxRow, row);
      nodes.set(id, {
        id,
        kind: kinds.get(id)!,
        layer: l,
        row,
        x: 40 + l * X_STEP,
        y: 40 + row * Y_STEP,
      });
    });
  }
  const edges: Edge[] = [];
  for (const g of net.gates) {
    for (const w of g.fanin) edges.push({ from: w, to: g.id });
  }
  return { nodes, edges, layers: perLayer.size, rows: maxRow + 1 };
}
