import { describe, expect, it } from "vitest";
import { layeredLayout, parseBench } from "../src/layout";

const FIG1 = `INPUT(P)
INPUT(Q)
INPUT(R)
OUTPUT(V)
J = NOT(P)
B = NAND(P, Q)
D = AND(Q, R)
E = AND(J, B)
A = AND(E, J)
K = AND(B, D)
V = OR(A, K, D)
`;

describe("parseBench", () => {
  it("reads inputs, outputs and gates", () => {
    const net = parseBench(FIG1);
    expect(net.inputs).toEqual(["P", "Q", "R"]);
    expect(net.outputs).toEqual(["V"]);
    expect(net.gates).toHaveLength(7);
    expect(net.gates.find((g) => g.id === "V")?.fanin)
      .toEqual(["A", "K", "D"]);
  });

  it("rejects junk lines", () => {
    expect(() => parseBench("INPUT(a)\nwhat\n")).toThrow(/cannot parse/);
  });
});

describe("layeredLayout", () => {
  it("assigns longest-path layers", () => {
    const lay = layeredLayout(parseBench(FIG1));
    const layer = (id: string) => lay.nodes.get(id)!.layer;
    expect(layer("P")).toBe(0);
    expect(layer("J")).toBe(1);
    expect(layer("B")).toBe(1);
    expect(layer("E")).toBe(2);
    expect(layer("A")).toBe(3);
    expect(layer("V")).toBe(4);
    for (const e of lay.edges) {
      expect(lay.nodes.get(e.from)!.layer)
        .toBeLessThan(lay.nodes.get(e.to)!.layer);
    }
  });

  it("is deterministic", () => {
    const a = layeredLayout(parseBench(FIG1));
    const b = layeredLayout(parseBench(FIG1));
    expect([...a.nodes.entries()]).toEqual([...b.nodes.entries()]);
  });

  it("handles out-of-order declarations", () => {
    const net = parseBench("INPUT(a)\nOUTPUT(y)\ny = NOT(x)\nx = NOT(a)\n");
    const lay = layeredLayout(net);
    expect(lay.nodes.get("y")!.layer).toBe(2);
  });
});
