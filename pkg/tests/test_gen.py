import pytest

from circuitdiag.circuit import parse_bench, render_bench, simulate
from circuitdiag.gen import (GenSpec, cone_templates, exhaustive_single_fault,
                             generate_circuit, generate_scenarios,
                             observation_of)


def test_templates_are_ten_gate_single_output_cones():
    for t in cone_templates():
        assert len(t.gates) == 10
        assert len(t.outputs) == 1
        used = {w for g in t.gates for w in g.fanin}
        sinks = [g.id for g in t.gates if g.id not in used]
        assert sinks == [t.outputs[0]]


def test_gate_count_law_table8():
    for n, total in [(32, 104), (40, 130), (48, 156), (56, 182), (64, 208),
                     (72, 234), (80, 260), (88, 286), (96, 312), (104, 338),
                     (112, 364), (120, 390), (128, 416), (136, 442),
                     (144, 468), (152, 494)]:
        spec = GenSpec(n, 25, 5, seed=1)
        assert spec.total_gates == total
        c = generate_circuit(spec)
        assert len(c.gates) == total


def test_8_25_2_composition():
    spec = GenSpec(8, 25, 2, seed=3)
    assert spec.cone_count == 2
    c = generate_circuit(spec)
    assert len(c.gates) == 2 * 10 + 6


def test_rounding_half_up():
    assert GenSpec(6, 25, 2).cone_count == 2   # 1.5 rounds up
    assert GenSpec(2, 25, 2).cone_count == 1   # 0.5 rounds up
    assert GenSpec(10, 24, 2).cone_count == 2  # 2.4 rounds down


def test_generated_acyclic_and_fanin_bounded():
    for seed in range(5):
        spec = GenSpec(20, 25, 4, seed)
        c = generate_circuit(spec)  # Circuit construction checks acyclicity
        for g in c.gates:
            assert len(g.fanin) <= max(4, 10)
            if g.kind in ("NOT", "BUFFER"):
                assert len(g.fanin) == 1
        assert len({w for g in c.gates for w in g.fanin}
                   & set(c.outputs)) == 0  # outputs are sinks


def test_generated_roundtrip_bench():
    c = generate_circuit(GenSpec(16, 25, 3, seed=9))
    again = parse_bench(render_bench(c), c.name)
    assert render_bench(again) == render_bench(c)


def test_generation_deterministic():
    a = generate_circuit(GenSpec(24, 25, 5, seed=5))
    b = generate_circuit(GenSpec(24, 25, 5, seed=5))
    assert render_bench(a) == render_bench(b)
    c = generate_circuit(GenSpec(24, 25, 5, seed=6))
    assert render_bench(c) != render_bench(a)


def test_scenarios_are_abnormal():
    c = generate_circuit(GenSpec(16, 25, 4, seed=2))
    scens = generate_scenarios(c, 2, 20, seed=7)
    for s in scens:
        healthy = simulate(c, s.input_vector, ())
        broken = simulate(c, s.input_vector, s.faulty)
        assert any(healthy[o] != broken[o] for o in c.outputs)
        assert s.expected_outputs == {o: broken[o] for o in c.outputs}
        assert len(s.faulty) == 2


def test_scenarios_deterministic():
    c = generate_circuit(GenSpec(16, 25, 4, seed=2))
    a = generate_scenarios(c, 1, 15, seed=3)
    b = generate_scenarios(c, 1, 15, seed=3)
    assert [(s.faulty, tuple(sorted(s.input_vector.items()))) for s in a] == \
        [(s.faulty, tuple(sorted(s.input_vector.items()))) for s in b]


def test_exhaustive_single_fault_one_per_gate():
    c = generate_circuit(GenSpec(8, 25, 2, seed=4))
    scens = exhaustive_single_fault(c, seed=1, max_tries=128)
    seen = {next(iter(s.faulty)) for s in scens}
    assert len(seen) == len(scens)  # one scenario per (detectable) gate
    assert seen <= {g.id for g in c.gates}


def test_cardinality_bounds():
    c = generate_circuit(GenSpec(8, 25, 2, seed=4))
    with pytest.raises(ValueError):
        generate_scenarios(c, len(c.gates) + 1, 1, seed=0)


def test_observation_covers_io():
    c = generate_circuit(GenSpec(12, 25, 3, seed=8))
    scens = generate_scenarios(c, 1, 5, seed=1)
    for s in scens:
        obs = observation_of(c, s)
        assert all(w in obs for w in c.inputs)
        assert all(w in obs for w in c.outputs)


def test_bad_spec_rejected():
    with pytest.raises(ValueError):
        GenSpec(0, 25, 5)
    with pytest.raises(ValueError):
        GenSpec(8, 101, 5)
    with pytest.raises(ValueError):
        GenSpec(8, 25, 0)
