import random
from itertools import product

import numpy as np
import pytest

from circuitdiag import compiler
from circuitdiag.abstraction import abstraction
from circuitdiag.circuit import parse_bench, simulate
from circuitdiag.encode import (EncodeError, ModelParams, cone_failure_priors,
                                cone_prior, encode_abstraction, encode_flat,
                                read_dimacs, to_dimacs)
from oracles import brute_wmc, random_test_circuit


def clause_models(clauses, n):
    out = set()
    for bits in product((0, 1), repeat=n):
        if all(any((l > 0) == (bits[abs(l) - 1] == 1) for l in c)
               for c in clauses):
            out.add(bits)
    return out


def test_not_gate_clauses_semantics():
    c = parse_bench("INPUT(p)\nOUTPUT(j)\nj = NOT(p)")
    wc = encode_flat(c)
    vt = wc.vars
    p, j = vt.wire_var("p"), vt.wire_var("j")
    ok, th = vt.ok_var("j"), vt.theta_var("j")
    assert wc.n_vars == 4
    got = clause_models(wc.clauses, 4)
    want = set()
    for bits in product((0, 1), repeat=4):
        v = dict(zip((p, j, ok, th), (bits[p - 1], bits[j - 1],
                                      bits[ok - 1], bits[th - 1])))
        formula = ((not v[ok] or (v[j] == (1 - v[p]))) and
                   (v[ok] or (v[j] == v[th])))
        if formula:
            want.add(bits)
    assert got == want


def test_normalization_wmc_is_one():
    rng = random.Random(1)
    for _ in range(15):
        c = random_test_circuit(rng, rng.randint(1, 4), rng.randint(1, 3))
        wc = encode_flat(c)
        if wc.n_vars > 16:
            continue
        total, _, _ = brute_wmc(wc)
        assert abs(total - 1.0) < 1e-12


def test_two_gate_conditional(two_gate):
    wc = encode_flat(two_gate)
    total, marg, _ = brute_wmc(
        wc, {wc.vars.wire_var("P"): 1})
    j0 = marg[wc.vars.wire_var("J"), 0]
    assert abs(j0 / total - 0.95) < 1e-12


def test_weight_table_roles(two_gate):
    wc = encode_flat(two_gate)
    vt = wc.vars
    assert tuple(wc.weights[vt.wire_var("P")]) == (0.5, 0.5)
    assert tuple(wc.weights[vt.wire_var("J")]) == (1.0, 1.0)
    assert wc.weights[vt.ok_var("J")] == pytest.approx((0.9, 0.1))
    assert tuple(wc.weights[vt.theta_var("J")]) == (0.5, 0.5)


def test_params_validated():
    with pytest.raises(EncodeError):
        ModelParams(healthy_prior=1.0)
    with pytest.raises(EncodeError):
        ModelParams(broken_high=0.0)


def test_abstraction_cone_clause_semantics():
    # cone A = {A, J} with J = NOT(P) inside: J encoded healthy with no
    # health variable, okA guards the cone function, !okA inverts it
    c = parse_bench("INPUT(P)\nINPUT(D)\nOUTPUT(Z)\n"
                    "J = NOT(P)\nA = AND(J, D)\nZ = BUFFER(A)")
    view = abstraction(c)
    assert view.cones["A"].members == frozenset({"A", "J"})
    priors = {"A": 0.0725}
    wc = encode_abstraction(c, view, ModelParams(), priors)
    vt = wc.vars
    assert set(vt.components()) == {"A", "Z"}
    assert not any(vt.role(v) == ("theta", "A")
                   for v in range(1, wc.n_vars + 1))
    p, d, j, a, z = (vt.wire_var(w) for w in ("P", "D", "J", "A", "Z"))
    oka, okz, thz = vt.ok_var("A"), vt.ok_var("Z"), vt.theta_var("Z")
    got = clause_models(wc.clauses, wc.n_vars)
    want = set()
    for bits in product((0, 1), repeat=wc.n_vars):
        val = lambda v: bits[v - 1]
        f = val(j) & val(d)
        good = ((val(j) == 1 - val(p)) and
                ((val(a) == f) if val(oka) else (val(a) == 1 - f)) and
                ((val(z) == val(a)) if val(okz)
                 else (val(z) == val(thz))))
        if good:
            want.add(bits)
    assert got == want
    assert tuple(wc.weights[oka]) == (1 - 0.0725, 0.0725)


def test_abstraction_zero_cones_equals_flat():
    c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(x)\nOUTPUT(y)\n"
                    "x = AND(a, b)\ny = OR(a, x)")
    view = abstraction(c)
    assert not view.cones
    flat = encode_flat(c)
    ab = encode_abstraction(c, view, ModelParams(), {})
    assert sorted(map(sorted, flat.clauses)) == sorted(map(sorted, ab.clauses))
    assert np.array_equal(flat.weights, ab.weights)


def test_fig1_abstraction_has_five_ok_vars(fig1):
    view = abstraction(fig1)
    priors = cone_failure_priors(fig1, view)
    wc = encode_abstraction(fig1, view, ModelParams(), priors)
    assert set(wc.vars.components()) == {"A", "B", "D", "K", "V"}


def test_missing_cone_prior_rejected(fig1):
    view = abstraction(fig1)
    with pytest.raises(EncodeError, match="missing cone prior"):
        encode_abstraction(fig1, view, ModelParams(), {})


def test_cone_prior_single_gate():
    c = parse_bench("INPUT(p)\nOUTPUT(j)\nj = NOT(p)")
    view = abstraction(c)
    assert abs(cone_prior(c, view, "j") - 0.05) < 1e-12


def test_cone_prior_two_gate(two_gate):
    view = abstraction(two_gate)
    assert abs(cone_prior(two_gate, view, "A") - 0.0725) < 1e-12


def test_cone_prior_healthy_limit(two_gate):
    view = abstraction(two_gate)
    p = cone_prior(two_gate, view, "A",
                   ModelParams(healthy_prior=1 - 1e-12))
    assert p < 1e-9


def test_cone_prior_monotone_in_failure_prior():
    c = parse_bench("INPUT(p)\nOUTPUT(j)\nj = NOT(p)")
    view = abstraction(c)
    last = -1.0
    for hp in (0.95, 0.9, 0.8, 0.6):
        p = cone_prior(c, view, "j", ModelParams(healthy_prior=hp))
        assert p > last
        last = p


def test_cone_prior_is_average_of_flat_wrongness(two_gate):
    """The real reparameterization identity: the cone prior equals the
    flat model's input-averaged probability of a wrong cone output."""
    wc = encode_flat(two_gate)
    vt = wc.vars
    view = abstraction(two_gate)
    total = 0.0
    for pb, db in product((0, 1), repeat=2):
        healthy = simulate(two_gate, {"P": pb, "D": db}, ())
        ev = {vt.wire_var("P"): pb, vt.wire_var("D"): db,
              vt.wire_var("A"): 1 - healthy["A"]}
        pr, _, _ = brute_wmc(wc, ev)
        total += pr / 0.25  # conditional on this input vector
    avg_wrong = total / 4
    assert abs(cone_prior(two_gate, view, "A") - avg_wrong) < 1e-12


def test_cone_priors_bottom_up_nested(fig3):
    view = abstraction(fig3)
    priors = cone_failure_priors(fig3, view)
    assert set(priors) == {"A"}
    assert 0.0 < priors["A"] < 1.0


def test_wide_gate_direct_expansion():
    c = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nINPUT(e)\n"
                    "INPUT(f)\nOUTPUT(x)\nx = AND(a, b, c, d, e, f)")
    wc = encode_flat(c)
    total, _, _ = brute_wmc(wc)
    assert abs(total - 1.0) < 1e-12


def test_wide_xor_tree_aux():
    c = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nINPUT(e)\n"
                    "INPUT(f)\nOUTPUT(x)\nx = XOR(a, b, c, d, e, f)")
    wc = encode_flat(c)
    aux = [v for v in range(1, wc.n_vars + 1)
           if wc.vars.role(v)[0] == "aux"]
    assert aux, "wide XOR should introduce aux tree variables"
    g = compiler.compile_wcnf(wc, check=True)
    assert abs(compiler.evaluate(g, wc.weights, {}) - 1.0) < 1e-9
    # healthy parity respected: okX=1, all inputs 1 -> x = 0
    ev = {wc.vars.ok_var("x"): 1}
    for w in "abcdef":
        ev[wc.vars.wire_var(w)] = 1
    m = compiler.query(g, wc.weights, ev)
    assert m.posterior(wc.vars.wire_var("x"), 0) == 1.0


def test_dimacs_roundtrip(two_gate):
    wc = encode_flat(two_gate)
    cnf_text, w_text = to_dimacs(wc)
    n, clauses, weights = read_dimacs(cnf_text, w_text)
    assert n == wc.n_vars
    assert sorted(map(sorted, clauses)) == sorted(map(sorted, wc.clauses))
    assert np.allclose(weights, wc.weights)


def test_dimacs_errors():
    with pytest.raises(EncodeError, match="p-line"):
        read_dimacs("1 2 0\n")
    with pytest.raises(EncodeError, match="header"):
        read_dimacs("p taut 3 1\n1 0\n")
