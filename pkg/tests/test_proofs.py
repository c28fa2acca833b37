import itertools

import pytest

from csll import formulas as mf
from csll import types as ty
from csll.formulas import Address
from csll.process import Call, Close, Cut, Nil, Program, Wait, fresh
from csll.proofs import (
    NotPrincipalError, PRINCIPAL_STEPS, address_stream, cons,
    encode_derivation, nu_thread_witness, principal_reduce,
    principal_reduce_at, proof_bisimilar, proof_to_dot, proof_to_json_dict,
    proof_validity, simulate_step,
)
from csll.runtime import enabled_steps, explore
from csll.typecheck import check, definition_derivation, validity_check

EMPTY = Program({})


# --- streams -------------------------------------------------------------------


def test_stream_head_tail():
    s = address_stream()
    assert [s.at(i) for i in range(5)] == [0, 1, 2, 3, 4]


def test_stream_even_odd_disjoint():
    s = address_stream()
    evens = {s.even().at(i) for i in range(20)}
    odds = {s.odd().at(i) for i in range(20)}
    assert not evens & odds


def test_cons_stream_laws():
    s = cons(99, address_stream())
    assert s.at(0) == 99 and s.at(1) == 0 and s.at(2) == 1
    # even of (a, t) is (a, odd t); odd of (a, t) is even t
    assert [s.even().at(i) for i in range(3)] == [99, 1, 3]
    assert [s.odd().at(i) for i in range(3)] == [0, 2, 4]


def test_stream_injectivity_through_splits():
    s = address_stream()
    parts = [s.even().even(), s.even().odd(), s.odd().even(), s.odd().odd()]
    seen = [p.at(i) for p in parts for i in range(10)]
    assert len(seen) == len(set(seen))


# --- encoding shapes -----------------------------------------------------------


def _rules_by_id(graph):
    return {nid: n.rule for nid, n in graph.nodes.items()}


def test_encode_done_gadget():
    x = fresh("x")
    d = check(Nil(x), {x: ty.Client(ty.ONE)}, EMPTY)
    g = encode_derivation(d).graph
    assert len(g.nodes) == 3
    mu = g.node(g.root)
    assert mu.rule == "mu"
    alpha = mu.sequent[0].address
    plus = g.node(mu.premises[0].target)
    assert plus.rule == "plus" and plus.side == 1
    assert plus.sequent[0].address == alpha.child("i")
    one = g.node(plus.premises[0].target)
    assert one.rule == "one"
    assert one.sequent[0].address == alpha.child("i").child("l")


def test_encode_server_gadget(lock):
    d = definition_derivation(lock.defs["Lock"], lock)
    g = encode_derivation(d).graph
    nu = g.node(g.root)
    assert nu.rule == "nu"
    with_ = g.node(nu.premises[0].target)
    assert with_.rule == "with"
    bot_side = g.node(with_.premises[0].target)
    par_side = g.node(with_.premises[1].target)
    assert bot_side.rule == "bot" and par_side.rule == "par"
    alpha = nu.principal
    assert bot_side.principal == alpha.child("i").child("l")
    assert par_side.principal == alpha.child("i").child("r")


def test_encoded_lock_addresses_disjoint_and_cut_atoms_dual(lock):
    d = check(lock.main.body, dict(lock.main.params), lock)
    g = encode_derivation(d).graph
    for n in g.nodes.values():
        for a, b in itertools.combinations([o.address for o in n.sequent], 2):
            assert mf.disjoint(a, b), (n.nid, a, b)
        if n.rule == "cut":
            a, b = n.cut_pair
            assert a.atom == b.atom and a.bar != b.bar


def test_atoms_never_reused_across_cuts(cas):
    d = check(cas.main.body, dict(cas.main.params), cas)
    g = encode_derivation(d).graph
    cut_atoms = [n.cut_pair[0].atom for n in g.nodes.values() if n.rule == "cut"]
    assert len(cut_atoms) == len(set(cut_atoms))
    root_atoms = {o.address.atom for o in g.node(g.root).sequent}
    assert not root_atoms & set(cut_atoms)


# --- validity -------------------------------------------------------------------


def test_proof_validity_agrees_with_derivation_checker(lock, omega, omega_server, cas, comm):
    for prog in (lock, omega, omega_server, cas, comm):
        for defn in prog.all_definitions():
            d = definition_derivation(defn, prog)
            dv = validity_check(d)
            pv = proof_validity(encode_derivation(d).graph)
            assert dv.verdict == pv.verdict, defn.name


def test_invalid_proof_has_witness(omega):
    d = definition_derivation(omega.defs["Omega"], omega)
    pv = proof_validity(encode_derivation(d).graph)
    assert pv.verdict == "invalid" and pv.witness


def test_nu_thread_witness_on_lock(lock):
    d = definition_derivation(lock.defs["Lock"], lock)
    g = encode_derivation(d).graph
    witness = nu_thread_witness(g)
    assert witness
    formulas = [g.node(nid).occurrence_at(addr).formula for nid, addr in witness]
    m = mf.min_formula(set(formulas))
    assert m == mf.encode_type(ty.Server(ty.BOT))
    assert mf.is_nu(m)
    # the recurring set is the fixed point, its unfolding, and the par part
    assert {mf.render_formula(f) for f in formulas} == {
        "nu X. (bot (&) (bot (par) X))",
        "(bot (&) (bot (par) X))".replace("X", "nu X. (bot (&) (bot (par) X))"),
        "(bot (par) nu X. (bot (&) (bot (par) X)))",
    }


def test_min_inf_often_defined_on_witnesses(cas):
    for defn in cas.all_definitions():
        d = definition_derivation(defn, cas)
        g = encode_derivation(d).graph
        w = nu_thread_witness(g)
        if w:
            formulas = {g.node(nid).occurrence_at(a).formula for nid, a in w}
            assert mf.min_formula(formulas) is not None


def test_no_nu_witness_in_omega(omega):
    d = definition_derivation(omega.defs["Omega"], omega)
    assert nu_thread_witness(encode_derivation(d).graph) == []


# --- principal reduction ---------------------------------------------------------


def test_principal_reduce_close_erases_cut():
    x, z = fresh("x"), fresh("z")
    p = Cut(x, ty.ONE, Close(x), Wait(x, Close(z)))
    d = check(p, {z: ty.ONE}, EMPTY)
    g = encode_derivation(d).graph
    g2 = principal_reduce(g)
    root = g2.node(g2.root)
    assert root.rule == "one"  # what remains is the proof of close z
    fresh_enc = encode_derivation(check(Close(z), {z: ty.ONE}, EMPTY)).graph
    assert proof_bisimilar(g2, fresh_enc)


def test_principal_reduce_requires_principal_premises(lock):
    # after one connect the outer close-cut sits above another cut; reducing
    # there is a commutation, which is out of scope
    steps = enabled_steps(lock.main.body, lock, deterministic=True)
    reduct = steps[0].reduct
    d = check(reduct, dict(lock.main.params), lock)
    g = encode_derivation(d).graph
    with pytest.raises(NotPrincipalError):
        principal_reduce(g)


def test_reduce_at_rejects_non_cut(lock):
    d = definition_derivation(lock.defs["Lock"], lock)
    g = encode_derivation(d).graph
    with pytest.raises(NotPrincipalError):
        principal_reduce_at(g, g.root)


# --- correspondence ---------------------------------------------------------------


def test_close_corresponds_to_one_step():
    x, z = fresh("x"), fresh("z")
    p = Cut(x, ty.ONE, Close(x), Wait(x, Close(z)))
    (st,) = enabled_steps(p, EMPTY, deterministic=True)
    rep = simulate_step(st.exposed, st.cut, st.reduct, {z: ty.ONE}, EMPTY, st.info.kind)
    assert rep.matched and rep.steps == 1


def test_connect_corresponds_to_three_steps(lock):
    st = enabled_steps(lock.main.body, lock, deterministic=True)[0]
    assert st.info.kind == "r-connect"
    rep = simulate_step(st.exposed, st.cut, st.reduct, dict(lock.main.params), lock, st.info.kind)
    assert rep.matched and rep.steps == 3


def test_done_corresponds_to_three_steps(lock):
    x, z = fresh("x"), fresh("z")
    p = Cut(x, ty.Client(ty.ONE), Nil(x), Call("Lock", (x, z)))
    (st,) = enabled_steps(p, lock, deterministic=True)
    assert st.info.kind == "r-done"
    rep = simulate_step(st.exposed, st.cut, st.reduct, {z: ty.ONE}, lock, st.info.kind)
    assert rep.matched and rep.steps == 3


def test_correspondence_on_all_corpus_det_edges(lock, cas, omega, omega_server, comm):
    for prog in (lock, cas, omega, omega_server, comm):
        ctx = dict(prog.main.params)
        g = explore(prog.main.body, prog, max_states=60, max_depth=60)
        for sid in g.expanded:
            for st in enabled_steps(g.states[sid], prog, deterministic=True):
                rep = simulate_step(st.exposed, st.cut, st.reduct, ctx, prog, st.info.kind)
                assert rep.matched, (st.info, rep.detail)
                assert rep.steps == PRINCIPAL_STEPS[st.info.kind]


def test_bisimilar_rolled_and_unrolled(lock):
    d = definition_derivation(lock.defs["Lock"], lock)
    g = encode_derivation(d).graph
    assert proof_bisimilar(g, g)
    d2 = definition_derivation(lock.defs["Lock"], lock)
    assert proof_bisimilar(g, encode_derivation(d2).graph)


def test_bisimilar_distinguishes_different_proofs(lock, cas):
    g1 = encode_derivation(definition_derivation(lock.defs["Lock"], lock)).graph
    g2 = encode_derivation(definition_derivation(cas.defs["CasTrue"], cas)).graph
    assert not proof_bisimilar(g1, g2)


# --- exports ----------------------------------------------------------------------


def test_proof_json_schema_fields(lock):
    d = definition_derivation(lock.defs["Lock"], lock)
    g = encode_derivation(d).graph
    doc = proof_to_json_dict(g)
    assert set(doc) == {"root", "nodes"}
    for n in doc["nodes"]:
        assert set(n) == {"id", "rule", "sequent", "premises", "back"}
        for occ in n["sequent"]:
            assert set(occ) == {"formula", "address"}
    assert any(n["back"] for n in doc["nodes"])


def test_proof_root_sequent_of_lock(lock):
    d = definition_derivation(lock.defs["Lock"], lock)
    g = encode_derivation(d).graph
    seq = {(mf.render_formula(o.formula), o.address.render()) for o in g.node(g.root).sequent}
    assert seq == {("nu X. (bot (&) (bot (par) X))", "a0"), ("1", "a1")}


def test_dot_highlights_witness(lock):
    d = definition_derivation(lock.defs["Lock"], lock)
    g = encode_derivation(d).graph
    dot = proof_to_dot(g, highlight=nu_thread_witness(g))
    assert "digraph proof" in dot
    assert "lightgoldenrod1" in dot  # some node carries the thread highlight


def test_thread_checker_sharper_on_carried_server_occurrence():
    # a server-typed occurrence merely carried around a cycle is a recurring
    # greatest-fixed-point thread, so the proof checker can certify systems
    # whose derivation-level witness channel differs between cycle families
    from csll.parser import parse_program
    from .test_typecheck import TWO_PHASE

    prog = parse_program(TWO_PHASE, "<twophase>")
    d = definition_derivation(prog.defs["TwoPhase"], prog)
    assert validity_check(d).verdict == "inconclusive"
    assert proof_validity(encode_derivation(d).graph).verdict == "valid"


def test_correspondence_on_generated_systems():
    # beyond the corpus: random well-typed systems, all five redex kinds
    from csll.gen import gen_program
    from csll.typecheck import check

    checked = 0
    kinds = set()
    for seed in range(60):
        prog = gen_program(seed)
        ctx = dict(prog.main.params)
        g = explore(prog.main.body, prog, max_states=30, max_depth=30)
        for sid in sorted(g.expanded)[:6]:
            for st in enabled_steps(g.states[sid], prog, deterministic=True):
                check(st.exposed, ctx, prog)  # the rearrangement stays typed
                rep = simulate_step(st.exposed, st.cut, st.reduct, ctx, prog, st.info.kind)
                assert rep.matched, (seed, str(st.info), rep.detail)
                assert rep.steps == PRINCIPAL_STEPS[st.info.kind]
                kinds.add(st.info.kind)
                checked += 1
    assert checked > 100
    assert {"r-close", "r-comm", "r-case"} <= kinds
