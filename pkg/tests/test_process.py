import pytest
from hypothesis import given

from csll import types as ty
from csll.canon import canonical_form
from csll.process import (
    Call, Close, Cons, Cut, Definition, DivergentUnfolding, Fork, Nil,
    Program, Server, Wait, alpha_equal, call_depth, channels, free_names,
    fresh, rename, threads, unfold,
)

from .strategies import processes


def test_free_names_basics():
    x, y = fresh("x"), fresh("y")
    assert free_names(Close(x)) == {x}
    assert free_names(Fork(x, y, Close(y), Close(x))) == {x}
    assert free_names(Cons(x, y, Close(y), Nil(x))) == {x}


def test_rename_simple_and_identity():
    x, z = fresh("x"), fresh("z")
    assert rename(Close(x), {x: z}) == Close(z)
    p = Fork(x, fresh("y"), Close(x), Close(x))
    assert rename(p, {}) == p


def test_rename_capture_avoiding():
    x, y = fresh("x"), fresh("y")
    p = Fork(x, y, Close(y), Close(x))
    q = rename(p, {x: y})
    assert isinstance(q, Fork)
    assert q.chan == y
    assert q.payload != y  # the binder was refreshed to avoid capture
    assert q.payload_body == Close(q.payload)
    assert q.cont == Close(y)


@given(processes())
def test_rename_free_names_image(p):
    fn = sorted(free_names(p), key=lambda c: c.uid)
    mapping = {c: fresh(c.name + "r") for c in fn}
    assert free_names(rename(p, mapping)) == {mapping[c] for c in fn}


def omega_program():
    x = fresh("x")
    body = Cut(x, ty.ONE, Close(x), Wait(x, Call("Omega", ())))
    return Program({"Omega": Definition("Omega", (), body)})


def test_call_depth_guard_is_zero():
    prog = omega_program()
    assert call_depth(Close(fresh("x")), prog) == 0


def test_call_depth_omega_is_two():
    prog = omega_program()
    assert call_depth(Call("Omega", ()), prog) == 2


def test_call_depth_divergence_flag():
    prog = Program({"B": Definition("B", (), Call("B", ()))})
    assert call_depth(Call("B", ()), prog) is None
    with pytest.raises(DivergentUnfolding):
        unfold(Call("B", ()), prog)


def lock_program():
    x, z, y = fresh("x"), fresh("z"), fresh("y")
    body = Server(x, y, Wait(y, Call("Lock", (x, z))), Close(z))
    return Program({"Lock": Definition("Lock", ((x, ty.Server(ty.BOT)), (z, ty.ONE)), body)}), x, z


def test_unfold_lock_single_step():
    prog, x, z = lock_program()
    a, b = fresh("x"), fresh("z")
    got = unfold(Call("Lock", (a, b)), prog)
    assert isinstance(got, Server)
    assert got.chan == a and got.idle == Close(b)
    assert isinstance(got.accept, Wait)
    assert got.accept.body == Call("Lock", (a, b))


def test_unfold_already_unfolded():
    prog, *_ = lock_program()
    p = Close(fresh("x"))
    assert unfold(p, prog) == p


def test_unfold_inlines_both_cut_sides():
    x1, x2 = fresh("x"), fresh("x")
    a = Definition("A", ((x1, ty.ONE),), Close(x1))
    b = Definition("B", ((x2, ty.BOT),), Wait(x2, Call("A", (x2,))))
    # B's unguarded body references A only under a guard, so one unfolding
    # of each call suffices
    prog = Program({"A": a, "B": b})
    x = fresh("x")
    p = Cut(x, ty.ONE, Call("A", (x,)), Call("B", (x,)))
    got = unfold(p, prog)
    assert isinstance(got, Cut)
    assert got.left == Close(got.chan)
    assert isinstance(got.right, Wait)


def test_threads_channels_counts():
    x, z = fresh("x"), fresh("z")
    p = Cut(x, ty.ONE, Close(x), Wait(x, Close(z)))
    assert threads(p) == 2
    assert channels(p) == 1


# --- canonical forms ---------------------------------------------------------


def test_canonical_commutes_cut():
    x, z, w = fresh("x"), fresh("z"), fresh("w")
    p = Cut(x, ty.ONE, Close(x), Wait(x, Close(z)))
    q = Cut(x, ty.BOT, Wait(x, Close(z)), Close(x))
    assert canonical_form(p) == canonical_form(q)
    del w


def test_canonical_sorts_pool():
    x = fresh("x")
    y, v = fresh("y"), fresh("v")
    z = fresh("z")
    client_a = Wait(z, Close(y))
    client_b = Close(v)
    p1 = Cons(x, y, client_a, Cons(x, v, client_b, Nil(x)))
    p2 = Cons(x, v, client_b, Cons(x, y, client_a, Nil(x)))
    assert canonical_form(p1) == canonical_form(p2)


@given(processes())
def test_canonical_idempotent(p):
    c = canonical_form(p)
    assert canonical_form(c) == c


@given(processes())
def test_canonical_preserves_free_names(p):
    assert free_names(canonical_form(p)) == free_names(p)


@given(processes())
def test_canonical_alpha_invariant(p):
    # refreshing every binder gives an alpha-variant; canonical forms agree
    q = rename(p, {}, refresh=True)
    assert q == p or alpha_equal(q, p, {c: c for c in free_names(p)})
    assert canonical_form(q) == canonical_form(p)
