from hypothesis import given

from csll import types as ty
from csll.parser import parse_type

from .strategies import session_types


def test_dual_swaps_plus_with():
    t = parse_type("(1 + 1) + (1 + 1)")
    assert ty.dual(ty.Plus(ty.ONE, t)) == ty.With(ty.BOT, ty.dual(t))


def test_dual_server_client():
    t = ty.Par(ty.BOT, ty.ONE)
    assert ty.dual(ty.Server(t)) == ty.Client(ty.dual(t))
    assert ty.dual(ty.Client(ty.ONE)) == ty.Server(ty.BOT)


@given(session_types)
def test_dual_involution(t):
    assert ty.dual(ty.dual(t)) == t


@given(session_types)
def test_polarity_flips(t):
    assert ty.is_positive(t) != ty.is_positive(ty.dual(t))


def test_subtypes_and_depth():
    t = parse_type("srv (bot par 1)")
    subs = list(ty.subtypes(t))
    assert t in subs and ty.BOT in subs and len(subs) == 4
    assert ty.depth(t) == 3
