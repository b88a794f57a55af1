import random

import pytest

from metacp.terms import (
    Apply,
    Const,
    FunctionSymbol,
    ModelError,
    Sort,
    SortMismatch,
    TupleTerm,
    Var,
    canon,
    match,
    sort_accepts,
    subterms,
    substitute,
    vars_of,
)

SENC = FunctionSymbol("senc", 2)
SDEC = FunctionSymbol("sdec", 2)
H = FunctionSymbol("h", 1)

x = Var("x")
m = Var("m")
k = Var("k")
na = Var("na", Sort.FRESH)
kab = Var("kab", Sort.FRESH)
a = Var("a")


def test_subterms_leaf():
    assert subterms(x) == (x,)


def test_subterms_one_level_application():
    t = Apply(SENC, (m, k))
    assert subterms(t) == (t, m, k)


def test_subterms_deduplicates_in_preorder():
    # enumerated by hand: <a, h(a)> then a, then h(a); the second a is dropped
    t = TupleTerm((a, Apply(H, (a,))))
    assert subterms(t) == (t, a, Apply(H, (a,)))


def test_subterms_monotone():
    rng = random.Random(7)
    pool = [x, m, k, a, Apply(H, (a,)), Apply(SENC, (m, k)), TupleTerm((a, m))]
    for _ in range(200):
        t = rng.choice(pool)
        for _ in range(rng.randrange(3)):
            t = rng.choice([Apply(H, (t,)), Apply(SENC, (t, rng.choice(pool))), TupleTerm((t, rng.choice(pool)))])
        subs = subterms(t)
        for s in subs:
            assert set(subterms(s)) <= set(subs)


def test_substitute_single_variable():
    assert substitute(x, {x: k}) == k


def test_substitute_empty_binding_is_identity():
    t = Apply(SENC, (m, k))
    assert substitute(t, {}) == t


def test_substitute_hand_checked_nested():
    t = Apply(SDEC, (Apply(SENC, (m, k)), k))
    got = substitute(t, {m: na, k: kab})
    assert got == Apply(SDEC, (Apply(SENC, (na, kab)), kab))


def test_substitute_composes_on_disjoint_domains():
    rng = random.Random(21)
    y = Var("y")
    for _ in range(100):
        t = Apply(SENC, (rng.choice([x, y, m]), rng.choice([x, y])))
        sigma = {x: Apply(H, (a,))}
        tau = {y: k}
        assert substitute(substitute(t, sigma), tau) == substitute(t, {**sigma, **tau})


def test_substitute_rejects_sort_violation():
    with pytest.raises(SortMismatch):
        substitute(na, {na: Apply(H, (m,))})


def test_fresh_and_public_fit_message_slots():
    assert sort_accepts(Sort.MESSAGE, Sort.FRESH)
    assert sort_accepts(Sort.MESSAGE, Sort.PUBLIC)
    assert not sort_accepts(Sort.FRESH, Sort.MESSAGE)
    assert not sort_accepts(Sort.PUBLIC, Sort.FRESH)


def test_apply_checks_arity():
    with pytest.raises(ModelError):
        Apply(SENC, (m,))


def test_tuple_needs_two_items():
    with pytest.raises(ModelError):
        TupleTerm((m,))


def test_identifier_rules():
    with pytest.raises(ModelError):
        Var("1bad")
    with pytest.raises(ModelError):
        FunctionSymbol("no-dash", 1)
    with pytest.raises(ModelError):
        Const("nope", Sort.FRESH)


def test_match_binds_and_checks_repeats():
    pattern = Apply(SDEC, (Apply(SENC, (m, k)), k))
    ground = Apply(SDEC, (Apply(SENC, (na, kab)), kab))
    assert match(pattern, ground) == {m: na, k: kab}
    mismatched = Apply(SDEC, (Apply(SENC, (na, kab)), na))
    assert match(pattern, mismatched) is None


def test_canon_is_a_total_order_key():
    pool = [x, na, Const("g"), Apply(H, (x,)), Apply(SENC, (m, k)), TupleTerm((x, m))]
    keys = [canon(t) for t in pool]
    assert len(set(keys)) == len(pool)
    assert canon(Var("x")) == canon(Var("x", Sort.MESSAGE))
    assert canon(Var("x")) != canon(Var("x", Sort.FRESH))


def test_vars_of():
    t = Apply(SENC, (TupleTerm((m, na)), k))
    assert vars_of(t) == {m, na, k}
