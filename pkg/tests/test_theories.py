"""Theory bundle tables and Diffie-Hellman normalization.

The expected canonical form for the derived case is computed by an
independent in-test reference: collect the exponent multiset of a chain
by hand and sort it, instead of calling the code under test twice.
"""
import itertools
import random

import pytest

from metacp.terms import Apply, Const, ModelError, Sort, Var, canon
from metacp.theories import (
    BUNDLES,
    EXP,
    G,
    HASH,
    BundleName,
    Equation,
    Orientation,
    build_exp_chain,
    normalize,
    split_exp_chain,
)

DH = {BundleName.DIFFIE_HELLMAN}

x = Var("x")
y = Var("y")
a_v = Var("a")
b_v = Var("b")
c_v = Var("c")
m = Var("m")


def exp(base, e):
    return Apply(EXP, (base, e))


def reference_normal_form(base, exponents):
    # independent oracle: sorted-by-canon exponent list, left-nested chain
    ordered = sorted(exponents, key=canon)
    return build_exp_chain(base, ordered)


def test_defining_symmetry():
    lhs = normalize(exp(exp(G, x), y), DH)
    rhs = normalize(exp(exp(G, y), x), DH)
    assert lhs == rhs


def test_no_dh_structure_is_untouched():
    t = Apply(HASH, (m,))
    assert normalize(t, DH) == t
    assert normalize(t, set()) == t


def test_three_exponents_sorted():
    t = exp(exp(exp(G, a_v), c_v), b_v)
    assert normalize(t, DH) == reference_normal_form(G, [a_v, b_v, c_v])


def test_all_orders_of_three_exponents_agree():
    for perm in itertools.permutations([a_v, b_v, c_v]):
        chain = build_exp_chain(G, perm)
        assert normalize(chain, DH) == reference_normal_form(G, [a_v, b_v, c_v])


def test_normalize_idempotent():
    rng = random.Random(13)
    atoms = [x, y, a_v, b_v, G, Var("n", Sort.FRESH)]
    for _ in range(300):
        t = rng.choice(atoms)
        for _ in range(rng.randrange(4)):
            t = rng.choice([exp(t, rng.choice(atoms)), Apply(HASH, (t,))])
        n1 = normalize(t, DH)
        assert normalize(n1, DH) == n1


def test_normalize_respects_dh_swap_property():
    rng = random.Random(99)
    atoms = [x, y, a_v, b_v, G]
    for _ in range(300):
        u = rng.choice(atoms)
        if rng.random() < 0.4:
            u = exp(u, rng.choice(atoms))
        p, q = rng.choice(atoms), rng.choice(atoms)
        assert normalize(exp(exp(u, p), q), DH) == normalize(exp(exp(u, q), p), DH)


def test_normalization_recurses_into_arguments():
    inner = exp(exp(G, y), x)
    t = Apply(HASH, (inner,))
    assert normalize(t, DH) == Apply(HASH, (normalize(inner, DH),))


def test_without_dh_bundle_exponents_stay_put():
    t = exp(exp(G, y), x)
    assert normalize(t, set()) == t


def test_split_and_build_roundtrip():
    chain = exp(exp(exp(G, x), y), a_v)
    base, exps = split_exp_chain(chain)
    assert base == G and exps == [x, y, a_v]
    assert build_exp_chain(base, exps) == chain


def test_bundle_tables_are_closed_and_well_formed():
    for name, bundle in BUNDLES.items():
        assert bundle.name is name
        for eq in bundle.equations:
            assert eq.orientation in (Orientation.DESTRUCTOR, Orientation.UNORIENTED)


def test_destructor_shape_enforced():
    with pytest.raises(ModelError):
        Equation(Var("z"), Var("z"), Orientation.DESTRUCTOR)
    with pytest.raises(ModelError):
        # right side variable not on the left
        Equation(Apply(HASH, (m,)), Var("other"), Orientation.DESTRUCTOR)


def test_signing_destructor_rhs_is_nullary_true():
    signing = BUNDLES[BundleName.SIGNING]
    (eq,) = signing.equations
    assert isinstance(eq.rhs, Apply) and eq.rhs.args == ()


def test_dh_bundle_carries_public_base_constant():
    dh = BUNDLES[BundleName.DIFFIE_HELLMAN]
    assert Const("g", Sort.PUBLIC) in dh.constants
