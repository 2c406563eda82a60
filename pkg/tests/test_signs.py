import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from morse_ainfty.signs import (
    check_sigma_identities,
    coefficient_twist,
    maltese,
    parity,
    shifted_degree,
    sigma,
    sign_delta_perm,
    sign_gluing_internal,
    sign_gluing_leaf,
    sign_gluing_permute,
    sign_gluing_root,
    sign_table,
    tau_sign,
    tau_sign_bruteforce,
)
from morse_ainfty.trees import enumerate_binary_trees, parse

LEFT3, RIGHT3 = parse("((1 2) 3)"), parse("(1 (2 3))")


@pytest.mark.parametrize("n,mus,expected", [(2, (2, 1, 1), 1), (2, (1, 0), 1), (3, (2, 1, 1), 0), (1, (0, 5, 7), 0)])
def test_sigma_examples(n, mus, expected):
    assert sigma(n, mus) == expected


@given(st.sampled_from([1, 3, 5]), st.lists(st.integers(0, 5), min_size=2, max_size=7))
def test_sigma_vanishes_for_odd_n(n, mus):
    assert sigma(n, mus) == 0


def test_sigma_needs_arity():
    with pytest.raises(ValueError):
        sigma(2, [1])


@pytest.mark.parametrize(
    "mus,i,shift,expected",
    [((1, 1, 1), 1, "mu-1", 0), ((1, 1, 1), 3, "mu-1", 0), ((2, 1), 2, "mu", 0), ((2, 1), 3, "mu", 1), ((2, 2), 3, "mu-1", 0)],
)
def test_maltese_examples(mus, i, shift, expected):
    assert maltese(mus, i, shift) == expected


def test_maltese_rejects_bad_input():
    with pytest.raises(ValueError):
        maltese([1, 2], 4)
    with pytest.raises(ValueError):
        shifted_degree(1, "mu+1")


@given(st.lists(st.integers(0, 4), min_size=1, max_size=8), st.data(), st.sampled_from(["mu-1", "mu"]))
def test_maltese_additive(mus, data, shift):
    i = data.draw(st.integers(1, len(mus) + 1))
    j = data.draw(st.integers(i, len(mus) + 1))
    middle = sum(shifted_degree(m, shift) for m in mus[i - 1 : j - 1])
    assert parity(maltese(mus, i, shift) + middle) == maltese(mus, j, shift)


# ---------------------------------------------------------------- tau_e

def test_tau_examples():
    assert tau_sign(LEFT3, (0,)) == 1 == tau_sign_bruteforce(LEFT3, (0,))
    assert tau_sign(RIGHT3, (1,)) == 1 == tau_sign_bruteforce(RIGHT3, (1,))


@pytest.mark.parametrize("d", range(3, 8))
def test_tau_closed_form_matches_bruteforce(d):
    for T in enumerate_binary_trees(d):
        for e in T.internal_edges:
            assert tau_sign(T, e) == tau_sign_bruteforce(T, e)


def test_tau_counts_d7():
    pairs = sum(T.k for d in range(3, 8) for T in enumerate_binary_trees(d))
    assert pairs == 882


# Frozen regression table for d = 4.
def test_sign_table_d4():
    rows = sign_table(4)
    got = [(r["tree"], r["edge"], r["position"], r["tau_closed"], r["dexterity"]) for r in rows]
    # hand values: (-1)^{(d-i)l+d-1} left-handed, (-1)^{(d-i)l+d} right-handed
    assert got == [
        ("(1 (2 (3 4)))", "2:2", 1, 1, 2),
        ("(1 (2 (3 4)))", "3:1", 2, -1, 2),
        ("(1 ((2 3) 4))", "2:2", 1, 1, 1),
        ("(1 ((2 3) 4))", "2:1", 2, -1, 1),
        ("((1 2) (3 4))", "1:1", 1, 1, 1),
        ("((1 2) (3 4))", "3:1", 2, -1, 1),
        ("((1 (2 3)) 4)", "2:1", 1, 1, 1),
        ("((1 (2 3)) 4)", "1:2", 2, -1, 1),
        ("(((1 2) 3) 4)", "1:1", 1, 1, 0),
        ("(((1 2) 3) 4)", "1:2", 2, -1, 0),
    ]
    assert all(r["tau_closed"] == r["tau_brute"] for r in rows)


def test_sign_table_small():
    assert sign_table(2) == []
    rows = sign_table(3)
    assert len(rows) == 2 and all(r["tau_closed"] == 1 for r in rows)


# ---------------------------------------------------------------- gluing parities

@pytest.mark.parametrize("mu,expected", [(1, 0), (2, 1), (0, 1)])
def test_gluing_root(mu, expected):
    assert sign_gluing_root(mu) == expected


def test_gluing_leaf_examples():
    assert sign_gluing_leaf(2, 2, 1, [1, 1], 2) == 0
    # n odd: the (d-i)(n+1) term drops out
    for i in (1, 2, 3):
        assert sign_gluing_leaf(3, 3, i, [1, 2, 0], 1) == parity(2 + maltese([1, 2, 0], i))
    with pytest.raises(ValueError):
        sign_gluing_leaf(2, 2, 3, [1, 1], 2)


def test_delta_perm_examples():
    assert sign_delta_perm(2, 3, 1, 1, "left") == (0, 0)
    assert sign_delta_perm(1, 3, 1, 1, "left") == (0, 1)
    assert sign_delta_perm(1, 3, 1, 1, "right") == (1, 1)


def test_gluing_internal_rejects_handedness():
    with pytest.raises(ValueError):
        sign_gluing_internal(2, 3, 1, 1, 0, 2, "up", 0, 0, 0)


@pytest.mark.parametrize("n", range(0, 4))
def test_internal_gluing_decomposes(n):
    for d in range(3, 7):
        for i in range(1, d):
            for l in range(1, d - i + 1):
                for hand, malt, mu0, r in itertools.product(("left", "right"), (0, 1), range(n + 1), range(1, d - 1)):
                    # dexterity relation of the split: r1 + r2 = r, or r - 1 if right-handed
                    r1, r2 = r - (0 if hand == "left" else 1), 0
                    restrict, ambient = sign_delta_perm(n, d, i, l, hand)
                    composite = sign_gluing_permute(n, d, i, l, malt, mu0, hand) + restrict + ambient
                    assert sign_gluing_internal(n, d, i, l, malt, mu0, hand, r, r1, r2) == parity(composite)


def test_left_handed_internal_reduces():
    for n, d, i, l, malt, mu0 in itertools.product(range(4), range(3, 6), range(1, 4), range(1, 3), (0, 1), range(3)):
        if i + l > d:
            continue
        left = sign_gluing_internal(n, d, i, l, malt, mu0, "left", 2, 2, 0)
        assert left == parity(mu0 + 1 + malt + (n + 1) * (l * malt + d * l + i + l + d))
        right = sign_gluing_internal(n, d, i, l, malt, mu0, "right", 2, 1, 0)
        assert right == parity(left + 1)


# ---------------------------------------------------------------- sigma identities

@pytest.mark.parametrize("n", [1, 2, 3])
def test_sigma_identities_default_shift(n):
    rep = check_sigma_identities(n, 5)
    assert rep.passed, rep.violations[:3]
    assert all(v > 0 for v in rep.checked.values())


def test_sigma_identity_one_fails_under_mu_for_even_n():
    rep = check_sigma_identities(2, 5, "mu")
    assert not rep.passed
    assert {v["identity"] for v in rep.violations} == {1}
    assert len(rep.violations) == 281
    assert rep.violations[0] == {"identity": 1, "mus": [0, 0, 0, 0], "i": 2, "l": 1, "mu_y": 0}


@pytest.mark.parametrize("n", [1, 3])
def test_sigma_identities_odd_n_hold_under_both_shifts(n):
    assert check_sigma_identities(n, 5, "mu").passed


# ---------------------------------------------------------------- twist

def test_coefficient_twist_examples():
    assert coefficient_twist(3, [2, 1, 1], LEFT3) == 1
    mus = [1, 0, 0, 0]  # n=2: 3*(1 + 0) odd
    assert sigma(2, mus) == 1
    assert coefficient_twist(2, mus, LEFT3) == -1
    assert coefficient_twist(2, mus, RIGHT3) == 1
