"""Accumulator tests anchored on the hand-checkable toy instance
n = 11 * 23 = 253, g = 4. Expected values below were computed with an
independent enumeration using only builtin pow (see test_acceptance for the
full exhaustive sweep)."""

import itertools

import pytest

from unihand import accumulator as acc_mod
from unihand.accumulator import (
    AccumulatedElement,
    NonMembershipWitness,
    catch_up,
    gen_acc,
    kgen_acc,
    kgen_acc_from_primes,
    nonwit_create,
    nonwit_update,
    update_acc,
    verify_nonwit,
)
from unihand.errors import DuplicateElement, ElementAccumulated, StaleWitness
from unihand.rng import DetRng

# every (a, d) with 0 < a < 5, 0 <= d < 253 satisfying 64^a == d^5 * 4 (mod 253),
# found by exhaustive enumeration with builtin pow
WORKED_EXAMPLE_SOLUTIONS = {(2, 4), (2, 27), (2, 119), (2, 188), (2, 234)}


def test_element_requires_odd_prime():
    assert AccumulatedElement(3) == 3
    with pytest.raises(ValueError):
        AccumulatedElement(4)
    with pytest.raises(ValueError):
        AccumulatedElement(2)  # even
    with pytest.raises(ValueError):
        AccumulatedElement(1)


def test_toy_keygen_factors(toy_acc_setup):
    secret, n, g = toy_acc_setup
    assert n == 253 and secret.p * secret.q == 253
    assert g == 4


def test_keygen_properties():
    rng = DetRng(b"acc-keygen")
    secret, n, g = kgen_acc(64, rng, toy=True)
    assert n.bit_length() in (63, 64)
    import math

    assert math.gcd(g, n) == 1 and 1 < g < n
    secret2, n2, _ = kgen_acc(64, rng, toy=True)
    assert n2 != n
    with pytest.raises(ValueError):
        kgen_acc(512, rng)  # production floor without the toy flag
    with pytest.raises(ValueError):
        kgen_acc_from_primes(13, 23)  # 13 is not a safe prime


def test_gen_empty_set_is_generator(toy_acc_setup):
    secret, _n, g = toy_acc_setup
    acc = gen_acc(secret, (), g)
    assert acc.c == g and acc.version == 0 and acc.log == ()


def test_gen_worked_example(toy_acc_setup):
    secret, _n, g = toy_acc_setup
    acc = gen_acc(secret, {3}, g)
    assert acc.c == pow(4, 3, 253) == 64


def test_gen_equals_fold_any_order(toy_acc_setup):
    secret, _n, g = toy_acc_setup
    elements = (3, 5, 7, 11)
    reference = gen_acc(secret, elements, g)
    for perm in itertools.permutations(elements):
        acc = gen_acc(secret, (), g)
        for x in perm:
            acc = update_acc(acc, x)
        assert acc.c == reference.c
        assert acc.version == len(elements)


def test_update_matches_direct_exponentiation(toy_acc_setup):
    secret, n, g = toy_acc_setup
    acc = gen_acc(secret, {3}, g)
    acc2 = update_acc(acc, 5)
    assert acc2.c == pow(64, 5, 253)  # independent oracle: builtin pow
    assert acc2.version == acc.version + 1
    assert acc2.log == (3, 5)


def test_update_duplicate(toy_acc_setup):
    secret, _n, g = toy_acc_setup
    acc = gen_acc(secret, {3}, g)
    with pytest.raises(DuplicateElement):
        update_acc(acc, 3)
    with pytest.raises(DuplicateElement):
        gen_acc(secret, [3, 3], g)


def test_nonwit_create_worked_example(toy_acc_setup):
    secret, _n, g = toy_acc_setup
    acc = gen_acc(secret, {3}, g)
    wit = nonwit_create(secret, acc, 5)
    # extended Euclid: 2*3 + (-1)*5 = 1, so a = 2 and d = g^1 = 4
    assert (wit.a, wit.d) == (2, 4)
    assert wit.witness_version == acc.version
    assert verify_nonwit(acc, wit, 5)
    assert pow(64, 2, 253) == (pow(4, 5, 253) * 4) % 253 == pow(4, 6, 253) == 48
    assert (wit.a, wit.d) in WORKED_EXAMPLE_SOLUTIONS


def test_nonwit_create_empty_accumulator(toy_acc_setup):
    secret, _n, g = toy_acc_setup
    acc = gen_acc(secret, (), g)
    wit = nonwit_create(secret, acc, 5)
    assert (wit.a, wit.d) == (1, 1)
    assert verify_nonwit(acc, wit, 5)


def test_nonwit_create_for_member_fails(toy_acc_setup):
    secret, _n, g = toy_acc_setup
    acc = gen_acc(secret, {3, 5}, g)
    with pytest.raises(ElementAccumulated):
        nonwit_create(secret, acc, 5)


def test_verify_rejects_malformed(toy_acc_setup):
    secret, _n, g = toy_acc_setup
    acc = gen_acc(secret, {3}, g)
    wit = nonwit_create(secret, acc, 5)
    assert not verify_nonwit(acc, NonMembershipWitness(7, wit.d, 0), 5)  # a >= x
    assert not verify_nonwit(acc, NonMembershipWitness(0, wit.d, 0), 5)
    assert not verify_nonwit(acc, NonMembershipWitness(wit.a, 0, 0), 5)
    assert not verify_nonwit(acc, NonMembershipWitness(wit.a, 300, 0), 5)  # d >= n


def test_verify_against_wrong_version_fails(toy_acc_setup):
    secret, _n, g = toy_acc_setup
    acc = gen_acc(secret, {3}, g)
    wit = nonwit_create(secret, acc, 5)
    moved = update_acc(acc, 7)
    assert not verify_nonwit(moved, wit, 5)


def test_nonwit_update_equals_fresh_witness(toy_acc_setup):
    secret, _n, g = toy_acc_setup
    acc = gen_acc(secret, {3}, g)
    wit = nonwit_create(secret, acc, 5)
    acc2 = update_acc(acc, 7)
    updated = nonwit_update(acc, acc2, 7, 5, wit)
    fresh = nonwit_create(secret, acc2, 5)
    assert verify_nonwit(acc2, updated, 5)
    assert verify_nonwit(acc2, fresh, 5)
    assert updated.witness_version == fresh.witness_version == acc2.version


def test_nonwit_update_chain_of_five(toy_acc_setup):
    secret, _n, g = toy_acc_setup
    acc = gen_acc(secret, (), g)
    wit = nonwit_create(secret, acc, 37)
    history = [acc]
    for x in (3, 5, 7, 11, 13):
        history.append(update_acc(history[-1], x))
        wit = nonwit_update(history[-2], history[-1], x, 37, wit)
        assert verify_nonwit(history[-1], wit, 37)


def test_nonwit_update_errors(toy_acc_setup):
    secret, _n, g = toy_acc_setup
    acc = gen_acc(secret, {3}, g)
    wit = nonwit_create(secret, acc, 5)
    acc2 = update_acc(acc, 5)
    with pytest.raises(ElementAccumulated):
        nonwit_update(acc, acc2, 5, 5, wit)  # holder just got revoked
    acc3 = update_acc(acc, 7)
    stale = NonMembershipWitness(wit.a, wit.d, 99)
    with pytest.raises(StaleWitness):
        nonwit_update(acc, acc3, 7, 5, stale)
    with pytest.raises(ValueError):
        nonwit_update(acc, acc, 7, 5, wit)  # acc_new is not a successor


def test_catch_up_gap_zero(toy_acc_setup):
    secret, _n, g = toy_acc_setup
    acc = gen_acc(secret, {3}, g)
    wit = nonwit_create(secret, acc, 5)
    history = [gen_acc(secret, (), g), acc]
    assert catch_up(history, wit, 5, 1) == wit


def test_catch_up_three_foreign_revocations(toy_acc_setup):
    secret, _n, g = toy_acc_setup
    history = [gen_acc(secret, (), g)]
    wit = nonwit_create(secret, history[0], 5)
    for x in (3, 7, 11):
        history.append(update_acc(history[-1], x))
    caught = catch_up(history, wit, 5, 0)
    assert caught.witness_version == 3
    assert verify_nonwit(history[-1], caught, 5)


def test_catch_up_gap_contains_holder(toy_acc_setup):
    secret, _n, g = toy_acc_setup
    history = [gen_acc(secret, (), g)]
    wit = nonwit_create(secret, history[0], 5)
    for x in (3, 5):
        history.append(update_acc(history[-1], x))
    with pytest.raises(ElementAccumulated):
        catch_up(history, wit, 5, 0)


def test_catch_up_stale_reference(toy_acc_setup):
    secret, _n, g = toy_acc_setup
    history = [gen_acc(secret, (), g)]
    wit = nonwit_create(secret, history[0], 5)
    with pytest.raises(StaleWitness):
        catch_up(history, wit, 5, 3)  # beyond head
    with pytest.raises(StaleWitness):
        catch_up(history, NonMembershipWitness(wit.a, wit.d, 4), 5, 0)


def test_witness_serialization_round_trip(toy_acc_setup):
    secret, _n, g = toy_acc_setup
    acc = gen_acc(secret, {3}, g)
    wit = nonwit_create(secret, acc, 5)
    decoded = NonMembershipWitness.deserialize(wit.serialize())
    assert decoded == wit
    with pytest.raises(ValueError):
        NonMembershipWitness.deserialize(wit.serialize()[:-1])
    with pytest.raises(ValueError):
        NonMembershipWitness.deserialize(b"\x00")


def test_production_size_witness(prod_acc_setup):
    secret, n, g = prod_acc_setup
    assert n.bit_length() == 2048
    acc = gen_acc(secret, (), g)
    rng = DetRng(b"prod-elements")
    uid = acc_mod.random_element(rng)
    assert int(uid).bit_length() == 128
    wit = nonwit_create(secret, acc, uid)
    assert verify_nonwit(acc, wit, uid)
    other = acc_mod.random_element(rng)
    acc2 = update_acc(acc, other)
    moved = nonwit_update(acc, acc2, other, uid, wit)
    assert verify_nonwit(acc2, moved, uid)
