import pytest
from hypothesis import given, settings, strategies as st

from unihand.errors import AuthFailure, InvalidElement
from unihand.groupcrypto import (
    KDF_LABEL_ENC,
    P256Group,
    ToyGroup,
    ae_decrypt,
    ae_encrypt,
    dh_keygen,
    dh_shared,
    group_by_name,
    kdf,
)
from unihand.rng import DetRng


def test_toy_group_hand_computation(toy_group):
    # order-11 subgroup of Z_23*, g=2: peer = 2^5, exponent 3,
    # so the shared value is 2^15 = 2^(15 mod 11) = 2^4 = 16
    peer = toy_group.encode(pow(2, 5, 23))
    shared = dh_shared(toy_group, 3, peer)
    assert toy_group.decode(shared) == 16


def test_keygen_recomputable(toy_group, rng):
    x, share = dh_keygen(toy_group, rng)
    assert share == toy_group.power(x)


def test_keygen_forced_unit_scalar_gives_generator(toy_group, p256, rng):
    _, share = dh_keygen(toy_group, rng, scalar=1)
    assert toy_group.decode(share) == toy_group.g
    _, p_share = dh_keygen(p256, rng, scalar=1)
    assert p_share == p256.power(1)


def test_distinct_seeds_distinct_scalars(p256):
    x1, _ = dh_keygen(p256, DetRng(b"seed-one"))
    x2, _ = dh_keygen(p256, DetRng(b"seed-two"))
    assert x1 != x2


@given(st.integers(1, 10), st.integers(1, 10))
def test_dh_commutes_toy(x, y):
    group = ToyGroup()
    assert dh_shared(group, x, group.power(y)) == dh_shared(group, y, group.power(x))


def test_dh_commutes_p256(p256, rng):
    for _ in range(3):
        x, gx = dh_keygen(p256, rng)
        y, gy = dh_keygen(p256, rng)
        assert dh_shared(p256, x, gy) == dh_shared(p256, y, gx)


def test_identity_and_garbage_rejected(toy_group, p256, rng):
    with pytest.raises(InvalidElement):
        dh_shared(toy_group, 3, toy_group.encode(1))  # identity
    with pytest.raises(InvalidElement):
        dh_shared(toy_group, 3, toy_group.encode(5))  # not in the subgroup
    with pytest.raises(InvalidElement):
        dh_shared(p256, 7, b"\x04" + b"\x00" * 64)  # not on the curve
    with pytest.raises(InvalidElement):
        dh_shared(p256, 7, b"")


def test_scalar_range_enforced(toy_group, rng):
    with pytest.raises(ValueError):
        dh_keygen(toy_group, rng, scalar=0)
    with pytest.raises(ValueError):
        dh_keygen(toy_group, rng, scalar=toy_group.q)


def test_group_by_name():
    assert isinstance(group_by_name("toy"), ToyGroup)
    assert isinstance(group_by_name("prod"), P256Group)
    with pytest.raises(ValueError):
        group_by_name("nope")


# ---- KDF -------------------------------------------------------------------

def test_kdf_deterministic_and_separated():
    out1 = kdf(b"shared-secret-bytes")
    out2 = kdf(b"shared-secret-bytes")
    assert out1 == out2
    assert out1.session_key != out1.enc_key
    assert len(out1.session_key) == len(out1.enc_key) == 32


def test_kdf_single_bit_avalanche():
    base = bytearray(b"\x00" * 32)
    ref = kdf(bytes(base))
    for bit in (0, 77, 255):
        flipped = bytearray(base)
        flipped[bit // 8] ^= 1 << (bit % 8)
        out = kdf(bytes(flipped))
        assert out.session_key != ref.session_key
        assert out.enc_key != ref.enc_key


def test_kdf_keys_never_equal_randomised():
    rng = DetRng(b"kdf-pairs")
    for _ in range(200):
        out = kdf(rng.randbytes(32))
        assert out.session_key != out.enc_key


# ---- AE envelope -------------------------------------------------------------

def test_ae_round_trip(rng):
    key = rng.randbytes(32)
    blob = ae_encrypt(key, b"attach", rng=rng)
    assert ae_decrypt(key, blob) == b"attach"
    assert len(blob) == 12 + len(b"attach") + 16  # nonce || body || tag


def test_ae_layout_with_explicit_nonce():
    key = b"\x11" * 32
    blob = ae_encrypt(key, b"payload", nonce=b"\xaa" * 12)
    assert blob[:12] == b"\xaa" * 12


def test_ae_every_bit_flip_fails(rng):
    key = rng.randbytes(32)
    blob = ae_encrypt(key, b"xy", rng=rng)
    for bit in range(len(blob) * 8):
        corrupt = bytearray(blob)
        corrupt[bit // 8] ^= 1 << (bit % 8)
        with pytest.raises(AuthFailure):
            ae_decrypt(key, bytes(corrupt))


def test_ae_wrong_key_and_short_input(rng):
    key, other = rng.randbytes(32), rng.randbytes(32)
    blob = ae_encrypt(key, b"secret", rng=rng)
    with pytest.raises(AuthFailure):
        ae_decrypt(other, blob)
    with pytest.raises(AuthFailure):
        ae_decrypt(key, blob[:20])
    with pytest.raises(ValueError):
        ae_encrypt(b"short-key", b"x", nonce=b"\x00" * 12)


@settings(max_examples=50)
@given(st.binary(min_size=0, max_size=300))
def test_ae_round_trip_property(message):
    rng = DetRng(b"prop" + message[:8])
    key = rng.randbytes(32)
    assert ae_decrypt(key, ae_encrypt(key, message, rng=rng)) == message


def test_ae_thousand_pairs_round_trip_and_tamper():
    """1000 random (key, message) pairs: round trip holds and a single-bit
    corruption (random position per pair) always fails authentication."""
    rng = DetRng(b"ae-th")
    for _ in range(1000):
        key = rng.randbytes(32)
        message = rng.randbytes(1 + rng.randbelow(64))
        blob = ae_encrypt(key, message, rng=rng)
        assert ae_decrypt(key, blob) == message
        bit = rng.randbelow(len(blob) * 8)
        corrupt = bytearray(blob)
        corrupt[bit // 8] ^= 1 << (bit % 8)
        with pytest.raises(AuthFailure):
            ae_decrypt(key, bytes(corrupt))


def test_kdf_labels_are_distinct_constants():
    assert KDF_LABEL_ENC != b"unihand/sk"
