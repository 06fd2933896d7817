import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pomchain.crypto import (
    PRODUCTION,
    HashProfile,
    KeyPair,
    profile_for,
    public_key,
    sign,
    small_profile,
    verify,
)
from pomchain.errors import InvalidKeyError, ParameterError


def test_hash_is_deterministic():
    assert PRODUCTION.hash(b"abc") == PRODUCTION.hash(b"abc")


def test_production_hash_is_sha256_big_endian():
    # sha256("abc") is the standard test vector
    expected = int("ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad", 16)
    assert PRODUCTION.hash(b"abc") == expected


def test_small_profile_takes_leading_bits():
    full = PRODUCTION.hash(b"abc")
    assert small_profile(16).hash(b"abc") == full >> 240 == 0xBA78
    assert small_profile(8).hash(b"abc") == 0xBA


def test_max_value():
    assert PRODUCTION.max_value == 2**256 - 1
    assert small_profile().max_value == 65535


@pytest.mark.parametrize("bits", [7, 0, 257])
def test_profile_width_bounds(bits):
    with pytest.raises(ParameterError):
        HashProfile(bits)


def test_profile_for():
    assert profile_for("production") == PRODUCTION
    assert profile_for("test").bits == 16
    assert profile_for("test", 20).bits == 20
    with pytest.raises(ParameterError):
        profile_for("fast")


def test_small_profile_mean_is_half_range():
    # 1e5 uniform draws: sd of the mean is M/sqrt(12e5) ~ 0.09% of M
    prof = small_profile(16)
    values = np.array([prof.hash(i.to_bytes(8, "big")) for i in range(100_000)], dtype=float)
    assert abs(values.mean() / (prof.max_value / 2) - 1) < 0.01
    assert values.min() >= 0 and values.max() <= prof.max_value


@given(st.binary(max_size=200), st.integers(min_value=8, max_value=256))
def test_hash_range(data, bits):
    prof = HashProfile(bits)
    assert 0 <= prof.hash(data) <= prof.max_value


def test_sign_verify():
    kp = KeyPair.generate()
    sig = sign(kp.secret, b"message")
    assert verify(kp.public, b"message", sig)
    assert not verify(KeyPair.generate().public, b"message", sig)
    assert not verify(kp.public, b"messagf", sig)


def test_verify_never_raises_on_garbage():
    assert not verify(b"short", b"m", b"sig")
    assert not verify(os.urandom(32), b"m", os.urandom(64))


@pytest.mark.parametrize("secret", [b"", b"x" * 31, b"x" * 33])
def test_malformed_secret(secret):
    with pytest.raises(InvalidKeyError):
        sign(secret, b"m")


def test_seeded_keys_are_stable():
    a, b = KeyPair.from_seed("alice"), KeyPair.from_seed("alice")
    assert a == b
    assert a.public == public_key(a.secret)
    assert KeyPair.from_seed("bob").public != a.public


@settings(max_examples=25, deadline=None)
@given(st.binary(min_size=32, max_size=32), st.binary(max_size=100))
def test_round_trip(secret, message):
    kp = KeyPair.from_secret(secret)
    assert verify(kp.public, message, sign(kp.secret, message))
