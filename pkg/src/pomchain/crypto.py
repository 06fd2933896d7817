"""Hash and signature primitives.

Hashing is SHA-256 read as a big-endian integer and truncated to the leading
``bits`` bits of the digest, so the maximum hash value is ``2**bits - 1``.
The production profile keeps all 256 bits; test profiles shrink the range so
that real nonce search finishes in milliseconds.

Signatures are Ed25519 over raw 32-byte keys. The public key is the account.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import (
    Encoding,
    NoEncryption,
    PrivateFormat,
    PublicFormat,
)

from .errors import InvalidKeyError, ParameterError

DIGEST_BITS = 256
MIN_TEST_BITS = 8
KEY_SIZE = 32

Account = bytes
Signature = bytes


@dataclass(frozen=True)
class HashProfile:
    bits: int = DIGEST_BITS

    def __post_init__(self) -> None:
        if not MIN_TEST_BITS <= self.bits <= DIGEST_BITS:
            raise ParameterError(
                f"hash width must be in [{MIN_TEST_BITS}, {DIGEST_BITS}], got {self.bits}"
            )

    @property
    def max_value(self) -> int:
        return (1 << self.bits) - 1

    @property
    def name(self) -> str:
        return "production" if self.bits == DIGEST_BITS else f"test-{self.bits}"

    def hash(self, data: bytes) -> int:
        digest = hashlib.sha256(data).digest()
        return int.from_bytes(digest, "big") >> (DIGEST_BITS - self.bits)


PRODUCTION = HashProfile(DIGEST_BITS)


def small_profile(bits: int = 16) -> HashProfile:
    """Reduced-width profile; hashes are the digest's leading ``bits`` bits."""
    return HashProfile(bits)


def profile_for(name: str, bits: int | None = None) -> HashProfile:
    """Resolve a CLI-style profile name (``production`` or ``test``)."""
    if name == "production":
        if bits not in (None, DIGEST_BITS):
            raise ParameterError("production profile is fixed at 256 bits")
        return PRODUCTION
    if name == "test":
        return HashProfile(16 if bits is None else bits)
    raise ParameterError(f"unknown hash profile {name!r}")


def digest_hex(data: bytes) -> str:
    """Full SHA-256 hex digest, used for file integrity rather than mining."""
    return hashlib.sha256(data).hexdigest()


@dataclass(frozen=True)
class KeyPair:
    public: Account
    secret: bytes

    @classmethod
    def generate(cls) -> KeyPair:
        return cls.from_secret(
            Ed25519PrivateKey.generate().private_bytes(
                Encoding.Raw, PrivateFormat.Raw, NoEncryption()
            )
        )

    @classmethod
    def from_secret(cls, secret: bytes) -> KeyPair:
        return cls(public=public_key(secret), secret=bytes(secret))

    @classmethod
    def from_seed(cls, seed: bytes | str) -> KeyPair:
        """Deterministic key pair; the secret is SHA-256 of the seed."""
        if isinstance(seed, str):
            seed = seed.encode()
        return cls.from_secret(hashlib.sha256(seed).digest())


def _private_key(secret: bytes) -> Ed25519PrivateKey:
    if not isinstance(secret, (bytes, bytearray)) or len(secret) != KEY_SIZE:
        raise InvalidKeyError(f"secret key must be {KEY_SIZE} raw bytes")
    return Ed25519PrivateKey.from_private_bytes(bytes(secret))


def public_key(secret: bytes) -> Account:
    return _private_key(secret).public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)


def sign(secret: bytes, message: bytes) -> Signature:
    return _private_key(secret).sign(bytes(message))


def verify(public: Account, message: bytes, sig: Signature) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(bytes(public)).verify(bytes(sig), bytes(message))
    except (InvalidSignature, ValueError, TypeError):
        return False
    return True
