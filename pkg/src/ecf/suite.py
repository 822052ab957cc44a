"""Cipher suites: X25519 + Ed25519 with AES-256-GCM or AEGIS-256, SHA-256 or SHA-512.

All four suites share the curve layer. Signing keys are Ed25519 seeds
(32 bytes); key exchange keys are obtained from them with the standard
Edwards-to-Montgomery conversion, so one stored key serves every suite.

Hashes go through libsodium's portable SHA-2 rather than :mod:`hashlib`
so that relative suite performance matches the reference toolchain.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable

import nacl.bindings as sodium
from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from nacl._sodium import ffi as _ffi, lib as _lib
from nacl.exceptions import BadSignatureError, CryptoError, RuntimeError as SodiumRuntimeError

from .errors import AeadFailure, InvalidKey, UnsupportedSuite

RandomSource = Callable[[int], bytes]
"""Callable returning ``n`` random bytes; ``os.urandom`` by default."""

default_random: RandomSource = os.urandom

SEED_LEN = 32
PUBLIC_KEY_LEN = 32
SIGNATURE_LEN = 64
X25519_LEN = 32

_P = 2**255 - 19


# -- curve layer ---------------------------------------------------------
def _check_seed(sk: bytes) -> bytes:
    sk = bytes(sk)
    if len(sk) != SEED_LEN:
        raise InvalidKey(f"Ed25519 private key must be {SEED_LEN} bytes, got {len(sk)}")
    return sk


def check_public_key(pk: bytes) -> bytes:
    """Reject wrong-length and non-canonically encoded Ed25519 points."""
    pk = bytes(pk)
    if len(pk) != PUBLIC_KEY_LEN:
        raise InvalidKey(f"Ed25519 public key must be {PUBLIC_KEY_LEN} bytes, got {len(pk)}")
    y = int.from_bytes(pk, "little") & ((1 << 255) - 1)
    if y >= _P:
        raise InvalidKey("non-canonical Ed25519 public key")
    return pk


def gen_sign(rng: RandomSource = default_random) -> tuple[bytes, bytes]:
    sk = rng(SEED_LEN)
    return sk, derive_public(sk)


def derive_public(sk: bytes) -> bytes:
    """Ed25519 public key for a 32-byte seed."""
    pk, _ = sodium.crypto_sign_seed_keypair(_check_seed(sk))
    return pk


def gen_kex(rng: RandomSource = default_random) -> tuple[bytes, bytes]:
    sk = rng(X25519_LEN)
    return sk, derive_kex_public(sk)


def derive_kex_public(sk_x: bytes) -> bytes:
    if len(sk_x) != X25519_LEN:
        raise InvalidKey("X25519 private key must be 32 bytes")
    return sodium.crypto_scalarmult_base(bytes(sk_x))


def convert_private(sk: bytes) -> bytes:
    """X25519 private scalar for an Ed25519 seed."""
    seed = _check_seed(sk)
    _, expanded = sodium.crypto_sign_seed_keypair(seed)
    return sodium.crypto_sign_ed25519_sk_to_curve25519(expanded)


def convert_public(pk: bytes) -> bytes:
    """X25519 public key for an Ed25519 public key."""
    pk = check_public_key(pk)
    try:
        return sodium.crypto_sign_ed25519_pk_to_curve25519(pk)
    except (CryptoError, SodiumRuntimeError) as exc:
        raise InvalidKey(f"Ed25519 public key cannot be converted: {exc}") from None


def convert_sign_to_kex(key: bytes, kind: str) -> bytes:
    if kind == "private":
        return convert_private(key)
    if kind == "public":
        return convert_public(key)
    raise ValueError(f"kind must be 'private' or 'public', not {kind!r}")


def kex(sk_x: bytes, pk_x: bytes) -> bytes:
    if len(sk_x) != X25519_LEN or len(pk_x) != X25519_LEN:
        raise InvalidKey("X25519 keys must be 32 bytes")
    try:
        return sodium.crypto_scalarmult(bytes(sk_x), bytes(pk_x))
    except (CryptoError, SodiumRuntimeError) as exc:
        # libsodium refuses low-order points (all-zero shared secret)
        raise InvalidKey(f"key exchange failed: {exc}") from None


def sign(sk: bytes, message: bytes) -> bytes:
    seed = _check_seed(sk)
    _, expanded = sodium.crypto_sign_seed_keypair(seed)
    return sodium.crypto_sign(bytes(message), expanded)[:SIGNATURE_LEN]


def verify_sig(pk: bytes, message: bytes, signature: bytes) -> bool:
    if len(pk) != PUBLIC_KEY_LEN or len(signature) != SIGNATURE_LEN:
        return False
    try:
        sodium.crypto_sign_open(bytes(signature) + bytes(message), bytes(pk))
    except (BadSignatureError, CryptoError, SodiumRuntimeError):
        return False
    return True


def truncate_hash(digest: bytes, j: int) -> bytes:
    if not 0 <= j <= len(digest):
        raise ValueError(f"cannot truncate {len(digest)}-byte digest to {j} bytes")
    return digest[:j]


def xor_bytes(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise ValueError("xor operands differ in length")
    return (int.from_bytes(a, "little") ^ int.from_bytes(b, "little")).to_bytes(len(a), "little")


# -- symmetric layer -----------------------------------------------------
def _aes256gcm_encrypt(key: bytes, nonce: bytes, plaintext: bytes, ad: bytes) -> bytes:
    return AESGCM(key).encrypt(nonce, plaintext, ad or None)


def _aes256gcm_decrypt(key: bytes, nonce: bytes, ciphertext: bytes, ad: bytes) -> bytes:
    try:
        return AESGCM(key).decrypt(nonce, ciphertext, ad or None)
    except InvalidTag:
        raise AeadFailure("AES-256-GCM authentication failed") from None


_AEGIS_TAG = sodium.crypto_aead_aegis256_ABYTES


def _aegis256_encrypt(key: bytes, nonce: bytes, plaintext: bytes, ad: bytes) -> bytes:
    src = _ffi.from_buffer(plaintext)
    out = _ffi.new("unsigned char[]", len(src) + _AEGIS_TAG)
    out_len = _ffi.new("unsigned long long *")
    rc = _lib.crypto_aead_aegis256_encrypt(
        out, out_len, src, len(src), ad, len(ad), _ffi.NULL, nonce, key
    )
    if rc != 0:
        raise SodiumRuntimeError("AEGIS-256 encryption failed")
    return bytes(_ffi.buffer(out, out_len[0]))


def _aegis256_decrypt(key: bytes, nonce: bytes, ciphertext: bytes, ad: bytes) -> bytes:
    src = _ffi.from_buffer(ciphertext)
    out = _ffi.new("unsigned char[]", max(len(src) - _AEGIS_TAG, 1))
    out_len = _ffi.new("unsigned long long *")
    rc = _lib.crypto_aead_aegis256_decrypt(
        out, out_len, _ffi.NULL, src, len(src), ad, len(ad), nonce, key
    )
    if rc != 0:
        raise AeadFailure("AEGIS-256 authentication failed")
    return bytes(_ffi.buffer(out, out_len[0]))


@dataclass(frozen=True)
class Aead:
    name: str
    key_len: int
    nonce_len: int
    tag_len: int
    _encrypt: Callable[[bytes, bytes, bytes, bytes], bytes] = field(repr=False)
    _decrypt: Callable[[bytes, bytes, bytes, bytes], bytes] = field(repr=False)

    def _check(self, key: bytes, nonce: bytes) -> None:
        if len(key) != self.key_len:
            raise InvalidKey(f"{self.name} key must be {self.key_len} bytes")
        if len(nonce) != self.nonce_len:
            raise ValueError(f"{self.name} nonce must be {self.nonce_len} bytes")

    def encrypt(self, key: bytes, nonce: bytes, plaintext: bytes, ad: bytes = b"") -> bytes:
        self._check(key, nonce)
        return self._encrypt(bytes(key), bytes(nonce), plaintext, bytes(ad))

    def decrypt(self, key: bytes, nonce: bytes, ciphertext: bytes, ad: bytes = b"") -> bytes:
        self._check(key, nonce)
        if len(ciphertext) < self.tag_len:
            raise AeadFailure("ciphertext shorter than the authentication tag")
        return self._decrypt(bytes(key), bytes(nonce), ciphertext, bytes(ad))


AES_256_GCM = Aead("AES-256-GCM", 32, 12, 16, _aes256gcm_encrypt, _aes256gcm_decrypt)
AEGIS_256 = Aead(
    "AEGIS-256",
    sodium.crypto_aead_aegis256_KEYBYTES,
    sodium.crypto_aead_aegis256_NPUBBYTES,
    sodium.crypto_aead_aegis256_ABYTES,
    _aegis256_encrypt,
    _aegis256_decrypt,
)

def _sodium_hash(fn, size: int) -> Callable[[bytes], bytes]:
    # Direct call so memoryview slices are hashed without a copy; the
    # public binding only takes bytes.
    def digest(data) -> bytes:
        src = _ffi.from_buffer(data)
        out = _ffi.new("unsigned char[]", size)
        if fn(out, src, len(src)) != 0:
            raise SodiumRuntimeError("hash failed")
        return bytes(_ffi.buffer(out, size))

    return digest


_HASHES: dict[str, tuple[int, Callable[[bytes], bytes]]] = {
    "SHA-256": (32, _sodium_hash(_lib.crypto_hash_sha256, 32)),
    "SHA-512": (64, _sodium_hash(_lib.crypto_hash_sha512, 64)),
}


# -- suites --------------------------------------------------------------
@dataclass(frozen=True)
class CipherSuite:
    """Bound algorithm set plus the length parameters of the file layout.

    ``a`` ephemeral KEX public key, ``c`` nonce, ``d`` digest, ``g``
    signature, ``u`` public key, ``v`` private key, ``y`` symmetric key.
    """

    id: int
    label: str
    aead: Aead
    hash_name: str
    supports_conversion: bool = True
    a: int = X25519_LEN
    g: int = SIGNATURE_LEN
    u: int = PUBLIC_KEY_LEN
    v: int = SEED_LEN

    @property
    def c(self) -> int:
        return self.aead.nonce_len

    @property
    def d(self) -> int:
        return _HASHES[self.hash_name][0]

    @property
    def y(self) -> int:
        return self.aead.key_len

    @property
    def aead_overhead(self) -> int:
        return self.aead.tag_len

    @property
    def name(self) -> str:
        return f"X25519-Ed25519-{self.aead.name}-{self.hash_name}"

    def hash(self, data: bytes) -> bytes:
        return _HASHES[self.hash_name][1](data)

    def aead_encrypt(self, key: bytes, nonce: bytes, plaintext: bytes, ad: bytes = b"") -> bytes:
        return self.aead.encrypt(key, nonce, plaintext, ad)

    def aead_decrypt(self, key: bytes, nonce: bytes, ciphertext: bytes, ad: bytes = b"") -> bytes:
        return self.aead.decrypt(key, nonce, ciphertext, ad)

    # The curve layer is identical for all implemented suites; these are
    # exposed on the suite so container code is written against one object.
    gen_sign = staticmethod(gen_sign)
    gen_kex = staticmethod(gen_kex)
    derive_public = staticmethod(derive_public)
    derive_kex_public = staticmethod(derive_kex_public)
    convert_sign_to_kex = staticmethod(convert_sign_to_kex)
    kex = staticmethod(kex)
    sign = staticmethod(sign)
    verify_sig = staticmethod(verify_sig)


SUITE_I = CipherSuite(0x01010101, "I", AES_256_GCM, "SHA-256")
SUITE_II = CipherSuite(0x01010102, "II", AES_256_GCM, "SHA-512")
SUITE_III = CipherSuite(0x01010201, "III", AEGIS_256, "SHA-256")
SUITE_IV = CipherSuite(0x01010202, "IV", AEGIS_256, "SHA-512")

SUITES: dict[int, CipherSuite] = {s.id: s for s in (SUITE_I, SUITE_II, SUITE_III, SUITE_IV)}
DEFAULT_SUITE = SUITE_II


def lookup_suite(suite_id: int) -> CipherSuite:
    try:
        return SUITES[suite_id]
    except KeyError:
        raise UnsupportedSuite(suite_id) from None


def parse_suite_arg(text: str) -> CipherSuite:
    """Accept ``0x01010102``, a decimal id, or a roman numeral label."""
    label = text.strip().upper()
    for suite in SUITES.values():
        if suite.label == label:
            return suite
    try:
        suite_id = int(text, 0)
    except ValueError:
        raise ValueError(f"unknown cipher suite {text!r}") from None
    return lookup_suite(suite_id)
