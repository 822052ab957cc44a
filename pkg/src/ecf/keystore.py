"""Password-protected storage of an Ed25519 private key.

Layout (all integers u32le)::

    version | key type | sym. enc. type | KDF type | salt[16] | nonce[c]
    | KDF config (iterations, memory KiB, parallelism) | encrypted key

Everything before the encrypted key is passed to the AEAD as associated
data, so a modified header fails decryption just like a wrong password.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from cryptography.hazmat.primitives.kdf.argon2 import Argon2id

from .codec import ByteReader
from .errors import (
    AeadFailure,
    DecodeError,
    InvalidKdfConfig,
    KeystoreAuthenticationFailed,
    KeystoreError,
    UnsupportedKdf,
    UnsupportedKeyType,
    UnsupportedVersion,
)
from .recipient import RecipientEntry
from .suite import (
    AEGIS_256,
    AES_256_GCM,
    SEED_LEN,
    Aead,
    RandomSource,
    default_random,
    derive_public,
    gen_sign,
)

KEYSTORE_VERSION = 0x00010000
KEY_TYPE_ED25519 = 0x00000001
SYM_AES_256_GCM = 0x00000001
SYM_AEGIS_256 = 0x00000002
KDF_ARGON2ID = 0x00000001
SALT_LEN = 16

SYM_ENC_TYPES: dict[int, Aead] = {SYM_AES_256_GCM: AES_256_GCM, SYM_AEGIS_256: AEGIS_256}

# Upper bounds keep a corrupted config from requesting absurd work.
MAX_ITERATIONS = 1 << 10
MAX_MEMORY_KIB = 1 << 22
MAX_PARALLELISM = 1 << 8

_FIXED = struct.Struct("<IIII")


@dataclass(frozen=True)
class KdfConfig:
    """Argon2id cost parameters."""

    iterations: int = 3
    memory_kib: int = 65536
    parallelism: int = 4

    SIZE = 12

    def validate(self) -> KdfConfig:
        if not 1 <= self.iterations <= MAX_ITERATIONS:
            raise InvalidKdfConfig(f"iterations out of range: {self.iterations}")
        if not 1 <= self.parallelism <= MAX_PARALLELISM:
            raise InvalidKdfConfig(f"parallelism out of range: {self.parallelism}")
        if not 8 * self.parallelism <= self.memory_kib <= MAX_MEMORY_KIB:
            raise InvalidKdfConfig(f"memory out of range: {self.memory_kib} KiB")
        return self

    def to_bytes(self) -> bytes:
        return struct.pack("<III", self.iterations, self.memory_kib, self.parallelism)

    @classmethod
    def read(cls, reader: ByteReader) -> KdfConfig:
        return cls(reader.u32(), reader.u32(), reader.u32())

    def derive(self, password: str, salt: bytes, length: int) -> bytes:
        self.validate()
        kdf = Argon2id(
            salt=salt,
            length=length,
            iterations=self.iterations,
            lanes=self.parallelism,
            memory_cost=self.memory_kib,
        )
        return kdf.derive(password.encode("utf-8"))


DEFAULT_KDF = KdfConfig()


class SecretKey:
    """Mutable holder for private key bytes that can be zeroed.

    ``bytes(key)`` yields a copy for the crypto layer; Python cannot
    guarantee that copy is wiped, so only the holder's own buffer is.
    """

    __slots__ = ("_buf", "_wiped")

    def __init__(self, data: bytes) -> None:
        self._buf = bytearray(data)
        self._wiped = False

    def __bytes__(self) -> bytes:
        if self._wiped:
            raise KeystoreError("secret key has been wiped")
        return bytes(self._buf)

    def __len__(self) -> int:
        return len(self._buf)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, SecretKey):
            return self._buf == other._buf
        if isinstance(other, (bytes, bytearray)):
            return self._buf == other
        return NotImplemented

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return "SecretKey(<redacted>)"

    def public_key(self) -> bytes:
        return derive_public(bytes(self))

    def wipe(self) -> None:
        self._buf[:] = bytes(len(self._buf))
        self._wiped = True

    def __enter__(self) -> SecretKey:
        return self

    def __exit__(self, *exc: object) -> None:
        self.wipe()

    def __del__(self) -> None:
        self.wipe()


@dataclass(frozen=True)
class KeystoreFile:
    version: int
    key_type: int
    sym_enc_type: int
    kdf_type: int
    salt: bytes
    nonce: bytes
    kdf_config: KdfConfig
    encrypted_private_key: bytes

    def header_bytes(self) -> bytes:
        return (
            _FIXED.pack(self.version, self.key_type, self.sym_enc_type, self.kdf_type)
            + self.salt
            + self.nonce
            + self.kdf_config.to_bytes()
        )

    def to_bytes(self) -> bytes:
        return self.header_bytes() + self.encrypted_private_key

    @classmethod
    def from_bytes(cls, data: bytes) -> KeystoreFile:
        reader = ByteReader(data)
        try:
            version, key_type, sym_enc_type, kdf_type = (reader.u32() for _ in range(4))
            if version != KEYSTORE_VERSION:
                raise UnsupportedVersion(f"keystore version 0x{version:08X}")
            if key_type != KEY_TYPE_ED25519:
                raise UnsupportedKeyType(f"key type 0x{key_type:08X}")
            if kdf_type != KDF_ARGON2ID:
                raise UnsupportedKdf(f"KDF type 0x{kdf_type:08X}")
            aead = SYM_ENC_TYPES.get(sym_enc_type)
            if aead is None:
                raise UnsupportedKeyType(f"symmetric encryption type 0x{sym_enc_type:08X}")
            salt = reader.take(SALT_LEN)
            nonce = reader.take(aead.nonce_len)
            config = KdfConfig.read(reader)
            encrypted = reader.rest()
        except DecodeError as exc:
            raise KeystoreError(f"malformed keystore: {exc}") from None
        if len(encrypted) != SEED_LEN + aead.tag_len:
            raise KeystoreError(f"encrypted key has {len(encrypted)} bytes")
        return cls(version, key_type, sym_enc_type, kdf_type, salt, nonce, config, encrypted)

    @property
    def aead(self) -> Aead:
        return SYM_ENC_TYPES[self.sym_enc_type]


def generate_keypair(rng: RandomSource = default_random) -> tuple[SecretKey, bytes]:
    sk, pk = gen_sign(rng)
    return SecretKey(sk), pk


def save_key(
    sk: bytes | SecretKey,
    password: str,
    kdf_config: KdfConfig = DEFAULT_KDF,
    *,
    sym_enc_type: int = SYM_AES_256_GCM,
    rng: RandomSource = default_random,
) -> bytes:
    if not password:
        raise ValueError("password must not be empty")
    raw = bytes(sk)
    if len(raw) != SEED_LEN:
        raise ValueError(f"private key must be {SEED_LEN} bytes")
    aead = SYM_ENC_TYPES[sym_enc_type]
    kdf_config.validate()
    unsealed = KeystoreFile(
        KEYSTORE_VERSION,
        KEY_TYPE_ED25519,
        sym_enc_type,
        KDF_ARGON2ID,
        rng(SALT_LEN),
        rng(aead.nonce_len),
        kdf_config,
        b"",
    )
    key = kdf_config.derive(password, unsealed.salt, aead.key_len)
    ad = unsealed.header_bytes()
    sealed = aead.encrypt(key, unsealed.nonce, raw, ad)
    return ad + sealed


def load_key(data: bytes, password: str) -> SecretKey:
    store = KeystoreFile.from_bytes(data)
    aead = store.aead
    key = store.kdf_config.derive(password, store.salt, aead.key_len)
    try:
        raw = aead.decrypt(key, store.nonce, store.encrypted_private_key, store.header_bytes())
    except AeadFailure:
        raise KeystoreAuthenticationFailed() from None
    return SecretKey(raw)


def export_recipient_entry(sk: bytes | SecretKey, name: str) -> RecipientEntry:
    return RecipientEntry.create(bytes(sk), name)


def describe(data: bytes) -> dict[str, object]:
    """Public keystore fields, for diagnostics."""
    store = KeystoreFile.from_bytes(data)
    return {
        "version": store.version,
        "key_type": store.key_type,
        "sym_enc_type": store.sym_enc_type,
        "kdf_type": store.kdf_type,
        "kdf_config": store.kdf_config,
    }
