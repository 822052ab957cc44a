"""Recipient entries: signing public key, self-chosen name, name signature."""

from __future__ import annotations

from dataclasses import dataclass

from .codec import ByteReader, encode_utf8, string_size, write_string
from .errors import DecodeError, InvalidName, UnsupportedSuite
from .suite import DEFAULT_SUITE, CipherSuite, check_public_key, derive_public, sign, verify_sig

FINGERPRINT_LEN = 16


@dataclass(frozen=True)
class RecipientEntry:
    public_key: bytes
    name: str
    signature: bytes

    @classmethod
    def create(cls, sk: bytes, name: str) -> RecipientEntry:
        if not name:
            raise InvalidName("recipient name must not be empty")
        sk = bytes(sk)
        return cls(derive_public(sk), name, sign(sk, encode_utf8(name)))

    def verify(self) -> bool:
        return verify_sig(self.public_key, encode_utf8(self.name), self.signature)

    @property
    def size(self) -> int:
        return len(self.public_key) + string_size(self.name) + len(self.signature)

    def to_bytes(self) -> bytes:
        return self.public_key + write_string(self.name) + self.signature

    @classmethod
    def read(cls, reader: ByteReader, suite: CipherSuite = DEFAULT_SUITE) -> RecipientEntry:
        if not suite.supports_conversion:
            # Suites without sign->kex conversion need a second public key in
            # every entry; that layout is reserved but has no suite using it.
            raise UnsupportedSuite(suite.id)
        pk = check_public_key(reader.take(suite.u))
        name = reader.string()
        signature = reader.take(suite.g)
        return cls(pk, name, signature)

    @classmethod
    def from_bytes(cls, data: bytes, suite: CipherSuite = DEFAULT_SUITE) -> RecipientEntry:
        reader = ByteReader(data)
        entry = cls.read(reader, suite)
        if reader.remaining:
            raise DecodeError(f"{reader.remaining} trailing bytes after recipient entry")
        return entry

    def fingerprint(self, suite: CipherSuite = DEFAULT_SUITE) -> str:
        return fingerprint(self.public_key, suite)


def fingerprint(public_key: bytes, suite: CipherSuite = DEFAULT_SUITE) -> str:
    """Hex of the truncated public-key hash, grouped for reading aloud."""
    raw = suite.hash(public_key)[:FINGERPRINT_LEN].hex()
    return ":".join(raw[i : i + 4] for i in range(0, len(raw), 4))
