"""On-disk layout of an encrypted container file.

    public header H | encrypted private body B | file hash (d bytes)

The header is a fixed 36 + c byte prefix followed by ``m`` decrypt blocks
of 16 + a + y bytes each. The private body, once decrypted, holds the
content type, the public header hash, the ``n`` recipient entries, the
content and a hash over everything before it.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..codec import U32_MAX, ByteReader, ByteWriter, read_u32le, string_size
from ..errors import (
    BadMagicVersion,
    ContentTooLarge,
    DecodeError,
    InvalidKey,
    LengthMismatch,
    MalformedBody,
    TruncatedFile,
    UnsupportedSuite,
)
from ..recipient import RecipientEntry
from ..suite import CipherSuite, lookup_suite

CONTAINER_VERSION = 0x00010000
PRIVATE_LENGTH_PLACEHOLDER = 0xECFFC0DE
CONTENT_TYPE_BLOB = 0x00000001
SALT_LEN = 16
ID_TAG_LEN = 16
FIXED_HEADER_LEN = 36  # five u32 fields and the salt


def block_size(suite: CipherSuite) -> int:
    return ID_TAG_LEN + suite.a + suite.y


def first_block_offset(suite: CipherSuite) -> int:
    return FIXED_HEADER_LEN + suite.c


def block_offset(suite: CipherSuite, i: int) -> int:
    """Byte offset of decrypt block ``i`` from the start of the file."""
    return i * block_size(suite) + first_block_offset(suite)


def header_length(suite: CipherSuite, m: int) -> int:
    return block_offset(suite, m)


def private_overhead(suite: CipherSuite, names: list[str]) -> int:
    """Plaintext body length minus content length.

    ``12 + 2d + n(u + g) + sum(|Name_i|)`` where ``|Name_i|`` is the size
    of the encoded string field, length prefix included.
    """
    return 12 + 2 * suite.d + len(names) * (suite.u + suite.g) + sum(string_size(s) for s in names)


@dataclass(frozen=True)
class DecryptBlock:
    id_tag: bytes
    key_agreement_info: bytes
    sym_pre_key_1: bytes

    def to_bytes(self) -> bytes:
        return self.id_tag + self.key_agreement_info + self.sym_pre_key_1

    @classmethod
    def read(cls, reader: ByteReader, suite: CipherSuite) -> DecryptBlock:
        return cls(reader.take(ID_TAG_LEN), reader.take(suite.a), reader.take(suite.y))


@dataclass(frozen=True)
class PublicHeader:
    suite: CipherSuite
    private_length: int
    salt: bytes
    nonce: bytes
    dblocks: tuple[DecryptBlock, ...]
    version: int = CONTAINER_VERSION

    @property
    def recipient_count(self) -> int:
        return len(self.dblocks)

    m = recipient_count

    @property
    def public_length(self) -> int:
        return header_length(self.suite, len(self.dblocks))

    h = public_length

    def to_bytes(self, private_length: int | None = None) -> bytes:
        b = self.private_length if private_length is None else private_length
        w = ByteWriter()
        w.u32(self.version).u32(self.suite.id).u32(self.public_length).u32(b)
        w.u32(len(self.dblocks)).raw(self.salt).raw(self.nonce)
        for block in self.dblocks:
            w.raw(block.to_bytes())
        return w.getvalue()

    def hashable_bytes(self) -> bytes:
        """Header bytes with the private length replaced by the placeholder."""
        return self.to_bytes(PRIVATE_LENGTH_PLACEHOLDER)

    @classmethod
    def read(cls, data: bytes) -> PublicHeader:
        reader = ByteReader(data)
        try:
            version = reader.u32()
            if version != CONTAINER_VERSION:
                raise BadMagicVersion(f"container version 0x{version:08X}")
            suite = lookup_suite(reader.u32())
            h, b, m = reader.u32(), reader.u32(), reader.u32()
        except DecodeError as exc:
            if isinstance(exc, BadMagicVersion):
                raise
            raise TruncatedFile("file shorter than the fixed header") from None
        expected = header_length(suite, m)
        if h != expected:
            raise LengthMismatch(f"public length {h} but {m} blocks need {expected}")
        if len(data) < h:
            raise TruncatedFile(f"header declares {h} bytes, file has {len(data)}")
        salt = reader.take(SALT_LEN)
        nonce = reader.take(suite.c)
        blocks = tuple(DecryptBlock.read(reader, suite) for _ in range(m))
        if reader.cursor != h:
            raise LengthMismatch("header blocks do not end at the public length")
        return cls(suite, b, salt, nonce, blocks, version)


def peek_suite(data: bytes) -> CipherSuite:
    """Version check and suite lookup from the first eight bytes."""
    if len(data) < 8:
        raise TruncatedFile("file shorter than the fixed header")
    version = read_u32le(data, 0)
    if version != CONTAINER_VERSION:
        raise BadMagicVersion(f"container version 0x{version:08X}")
    return lookup_suite(read_u32le(data, 4))


@dataclass(frozen=True)
class Container:
    header: PublicHeader
    encrypted_body: bytes
    file_hash: bytes

    @property
    def suite(self) -> CipherSuite:
        return self.header.suite

    def header_bytes(self) -> bytes:
        return self.header.to_bytes()

    def to_bytes(self) -> bytes:
        return b"".join((self.header.to_bytes(), self.encrypted_body, self.file_hash))

    serialize = to_bytes

    def __len__(self) -> int:
        return self.header.public_length + len(self.encrypted_body) + len(self.file_hash)

    @classmethod
    def parse(cls, data: bytes) -> Container:
        header, body, footer = split_container(data)
        return cls(header, bytes(body), bytes(footer))


def split_container(data: bytes) -> tuple[PublicHeader, memoryview, memoryview]:
    """Parse the header and return views of the body and the file hash."""
    header = PublicHeader.read(data)
    suite = header.suite
    h, b, d = header.public_length, header.private_length, suite.d
    if b < suite.aead_overhead:
        raise LengthMismatch(f"private length {b} below the AEAD overhead")
    total = h + b + d
    if len(data) < total:
        raise TruncatedFile(f"file has {len(data)} bytes, layout needs {total}")
    if len(data) > total:
        raise LengthMismatch(f"{len(data) - total} trailing bytes after the file hash")
    view = memoryview(data)
    return header, view[h : h + b], view[h + b :]


@dataclass(frozen=True)
class PrivateBody:
    """Plaintext private body B' plus its trailing hash."""

    content_type: int
    public_header_hash: bytes
    recipients: tuple[RecipientEntry, ...]
    content: bytes
    private_hash: bytes = b""

    def unhashed_bytes(self) -> bytes:
        w = ByteWriter()
        w.u32(self.content_type).raw(self.public_header_hash).u32(len(self.recipients))
        for entry in self.recipients:
            w.raw(entry.to_bytes())
        w.u32(len(self.content)).raw(self.content)
        return w.getvalue()

    @staticmethod
    def parse(plaintext: bytes, suite: CipherSuite, max_recipients: int) -> tuple[PrivateBody, int]:
        """Deconstruct decrypted bytes; returns the body and the hashed length."""
        reader = ByteReader(plaintext)
        try:
            content_type = reader.u32()
            public_hash = reader.take(suite.d)
            n = reader.u32()
            if n > max_recipients:
                raise LengthMismatch(f"{n} recipients in body but only {max_recipients} header blocks")
            entries = tuple(RecipientEntry.read(reader, suite) for _ in range(n))
            q = reader.u32()
            content = reader.take(q)
            hashed_length = reader.cursor
            private_hash = reader.take(suite.d)
        except LengthMismatch:
            raise
        except (DecodeError, InvalidKey, UnsupportedSuite) as exc:
            raise MalformedBody(str(exc)) from None
        if reader.remaining:
            raise MalformedBody(f"{reader.remaining} bytes after the private hash")
        return PrivateBody(content_type, public_hash, entries, content, private_hash), hashed_length


def check_body_size(suite: CipherSuite, names: list[str], content_length: int) -> int:
    """Encrypted body length for the given recipients and content, validated."""
    b = private_overhead(suite, names) + content_length + suite.aead_overhead
    if b > U32_MAX or content_length > U32_MAX:
        raise ContentTooLarge(f"encrypted body would be {b} bytes, limit is {U32_MAX}")
    return b


def max_content_length(suite: CipherSuite, names: list[str]) -> int:
    return U32_MAX - private_overhead(suite, names) - suite.aead_overhead


__all__ = [
    "CONTAINER_VERSION",
    "CONTENT_TYPE_BLOB",
    "PRIVATE_LENGTH_PLACEHOLDER",
    "Container",
    "DecryptBlock",
    "PrivateBody",
    "PublicHeader",
    "block_offset",
    "block_size",
    "check_body_size",
    "header_length",
    "max_content_length",
    "peek_suite",
    "private_overhead",
    "split_container",
]
