"""Encrypt, decrypt and re-encrypt containers.

Every mutation (adding or removing a recipient, replacing the content) is
a full decrypt followed by a fresh encrypt: new body key, salt, nonce and
ephemeral keys each time.
"""

from __future__ import annotations

import hmac
import logging
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Union

from ..codec import U32_MAX
from ..errors import (
    AeadFailure,
    AlreadyRecipient,
    AmbiguousName,
    BadMagicVersion,
    CorruptHeader,
    DuplicateName,
    DuplicateRecipient,
    FileHashMismatch,
    IdTagCollision,
    InvalidRecipientEntry,
    NoRecipients,
    NotARecipient,
    PrivateHashMismatch,
    PublicHeaderHashMismatch,
    RecipientNotFound,
    RecipientSignatureInvalid,
    SelfRemovalForbidden,
    TruncatedFile,
    UnsupportedSuite,
)
from ..recipient import RecipientEntry
from ..suite import (
    DEFAULT_SUITE,
    SUITES,
    CipherSuite,
    RandomSource,
    convert_private,
    convert_public,
    default_random,
    derive_kex_public,
    derive_public,
    gen_kex,
    gen_sign,
    kex,
    xor_bytes,
)
from .format import (
    CONTENT_TYPE_BLOB,
    ID_TAG_LEN,
    SALT_LEN,
    Container,
    DecryptBlock,
    PrivateBody,
    PublicHeader,
    check_body_size,
    peek_suite,
    split_container,
)

log = logging.getLogger(__name__)

MStrategy = Union[str, int, Callable[[int, RandomSource], int]]
Source = Union[bytes, bytearray, memoryview, Container]

DECEPTION_MODES = ("simplified", "full")


class Decrypted(NamedTuple):
    recipients: tuple[RecipientEntry, ...]
    content: bytes
    content_type: int = CONTENT_TYPE_BLOB

    @property
    def is_blob(self) -> bool:
        return self.content_type == CONTENT_TYPE_BLOB


@dataclass(frozen=True)
class SessionKeys:
    """Per-recipient key material; never written to disk."""

    k_final: bytes
    k_pre2: bytes
    ss: bytes


@dataclass(frozen=True)
class RecipientTrace:
    public_key: bytes
    kex_public_key: bytes
    block: DecryptBlock
    keys: SessionKeys


@dataclass(frozen=True)
class EncryptionTrace:
    k_final: bytes
    salt: bytes
    nonce: bytes
    m: int
    recipients: tuple[RecipientTrace, ...]


# -- helpers -------------------------------------------------------------
def random_between(lo: int, hi: int, rng: RandomSource = default_random) -> int:
    """Uniform integer in ``[lo, hi]`` drawn from a byte source."""
    if hi < lo:
        raise ValueError("empty range")
    span = hi - lo + 1
    nbits = span.bit_length()
    nbytes = (nbits + 7) // 8
    mask = (1 << nbits) - 1
    while True:
        value = int.from_bytes(rng(nbytes), "little") & mask
        if value < span:
            return lo + value


def max_recipient_count(n: int) -> int:
    return max(8, 2 * n)


def choose_m(n: int, strategy: MStrategy = "random", rng: RandomSource = default_random) -> int:
    if callable(strategy):
        m = strategy(n, rng)
    elif strategy == "random":
        m = random_between(n, max_recipient_count(n), rng)
    elif strategy in ("exact", "none"):
        m = n
    elif isinstance(strategy, int):
        m = strategy
    else:
        raise ValueError(f"unknown m strategy {strategy!r}")
    if m < n:
        raise ValueError(f"m={m} is smaller than the recipient count {n}")
    return m


def compute_id_tag(suite: CipherSuite, public_key: bytes, salt: bytes) -> bytes:
    return suite.hash(public_key + salt)[:ID_TAG_LEN]


def derive_pre_key_2(suite: CipherSuite, ss: bytes, recipient_kex_pk: bytes, ephemeral_pk: bytes) -> bytes:
    return suite.hash(ss + recipient_kex_pk + ephemeral_pk)[: suite.y]


def make_decrypt_block(
    suite: CipherSuite,
    public_key: bytes,
    salt: bytes,
    k_final: bytes,
    rng: RandomSource = default_random,
) -> RecipientTrace:
    id_tag = compute_id_tag(suite, public_key, salt)
    sk_e, pk_e = gen_kex(rng)
    pk_x = convert_public(public_key)
    ss = kex(sk_e, pk_x)
    k_pre2 = derive_pre_key_2(suite, ss, pk_x, pk_e)
    k_pre1 = xor_bytes(k_final, k_pre2)
    block = DecryptBlock(id_tag, pk_e, k_pre1)
    return RecipientTrace(public_key, pk_x, block, SessionKeys(k_final, k_pre2, ss))


def _deception_block(suite: CipherSuite, salt: bytes, mode: str, rng: RandomSource) -> DecryptBlock:
    if mode == "simplified":
        _, pk_e = gen_kex(rng)
        return DecryptBlock(rng(ID_TAG_LEN), pk_e, rng(suite.y))
    if mode == "full":
        _, pk_phi = gen_sign(rng)
        k_phi = rng(suite.y)
        return make_decrypt_block(suite, pk_phi, salt, k_phi, rng).block
    raise ValueError(f"unknown deception mode {mode!r}")


def gen_deception_blocks(
    count: int,
    suite: CipherSuite = DEFAULT_SUITE,
    salt: bytes | None = None,
    mode: str = "simplified",
    rng: RandomSource = default_random,
    exclude: Iterable[bytes] = (),
) -> list[DecryptBlock]:
    """Blocks shaped like real ones but belonging to no recipient.

    Tags colliding with ``exclude`` or with each other are regenerated.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    if salt is None:
        salt = rng(SALT_LEN)
    taken = set(exclude)
    blocks: list[DecryptBlock] = []
    while len(blocks) < count:
        block = _deception_block(suite, salt, mode, rng)
        if block.id_tag in taken:
            continue
        taken.add(block.id_tag)
        blocks.append(block)
    return blocks


def _check_recipients(entries: list[RecipientEntry], allow_duplicate_names: bool) -> None:
    if not entries:
        raise NoRecipients("a container needs at least one recipient")
    keys: set[bytes] = set()
    names: set[str] = set()
    for entry in entries:
        if not entry.verify():
            raise InvalidRecipientEntry(f"name signature of {entry.name!r} does not verify")
        if entry.public_key in keys:
            raise DuplicateRecipient(f"public key of {entry.name!r} appears twice")
        keys.add(entry.public_key)
        if not allow_duplicate_names and entry.name in names:
            raise DuplicateName(f"recipient name {entry.name!r} appears twice")
        names.add(entry.name)


# -- encryption ----------------------------------------------------------
def encrypt_with_trace(
    recipients: Iterable[RecipientEntry],
    content: bytes,
    suite: CipherSuite = DEFAULT_SUITE,
    *,
    m_strategy: MStrategy = "random",
    deception_mode: str = "simplified",
    content_type: int = CONTENT_TYPE_BLOB,
    allow_duplicate_names: bool = False,
    rng: RandomSource = default_random,
) -> tuple[Container, EncryptionTrace]:
    entries = list(recipients)
    content = bytes(content)
    _check_recipients(entries, allow_duplicate_names)
    n = len(entries)
    b = check_body_size(suite, [e.name for e in entries], len(content))

    k_final = rng(suite.y)
    nonce = rng(suite.c)
    salt = rng(SALT_LEN)
    m = choose_m(n, m_strategy, rng)
    if m > U32_MAX:
        raise ValueError("recipient count does not fit in u32")

    traces = tuple(make_decrypt_block(suite, e.public_key, salt, k_final, rng) for e in entries)
    tags = {t.block.id_tag for t in traces}
    if len(tags) != n:
        raise IdTagCollision("two recipients share an identification tag")
    blocks = [t.block for t in traces]
    blocks += gen_deception_blocks(m - n, suite, salt, deception_mode, rng, exclude=tags)
    blocks.sort(key=lambda blk: blk.id_tag)

    header = PublicHeader(suite, b, salt, nonce, tuple(blocks))
    public_hash = suite.hash(header.hashable_bytes())
    body = PrivateBody(content_type, public_hash, tuple(entries), content)
    plaintext = body.unhashed_bytes()
    private_hash = suite.hash(plaintext)
    encrypted = suite.aead_encrypt(k_final, nonce, plaintext + private_hash)
    del plaintext
    assert len(encrypted) == b, (len(encrypted), b)

    header_bytes = header.to_bytes()
    file_hash = suite.hash(header_bytes + encrypted)
    container = Container(header, encrypted, file_hash)
    return container, EncryptionTrace(k_final, salt, nonce, m, traces)


def encrypt(
    recipients: Iterable[RecipientEntry],
    content: bytes,
    suite: CipherSuite = DEFAULT_SUITE,
    **options,
) -> Container:
    """Build a container readable by every entry in ``recipients``.

    No private key is needed; entries only have to carry valid name
    signatures. ``options`` are those of :func:`encrypt_with_trace`.
    """
    container, _ = encrypt_with_trace(recipients, content, suite, **options)
    return container


# -- decryption ----------------------------------------------------------
def _check_footer(suite: CipherSuite, covered, file_hash) -> None:
    if not hmac.compare_digest(suite.hash(covered), bytes(file_hash)):
        raise FileHashMismatch("file hash does not match header and body")


def _footer_matches_any_hash(data: bytes) -> bool:
    """Whether ``data`` ends in a valid digest for some implemented hash."""
    seen = set()
    for suite in SUITES.values():
        if suite.hash_name in seen or len(data) < suite.d:
            continue
        seen.add(suite.hash_name)
        if hmac.compare_digest(suite.hash(memoryview(data)[: -suite.d]), data[-suite.d :]):
            return True
    return False


def _open(source: Source) -> tuple[PublicHeader, bytes | memoryview]:
    """Steps 1 and 2: identify the suite, check the file hash, parse.

    Returns the header and the encrypted body (a view into ``source``).
    """
    if isinstance(source, Container):
        _check_footer(source.suite, source.header.to_bytes() + source.encrypted_body, source.file_hash)
        return source.header, source.encrypted_body
    data = source if isinstance(source, bytes) else bytes(source)
    try:
        suite = peek_suite(data)
    except (BadMagicVersion, UnsupportedSuite) as exc:
        if _footer_matches_any_hash(data):
            raise
        raise CorruptHeader(f"{exc}, and the file hash matches no known hash function") from None
    if len(data) < suite.d:
        raise TruncatedFile("file shorter than its footer")
    _check_footer(suite, memoryview(data)[: -suite.d], data[-suite.d :])
    header, body, _ = split_container(data)
    return header, body


def _suite_of(source: Source) -> CipherSuite:
    return source.suite if isinstance(source, Container) else peek_suite(bytes(source[:8]))


def parse(data: bytes) -> Container:
    return Container.parse(data)


def serialize(container: Container) -> bytes:
    return container.to_bytes()


def decrypt(sk: bytes, source: Source, *, verify_signatures: bool = True) -> Decrypted:
    """Recover the recipient set and content with a signing private key."""
    header, encrypted_body = _open(source)
    suite = header.suite

    sk = bytes(sk)
    sk_x = convert_private(sk)
    pk = derive_public(sk)
    pk_x = derive_kex_public(sk_x)
    id_tag = compute_id_tag(suite, pk, header.salt)
    candidates = [blk for blk in header.dblocks if hmac.compare_digest(blk.id_tag, id_tag)]
    if not candidates:
        raise NotARecipient("no decrypt block matches this key")

    plaintext = None
    for block in candidates:
        ss = kex(sk_x, block.key_agreement_info)
        k_pre2 = derive_pre_key_2(suite, ss, pk_x, block.key_agreement_info)
        k_final = xor_bytes(block.sym_pre_key_1, k_pre2)
        try:
            plaintext = suite.aead_decrypt(k_final, header.nonce, encrypted_body)
            break
        except AeadFailure:
            continue
    if plaintext is None:
        raise AeadFailure("private body failed authentication")

    body, hashed_length = PrivateBody.parse(plaintext, suite, header.recipient_count)

    if not hmac.compare_digest(suite.hash(header.hashable_bytes()), body.public_header_hash):
        raise PublicHeaderHashMismatch("public header hash does not match")

    if verify_signatures:
        for entry in body.recipients:
            if not entry.verify():
                raise RecipientSignatureInvalid(f"signature of recipient {entry.name!r} is invalid")

    if not hmac.compare_digest(suite.hash(memoryview(plaintext)[:hashed_length]), body.private_hash):
        raise PrivateHashMismatch("private body hash does not match")

    if body.content_type != CONTENT_TYPE_BLOB:
        log.warning("unknown content type 0x%08X; content returned as opaque bytes", body.content_type)
    return Decrypted(body.recipients, body.content, body.content_type)


# -- re-encryption -------------------------------------------------------
def _reencrypt(
    suite: CipherSuite,
    recipients: Iterable[RecipientEntry],
    opened: Decrypted,
    content: bytes,
    options: dict,
) -> Container:
    options.setdefault("content_type", opened.content_type)
    return encrypt(recipients, content, suite, **options)


def add_recipient(
    sk: bytes,
    source: Source,
    entry: RecipientEntry,
    *,
    allow_duplicate_names: bool = False,
    verify_signatures: bool = True,
    **options,
) -> Container:
    if not entry.verify():
        raise InvalidRecipientEntry(f"name signature of {entry.name!r} does not verify")
    opened = decrypt(sk, source, verify_signatures=verify_signatures)
    if any(r.public_key == entry.public_key for r in opened.recipients):
        raise AlreadyRecipient(f"{entry.name!r} is already a recipient")
    if not allow_duplicate_names and any(r.name == entry.name for r in opened.recipients):
        raise DuplicateName(f"a recipient named {entry.name!r} already exists")
    options["allow_duplicate_names"] = allow_duplicate_names
    return _reencrypt(_suite_of(source), (*opened.recipients, entry), opened, opened.content, options)


def find_recipient(
    recipients: Iterable[RecipientEntry],
    *,
    public_key: bytes | None = None,
    name: str | None = None,
) -> RecipientEntry:
    if public_key is None and name is None:
        raise ValueError("select a recipient by public key or by name")
    matches = [
        r
        for r in recipients
        if (public_key is None or r.public_key == public_key) and (name is None or r.name == name)
    ]
    if not matches:
        raise RecipientNotFound("no recipient matches the selector")
    if len(matches) > 1:
        raise AmbiguousName(f"{len(matches)} recipients are named {name!r}")
    return matches[0]


def remove_recipient(
    sk: bytes,
    source: Source,
    *,
    public_key: bytes | None = None,
    name: str | None = None,
    allow_self_removal: bool = False,
    verify_signatures: bool = True,
    **options,
) -> Container:
    opened = decrypt(sk, source, verify_signatures=verify_signatures)
    target = find_recipient(opened.recipients, public_key=public_key, name=name)
    if not allow_self_removal and target.public_key == derive_public(bytes(sk)):
        raise SelfRemovalForbidden("recipients may not remove themselves")
    remaining = [r for r in opened.recipients if r.public_key != target.public_key]
    options.setdefault("allow_duplicate_names", True)
    return _reencrypt(_suite_of(source), remaining, opened, opened.content, options)


def set_content(
    sk: bytes,
    source: Source,
    content: bytes,
    *,
    verify_signatures: bool = True,
    **options,
) -> Container:
    opened = decrypt(sk, source, verify_signatures=verify_signatures)
    options.setdefault("allow_duplicate_names", True)
    return _reencrypt(_suite_of(source), opened.recipients, opened, content, options)
