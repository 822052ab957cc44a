"""The encrypted container format and its operations."""

from .format import (
    CONTAINER_VERSION,
    CONTENT_TYPE_BLOB,
    ID_TAG_LEN,
    PRIVATE_LENGTH_PLACEHOLDER,
    SALT_LEN,
    Container,
    DecryptBlock,
    PrivateBody,
    PublicHeader,
    block_offset,
    block_size,
    check_body_size,
    header_length,
    max_content_length,
    peek_suite,
    private_overhead,
)
from .ops import (
    Decrypted,
    EncryptionTrace,
    RecipientTrace,
    SessionKeys,
    add_recipient,
    choose_m,
    compute_id_tag,
    decrypt,
    encrypt,
    encrypt_with_trace,
    find_recipient,
    gen_deception_blocks,
    max_recipient_count,
    parse,
    remove_recipient,
    serialize,
    set_content,
)
