"""Encrypted container files for sharing secrets among a set of recipients."""

from . import errors
from .container import (
    Container,
    Decrypted,
    add_recipient,
    decrypt,
    encrypt,
    parse,
    remove_recipient,
    serialize,
    set_content,
)
from .keystore import KdfConfig, SecretKey, export_recipient_entry, generate_keypair, load_key, save_key
from .recipient import RecipientEntry, fingerprint
from .suite import DEFAULT_SUITE, SUITE_I, SUITE_II, SUITE_III, SUITE_IV, SUITES, CipherSuite, lookup_suite

__version__ = "1.0.0"
