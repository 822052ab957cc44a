"""Exception hierarchy shared by every ECF module.

Every failure raised by the library derives from :class:`EcfError`, so callers
(and the CLI exit-code table) can classify errors without string matching.
"""

from __future__ import annotations


class EcfError(Exception):
    """Base class for all library errors."""


# -- codec ---------------------------------------------------------------
class DecodeError(EcfError):
    """Malformed binary input."""


class TruncatedInput(DecodeError):
    """A read would run past the end of the buffer."""


class InvalidString(DecodeError):
    """String payload is not valid UTF-8 or carries a byte order mark."""


# -- suites and keys -----------------------------------------------------
class UnsupportedSuite(EcfError):
    def __init__(self, suite_id: int) -> None:
        super().__init__(f"unsupported cipher suite 0x{suite_id:08X}")
        self.suite_id = suite_id


class InvalidKey(EcfError):
    """Key material has the wrong length or is not a valid curve point."""


# -- container structure -------------------------------------------------
class FormatError(DecodeError):
    """The file does not have the shape of a valid container."""


class BadMagicVersion(FormatError):
    """Unknown container version."""


class LengthMismatch(FormatError):
    """Declared lengths disagree with each other or with the layout."""


class TruncatedFile(FormatError):
    """The file is shorter than its header declares."""


class MalformedBody(FormatError):
    """The decrypted private body cannot be deconstructed."""


# -- decryption checks ---------------------------------------------------
class IntegrityError(EcfError):
    """A decryption-time integrity check failed."""

    step: int = 0


class FileHashMismatch(IntegrityError):
    step = 2


class CorruptHeader(FileHashMismatch, FormatError):
    """Version or suite field unrecognized and no known hash matches the footer.

    An intact file of an unsupported kind still raises BadMagicVersion or
    UnsupportedSuite; this is raised only when the bytes look damaged.
    """


class NotARecipient(EcfError):
    """No decrypt block carries the caller's identification tag."""

    step = 5


class AeadFailure(IntegrityError):
    step = 9


class PublicHeaderHashMismatch(IntegrityError):
    step = 11


class RecipientSignatureInvalid(IntegrityError):
    step = 12


class PrivateHashMismatch(IntegrityError):
    step = 13


# -- recipient policy ----------------------------------------------------
class RecipientPolicyError(EcfError):
    """The requested change to the recipient set is not allowed."""


class NoRecipients(RecipientPolicyError):
    pass


class InvalidRecipientEntry(RecipientPolicyError):
    """A recipient entry's name signature does not verify."""


class DuplicateRecipient(RecipientPolicyError):
    """Two entries in one recipient set share a signing public key."""


class AlreadyRecipient(DuplicateRecipient):
    pass


class DuplicateName(RecipientPolicyError):
    pass


class RecipientNotFound(RecipientPolicyError):
    pass


class SelfRemovalForbidden(RecipientPolicyError):
    pass


class AmbiguousName(RecipientPolicyError):
    pass


class IdTagCollision(RecipientPolicyError):
    """Two real recipients map to the same identification tag."""


class ContentTooLarge(EcfError):
    """The encrypted body would exceed the u32 length field."""


# -- keystore ------------------------------------------------------------
class KeystoreError(EcfError):
    pass


class UnsupportedVersion(KeystoreError):
    pass


class UnsupportedKeyType(KeystoreError):
    pass


class UnsupportedKdf(KeystoreError):
    pass


class WrongPassword(KeystoreError):
    pass


class TamperedHeader(KeystoreError):
    pass


class KeystoreAuthenticationFailed(WrongPassword, TamperedHeader):
    """AEAD rejected the stored key.

    A wrong password and a modified header are cryptographically
    indistinguishable, so this error is both.
    """

    def __init__(self) -> None:
        super().__init__("wrong password or tampered keystore")


class InvalidKdfConfig(TamperedHeader):
    """KDF parameters outside the accepted bounds."""


class InvalidName(RecipientPolicyError):
    """Recipient names must be non-empty."""
