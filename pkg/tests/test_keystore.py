import os
import struct
import time

import pytest

from ecf.errors import (
    InvalidKdfConfig,
    InvalidName,
    KeystoreAuthenticationFailed,
    KeystoreError,
    TamperedHeader,
    UnsupportedKdf,
    UnsupportedKeyType,
    UnsupportedVersion,
    WrongPassword,
)
from ecf.keystore import (
    DEFAULT_KDF,
    SYM_AEGIS_256,
    KdfConfig,
    KeystoreFile,
    SecretKey,
    describe,
    export_recipient_entry,
    generate_keypair,
    load_key,
    save_key,
)
from ecf.suite import convert_private, convert_public, derive_public, gen_kex, kex, sign, verify_sig

from conftest import FAST_KDF


class TestKeypair:
    def test_distinct(self):
        assert generate_keypair()[0] != generate_keypair()[0]

    def test_public_matches(self):
        sk, pk = generate_keypair()
        assert derive_public(bytes(sk)) == pk == sk.public_key()
        assert verify_sig(pk, b"msg", sign(bytes(sk), b"msg"))

    def test_converted_pair_agrees(self):
        sk, pk = generate_keypair()
        other_sk, other_pk = gen_kex()
        assert kex(convert_private(bytes(sk)), other_pk) == kex(other_sk, convert_public(pk))


class TestSecretKey:
    def test_wipe(self):
        sk, _ = generate_keypair()
        buf = sk._buf
        sk.wipe()
        assert buf == bytearray(32)
        with pytest.raises(KeystoreError):
            bytes(sk)

    def test_context_manager_wipes(self):
        sk, _ = generate_keypair()
        with sk:
            assert len(bytes(sk)) == 32
        with pytest.raises(KeystoreError):
            bytes(sk)

    def test_repr_redacted(self):
        sk, _ = generate_keypair()
        assert bytes(sk).hex() not in repr(sk)


class TestFormat:
    def test_layout(self):
        sk, _ = generate_keypair()
        data = save_key(sk, "pw", FAST_KDF)
        version, key_type, sym, kdf = struct.unpack_from("<IIII", data)
        assert (version, key_type, sym, kdf) == (0x00010000, 1, 1, 1)
        c = 12
        assert struct.unpack_from("<III", data, 32 + c) == (1, 64, 1)
        assert len(data) == 32 + c + 12 + 32 + 16

    def test_default_config_verbatim(self):
        sk, _ = generate_keypair()
        data = save_key(sk, "pw", DEFAULT_KDF)
        assert data[44:56] == struct.pack("<III", 3, 65536, 4)
        assert KeystoreFile.from_bytes(data).kdf_config == KdfConfig(3, 65536, 4)

    def test_aegis_layout(self):
        sk, _ = generate_keypair()
        data = save_key(sk, "pw", FAST_KDF, sym_enc_type=SYM_AEGIS_256)
        store = KeystoreFile.from_bytes(data)
        assert len(store.nonce) == 32
        assert len(data) == 32 + 32 + 12 + 32 + store.aead.tag_len
        assert load_key(data, "pw") == sk

    def test_describe_has_no_secret(self):
        sk, _ = generate_keypair()
        info = describe(save_key(sk, "pw", FAST_KDF))
        assert info["kdf_config"] == FAST_KDF
        assert "encrypted_private_key" not in info


class TestSaveLoad:
    def test_roundtrip(self):
        sk, _ = generate_keypair()
        assert load_key(save_key(sk, "correct horse", FAST_KDF), "correct horse") == sk

    def test_fresh_salt_and_nonce(self):
        sk, _ = generate_keypair()
        a, b = save_key(sk, "pw", FAST_KDF), save_key(sk, "pw", FAST_KDF)
        assert a[16:32] != b[16:32]
        assert a != b

    def test_unicode_password(self):
        sk, _ = generate_keypair()
        assert load_key(save_key(sk, "pässwörd ✓", FAST_KDF), "pässwörd ✓") == sk

    def test_empty_password_rejected(self):
        sk, _ = generate_keypair()
        with pytest.raises(ValueError):
            save_key(sk, "", FAST_KDF)

    def test_wrong_password(self):
        sk, _ = generate_keypair()
        data = save_key(sk, "pw", FAST_KDF)
        with pytest.raises(WrongPassword):
            load_key(data, "pW")

    def test_kdf_config_flip_is_tamper(self):
        sk, _ = generate_keypair()
        data = bytearray(save_key(sk, "pw", FAST_KDF))
        data[44] ^= 0x01  # iterations 1 -> 0 is rejected outright
        with pytest.raises(TamperedHeader):
            load_key(bytes(data), "pw")
        data[44] ^= 0x03  # iterations 1 -> 2 is valid but unauthenticated
        with pytest.raises(TamperedHeader):
            load_key(bytes(data), "pw")

    def test_every_byte_corruption_fails(self):
        sk, _ = generate_keypair()
        data = save_key(sk, "pw", FAST_KDF)
        for i in range(len(data)):
            bad = bytearray(data)
            bad[i] ^= 0x01
            with pytest.raises(KeystoreError):
                load_key(bytes(bad), "pw")

    @pytest.mark.parametrize(
        "offset, value, error",
        [
            (0, 0x00020000, UnsupportedVersion),
            (4, 2, UnsupportedKeyType),
            (8, 9, UnsupportedKeyType),
            (12, 2, UnsupportedKdf),
        ],
    )
    def test_type_fields_validated(self, offset, value, error):
        sk, _ = generate_keypair()
        data = bytearray(save_key(sk, "pw", FAST_KDF))
        data[offset : offset + 4] = struct.pack("<I", value)
        with pytest.raises(error):
            load_key(bytes(data), "pw")

    def test_truncated(self):
        sk, _ = generate_keypair()
        data = save_key(sk, "pw", FAST_KDF)
        for cut in (0, 10, 40, len(data) - 1):
            with pytest.raises(KeystoreError):
                load_key(data[:cut], "pw")

    def test_auth_failure_is_both(self):
        assert issubclass(KeystoreAuthenticationFailed, WrongPassword)
        assert issubclass(KeystoreAuthenticationFailed, TamperedHeader)

    def test_more_iterations_take_longer(self):
        sk, _ = generate_keypair()
        cheap = save_key(sk, "pw", KdfConfig(1, 8192, 1))
        costly = save_key(sk, "pw", KdfConfig(8, 8192, 1))

        def best(data):
            times = []
            for _ in range(3):
                t = time.perf_counter()
                load_key(data, "pw")
                times.append(time.perf_counter() - t)
            return min(times)

        assert best(costly) > 2 * best(cheap)


class TestKdfConfig:
    @pytest.mark.parametrize("cfg", [KdfConfig(0, 64, 1), KdfConfig(1, 64, 0), KdfConfig(1, 7, 1), KdfConfig(1, 64, 9)])
    def test_invalid(self, cfg):
        with pytest.raises(InvalidKdfConfig):
            cfg.validate()

    def test_bytes(self):
        assert KdfConfig(3, 65536, 4).to_bytes().hex() == "030000000000010004000000"


class TestExport:
    def test_self_verifying(self):
        sk, pk = generate_keypair()
        entry = export_recipient_entry(sk, "bob@example.org")
        assert entry.public_key == pk
        assert entry.verify()
        assert entry.size == len(entry.to_bytes()) == 32 + (4 + 15) + 64 == 115

    def test_empty_name(self):
        sk, _ = generate_keypair()
        with pytest.raises(InvalidName):
            export_recipient_entry(sk, "")


def test_random_passwords_roundtrip():
    for _ in range(5):
        sk, _ = generate_keypair()
        pw = os.urandom(12).hex()
        assert load_key(save_key(sk, pw, FAST_KDF), pw) == sk
