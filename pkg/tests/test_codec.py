import os
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecf.codec import (
    U32_MAX,
    ByteReader,
    ByteWriter,
    read_string,
    read_u32le,
    string_size,
    write_string,
    write_u32le,
)
from ecf.errors import InvalidString, TruncatedInput


class TestU32:
    @pytest.mark.parametrize(
        "value, encoded",
        [
            (0, "00000000"),
            (0x00010000, "00000100"),
            (0xECFFC0DE, "dec0ffec"),
            (0x01010101, "01010101"),
            (U32_MAX, "ffffffff"),
        ],
    )
    def test_known_encodings(self, value, encoded):
        assert write_u32le(value).hex() == encoded
        assert read_u32le(bytes.fromhex(encoded)) == value

    @pytest.mark.parametrize("value", [-1, U32_MAX + 1, 1 << 40])
    def test_out_of_range(self, value):
        with pytest.raises(ValueError):
            write_u32le(value)

    def test_random_roundtrip(self):
        rng = random.Random(7)
        for _ in range(1000):
            v = rng.randrange(U32_MAX + 1)
            assert read_u32le(write_u32le(v)) == v

    @pytest.mark.parametrize("length", [0, 1, 3])
    def test_truncated(self, length):
        with pytest.raises(TruncatedInput):
            read_u32le(b"\x01" * length)

    def test_offset(self):
        assert read_u32le(b"\xff\x02\x00\x00\x00", 1) == 2


class TestString:
    @pytest.mark.parametrize(
        "text, encoded",
        [
            ("", "00000000"),
            ("Alice", "05000000416c696365"),
            ("é", "02000000c3a9"),
        ],
    )
    def test_known_encodings(self, text, encoded):
        assert write_string(text).hex() == encoded
        assert read_string(bytes.fromhex(encoded)) == text

    def test_invalid_utf8(self):
        with pytest.raises(InvalidString):
            read_string(bytes.fromhex("02000000fffe"))

    def test_bom_rejected_on_read(self):
        with pytest.raises(InvalidString):
            read_string(bytes.fromhex("04000000efbbbf41"))

    def test_bom_rejected_on_write(self):
        with pytest.raises(InvalidString):
            write_string("﻿Alice")

    def test_length_beyond_buffer(self):
        with pytest.raises(TruncatedInput):
            read_string(bytes.fromhex("0a000000414243"))

    @given(st.text())
    def test_roundtrip_and_size(self, text):
        if text.startswith("﻿"):
            return
        raw = write_string(text)
        assert len(raw) == string_size(text) == 4 + len(text.encode("utf-8"))
        assert read_string(raw) == text


class TestReaderWriter:
    def test_take_is_all_or_nothing(self):
        r = ByteReader(b"abc")
        with pytest.raises(TruncatedInput):
            r.take(4)
        assert r.cursor == 0
        assert r.take(3) == b"abc"
        assert r.remaining == 0

    def test_negative_take(self):
        with pytest.raises(TruncatedInput):
            ByteReader(b"abc").take(-1)

    def test_bad_offset(self):
        with pytest.raises(TruncatedInput):
            ByteReader(b"abc", 4)

    def test_writer_length_is_sum_of_fields(self):
        w = ByteWriter().u32(7).string("héllo").raw(os.urandom(13))
        out = w.getvalue()
        assert len(w) == len(out) == 4 + (4 + 6) + 13
        r = ByteReader(out)
        assert r.u32() == 7
        assert r.string() == "héllo"
        assert len(r.rest()) == 13

    @given(st.lists(st.integers(0, U32_MAX)), st.binary())
    def test_mixed_roundtrip(self, values, blob):
        w = ByteWriter()
        for v in values:
            w.u32(v)
        w.raw(blob)
        r = ByteReader(w.getvalue())
        assert [r.u32() for _ in values] == values
        assert r.rest() == blob
